#pragma once

#include <stdexcept>
#include <string>

namespace colform {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InfeasibleCollective : std::runtime_error {
    explicit InfeasibleCollective(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by the WSP solvers when a partition-mode instance cannot cover
// every agent.
struct InfeasibleInstance : std::runtime_error {
    explicit InfeasibleInstance(const std::string& msg) : std::runtime_error(msg) {}
};

struct EnumerationTooLarge : std::runtime_error {
    explicit EnumerationTooLarge(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoActionAvailable : std::runtime_error {
    explicit NoActionAvailable(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace colform
