#pragma once

#include <chrono>
#include <cstdint>

namespace colform {

// Wall-clock budgets drive production runs; count budgets (rollouts, solver
// node expansions, search iterations) make tests and benchmarks replayable.
struct Budget {
    enum class Mode { Wall, Count };
    Mode mode = Mode::Wall;
    double seconds = 0.0;
    uint64_t count = 0;

    static Budget wall(double s) { return {Mode::Wall, s, 0}; }
    static Budget of_count(uint64_t c) { return {Mode::Count, 0.0, c}; }
};

class BudgetClock {
public:
    explicit BudgetClock(const Budget& b)
        : budget_(b), start_(std::chrono::steady_clock::now()) {}

    // Requests one unit of work; returns false once the budget is spent.
    // used() counts only granted units.
    bool tick() {
        if (budget_.mode == Budget::Mode::Count) {
            if (used_ >= budget_.count) return false;
            ++used_;
            return true;
        }
        if (expired_) return false;
        if ((used_ & 0xf) == 0 && elapsed_s() >= budget_.seconds) {
            expired_ = true;
            return false;
        }
        ++used_;
        return true;
    }

    uint64_t used() const { return used_; }

    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    // Deterministic outputs report 0 wall time in count mode.
    double report_wall_ms() const {
        return budget_.mode == Budget::Mode::Count ? 0.0 : elapsed_s() * 1e3;
    }

private:
    Budget budget_;
    std::chrono::steady_clock::time_point start_;
    uint64_t used_ = 0;
    bool expired_ = false;
};

}  // namespace colform
