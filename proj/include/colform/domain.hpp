#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "colform/agent_set.hpp"
#include "colform/errors.hpp"

namespace colform {

enum class Domain { Ridesharing, TeamFormation };

const char* domain_name(Domain d);
Domain domain_from_name(const std::string& s);

// Feature layout:
//   ridesharing    4 values: origin x,y and destination x,y, grid zones
//                  normalized to [0,1]
//   team formation 12 values: gender in {0,1}, four personality traits in
//                  [-1,1], seven competence levels in [0,1]
struct AgentFeatures {
    std::vector<double> values;
};

struct Instance {
    Domain domain = Domain::Ridesharing;
    uint64_t seed = 0;
    std::vector<AgentFeatures> agents;

    int n() const { return static_cast<int>(agents.size()); }
    int d_x() const { return agents.empty() ? 0 : static_cast<int>(agents[0].values.size()); }
};

struct Collective {
    std::vector<int> members;  // strictly increasing agent indices
    double value = 0.0;        // utility(instance, members)
};

struct DomainRules {
    int max_cardinality = 0;
    bool partition_required = false;
    std::function<double(const Instance&, const std::vector<int>&)> utility;
};

int feature_dim(Domain d);
const DomainRules& rules_for(Domain d);

Instance generate_instance(Domain domain, int n, uint64_t seed);

// Recomputes f(S) from the agent features; throws InfeasibleCollective when
// the member list violates the domain rules.
double utility(const Instance& inst, const std::vector<int>& members);

// Total: nonempty, unique, in range, and within the cardinality cap.
bool is_feasible(const Instance& inst, const std::vector<int>& members);

inline constexpr uint64_t kDefaultEnumerationLimit = 2'000'000;

// Every feasible collective with its value, members in lexicographic order.
std::vector<Collective> enumerate_feasible(const Instance& inst,
                                           uint64_t limit = kDefaultEnumerationLimit);

// Number of collectives enumerate_feasible would emit; throws
// EnumerationTooLarge past the limit.
uint64_t count_feasible(int n, int cap, uint64_t limit = kDefaultEnumerationLimit);

}  // namespace colform
