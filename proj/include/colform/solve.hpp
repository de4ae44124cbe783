#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colform/agent_set.hpp"
#include "colform/budget.hpp"
#include "colform/domain.hpp"

namespace colform {

enum class WspMode { Packing, Partition };

struct WspSet {
    AgentSet mask;
    double weight = 0.0;
    int card = 0;
};

struct WspInstance {
    int n = 0;
    WspMode mode = WspMode::Packing;
    std::vector<WspSet> sets;
};

WspInstance wsp_from_collectives(int n, WspMode mode, const std::vector<Collective>& pool);

struct Packing {
    std::vector<int> chosen;                       // indices into WspInstance.sets
    std::vector<std::vector<int>> chosen_members;  // agent index lists
    double total = 0.0;
    bool proven_optimal = false;
    uint64_t nodes_expanded = 0;
    double wall_ms = 0.0;
};

// Depth-first branch and bound on the lowest-index uncovered agent with a
// per-agent best-share bound and a greedy warm start. Anytime: on budget
// expiry returns the incumbent with proven_optimal = false.
Packing solve_bnb(const WspInstance& inst, const Budget& budget);

inline constexpr uint64_t kDefaultBruteforceLimit = 1ULL << 22;

// Exact reference: complete evaluation over all disjoint subsets of sets via
// a table over uncovered-agent masks. Independent of the branch-and-bound
// path; used to cross-check it.
Packing solve_bruteforce(const WspInstance& inst, uint64_t cell_limit = kDefaultBruteforceLimit);

// Weight-per-agent greedy; in partition mode uncovered agents are patched
// with their best singletons.
Packing greedy_incumbent(const WspInstance& inst);

// Disjointness, coverage (partition mode) and total-sum checks; returns the
// first violation message or empty string.
std::string packing_violation(const WspInstance& inst, const Packing& p);

}  // namespace colform
