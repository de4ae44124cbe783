#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "colform/budget.hpp"
#include "colform/domain.hpp"
#include "colform/rng.hpp"
#include "colform/solve.hpp"

namespace colform {

enum class MctsRollout { Greedy, Adapted, Random };

const char* mcts_rollout_name(MctsRollout r);

struct MctsConfig {
    double exploration_c = std::sqrt(2.0);
    MctsRollout policy = MctsRollout::Greedy;
    Budget budget = Budget::of_count(1000);
    uint64_t seed = 0;
};

// Search state: agents already committed to finished collectives plus the
// collective currently under construction.
struct MctsState {
    AgentSet remaining;        // not yet committed anywhere
    std::vector<int> partial;  // current collective under construction
    double finished_value = 0.0;
    std::vector<std::vector<int>> finished;
};

// Actions: 0..n-1 adds that agent to the current partial; n closes it.
inline constexpr int kCloseAction = -1;  // encoded as n at call sites

// One step of the configured rollout policy. Returns the chosen action, or
// nullopt when the policy walked into a dead end (Random may exceed the
// cardinality cap, which kills the rollout).
std::optional<int> rollout_policy_step(const Instance& inst, const MctsState& state,
                                       MctsRollout policy, Rng& rng);

// UCB1 child selection over (mean reward, visits); exposed for tests.
// Rewards are assumed normalized to [0, 1].
int ucb_select(const std::vector<double>& mean_reward, const std::vector<uint64_t>& visits,
               uint64_t parent_visits, double c);

// UCT over collective-formation decisions; every method searches the same
// action space. Returns the best complete packing seen anywhere during the
// search (never worse than the all-singletons fallback).
Packing mcts_search(const Instance& inst, const MctsConfig& config);

}  // namespace colform
