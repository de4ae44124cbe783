#include "colform/mcts.hpp"

#include <algorithm>
#include <limits>

namespace colform {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ActionList {
    std::vector<int> actions;  // agent adds ascending, then n for close
};

// Feasible actions (tree expansion and the Adapted policy respect the cap).
ActionList feasible_actions(const Instance& inst, const MctsState& s, int cap) {
    ActionList out;
    if (static_cast<int>(s.partial.size()) < cap)
        for (int a : s.remaining.to_indices()) out.actions.push_back(a);
    if (!s.partial.empty()) out.actions.push_back(inst.n());
    return out;
}

// Syntactically available actions: any remaining agent can be proposed for
// the current collective even when that would break the cardinality cap.
ActionList syntactic_actions(const Instance& inst, const MctsState& s) {
    ActionList out;
    out.actions = s.remaining.to_indices();
    if (!s.partial.empty()) out.actions.push_back(inst.n());
    return out;
}

bool terminal(const MctsState& s) { return s.remaining.empty() && s.partial.empty(); }

// Applies an action; returns false when it creates an infeasible collective.
bool apply_action(const Instance& inst, MctsState& s, int action, int cap) {
    if (action == inst.n()) {
        s.finished_value += utility(inst, s.partial);
        s.finished.push_back(s.partial);
        s.partial.clear();
        return true;
    }
    if (static_cast<int>(s.partial.size()) + 1 > cap) return false;
    s.partial.insert(std::upper_bound(s.partial.begin(), s.partial.end(), action), action);
    s.remaining.remove(action);
    return true;
}

struct Incumbent {
    double total = -kInf;
    std::vector<std::vector<int>> members;

    void offer(double value, const std::vector<std::vector<int>>& finished) {
        if (value > total) {
            total = value;
            members = finished;
        }
    }
};

struct Node {
    MctsState state;
    std::vector<int> untried;      // actions not yet expanded
    std::vector<int> child_action;
    std::vector<int> child_index;
    uint64_t visits = 0;
    uint64_t successes = 0;
    double sum_raw = 0.0;  // raw packing values of successful rollouts
};

struct ValueScale {
    double vmin = kInf, vmax = -kInf;
    void observe(double v) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    double norm(double v) const {
        const double range = vmax - vmin;
        if (!(range > 1e-12)) return 0.5;
        return (v - vmin) / range;
    }
    // Mean normalized reward of a node; failed rollouts count as 0.
    double node_mean(const Node& n) const {
        if (n.visits == 0) return 0.0;
        double sum = 0.0;
        if (n.successes > 0) {
            const double range = vmax - vmin;
            sum = (range > 1e-12)
                      ? (n.sum_raw - static_cast<double>(n.successes) * vmin) / range
                      : 0.5 * static_cast<double>(n.successes);
        }
        return sum / static_cast<double>(n.visits);
    }
};

}  // namespace

const char* mcts_rollout_name(MctsRollout r) {
    switch (r) {
        case MctsRollout::Greedy: return "greedy";
        case MctsRollout::Adapted: return "adapted";
        default: return "random";
    }
}

std::optional<int> rollout_policy_step(const Instance& inst, const MctsState& state,
                                       MctsRollout policy, Rng& rng) {
    const int cap = rules_for(inst.domain).max_cardinality;
    if (policy == MctsRollout::Random) {
        const auto acts = syntactic_actions(inst, state);
        if (acts.actions.empty()) return std::nullopt;
        return acts.actions[rng.uniform_int(0, static_cast<int>(acts.actions.size()) - 1)];
    }
    const auto acts = feasible_actions(inst, state, cap);
    if (acts.actions.empty()) return std::nullopt;
    if (policy == MctsRollout::Adapted)
        return acts.actions[rng.uniform_int(0, static_cast<int>(acts.actions.size()) - 1)];

    // Greedy: best immediate value increment; closing scores 0. Ties go to
    // the earliest action in the list (lowest agent index, close last).
    const double base = state.partial.empty() ? 0.0 : utility(inst, state.partial);
    int best = -1;
    double best_delta = -kInf;
    for (int action : acts.actions) {
        double delta;
        if (action == inst.n()) {
            delta = 0.0;
        } else {
            std::vector<int> grown = state.partial;
            grown.insert(std::upper_bound(grown.begin(), grown.end(), action), action);
            delta = utility(inst, grown) - base;
        }
        if (delta > best_delta) {
            best_delta = delta;
            best = action;
        }
    }
    return best;
}

int ucb_select(const std::vector<double>& mean_reward, const std::vector<uint64_t>& visits,
               uint64_t parent_visits, double c) {
    int best = -1;
    double best_score = -kInf;
    const double log_n = std::log(std::max<uint64_t>(parent_visits, 1));
    for (size_t i = 0; i < visits.size(); ++i) {
        double score;
        if (visits[i] == 0)
            score = kInf;
        else
            score = mean_reward[i] + c * std::sqrt(log_n / static_cast<double>(visits[i]));
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Packing mcts_search(const Instance& inst, const MctsConfig& config) {
    const auto& rules = rules_for(inst.domain);
    const int cap = rules.max_cardinality;
    const int n = inst.n();
    Rng rng(mix_seed(config.seed, 0x6d637473ULL));
    BudgetClock clock(config.budget);

    Incumbent incumbent;
    {
        // All-singletons fallback keeps the result a valid packing in both
        // modes even if every rollout fails.
        std::vector<std::vector<int>> singles;
        double total = 0.0;
        for (int a = 0; a < n; ++a) {
            singles.push_back({a});
            total += utility(inst, {a});
        }
        incumbent.offer(total, singles);
    }
    ValueScale scale;
    scale.observe(incumbent.total);

    auto run_rollout = [&](MctsState s) -> std::optional<MctsState> {
        while (!terminal(s)) {
            const auto action = rollout_policy_step(inst, s, config.policy, rng);
            if (!action) return std::nullopt;
            if (!apply_action(inst, s, *action, cap)) return std::nullopt;
        }
        return s;
    };

    std::vector<Node> nodes;
    {
        Node root;
        root.state = {AgentSet::full(n), {}, 0.0, {}};
        root.untried = feasible_actions(inst, root.state, cap).actions;
        nodes.push_back(std::move(root));
    }

    auto backprop = [&](const std::vector<int>& path, bool success, double value) {
        for (int id : path) {
            Node& node = nodes[id];
            ++node.visits;
            if (success) {
                ++node.successes;
                node.sum_raw += value;
            }
        }
    };

    // Seed rollout from the root so even a zero budget yields one genuine
    // attempt with the configured policy.
    do {
        const auto result = run_rollout(nodes[0].state);
        std::vector<int> path{0};
        if (result) {
            scale.observe(result->finished_value);
            incumbent.offer(result->finished_value, result->finished);
            backprop(path, true, result->finished_value);
        } else {
            backprop(path, false, 0.0);
        }
    } while (false);

    while (clock.tick()) {
        int node_id = 0;
        std::vector<int> path{0};
        // Selection.
        while (nodes[node_id].untried.empty() && !nodes[node_id].child_index.empty()) {
            const Node& node = nodes[node_id];
            std::vector<double> means(node.child_index.size());
            std::vector<uint64_t> visits(node.child_index.size());
            for (size_t i = 0; i < node.child_index.size(); ++i) {
                means[i] = scale.node_mean(nodes[node.child_index[i]]);
                visits[i] = nodes[node.child_index[i]].visits;
            }
            node_id = node.child_index[static_cast<size_t>(
                ucb_select(means, visits, node.visits, config.exploration_c))];
            path.push_back(node_id);
        }

        if (terminal(nodes[node_id].state)) {
            const double value = nodes[node_id].state.finished_value;
            scale.observe(value);
            incumbent.offer(value, nodes[node_id].state.finished);
            backprop(path, true, value);
            continue;
        }

        // Expansion: take the next untried action in order.
        if (!nodes[node_id].untried.empty()) {
            const int action = nodes[node_id].untried.front();
            nodes[node_id].untried.erase(nodes[node_id].untried.begin());
            MctsState next = nodes[node_id].state;
            apply_action(inst, next, action, cap);  // tree actions are feasible
            Node child;
            child.state = std::move(next);
            child.untried = feasible_actions(inst, child.state, cap).actions;
            nodes.push_back(std::move(child));
            const int child_id = static_cast<int>(nodes.size()) - 1;
            nodes[node_id].child_action.push_back(action);
            nodes[node_id].child_index.push_back(child_id);
            node_id = child_id;
            path.push_back(node_id);
        }

        // Rollout + backprop.
        const auto result = run_rollout(nodes[node_id].state);
        if (result) {
            scale.observe(result->finished_value);
            incumbent.offer(result->finished_value, result->finished);
            backprop(path, true, result->finished_value);
        } else {
            backprop(path, false, 0.0);
        }
    }

    Packing p;
    p.total = incumbent.total;
    p.chosen_members = incumbent.members;
    std::sort(p.chosen_members.begin(), p.chosen_members.end());
    p.proven_optimal = false;
    p.nodes_expanded = clock.used();
    p.wall_ms = clock.report_wall_ms();
    return p;
}

}  // namespace colform
