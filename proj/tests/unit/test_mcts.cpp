#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "colform/mcts.hpp"

using namespace colform;

namespace {

double packing_total(const Instance& inst, const Packing& p) {
    double t = 0.0;
    for (const auto& members : p.chosen_members) t += utility(inst, members);
    return t;
}

bool members_disjoint_and_valid(const Instance& inst, const Packing& p, bool partition) {
    AgentSet covered;
    for (const auto& members : p.chosen_members) {
        if (!is_feasible(inst, members)) return false;
        AgentSet m = AgentSet::of(members);
        if (covered.intersects(m)) return false;
        covered.unite(m);
    }
    return !partition || covered == AgentSet::full(inst.n());
}

MctsConfig config_of(MctsRollout policy, uint64_t iters, uint64_t seed) {
    MctsConfig c;
    c.policy = policy;
    c.budget = Budget::of_count(iters);
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("mcts_search: two-agent pool reaches the enumerated optimum") {
    const Instance inst = generate_instance(Domain::Ridesharing, 2, 51);
    // The three packings of two agents.
    const double both = utility(inst, {0, 1});
    const double split = utility(inst, {0}) + utility(inst, {1});
    const double best = std::max(both, split);
    for (MctsRollout policy :
         {MctsRollout::Greedy, MctsRollout::Adapted, MctsRollout::Random}) {
        const Packing p = mcts_search(inst, config_of(policy, 500, 7));
        CHECK(p.total == doctest::Approx(best));
    }
}

TEST_CASE("mcts_search: zero budget still yields a valid packing") {
    for (Domain d : {Domain::Ridesharing, Domain::TeamFormation}) {
        const Instance inst = generate_instance(d, 8, 52);
        const Packing p = mcts_search(inst, config_of(MctsRollout::Random, 0, 3));
        CHECK(members_disjoint_and_valid(inst, p, rules_for(d).partition_required));
        CHECK(p.total == doctest::Approx(packing_total(inst, p)));
    }
}

TEST_CASE("mcts_search: greedy-friendly instance matches the brute force") {
    // Two identical commuters and one far-away rider: merging the twins is
    // the optimum and also the first greedy move.
    Instance inst;
    inst.domain = Domain::Ridesharing;
    inst.agents = {{{0.1, 0.1, 0.9, 0.9}}, {{0.1, 0.1, 0.9, 0.9}}, {{0.9, 0.1, 0.1, 0.2}}};
    const auto feasible = enumerate_feasible(inst);
    const Packing oracle =
        solve_bruteforce(wsp_from_collectives(3, WspMode::Packing, feasible));
    const Packing p = mcts_search(inst, config_of(MctsRollout::Greedy, 300, 11));
    CHECK(p.total == doctest::Approx(oracle.total));
}

TEST_CASE("mcts_search: budget monotonicity under a shared seed") {
    const Instance inst = generate_instance(Domain::Ridesharing, 10, 53);
    for (MctsRollout policy :
         {MctsRollout::Greedy, MctsRollout::Adapted, MctsRollout::Random}) {
        double prev = -1e300;
        for (uint64_t budget : {50, 100, 200, 400}) {
            const Packing p = mcts_search(inst, config_of(policy, budget, 19));
            CHECK(p.total >= prev - 1e-12);
            prev = p.total;
        }
    }
}

TEST_CASE("mcts_search: partition mode packings cover everyone") {
    const Instance inst = generate_instance(Domain::TeamFormation, 9, 54);
    for (MctsRollout policy :
         {MctsRollout::Greedy, MctsRollout::Adapted, MctsRollout::Random}) {
        const Packing p = mcts_search(inst, config_of(policy, 300, 23));
        CHECK(members_disjoint_and_valid(inst, p, true));
    }
}

TEST_CASE("rollout_policy_step: a single feasible action is forced") {
    const Instance inst = generate_instance(Domain::TeamFormation, 4, 55);
    Rng rng(1);
    MctsState s;
    s.remaining = AgentSet{};  // nothing left to add
    s.partial = {0, 1};
    for (MctsRollout policy :
         {MctsRollout::Greedy, MctsRollout::Adapted, MctsRollout::Random}) {
        const auto a = rollout_policy_step(inst, s, policy, rng);
        REQUIRE(a.has_value());
        CHECK(*a == inst.n());  // close is the only move
    }
}

TEST_CASE("rollout_policy_step: greedy breaks exact ties toward the lower index") {
    // Two identical agents: adding either yields the same increment.
    Instance inst;
    inst.domain = Domain::Ridesharing;
    inst.agents = {{{0.2, 0.2, 0.7, 0.7}}, {{0.2, 0.2, 0.7, 0.7}}};
    Rng rng(2);
    MctsState s;
    s.remaining = AgentSet::full(2);
    const auto a = rollout_policy_step(inst, s, MctsRollout::Greedy, rng);
    REQUIRE(a.has_value());
    CHECK(*a == 0);
}

TEST_CASE("rollout_policy_step: adapted never violates the cardinality cap") {
    const Instance inst = generate_instance(Domain::TeamFormation, 10, 56);
    const int cap = rules_for(Domain::TeamFormation).max_cardinality;
    Rng rng(3);
    int checked = 0;
    for (int trial = 0; trial < 100000; ++trial) {
        MctsState s;
        s.remaining = AgentSet{};
        for (int i = 0; i < 10; ++i)
            if (rng.uniform_int(0, 1)) s.remaining.add(i);
        const int psize = rng.uniform_int(0, cap);
        for (int i = 0; i < psize; ++i) {
            const int a = rng.uniform_int(0, 9);
            if (s.remaining.test(a)) {
                s.remaining.remove(a);
                s.partial.push_back(a);
            }
        }
        std::sort(s.partial.begin(), s.partial.end());
        if (s.remaining.empty() && s.partial.empty()) continue;
        const auto a = rollout_policy_step(inst, s, MctsRollout::Adapted, rng);
        if (!a) continue;
        ++checked;
        if (*a != inst.n())
            CHECK(static_cast<int>(s.partial.size()) + 1 <= cap);
    }
    CHECK(checked > 10000);
}

TEST_CASE("rollout_policy_step: random may propose cap-busting adds") {
    const Instance inst = generate_instance(Domain::TeamFormation, 10, 57);
    const int cap = rules_for(Domain::TeamFormation).max_cardinality;
    Rng rng(4);
    MctsState s;
    s.remaining = AgentSet{};
    for (int i = 3; i < 10; ++i) s.remaining.add(i);
    s.partial = {0, 1, 2};  // already at the cap
    bool saw_violation = false;
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = rollout_policy_step(inst, s, MctsRollout::Random, rng);
        REQUIRE(a.has_value());
        if (*a != inst.n() && static_cast<int>(s.partial.size()) + 1 > cap)
            saw_violation = true;
    }
    CHECK(saw_violation);
}

TEST_CASE("ucb_select: c=0 is pure exploitation") {
    const std::vector<double> means{0.4, 0.9, 0.7};
    const std::vector<uint64_t> visits{10, 3, 100};
    CHECK(ucb_select(means, visits, 113, 0.0) == 1);
}

TEST_CASE("ucb_select: unvisited children take priority") {
    const std::vector<double> means{0.99, 0.0, 0.5};
    const std::vector<uint64_t> visits{50, 0, 20};
    CHECK(ucb_select(means, visits, 70, 1.0) == 1);
}
