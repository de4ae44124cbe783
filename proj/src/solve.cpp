#include "colform/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "colform/errors.hpp"

namespace colform {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Slack on the optimistic bound so incremental floating-point drift can
// never prune the true optimum.
constexpr double kPruneSlack = 1e-9;

// Canonical total: weights summed in ascending chosen-set order, so equal
// packings always produce bit-identical totals regardless of search path.
double canonical_total(const WspInstance& inst, std::vector<int>& chosen) {
    std::sort(chosen.begin(), chosen.end());
    double t = 0.0;
    for (int s : chosen) t += inst.sets[s].weight;
    return t;
}

std::vector<std::vector<int>> sets_per_agent(const WspInstance& inst) {
    std::vector<std::vector<int>> by_agent(inst.n);
    for (size_t s = 0; s < inst.sets.size(); ++s)
        for (int a : inst.sets[s].mask.to_indices()) by_agent[a].push_back(static_cast<int>(s));
    return by_agent;
}

// Optimistic per-agent value share: max over sets containing the agent of
// weight/|set|. Packing mode may always leave an agent uncovered, so the
// share is floored at 0 there; partition mode keeps the signed value.
std::vector<double> agent_shares(const WspInstance& inst,
                                 const std::vector<std::vector<int>>& by_agent) {
    std::vector<double> share(inst.n, inst.mode == WspMode::Packing ? 0.0 : kNegInf);
    for (int a = 0; a < inst.n; ++a)
        for (int s : by_agent[a])
            share[a] = std::max(share[a], inst.sets[s].weight / inst.sets[s].card);
    return share;
}

void fill_members(const WspInstance& inst, Packing& p) {
    p.chosen_members.clear();
    for (int s : p.chosen) p.chosen_members.push_back(inst.sets[s].mask.to_indices());
}

struct BnbSearch {
    const WspInstance& inst;
    const std::vector<std::vector<int>>& by_agent;
    const std::vector<double>& share;
    BudgetClock clock;

    std::vector<int> current;
    std::vector<int> best_chosen;
    double best_total = kNegInf;
    bool have_incumbent = false;
    bool out_of_budget = false;
    uint64_t nodes = 0;

    void offer(std::vector<int> chosen) {
        double total = canonical_total(inst, chosen);
        if (!have_incumbent || total > best_total ||
            (total == best_total && chosen < best_chosen)) {
            best_total = total;
            best_chosen = std::move(chosen);
            have_incumbent = true;
        }
    }

    void dfs(AgentSet uncovered, double cur_total, double bound_rest) {
        if (out_of_budget) return;
        const int a = uncovered.lowest();
        if (a < 0) {
            offer(current);
            return;
        }
        if (have_incumbent && cur_total + bound_rest < best_total - kPruneSlack) return;
        ++nodes;
        if (!clock.tick()) {
            out_of_budget = true;
            return;
        }
        for (int s : by_agent[a]) {
            const WspSet& set = inst.sets[s];
            if (!uncovered.contains_all(set.mask)) continue;
            AgentSet next = uncovered;
            next.subtract(set.mask);
            double next_bound = bound_rest;
            for (int m : set.mask.to_indices()) next_bound -= share[m];
            current.push_back(s);
            dfs(next, cur_total + set.weight, next_bound);
            current.pop_back();
            if (out_of_budget) return;
        }
        if (inst.mode == WspMode::Packing) {
            AgentSet next = uncovered;
            next.remove(a);
            dfs(next, cur_total, bound_rest - share[a]);
        }
    }
};

}  // namespace

WspInstance wsp_from_collectives(int n, WspMode mode, const std::vector<Collective>& pool) {
    WspInstance inst;
    inst.n = n;
    inst.mode = mode;
    inst.sets.reserve(pool.size());
    for (const auto& c : pool)
        inst.sets.push_back(
            {AgentSet::of(c.members), c.value, static_cast<int>(c.members.size())});
    return inst;
}

Packing greedy_incumbent(const WspInstance& inst) {
    std::vector<int> order(inst.sets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return inst.sets[x].weight / inst.sets[x].card > inst.sets[y].weight / inst.sets[y].card;
    });

    Packing p;
    AgentSet covered;
    for (int s : order) {
        if (covered.intersects(inst.sets[s].mask)) continue;
        covered.unite(inst.sets[s].mask);
        p.chosen.push_back(s);
    }
    if (inst.mode == WspMode::Partition) {
        for (int a = 0; a < inst.n; ++a) {
            if (covered.test(a)) continue;
            int best = -1;
            for (size_t s = 0; s < inst.sets.size(); ++s) {
                if (inst.sets[s].card != 1 || !inst.sets[s].mask.test(a)) continue;
                if (best < 0 || inst.sets[s].weight > inst.sets[best].weight)
                    best = static_cast<int>(s);
            }
            if (best < 0)
                throw InfeasibleInstance("greedy_incumbent: agent " + std::to_string(a) +
                                         " has no singleton to patch with");
            p.chosen.push_back(best);
            covered.add(a);
        }
    }
    p.total = canonical_total(inst, p.chosen);
    p.proven_optimal = false;
    fill_members(inst, p);
    return p;
}

Packing solve_bnb(const WspInstance& inst, const Budget& budget) {
    const auto by_agent = sets_per_agent(inst);
    if (inst.mode == WspMode::Partition) {
        for (int a = 0; a < inst.n; ++a)
            if (by_agent[a].empty())
                throw InfeasibleInstance("solve_bnb: agent " + std::to_string(a) +
                                         " appears in no set");
    }
    const auto share = agent_shares(inst, by_agent);

    BnbSearch search{inst, by_agent, share, BudgetClock(budget), {}, {}, kNegInf, false,
                     false, 0};
    try {
        const Packing warm = greedy_incumbent(inst);
        search.best_chosen = warm.chosen;
        search.best_total = warm.total;
        search.have_incumbent = true;
    } catch (const InfeasibleInstance&) {
        // No greedy start; the search itself may still find a partition.
    }

    double bound0 = 0.0;
    for (double s : share) bound0 += s;
    search.dfs(AgentSet::full(inst.n), 0.0, bound0);

    if (!search.have_incumbent)
        throw InfeasibleInstance("solve_bnb: no feasible partition exists");
    Packing p;
    p.chosen = search.best_chosen;
    p.total = canonical_total(inst, p.chosen);
    p.proven_optimal = !search.out_of_budget;
    p.nodes_expanded = search.nodes;
    p.wall_ms = search.clock.report_wall_ms();
    fill_members(inst, p);
    return p;
}

Packing solve_bruteforce(const WspInstance& inst, uint64_t cell_limit) {
    if (inst.n > 63 || (1ULL << inst.n) > cell_limit)
        throw EnumerationTooLarge("solve_bruteforce: 2^n exceeds the cell limit");
    const auto by_agent = sets_per_agent(inst);
    if (inst.mode == WspMode::Partition) {
        for (int a = 0; a < inst.n; ++a)
            if (by_agent[a].empty())
                throw InfeasibleInstance("solve_bruteforce: agent " + std::to_string(a) +
                                         " appears in no set");
    }
    std::vector<uint64_t> set_bits(inst.sets.size(), 0);
    for (size_t s = 0; s < inst.sets.size(); ++s)
        for (int a : inst.sets[s].mask.to_indices()) set_bits[s] |= 1ULL << a;

    const uint64_t cells = 1ULL << inst.n;
    std::vector<double> val(cells, kNegInf);
    // choice >= 0: set index; -1: leave the lowest agent uncovered; -2: none.
    std::vector<int32_t> choice(cells, -2);
    val[0] = 0.0;
    choice[0] = -2;
    for (uint64_t mask = 1; mask < cells; ++mask) {
        const int a = std::countr_zero(mask);
        double best = kNegInf;
        int32_t pick = -2;
        if (inst.mode == WspMode::Packing) {
            const uint64_t rest = mask & (mask - 1);
            if (val[rest] > kNegInf) {
                best = val[rest];
                pick = -1;
            }
        }
        for (int s : by_agent[a]) {
            if ((set_bits[s] & mask) != set_bits[s]) continue;
            const double sub = val[mask & ~set_bits[s]];
            if (sub == kNegInf) continue;
            const double cand = sub + inst.sets[s].weight;
            if (cand > best) {
                best = cand;
                pick = s;
            }
        }
        val[mask] = best;
        choice[mask] = pick;
    }

    const uint64_t full = cells - 1;
    if (val[full] == kNegInf)
        throw InfeasibleInstance("solve_bruteforce: no feasible partition exists");

    Packing p;
    uint64_t mask = full;
    while (mask) {
        const int32_t pick = choice[mask];
        if (pick == -1) {
            mask &= mask - 1;
        } else {
            p.chosen.push_back(pick);
            mask &= ~set_bits[pick];
        }
    }
    p.total = canonical_total(inst, p.chosen);
    p.proven_optimal = true;
    p.nodes_expanded = cells;
    p.wall_ms = 0.0;
    fill_members(inst, p);
    return p;
}

std::string packing_violation(const WspInstance& inst, const Packing& p) {
    AgentSet covered;
    double sum = 0.0;
    for (const auto& members : p.chosen_members) {
        if (members.empty()) return "empty set in packing";
        AgentSet m = AgentSet::of(members);
        if (covered.intersects(m)) return "packing sets overlap";
        covered.unite(m);
        for (int a : members)
            if (a < 0 || a >= inst.n) return "agent index out of range";
    }
    for (size_t i = 0; i < p.chosen.size(); ++i) {
        sum += inst.sets[p.chosen[i]].weight;
        if (!(AgentSet::of(p.chosen_members[i]) == inst.sets[p.chosen[i]].mask))
            return "chosen_members does not match chosen set";
    }
    if (!p.chosen.empty() && std::abs(sum - p.total) > 1e-9 * std::max(1.0, std::abs(sum)))
        return "total does not equal the sum of chosen weights";
    if (inst.mode == WspMode::Partition && !(covered == AgentSet::full(inst.n)))
        return "partition does not cover every agent";
    return "";
}

}  // namespace colform
