#include "colform/generate.hpp"

#include <algorithm>
#include <set>

namespace colform {

CandidatePool generate_pool(const PolicyParams& params, const Instance& inst,
                            const Budget& budget, Rng& rng) {
    if (budget.mode == Budget::Mode::Wall && budget.seconds <= 0.0)
        throw std::invalid_argument("generate_pool: budget must be positive");

    CandidatePool pool;
    pool.instance = inst;
    std::set<std::vector<int>> seen;

    for (int a = 0; a < inst.n(); ++a) {
        std::vector<int> single{a};
        pool.collectives.push_back({single, utility(inst, single)});
        seen.insert(std::move(single));
    }

    BudgetClock clock(budget);
    const Matrix hA = encode_pool(params, inst, nullptr);
    while (clock.tick()) {
        const Rollout r = rollout(params, inst, State{&inst, AgentSet{}}, RolloutMode::Sample,
                                  &rng, AgentSet{}, &hA);
        ++pool.stats.rollouts;
        if (seen.insert(r.collective.members).second)
            pool.collectives.push_back(r.collective);
        else
            ++pool.stats.duplicates;
    }
    pool.stats.wall_ms = clock.report_wall_ms();
    return pool;
}

ValueHistogram pool_diversity(const CandidatePool& pool, int bins) {
    if (pool.collectives.empty())
        throw std::invalid_argument("pool_diversity: pool is empty");
    if (bins < 1) throw std::invalid_argument("pool_diversity: bins must be positive");

    double lo = pool.collectives.front().value, hi = lo;
    for (const auto& c : pool.collectives) {
        lo = std::min(lo, c.value);
        hi = std::max(hi, c.value);
    }
    if (hi <= lo) hi = lo + 1.0;  // degenerate: everything lands in bin 0

    ValueHistogram h;
    h.distinct = pool.collectives.size();
    h.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
    h.density.assign(bins, 0.0);
    const double mass = 1.0 / static_cast<double>(pool.collectives.size());
    for (const auto& c : pool.collectives) {
        int b = static_cast<int>((c.value - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        h.density[b] += mass;
    }
    return h;
}

}  // namespace colform
