#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "colform/budget.hpp"
#include "colform/domain.hpp"
#include "colform/policy.hpp"

namespace colform {

struct PoolStats {
    uint64_t rollouts = 0;
    uint64_t duplicates = 0;
    double wall_ms = 0.0;
};

// Deduplicated scored collectives handed to the WSP solver. Singletons are
// always present so the downstream packing (and partition) stays feasible.
struct CandidatePool {
    Instance instance;
    std::vector<Collective> collectives;  // insertion order, unique member sets
    PoolStats stats;
};

CandidatePool generate_pool(const PolicyParams& params, const Instance& inst,
                            const Budget& budget, Rng& rng);

struct ValueHistogram {
    std::vector<double> edges;    // bins+1 ascending bin boundaries
    std::vector<double> density;  // normalized mass per bin, sums to 1
    uint64_t distinct = 0;        // pool size
};

ValueHistogram pool_diversity(const CandidatePool& pool, int bins);

}  // namespace colform
