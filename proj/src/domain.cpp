#include "colform/domain.hpp"

#include <algorithm>
#include <cmath>

#include "colform/rng.hpp"

namespace colform {

namespace {

constexpr int kRidesharingCap = 5;
constexpr int kTeamCap = 3;
constexpr int kGridZones = 10;  // zones per axis; coordinates normalized by 9
constexpr double kTeamEps = 1e-6;
constexpr double kSkillRequirement = 0.6;

double manhattan(double ax, double ay, double bx, double by) {
    return std::abs(ax - bx) + std::abs(ay - by);
}

double solo_cost(const AgentFeatures& a) {
    return manhattan(a.values[0], a.values[1], a.values[2], a.values[3]);
}

// Nearest-neighbor route visiting every member origin and then every member
// destination. Starts at the feature-lexicographically smallest member and
// breaks distance ties by feature order, so the cost depends only on the
// multiset of trips, never on agent labels.
double shared_route_cost(const Instance& inst, const std::vector<int>& sorted_members) {
    const size_t m = sorted_members.size();
    auto features = [&](size_t i) -> const std::vector<double>& {
        return inst.agents[sorted_members[i]].values;
    };

    std::vector<uint8_t> done(m, 0);
    size_t start = 0;
    for (size_t i = 1; i < m; ++i)
        if (features(i) < features(start)) start = i;
    double x = features(start)[0];
    double y = features(start)[1];
    done[start] = 1;
    double total = 0.0;

    auto visit_nearest = [&](int fx, int fy) {
        size_t best = m;
        double best_d = 0.0;
        for (size_t i = 0; i < m; ++i) {
            if (done[i]) continue;
            const double d = manhattan(x, y, features(i)[fx], features(i)[fy]);
            if (best == m || d < best_d || (d == best_d && features(i) < features(best))) {
                best = i;
                best_d = d;
            }
        }
        total += best_d;
        x = features(best)[fx];
        y = features(best)[fy];
        done[best] = 1;
    };

    for (size_t step = 1; step < m; ++step) visit_nearest(0, 1);
    std::fill(done.begin(), done.end(), 0);
    for (size_t step = 0; step < m; ++step) visit_nearest(2, 3);
    return total;
}

double ridesharing_utility(const Instance& inst, const std::vector<int>& sorted_members) {
    double solo = 0.0;
    for (int i : sorted_members) solo += solo_cost(inst.agents[i]);
    return solo - shared_route_cost(inst, sorted_members);
}

// Stand-in team quality score u_team = g_bal * p_cov * c_fit + eps:
//   g_bal  gender balance, 1 - |mean gender - 0.5| * 2 * 0.5        in [0.5, 1]
//   p_cov  personality coverage, 0.5 + s/4 where s is the mean pairwise
//          mean-absolute trait difference (s in [0, 2])             in [0.5, 1]
//   c_fit  competence fit, 1 - mean_t |max_i competence_{i,t} - 0.6| in [0.4, 1]
// The returned team value is log(u_team); summing over a partition
// linearizes the Nash product of team scores.
double team_utility(const Instance& inst, const std::vector<int>& sorted_members) {
    const size_t m = sorted_members.size();

    double gender_sum = 0.0;
    for (int i : sorted_members) gender_sum += inst.agents[i].values[0];
    const double g_bal = 1.0 - std::abs(gender_sum / static_cast<double>(m) - 0.5) * 2.0 * 0.5;

    double spread = 0.0;
    if (m >= 2) {
        int pairs = 0;
        for (size_t i = 0; i < m; ++i) {
            for (size_t j = i + 1; j < m; ++j) {
                const auto& pi = inst.agents[sorted_members[i]].values;
                const auto& pj = inst.agents[sorted_members[j]].values;
                double d = 0.0;
                for (int t = 1; t <= 4; ++t) d += std::abs(pi[t] - pj[t]);
                spread += d / 4.0;
                ++pairs;
            }
        }
        spread /= pairs;
    }
    const double p_cov = 0.5 + spread / 4.0;

    double gap = 0.0;
    for (int t = 5; t < 12; ++t) {
        double best = 0.0;
        for (int i : sorted_members) best = std::max(best, inst.agents[i].values[t]);
        gap += std::abs(best - kSkillRequirement);
    }
    const double c_fit = 1.0 - gap / 7.0;

    return std::log(g_bal * p_cov * c_fit + kTeamEps);
}

std::vector<int> checked_sorted_members(const Instance& inst, const std::vector<int>& members) {
    const auto& rules = rules_for(inst.domain);
    std::vector<int> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    const bool unique = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    if (sorted.empty() || !unique || sorted.front() < 0 || sorted.back() >= inst.n() ||
        static_cast<int>(sorted.size()) > rules.max_cardinality) {
        throw InfeasibleCollective("infeasible collective for domain " +
                                   std::string(domain_name(inst.domain)));
    }
    return sorted;
}

}  // namespace

const char* domain_name(Domain d) {
    return d == Domain::Ridesharing ? "ridesharing" : "team_formation";
}

Domain domain_from_name(const std::string& s) {
    if (s == "ridesharing") return Domain::Ridesharing;
    if (s == "team_formation") return Domain::TeamFormation;
    throw ConfigError("unknown domain: " + s);
}

int feature_dim(Domain d) { return d == Domain::Ridesharing ? 4 : 12; }

const DomainRules& rules_for(Domain d) {
    static const DomainRules ridesharing{
        kRidesharingCap, false,
        [](const Instance& inst, const std::vector<int>& members) {
            return ridesharing_utility(inst, checked_sorted_members(inst, members));
        }};
    static const DomainRules team_formation{
        kTeamCap, true,
        [](const Instance& inst, const std::vector<int>& members) {
            return team_utility(inst, checked_sorted_members(inst, members));
        }};
    return d == Domain::Ridesharing ? ridesharing : team_formation;
}

Instance generate_instance(Domain domain, int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_instance: n must be >= 1");
    Instance inst;
    inst.domain = domain;
    inst.seed = seed;
    inst.agents.resize(n);
    Rng rng(mix_seed(seed, static_cast<uint64_t>(domain), static_cast<uint64_t>(n)));
    for (auto& agent : inst.agents) {
        if (domain == Domain::Ridesharing) {
            agent.values.resize(4);
            for (double& v : agent.values)
                v = static_cast<double>(rng.uniform_int(0, kGridZones - 1)) / (kGridZones - 1);
        } else {
            agent.values.resize(12);
            agent.values[0] = static_cast<double>(rng.uniform_int(0, 1));
            for (int t = 1; t <= 4; ++t) agent.values[t] = rng.uniform(-1.0, 1.0);
            for (int t = 5; t < 12; ++t) agent.values[t] = rng.uniform(0.0, 1.0);
        }
    }
    return inst;
}

double utility(const Instance& inst, const std::vector<int>& members) {
    return rules_for(inst.domain).utility(inst, members);
}

bool is_feasible(const Instance& inst, const std::vector<int>& members) {
    if (members.empty()) return false;
    const auto& rules = rules_for(inst.domain);
    if (static_cast<int>(members.size()) > rules.max_cardinality) return false;
    std::vector<int> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
    return sorted.front() >= 0 && sorted.back() < inst.n();
}

uint64_t count_feasible(int n, int cap, uint64_t limit) {
    uint64_t total = 0;
    for (int k = 1; k <= std::min(cap, n); ++k) {
        // C(n, k) with overflow-safe incremental evaluation.
        uint64_t c = 1;
        for (int i = 1; i <= k; ++i) {
            c = c * static_cast<uint64_t>(n - k + i) / static_cast<uint64_t>(i);
            if (c > limit) throw EnumerationTooLarge("count_feasible: past limit");
        }
        total += c;
        if (total > limit) throw EnumerationTooLarge("count_feasible: past limit");
    }
    return total;
}

std::vector<Collective> enumerate_feasible(const Instance& inst, uint64_t limit) {
    const auto& rules = rules_for(inst.domain);
    const int n = inst.n();
    const int cap = std::min(rules.max_cardinality, n);
    count_feasible(n, cap, limit);  // throws when too large

    std::vector<Collective> out;
    std::vector<int> cur;
    // Depth-first over sorted member lists emits lexicographic order within
    // each cardinality; we group by cardinality ascending.
    for (int k = 1; k <= cap; ++k) {
        cur.assign(k, 0);
        for (int i = 0; i < k; ++i) cur[i] = i;
        while (true) {
            out.push_back({cur, rules.utility(inst, cur)});
            int i = k - 1;
            while (i >= 0 && cur[i] == n - k + i) --i;
            if (i < 0) break;
            ++cur[i];
            for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
        }
    }
    return out;
}

}  // namespace colform
