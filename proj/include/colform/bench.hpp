#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colform/budget.hpp"
#include "colform/domain.hpp"
#include "colform/generate.hpp"
#include "colform/policy.hpp"
#include "colform/solve.hpp"

namespace colform {

enum class Method { AM, GMcts, AMcts, RMcts };

const char* method_name(Method m);
Method method_from_name(const std::string& s);

struct ExperimentConfig {
    Domain domain = Domain::Ridesharing;
    std::vector<int> sizes{50};
    int instances_per_size = 50;  // 20 by default for team formation
    int run_seeds = 50;           // seeds 0..run_seeds-1
    Budget::Mode budget_mode = Budget::Mode::Wall;
    double budget = 60.0;  // seconds in wall mode, units in count mode
    double split_k = 5.0 / 6.0;
    std::vector<Method> methods{Method::AM, Method::GMcts, Method::AMcts, Method::RMcts};
    std::string checkpoint;  // required when AM is among the methods
    std::string out_dir;
    uint64_t instance_seed_base = 1000;
    int threads = 1;

    static ExperimentConfig from_json(const std::string& text);
    std::string to_json() const;
};

// In count mode one budget unit buys one policy rollout or one MCTS
// iteration; the solver gets kSolveNodesPerUnit node expansions per unit.
inline constexpr uint64_t kSolveNodesPerUnit = 1000;

struct RunRecord {
    Method method;
    int n = 0;
    uint64_t instance_seed = 0;
    int run_seed = 0;
    double value = 0.0;
    double reference = 0.0;
    double ratio = 0.0;
    double wall_ms = 0.0;
    bool exact_reference = true;
};

struct ReportRow {
    Method method;
    int n = 0;
    double mean_ratio = 0.0;
    double std_ratio = 0.0;
    bool exact_reference = true;  // false once any instance fell back to best-known
};

struct BenchResult {
    std::vector<RunRecord> runs;
    std::vector<ReportRow> report;
    bool oracle_limit_hit = false;
};

// Value achieved divided by the reference optimum, kept in [0, 1] for both
// positive (ridesharing savings) and negative (team-formation log) totals.
double optimality_ratio(double value, double reference);

BenchResult run_experiment(const ExperimentConfig& config);

std::string runs_csv(const ExperimentConfig& config, const std::vector<RunRecord>& runs);
std::vector<RunRecord> parse_runs_csv(const std::string& text);

// One AM pipeline run: budgeted pool generation followed by the exact
// solver on the generated candidates.
Packing am_pipeline(const PolicyParams& params, const Instance& inst, const Budget& total,
                    double split_k, uint64_t run_seed);

struct DiversityResult {
    ValueHistogram a, b;  // shared bin edges
};

DiversityResult diversity_report(const std::string& checkpoint_a,
                                 const std::string& checkpoint_b, const Instance& inst,
                                 const Budget& budget, uint64_t seed, int bins);

std::string diversity_csv(const DiversityResult& d);

}  // namespace colform
