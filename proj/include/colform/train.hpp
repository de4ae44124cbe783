#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "colform/domain.hpp"
#include "colform/policy.hpp"
#include "colform/rng.hpp"

namespace colform {

struct TrainConfig {
    Domain domain = Domain::Ridesharing;
    int n_agents = 10;
    nn::AttentionConfig arch;  // paper-size by default
    int epochs = 100;
    int iters_per_epoch = 400;
    int batch = 256;
    double alpha = 0.05;  // one-sided paired T-test significance
    double tau = 0.05;    // entropy temperature
    double lr = 1e-4;
    int eval_instances = 100;
    uint64_t seed = 1;
    double gamma = 10.0;
    std::string out_dir;               // empty: keep everything in memory
    bool deterministic_timing = false; // report wall_ms = 0 in logs

    // Small profile used by CI and the desk-scale experiments.
    static TrainConfig desk(Domain domain, int n_agents, double tau, uint64_t seed);
};

// Bias-corrected Adam over flat buffers; shared by the policy optimizer and
// scalar tests.
struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};
void adam_update(double* param, const double* grad, double* m, double* v, size_t count,
                 long step, double lr, const AdamConfig& cfg = {});

struct AdamState {
    PolicyParams m, v;
    long step = 0;
    AdamConfig cfg;

    explicit AdamState(const PolicyParams& shape)
        : m(zeros_like(shape)), v(zeros_like(shape)) {}
};
void adam_step(PolicyParams& params, PolicyParams& grads, AdamState& state, double lr);

// Value function hook; tests can overrule the domain utility.
using ValueFn = std::function<double(const Instance&, const Collective&)>;
ValueFn domain_value_fn();

struct BatchStats {
    double mean_advantage = 0.0;
    double mean_entropy = 0.0;  // per decision step
    double mean_value = 0.0;    // of the sampled collectives
};

// One REINFORCE batch: samples a rollout per state under `params', a greedy
// rollout under `baseline' from the same state, and accumulates
//   -(f(S) - f(S_BL)) * grad(log pi) - tau * grad(entropy)
// into `grads' (mean-reduced over the batch; the optimizer minimizes).
BatchStats loss_gradient(const PolicyParams& params, const PolicyParams& baseline,
                         const std::vector<Instance>& states, double tau, Rng& rng,
                         PolicyParams& grads, const ValueFn& value = domain_value_fn());

struct EpochLog {
    int epoch = 0;
    double mean_value = 0.0;    // eval-set greedy packing value of the model
    double mean_entropy = 0.0;  // training entropy, mean per decision step
    bool baseline_swapped = false;
    double wall_ms = 0.0;
    // extra diagnostics (not serialized into the JSONL log)
    double eval_baseline = 0.0;
    double mean_advantage = 0.0;
};

std::string epoch_log_json(const EpochLog& e);

struct TrainResult {
    PolicyParams params;
    std::vector<EpochLog> log;
    int baseline_swaps = 0;
};

// Algorithm: REINFORCE with a greedy rollout baseline; the baseline snapshot
// is replaced at epoch end when a one-sided paired T-test on eval-set packing
// values passes. Writes per-epoch checkpoints, a JSONL training log and a
// resumable state file when out_dir is set.
TrainResult train(const TrainConfig& config);

// Continues a run from out_dir/train_state.bin (epochs already done are
// skipped). Requires the same config the run started with.
TrainResult train_resume(const TrainConfig& config);

}  // namespace colform
