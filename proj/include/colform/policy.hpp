#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "colform/domain.hpp"
#include "colform/nn.hpp"
#include "colform/rng.hpp"

namespace colform {

// All learnable parameters of the encoder-decoder policy. A second instance
// of the same struct serves as the gradient buffer (and as each Adam moment
// accumulator), so shapes always mirror.
struct PolicyParams {
    Domain domain = Domain::Ridesharing;
    int d_x = 0;
    nn::AttentionConfig cfg;
    double gamma = 10.0;  // tanh clipping of decoder compatibilities

    nn::Linear input;  // d_x -> d_h
    std::vector<nn::EncoderBlock> blocks;
    nn::Mha glimpse;         // decoder cross attention, query h_S over [h_A; stop]
    Matrix compat_Wq;        // d_h x d_h
    Matrix compat_Wk;        // d_h x d_h
    Matrix placeholder_v;    // 1 x d_h, stands in for the empty collective
    Matrix stop_embedding;   // 1 x d_h, virtual STOP row

    int d_h() const { return cfg.d_h; }
};

struct NamedTensor {
    std::string name;
    Matrix* tensor;
    int init_fan_in;  // input size governing the init bound 1/sqrt(fan_in)
};

// Deterministic enumeration of every parameter tensor; the checkpoint format
// and the optimizer both iterate this order.
std::vector<NamedTensor> named_tensors(PolicyParams& p);

PolicyParams make_policy(Domain domain, const nn::AttentionConfig& cfg, uint64_t seed);
// Same architecture, every tensor zero: gradient / moment buffer.
PolicyParams zeros_like(const PolicyParams& p);

struct State {
    const Instance* instance = nullptr;
    AgentSet partial;  // members already in the collective under construction
};

struct PolicyOutput {
    std::vector<double> probs;      // n+1 entries, index n is STOP
    std::vector<double> log_probs;  // -inf on masked entries
    double entropy = 0.0;           // nats over the unmasked support
};

struct Rollout {
    Collective collective;
    std::vector<int> actions;  // chosen indices, n means STOP
    std::vector<double> step_log_probs;
    std::vector<double> step_entropies;

    double sum_log_prob() const {
        double s = 0.0;
        for (double lp : step_log_probs) s += lp;
        return s;
    }
    double sum_entropy() const {
        double s = 0.0;
        for (double h : step_entropies) s += h;
        return s;
    }
};

enum class RolloutMode { Sample, Greedy };

struct EncodeCache {
    Matrix x;   // n x d_x agent features
    Matrix e0;  // after input linear
    std::vector<nn::EncoderBlockCache> blocks;
};

// h_A: one embedding row per agent.
Matrix encode_pool(const PolicyParams& p, const Instance& inst, EncodeCache* cache = nullptr);
void encode_pool_backward(const PolicyParams& p, const EncodeCache& cache, const Matrix& dhA,
                          PolicyParams& grads);

// Mean of the member rows of h_A; the learnable placeholder when empty.
Matrix encode_collective(const PolicyParams& p, const Matrix& hA, const AgentSet& partial);

// mask[i] != 0 excludes entry i (agents 0..n-1, STOP at n) from the softmax.
PolicyOutput decode_probs(const PolicyParams& p, const Matrix& hA, const Matrix& hS,
                          const std::vector<uint8_t>& mask);

// Builds the decoder mask for a construction state: members of `partial` and
// agents in `excluded` are masked; STOP is masked while the partial is empty.
std::vector<uint8_t> action_mask(int n, const AgentSet& partial, const AgentSet& excluded);

// Runs the policy from `start` until STOP or the cardinality cap. Agents in
// `excluded` are never selected (used when packing sequentially). `rng` is
// required in Sample mode. `hA` may be supplied to reuse an encoding.
Rollout rollout(const PolicyParams& p, const Instance& inst, const State& start,
                RolloutMode mode, Rng* rng, const AgentSet& excluded = AgentSet{},
                const Matrix* hA = nullptr);

// Replays a fixed action sequence from the empty state and accumulates
//   coeff_logp * d(sum log pi) / dtheta + coeff_entropy * d(sum H) / dtheta
// into `grads`. Returns the trajectory log-probability and entropy sums.
// This is the single gradient entry point used by REINFORCE.
struct TrajectoryScalars {
    double sum_log_prob = 0.0;
    double sum_entropy = 0.0;
};
TrajectoryScalars trajectory_backward(const PolicyParams& p, const Instance& inst,
                                      const std::vector<int>& actions, const AgentSet& excluded,
                                      double coeff_logp, double coeff_entropy,
                                      PolicyParams& grads);

// Greedy sequential packing: rolls out greedily on the not-yet-assigned
// agents until everyone is assigned; returns the summed collective value.
double greedy_packing_value(const PolicyParams& p, const Instance& inst);

}  // namespace colform
