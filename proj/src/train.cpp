#include "colform/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "colform/checkpoint.hpp"
#include "colform/stats.hpp"

namespace colform {

namespace fs = std::filesystem;

TrainConfig TrainConfig::desk(Domain domain, int n_agents, double tau, uint64_t seed) {
    TrainConfig c;
    c.domain = domain;
    c.n_agents = n_agents;
    c.arch = nn::AttentionConfig::desk();
    c.epochs = 20;
    c.iters_per_epoch = 40;
    c.batch = 32;
    c.tau = tau;
    c.lr = 1e-3;
    c.eval_instances = 64;
    c.seed = seed;
    return c;
}

void adam_update(double* param, const double* grad, double* m, double* v, size_t count,
                 long step, double lr, const AdamConfig& cfg) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step);
    for (size_t i = 0; i < count; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

void adam_step(PolicyParams& params, PolicyParams& grads, AdamState& state, double lr) {
    ++state.step;
    auto pt = named_tensors(params);
    auto gt = named_tensors(grads);
    auto mt = named_tensors(state.m);
    auto vt = named_tensors(state.v);
    for (size_t i = 0; i < pt.size(); ++i) {
        check_shape(pt[i].tensor->size() == gt[i].tensor->size(), "adam_step: shape mismatch");
        adam_update(pt[i].tensor->a.data(), gt[i].tensor->a.data(), mt[i].tensor->a.data(),
                    vt[i].tensor->a.data(), pt[i].tensor->size(), state.step, lr, state.cfg);
    }
}

ValueFn domain_value_fn() {
    return [](const Instance&, const Collective& c) { return c.value; };
}

BatchStats loss_gradient(const PolicyParams& params, const PolicyParams& baseline,
                         const std::vector<Instance>& states, double tau, Rng& rng,
                         PolicyParams& grads, const ValueFn& value) {
    if (states.empty()) throw std::invalid_argument("loss_gradient: empty batch");
    BatchStats stats;
    const double inv_b = 1.0 / static_cast<double>(states.size());
    size_t total_steps = 0;
    double total_entropy = 0.0;
    for (const auto& inst : states) {
        const State start{&inst, AgentSet{}};
        const Rollout sampled = rollout(params, inst, start, RolloutMode::Sample, &rng);
        const Rollout bl = rollout(baseline, inst, start, RolloutMode::Greedy, nullptr);
        const double advantage =
            value(inst, sampled.collective) - value(inst, bl.collective);
        // Maximizing f + tau*H: the minimized loss carries the flipped sign.
        trajectory_backward(params, inst, sampled.actions, AgentSet{},
                            -advantage * inv_b, -tau * inv_b, grads);
        stats.mean_advantage += advantage * inv_b;
        stats.mean_value += value(inst, sampled.collective) * inv_b;
        total_entropy += sampled.sum_entropy();
        total_steps += sampled.step_entropies.size();
    }
    stats.mean_entropy = total_steps ? total_entropy / static_cast<double>(total_steps) : 0.0;
    return stats;
}

std::string epoch_log_json(const EpochLog& e) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"epoch\":%d,\"mean_value\":%.9g,\"mean_entropy\":%.9g,"
                  "\"baseline_swapped\":%s,\"wall_ms\":%.0f}",
                  e.epoch, e.mean_value, e.mean_entropy, e.baseline_swapped ? "true" : "false",
                  e.wall_ms);
    return buf;
}

namespace {

std::vector<Instance> make_eval_set(const TrainConfig& cfg) {
    std::vector<Instance> eval;
    eval.reserve(cfg.eval_instances);
    for (int i = 0; i < cfg.eval_instances; ++i)
        eval.push_back(
            generate_instance(cfg.domain, cfg.n_agents, mix_seed(cfg.seed, 0xe7a1, i)));
    return eval;
}

double eval_mean_packing(const PolicyParams& p, const std::vector<Instance>& eval,
                         std::vector<double>* per_instance) {
    double mean = 0.0;
    for (const auto& inst : eval) {
        const double v = greedy_packing_value(p, inst);
        if (per_instance) per_instance->push_back(v);
        mean += v / static_cast<double>(eval.size());
    }
    return mean;
}

struct TrainState {
    PolicyParams params;
    PolicyParams baseline;
    AdamState adam;
    int next_epoch = 0;
    int swaps = 0;
    std::vector<EpochLog> log;
};

void write_matrix(std::ostream& os, const Matrix& m) {
    os.write(reinterpret_cast<const char*>(m.a.data()),
             static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}
void read_matrix(std::istream& is, Matrix& m) {
    is.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}

void save_train_state(const std::string& path, TrainState& st) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write train state: " + path);
    const int32_t header[2] = {st.next_epoch, st.swaps};
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    const int64_t step = st.adam.step;
    os.write(reinterpret_cast<const char*>(&step), sizeof(step));
    for (auto& t : named_tensors(st.params)) write_matrix(os, *t.tensor);
    for (auto& t : named_tensors(st.baseline)) write_matrix(os, *t.tensor);
    for (auto& t : named_tensors(st.adam.m)) write_matrix(os, *t.tensor);
    for (auto& t : named_tensors(st.adam.v)) write_matrix(os, *t.tensor);
    if (!os) throw IoError("train state write failed: " + path);
}

bool load_train_state(const std::string& path, TrainState& st) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    int32_t header[2];
    is.read(reinterpret_cast<char*>(header), sizeof(header));
    int64_t step = 0;
    is.read(reinterpret_cast<char*>(&step), sizeof(step));
    st.next_epoch = header[0];
    st.swaps = header[1];
    st.adam.step = step;
    for (auto& t : named_tensors(st.params)) read_matrix(is, *t.tensor);
    for (auto& t : named_tensors(st.baseline)) read_matrix(is, *t.tensor);
    for (auto& t : named_tensors(st.adam.m)) read_matrix(is, *t.tensor);
    for (auto& t : named_tensors(st.adam.v)) read_matrix(is, *t.tensor);
    if (!is) throw IoError("train state truncated: " + path);
    return true;
}

TrainResult train_impl(const TrainConfig& cfg, bool resume) {
    if (cfg.epochs < 1 || cfg.iters_per_epoch < 1 || cfg.batch < 1 || cfg.eval_instances < 2 ||
        cfg.alpha <= 0.0 || cfg.alpha >= 1.0 || cfg.tau < 0.0 || !cfg.arch.valid())
        throw ConfigError("train: invalid config");

    TrainState st{make_policy(cfg.domain, cfg.arch, cfg.seed), PolicyParams{},
                  AdamState(make_policy(cfg.domain, cfg.arch, cfg.seed)), 0, 0, {}};
    st.params.gamma = cfg.gamma;
    st.baseline = st.params;

    std::string state_path, log_path;
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        state_path = cfg.out_dir + "/train_state.bin";
        log_path = cfg.out_dir + "/train_log.jsonl";
    }
    if (resume) {
        if (state_path.empty()) throw ConfigError("train_resume: out_dir required");
        load_train_state(state_path, st);
    } else if (!log_path.empty()) {
        std::ofstream(log_path, std::ios::trunc);  // start a fresh log
    }

    const std::vector<Instance> eval_set = make_eval_set(cfg);
    PolicyParams grads = zeros_like(st.params);

    for (int epoch = st.next_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double epoch_entropy = 0.0, epoch_advantage = 0.0;
        for (int iter = 0; iter < cfg.iters_per_epoch; ++iter) {
            std::vector<Instance> batch;
            batch.reserve(cfg.batch);
            for (int b = 0; b < cfg.batch; ++b)
                batch.push_back(generate_instance(
                    cfg.domain, cfg.n_agents, mix_seed(cfg.seed, epoch, iter, b)));
            Rng rng(mix_seed(cfg.seed, 0x5a11, epoch, iter));
            for (auto& t : named_tensors(grads)) t.tensor->zero();
            const BatchStats bs =
                loss_gradient(st.params, st.baseline, batch, cfg.tau, rng, grads);
            adam_step(st.params, grads, st.adam, cfg.lr);
            epoch_entropy += bs.mean_entropy / cfg.iters_per_epoch;
            epoch_advantage += bs.mean_advantage / cfg.iters_per_epoch;
        }

        std::vector<double> model_vals, baseline_vals;
        const double eval_model = eval_mean_packing(st.params, eval_set, &model_vals);
        const double eval_baseline = eval_mean_packing(st.baseline, eval_set, &baseline_vals);
        const bool swap = paired_ttest_improves(model_vals, baseline_vals, cfg.alpha);
        if (swap) {
            st.baseline = st.params;
            ++st.swaps;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.mean_value = eval_model;
        entry.mean_entropy = epoch_entropy;
        entry.baseline_swapped = swap;
        entry.wall_ms =
            cfg.deterministic_timing
                ? 0.0
                : std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            t0)
                      .count();
        entry.eval_baseline = eval_baseline;
        entry.mean_advantage = epoch_advantage;
        st.log.push_back(entry);
        st.next_epoch = epoch + 1;

        if (!cfg.out_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "/epoch_%04d.ckpt", epoch);
            save_checkpoint(cfg.out_dir + name, st.params);
            std::ofstream log(log_path, std::ios::app);
            log << epoch_log_json(entry) << "\n";
            save_train_state(state_path, st);
        }
    }

    return {st.params, st.log, st.swaps};
}

}  // namespace

TrainResult train(const TrainConfig& config) { return train_impl(config, false); }
TrainResult train_resume(const TrainConfig& config) { return train_impl(config, true); }

}  // namespace colform
