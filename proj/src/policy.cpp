#include "colform/policy.hpp"

#include <algorithm>
#include <cmath>

namespace colform {

namespace {

Matrix features_matrix(const Instance& inst, int d_x) {
    check_shape(inst.d_x() == d_x, "encode_pool: feature width does not match params");
    Matrix x(inst.n(), d_x);
    for (int i = 0; i < inst.n(); ++i)
        std::copy(inst.agents[i].values.begin(), inst.agents[i].values.end(), x.row(i));
    return x;
}

// [h_A; stop] rows the decoder attends over.
Matrix with_stop_row(const PolicyParams& p, const Matrix& hA) {
    Matrix e(hA.rows + 1, hA.cols);
    std::copy(hA.a.begin(), hA.a.end(), e.a.begin());
    std::copy(p.stop_embedding.a.begin(), p.stop_embedding.a.end(), e.row(hA.rows));
    return e;
}

struct DecodeCache {
    Matrix hS;
    std::vector<int> members;
    Matrix e;  // [h_A; stop]
    nn::MhaCache glimpse;
    Matrix c;  // glimpse output, 1 x d
    Matrix q;  // c * compat_Wq
    Matrix K;  // e * compat_Wk
    std::vector<double> u;
    std::vector<double> tanh_u;
    std::vector<uint8_t> mask;
    PolicyOutput out;
};

PolicyOutput decode_with_cache(const PolicyParams& p, const Matrix& hA, const Matrix& hS,
                               const std::vector<uint8_t>& mask, DecodeCache* cache) {
    check_shape(hS.rows == 1 && hS.cols == p.cfg.d_h, "decode_probs: h_S must be 1 x d_h");
    check_shape(static_cast<int>(mask.size()) == hA.rows + 1,
                "decode_probs: mask must cover n agents plus STOP");
    DecodeCache local;
    DecodeCache& c = cache ? *cache : local;
    c.e = with_stop_row(p, hA);
    c.c = nn::mha_forward(p.glimpse, hS, c.e, &c.glimpse);
    c.q = matmul(c.c, p.compat_Wq);
    c.K = matmul(c.e, p.compat_Wk);
    const int m = c.e.rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.cfg.d_h));
    c.u.assign(m, 0.0);
    c.tanh_u.assign(m, 0.0);
    std::vector<double> z(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        const double* ki = c.K.row(i);
        for (int t = 0; t < p.cfg.d_h; ++t) s += c.q.a[t] * ki[t];
        c.u[i] = s * scale;
        c.tanh_u[i] = std::tanh(c.u[i]);
        z[i] = p.gamma * c.tanh_u[i];
    }
    PolicyOutput out;
    out.entropy = nn::masked_softmax(z, mask, out.probs, out.log_probs);
    c.mask = mask;
    c.out = out;
    return out;
}

// Backward through one decode step given d(loss)/dz on the pre-softmax
// logits. Accumulates parameter gradients and the step's contribution to
// d(loss)/dh_A.
void decode_backward(const PolicyParams& p, const Matrix& hA, const DecodeCache& c,
                     const std::vector<double>& dz, PolicyParams& grads, Matrix& dhA) {
    const int m = c.e.rows;
    const int d = p.cfg.d_h;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    Matrix dq(1, d);
    Matrix dK(m, d);
    for (int i = 0; i < m; ++i) {
        if (dz[i] == 0.0) continue;
        const double du = dz[i] * p.gamma * (1.0 - c.tanh_u[i] * c.tanh_u[i]) * scale;
        const double* ki = c.K.row(i);
        double* dki = dK.row(i);
        for (int t = 0; t < d; ++t) {
            dq.a[t] += du * ki[t];
            dki[t] += du * c.q.a[t];
        }
    }

    add_matmul_tn(grads.compat_Wq, c.c, dq);
    Matrix dc = matmul_nt(dq, p.compat_Wq);
    add_matmul_tn(grads.compat_Wk, c.e, dK);
    Matrix de = matmul_nt(dK, p.compat_Wk);

    Matrix dhS(1, d);
    nn::mha_backward(p.glimpse, c.hS, c.e, c.glimpse, dc, grads.glimpse, &dhS, &de);

    // h_S is either the placeholder or a mean of member rows.
    if (c.members.empty()) {
        add_inplace(grads.placeholder_v, dhS);
    } else {
        const double inv = 1.0 / static_cast<double>(c.members.size());
        for (int mbr : c.members) {
            double* row = dhA.row(mbr);
            for (int t = 0; t < d; ++t) row[t] += dhS.a[t] * inv;
        }
    }

    // Split d[h_A; stop].
    for (int i = 0; i < hA.rows; ++i) {
        const double* src = de.row(i);
        double* dst = dhA.row(i);
        for (int t = 0; t < d; ++t) dst[t] += src[t];
    }
    const double* ds = de.row(hA.rows);
    for (int t = 0; t < d; ++t) grads.stop_embedding.a[t] += ds[t];
}

// d(loss)/dz for one categorical step:
//   coeff_logp * dlog p[action]/dz + coeff_entropy * dH/dz
// with dlog p_a/dz_j = delta_aj - p_j and dH/dz_j = -p_j (log p_j + H).
std::vector<double> step_logit_gradient(const PolicyOutput& out,
                                        const std::vector<uint8_t>& mask, int action,
                                        double coeff_logp, double coeff_entropy) {
    const size_t m = out.probs.size();
    std::vector<double> dz(m, 0.0);
    for (size_t j = 0; j < m; ++j) {
        if (mask[j]) continue;
        double g = 0.0;
        if (coeff_logp != 0.0)
            g += coeff_logp * ((static_cast<int>(j) == action ? 1.0 : 0.0) - out.probs[j]);
        if (coeff_entropy != 0.0 && out.probs[j] > 0.0)
            g += coeff_entropy * (-out.probs[j] * (out.log_probs[j] + out.entropy));
        dz[j] = g;
    }
    return dz;
}

int pick_action(const PolicyOutput& out, RolloutMode mode, Rng* rng) {
    const int m = static_cast<int>(out.probs.size());
    if (mode == RolloutMode::Greedy) {
        int best = -1;
        for (int i = 0; i < m; ++i)
            if (out.probs[i] > 0.0 && (best < 0 || out.probs[i] > out.probs[best])) best = i;
        return best;
    }
    const double r = rng->u01();
    double acc = 0.0;
    int last = -1;
    for (int i = 0; i < m; ++i) {
        if (out.probs[i] <= 0.0) continue;
        acc += out.probs[i];
        last = i;
        if (r < acc) return i;
    }
    return last;
}

}  // namespace

std::vector<NamedTensor> named_tensors(PolicyParams& p) {
    std::vector<NamedTensor> out;
    const int d = p.cfg.d_h;
    out.push_back({"input.W", &p.input.W, p.d_x});
    out.push_back({"input.b", &p.input.b, p.d_x});
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        auto& blk = p.blocks[i];
        const std::string pre = "enc" + std::to_string(i) + ".";
        out.push_back({pre + "attn.Wq", &blk.attn.Wq, d});
        out.push_back({pre + "attn.Wk", &blk.attn.Wk, d});
        out.push_back({pre + "attn.Wv", &blk.attn.Wv, d});
        out.push_back({pre + "attn.Wo", &blk.attn.Wo, d});
        out.push_back({pre + "ln1.g", &blk.ln1.gain, d});
        out.push_back({pre + "ln1.b", &blk.ln1.bias, d});
        out.push_back({pre + "ff1.W", &blk.ff1.W, d});
        out.push_back({pre + "ff1.b", &blk.ff1.b, d});
        out.push_back({pre + "ff2.W", &blk.ff2.W, p.cfg.d_ff});
        out.push_back({pre + "ff2.b", &blk.ff2.b, p.cfg.d_ff});
        out.push_back({pre + "ln2.g", &blk.ln2.gain, d});
        out.push_back({pre + "ln2.b", &blk.ln2.bias, d});
    }
    out.push_back({"dec.glimpse.Wq", &p.glimpse.Wq, d});
    out.push_back({"dec.glimpse.Wk", &p.glimpse.Wk, d});
    out.push_back({"dec.glimpse.Wv", &p.glimpse.Wv, d});
    out.push_back({"dec.glimpse.Wo", &p.glimpse.Wo, d});
    out.push_back({"dec.compat.Wq", &p.compat_Wq, d});
    out.push_back({"dec.compat.Wk", &p.compat_Wk, d});
    out.push_back({"dec.v", &p.placeholder_v, d});
    out.push_back({"dec.stop", &p.stop_embedding, d});
    return out;
}

static void shape_policy(PolicyParams& p) {
    const int d = p.cfg.d_h;
    p.input.W = Matrix(p.d_x, d);
    p.input.b = Matrix(1, d);
    p.blocks.assign(p.cfg.blocks, {});
    for (auto& blk : p.blocks) {
        blk.attn = {Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(d, d), p.cfg.heads};
        blk.ln1 = {Matrix(1, d), Matrix(1, d)};
        blk.ff1 = {Matrix(d, p.cfg.d_ff), Matrix(1, p.cfg.d_ff)};
        blk.ff2 = {Matrix(p.cfg.d_ff, d), Matrix(1, d)};
        blk.ln2 = {Matrix(1, d), Matrix(1, d)};
    }
    p.glimpse = {Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(d, d), p.cfg.heads};
    p.compat_Wq = Matrix(d, d);
    p.compat_Wk = Matrix(d, d);
    p.placeholder_v = Matrix(1, d);
    p.stop_embedding = Matrix(1, d);
}

PolicyParams make_policy(Domain domain, const nn::AttentionConfig& cfg, uint64_t seed) {
    if (!cfg.valid()) throw ConfigError("make_policy: invalid attention config");
    PolicyParams p;
    p.domain = domain;
    p.d_x = feature_dim(domain);
    p.cfg = cfg;
    shape_policy(p);
    Rng rng(mix_seed(seed, 0x706f6c696379ULL));
    for (auto& t : named_tensors(p))
        nn::init_uniform(*t.tensor, 1.0 / std::sqrt(static_cast<double>(t.init_fan_in)), rng);
    return p;
}

PolicyParams zeros_like(const PolicyParams& p) {
    PolicyParams z;
    z.domain = p.domain;
    z.d_x = p.d_x;
    z.cfg = p.cfg;
    z.gamma = p.gamma;
    shape_policy(z);
    return z;
}

Matrix encode_pool(const PolicyParams& p, const Instance& inst, EncodeCache* cache) {
    if (inst.n() < 1) throw std::invalid_argument("encode_pool: empty instance");
    EncodeCache local;
    EncodeCache& c = cache ? *cache : local;
    c.x = features_matrix(inst, p.d_x);
    c.e0 = nn::linear_forward(p.input, c.x);
    c.blocks.resize(p.blocks.size());
    Matrix h = c.e0;
    for (size_t b = 0; b < p.blocks.size(); ++b)
        h = nn::encoder_block_forward(p.blocks[b], h, &c.blocks[b]);
    return h;
}

void encode_pool_backward(const PolicyParams& p, const EncodeCache& cache, const Matrix& dhA,
                          PolicyParams& grads) {
    Matrix dh = dhA;
    for (size_t b = p.blocks.size(); b-- > 0;) {
        Matrix dprev(dh.rows, dh.cols);
        nn::encoder_block_backward(p.blocks[b], cache.blocks[b], dh, grads.blocks[b], &dprev);
        dh = std::move(dprev);
    }
    nn::linear_backward(p.input, cache.x, dh, grads.input, nullptr);
}

Matrix encode_collective(const PolicyParams& p, const Matrix& hA, const AgentSet& partial) {
    const int d = p.cfg.d_h;
    if (partial.empty()) return p.placeholder_v;
    Matrix hS(1, d);
    const auto members = partial.to_indices();
    for (int m : members) {
        const double* row = hA.row(m);
        for (int t = 0; t < d; ++t) hS.a[t] += row[t];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (double& v : hS.a) v *= inv;
    return hS;
}

PolicyOutput decode_probs(const PolicyParams& p, const Matrix& hA, const Matrix& hS,
                          const std::vector<uint8_t>& mask) {
    return decode_with_cache(p, hA, hS, mask, nullptr);
}

std::vector<uint8_t> action_mask(int n, const AgentSet& partial, const AgentSet& excluded) {
    std::vector<uint8_t> mask(n + 1, 0);
    for (int i = 0; i < n; ++i)
        if (partial.test(i) || excluded.test(i)) mask[i] = 1;
    if (partial.empty()) mask[n] = 1;  // empty collectives are forbidden
    return mask;
}

Rollout rollout(const PolicyParams& p, const Instance& inst, const State& start,
                RolloutMode mode, Rng* rng, const AgentSet& excluded, const Matrix* hA_in) {
    if (mode == RolloutMode::Sample && !rng)
        throw std::invalid_argument("rollout: Sample mode requires an rng");
    const int n = inst.n();
    const int cap = rules_for(inst.domain).max_cardinality;

    Matrix hA_local;
    if (!hA_in) {
        hA_local = encode_pool(p, inst, nullptr);
        hA_in = &hA_local;
    }
    const Matrix& hA = *hA_in;

    Rollout r;
    AgentSet partial = start.partial;
    while (partial.count() < cap) {
        const Matrix hS = encode_collective(p, hA, partial);
        const auto mask = action_mask(n, partial, excluded);
        const PolicyOutput out = decode_with_cache(p, hA, hS, mask, nullptr);
        const int action = pick_action(out, mode, rng);
        r.actions.push_back(action);
        r.step_log_probs.push_back(out.log_probs[action]);
        r.step_entropies.push_back(out.entropy);
        if (action == n) break;  // STOP
        partial.add(action);
    }
    r.collective.members = partial.to_indices();
    r.collective.value = utility(inst, r.collective.members);
    return r;
}

TrajectoryScalars trajectory_backward(const PolicyParams& p, const Instance& inst,
                                      const std::vector<int>& actions, const AgentSet& excluded,
                                      double coeff_logp, double coeff_entropy,
                                      PolicyParams& grads) {
    const int n = inst.n();
    EncodeCache enc;
    const Matrix hA = encode_pool(p, inst, &enc);

    std::vector<DecodeCache> steps(actions.size());
    TrajectoryScalars scalars;
    AgentSet partial;
    for (size_t t = 0; t < actions.size(); ++t) {
        DecodeCache& c = steps[t];
        c.members = partial.to_indices();
        c.hS = encode_collective(p, hA, partial);
        const auto mask = action_mask(n, partial, excluded);
        const PolicyOutput out = decode_with_cache(p, hA, c.hS, mask, &c);
        scalars.sum_log_prob += out.log_probs[actions[t]];
        scalars.sum_entropy += out.entropy;
        if (actions[t] != n) partial.add(actions[t]);
    }

    if (coeff_logp == 0.0 && coeff_entropy == 0.0) return scalars;

    Matrix dhA(hA.rows, hA.cols);
    for (size_t t = 0; t < actions.size(); ++t) {
        const DecodeCache& c = steps[t];
        const auto dz = step_logit_gradient(c.out, c.mask, actions[t], coeff_logp, coeff_entropy);
        decode_backward(p, hA, c, dz, grads, dhA);
    }
    encode_pool_backward(p, enc, dhA, grads);
    return scalars;
}

double greedy_packing_value(const PolicyParams& p, const Instance& inst) {
    const Matrix hA = encode_pool(p, inst, nullptr);
    AgentSet remaining = AgentSet::full(inst.n());
    AgentSet excluded;  // complement of remaining
    double total = 0.0;
    while (!remaining.empty()) {
        const Rollout r = rollout(p, inst, State{&inst, AgentSet{}}, RolloutMode::Greedy,
                                  nullptr, excluded, &hA);
        total += r.collective.value;
        for (int m : r.collective.members) {
            remaining.remove(m);
            excluded.add(m);
        }
    }
    return total;
}

}  // namespace colform
