#pragma once

#include <vector>

#include "colform/matrix.hpp"
#include "colform/rng.hpp"

namespace colform::nn {

// Encoder/decoder widths. Defaults follow the training setup used for the
// full-size model; desk() is the small profile used by CI and the
// acceptance experiments.
struct AttentionConfig {
    int d_h = 256;
    int heads = 8;
    int d_ff = 512;
    int blocks = 3;

    static AttentionConfig paper() { return {256, 8, 512, 3}; }
    static AttentionConfig desk() { return {64, 4, 128, 2}; }

    bool valid() const {
        return d_h > 0 && heads > 0 && d_ff > 0 && blocks > 0 && d_h % heads == 0;
    }
};

// ---------------------------------------------------------------------------
// Layers. Each layer is a plain bag of parameter matrices; gradients live in
// a second instance of the same struct so shapes mirror by construction.
// Backward passes accumulate (never overwrite) into the gradient structs,
// letting one buffer collect a whole batch.
// ---------------------------------------------------------------------------

struct Linear {
    Matrix W;  // in x out
    Matrix b;  // 1 x out
};

Matrix linear_forward(const Linear& l, const Matrix& x);
void linear_backward(const Linear& l, const Matrix& x, const Matrix& dy, Linear& grad,
                     Matrix* dx);

struct LayerNorm {
    Matrix gain;  // 1 x d
    Matrix bias;  // 1 x d
};

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
    Matrix xhat;                  // normalized input
    std::vector<double> inv_std;  // per row 1/sqrt(var + eps)
};

Matrix layer_norm_forward(const LayerNorm& l, const Matrix& x, LayerNormCache* cache);
void layer_norm_backward(const LayerNorm& l, const LayerNormCache& cache, const Matrix& dy,
                         LayerNorm& grad, Matrix* dx);

// Multi-head scaled dot-product attention, no projection biases. Queries and
// keys/values may come from different sequences (cross attention); encoder
// blocks call it with q_in == kv_in.
struct Mha {
    Matrix Wq, Wk, Wv, Wo;  // each d x d
    int heads = 1;
};

struct MhaCache {
    Matrix Q, K, V;            // projected inputs
    std::vector<Matrix> attn;  // per head, m x n softmax weights
    Matrix concat;             // m x d, heads concatenated pre-output-projection
};

Matrix mha_forward(const Mha& m, const Matrix& q_in, const Matrix& kv_in, MhaCache* cache);
void mha_backward(const Mha& m, const Matrix& q_in, const Matrix& kv_in, const MhaCache& cache,
                  const Matrix& dout, Mha& grad, Matrix* dq_in, Matrix* dkv_in);

// One encoder block: h1 = LN(h + SelfAttn(h)); out = LN(h1 + FF(h1)) with
// FF = linear 'ff1' -> ReLU -> linear 'ff2'.
struct EncoderBlock {
    Mha attn;
    LayerNorm ln1;
    Linear ff1;  // d_h -> d_ff
    Linear ff2;  // d_ff -> d_h
    LayerNorm ln2;
};

struct EncoderBlockCache {
    Matrix input;
    MhaCache attn;
    Matrix h1;  // after first residual + LN
    LayerNormCache ln1;
    Matrix ff1_out;   // pre-ReLU
    Matrix relu_out;  // post-ReLU
    LayerNormCache ln2;
};

Matrix encoder_block_forward(const EncoderBlock& blk, const Matrix& h, EncoderBlockCache* cache);
void encoder_block_backward(const EncoderBlock& blk, const EncoderBlockCache& cache,
                            const Matrix& dout, EncoderBlock& grad, Matrix* dh);

// Draws every entry strictly inside (-bound, bound).
void init_uniform(Matrix& m, double bound, Rng& rng);

// Softmax over the unmasked entries of z (mask[i] != 0 means excluded).
// Masked entries get probability exactly 0 and log-probability -inf.
// Returns the entropy over the unmasked support in nats.
double masked_softmax(const std::vector<double>& z, const std::vector<uint8_t>& mask,
                      std::vector<double>& probs, std::vector<double>& log_probs);

}  // namespace colform::nn
