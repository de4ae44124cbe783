#include "colform/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace colform::nn {

Matrix linear_forward(const Linear& l, const Matrix& x) {
    check_shape(x.cols == l.W.rows, "linear_forward: input width mismatch");
    Matrix y = matmul(x, l.W);
    for (int i = 0; i < y.rows; ++i) {
        double* yi = y.row(i);
        for (int j = 0; j < y.cols; ++j) yi[j] += l.b.a[j];
    }
    return y;
}

void linear_backward(const Linear& l, const Matrix& x, const Matrix& dy, Linear& grad,
                     Matrix* dx) {
    check_shape(dy.rows == x.rows && dy.cols == l.W.cols, "linear_backward: dy shape mismatch");
    add_matmul_tn(grad.W, x, dy);
    for (int i = 0; i < dy.rows; ++i) {
        const double* di = dy.row(i);
        for (int j = 0; j < dy.cols; ++j) grad.b.a[j] += di[j];
    }
    if (dx) add_matmul_nt(*dx, dy, l.W);
}

Matrix layer_norm_forward(const LayerNorm& l, const Matrix& x, LayerNormCache* cache) {
    const int d = x.cols;
    check_shape(d == l.gain.cols, "layer_norm: width mismatch");
    Matrix y(x.rows, d);
    if (cache) {
        cache->xhat = Matrix(x.rows, d);
        cache->inv_std.assign(x.rows, 0.0);
    }
    for (int i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += xi[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xi[j] - mean;
            var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        double* yi = y.row(i);
        for (int j = 0; j < d; ++j) {
            const double xh = (xi[j] - mean) * inv;
            yi[j] = xh * l.gain.a[j] + l.bias.a[j];
            if (cache) cache->xhat.at(i, j) = xh;
        }
        if (cache) cache->inv_std[i] = inv;
    }
    return y;
}

void layer_norm_backward(const LayerNorm& l, const LayerNormCache& cache, const Matrix& dy,
                         LayerNorm& grad, Matrix* dx) {
    const int d = dy.cols;
    for (int i = 0; i < dy.rows; ++i) {
        const double* di = dy.row(i);
        const double* xh = cache.xhat.row(i);
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int j = 0; j < d; ++j) {
            grad.gain.a[j] += di[j] * xh[j];
            grad.bias.a[j] += di[j];
            const double dxh = di[j] * l.gain.a[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh[j];
        }
        if (!dx) continue;
        const double inv = cache.inv_std[i];
        const double m1 = sum_dxhat / d;
        const double m2 = sum_dxhat_xhat / d;
        double* dxi = dx->row(i);
        for (int j = 0; j < d; ++j) {
            const double dxh = di[j] * l.gain.a[j];
            dxi[j] += inv * (dxh - m1 - xh[j] * m2);
        }
    }
}

Matrix mha_forward(const Mha& m, const Matrix& q_in, const Matrix& kv_in, MhaCache* cache) {
    const int d = m.Wq.rows;
    check_shape(q_in.cols == d && kv_in.cols == d, "mha_forward: width mismatch");
    check_shape(d % m.heads == 0, "mha_forward: d_h not divisible by heads");
    const int dk = d / m.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Matrix Q = matmul(q_in, m.Wq);
    Matrix K = matmul(kv_in, m.Wk);
    Matrix V = matmul(kv_in, m.Wv);

    Matrix concat(q_in.rows, d);
    std::vector<Matrix> attn(m.heads);
    for (int h = 0; h < m.heads; ++h) {
        const int off = h * dk;
        Matrix& A = attn[h];
        A = Matrix(q_in.rows, kv_in.rows);
        for (int i = 0; i < q_in.rows; ++i) {
            const double* qi = Q.row(i) + off;
            double* ai = A.row(i);
            double mx = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < kv_in.rows; ++j) {
                const double* kj = K.row(j) + off;
                double s = 0.0;
                for (int t = 0; t < dk; ++t) s += qi[t] * kj[t];
                ai[j] = s * scale;
                mx = std::max(mx, ai[j]);
            }
            double z = 0.0;
            for (int j = 0; j < kv_in.rows; ++j) {
                ai[j] = std::exp(ai[j] - mx);
                z += ai[j];
            }
            for (int j = 0; j < kv_in.rows; ++j) ai[j] /= z;
            double* ci = concat.row(i) + off;
            for (int j = 0; j < kv_in.rows; ++j) {
                const double aij = ai[j];
                const double* vj = V.row(j) + off;
                for (int t = 0; t < dk; ++t) ci[t] += aij * vj[t];
            }
        }
    }
    Matrix out = matmul(concat, m.Wo);
    if (cache) {
        cache->Q = std::move(Q);
        cache->K = std::move(K);
        cache->V = std::move(V);
        cache->attn = std::move(attn);
        cache->concat = std::move(concat);
    }
    return out;
}

void mha_backward(const Mha& m, const Matrix& q_in, const Matrix& kv_in, const MhaCache& cache,
                  const Matrix& dout, Mha& grad, Matrix* dq_in, Matrix* dkv_in) {
    const int d = m.Wq.rows;
    const int dk = d / m.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const int nq = q_in.rows;
    const int nk = kv_in.rows;

    // Output projection.
    add_matmul_tn(grad.Wo, cache.concat, dout);
    Matrix dconcat = matmul_nt(dout, m.Wo);

    Matrix dQ(nq, d), dK(nk, d), dV(nk, d);
    for (int h = 0; h < m.heads; ++h) {
        const int off = h * dk;
        const Matrix& A = cache.attn[h];
        for (int i = 0; i < nq; ++i) {
            const double* dci = dconcat.row(i) + off;
            const double* ai = A.row(i);
            // dA and dV for this query row.
            double dot = 0.0;  // sum_j dA_ij * A_ij, for softmax backward
            std::vector<double> dA(nk);
            for (int j = 0; j < nk; ++j) {
                const double* vj = cache.V.row(j) + off;
                double s = 0.0;
                for (int t = 0; t < dk; ++t) s += dci[t] * vj[t];
                dA[j] = s;
                dot += s * ai[j];
                double* dvj = dV.row(j) + off;
                for (int t = 0; t < dk; ++t) dvj[t] += ai[j] * dci[t];
            }
            // Softmax backward -> dS, then dQ/dK.
            const double* qi = cache.Q.row(i) + off;
            double* dqi = dQ.row(i) + off;
            for (int j = 0; j < nk; ++j) {
                const double ds = ai[j] * (dA[j] - dot) * scale;
                if (ds == 0.0) continue;
                const double* kj = cache.K.row(j) + off;
                double* dkj = dK.row(j) + off;
                for (int t = 0; t < dk; ++t) {
                    dqi[t] += ds * kj[t];
                    dkj[t] += ds * qi[t];
                }
            }
        }
    }

    add_matmul_tn(grad.Wq, q_in, dQ);
    add_matmul_tn(grad.Wk, kv_in, dK);
    add_matmul_tn(grad.Wv, kv_in, dV);
    if (dq_in) add_matmul_nt(*dq_in, dQ, m.Wq);
    if (dkv_in) {
        add_matmul_nt(*dkv_in, dK, m.Wk);
        add_matmul_nt(*dkv_in, dV, m.Wv);
    }
}

Matrix encoder_block_forward(const EncoderBlock& blk, const Matrix& h, EncoderBlockCache* cache) {
    EncoderBlockCache local;
    EncoderBlockCache& c = cache ? *cache : local;
    c.input = h;

    Matrix attn_out = mha_forward(blk.attn, h, h, &c.attn);
    add_inplace(attn_out, h);
    c.h1 = layer_norm_forward(blk.ln1, attn_out, &c.ln1);

    c.ff1_out = linear_forward(blk.ff1, c.h1);
    c.relu_out = c.ff1_out;
    for (double& v : c.relu_out.a) v = std::max(0.0, v);
    Matrix ff2_out = linear_forward(blk.ff2, c.relu_out);
    add_inplace(ff2_out, c.h1);
    return layer_norm_forward(blk.ln2, ff2_out, &c.ln2);
}

void encoder_block_backward(const EncoderBlock& blk, const EncoderBlockCache& cache,
                            const Matrix& dout, EncoderBlock& grad, Matrix* dh) {
    // Second residual + LN.
    Matrix dsum2(dout.rows, dout.cols);
    layer_norm_backward(blk.ln2, cache.ln2, dout, grad.ln2, &dsum2);

    // FF path.
    Matrix drelu(cache.relu_out.rows, cache.relu_out.cols);
    linear_backward(blk.ff2, cache.relu_out, dsum2, grad.ff2, &drelu);
    for (size_t i = 0; i < drelu.a.size(); ++i)
        if (cache.ff1_out.a[i] <= 0.0) drelu.a[i] = 0.0;
    Matrix dh1 = dsum2;  // residual branch
    linear_backward(blk.ff1, cache.h1, drelu, grad.ff1, &dh1);

    // First residual + LN.
    Matrix dsum1(dout.rows, dout.cols);
    layer_norm_backward(blk.ln1, cache.ln1, dh1, grad.ln1, &dsum1);

    if (dh) add_inplace(*dh, dsum1);  // residual branch into the block input
    mha_backward(blk.attn, cache.input, cache.input, cache.attn, dsum1, grad.attn, dh, dh);
}

void init_uniform(Matrix& m, double bound, Rng& rng) {
    for (double& v : m.a) {
        double x;
        do {
            x = (2.0 * rng.u01() - 1.0) * bound;
        } while (std::abs(x) >= bound);
        v = x;
    }
}

double masked_softmax(const std::vector<double>& z, const std::vector<uint8_t>& mask,
                      std::vector<double>& probs, std::vector<double>& log_probs) {
    const size_t n = z.size();
    probs.assign(n, 0.0);
    log_probs.assign(n, -std::numeric_limits<double>::infinity());
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i)
        if (!mask[i]) mx = std::max(mx, z[i]);
    if (mx == -std::numeric_limits<double>::infinity())
        throw NoActionAvailable("masked_softmax: every entry masked");
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (!mask[i]) sum += std::exp(z[i] - mx);
    const double log_sum = std::log(sum);
    double entropy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) continue;
        const double lp = z[i] - mx - log_sum;
        log_probs[i] = lp;
        probs[i] = std::exp(lp);
        if (probs[i] > 0.0) entropy -= probs[i] * lp;
    }
    return entropy;
}

}  // namespace colform::nn
