#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "colform/nn.hpp"
#include "test_util.hpp"

using namespace colform;
using namespace colform::testing;

namespace {

nn::Linear make_linear(int in, int out, Rng& rng) {
    return {random_matrix(in, out, rng), random_matrix(1, out, rng)};
}

nn::Mha make_mha(int d, int heads, Rng& rng) {
    return {random_matrix(d, d, rng, 0.5), random_matrix(d, d, rng, 0.5),
            random_matrix(d, d, rng, 0.5), random_matrix(d, d, rng, 0.5), heads};
}

nn::EncoderBlock make_block(int d, int heads, int dff, Rng& rng) {
    nn::EncoderBlock blk;
    blk.attn = make_mha(d, heads, rng);
    blk.ln1 = {random_matrix(1, d, rng), random_matrix(1, d, rng)};
    blk.ff1 = make_linear(d, dff, rng);
    blk.ff2 = make_linear(dff, d, rng);
    blk.ln2 = {random_matrix(1, d, rng), random_matrix(1, d, rng)};
    return blk;
}

Matrix identity(int d) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
    return m;
}

}  // namespace

TEST_CASE("linear: identity weights pass input through") {
    nn::Linear l{identity(3), Matrix(1, 3)};
    Rng rng(7);
    Matrix x = random_matrix(4, 3, rng);
    CHECK(nn::linear_forward(l, x) == x);
}

TEST_CASE("linear: hand-computed example") {
    nn::Linear l{identity(2), Matrix(1, 2, {3.0, 3.0})};
    Matrix x(1, 2, {1.0, 2.0});
    Matrix y = nn::linear_forward(l, x);
    CHECK(y.at(0, 0) == doctest::Approx(4.0));
    CHECK(y.at(0, 1) == doctest::Approx(5.0));
}

TEST_CASE("linear: shape mismatch throws") {
    Rng rng(9);
    nn::Linear l = make_linear(3, 2, rng);
    Matrix x = random_matrix(2, 4, rng);
    CHECK_THROWS_AS(nn::linear_forward(l, x), ShapeError);
}

TEST_CASE("linear: gradients match finite differences") {
    Rng rng(11);
    nn::Linear l = make_linear(3, 5, rng);
    Matrix x = random_matrix(4, 3, rng);
    const Matrix r = random_matrix(4, 5, rng);  // fixed projection -> scalar

    auto eval = [&]() {
        const Matrix y = nn::linear_forward(l, x);
        double s = 0.0;
        for (size_t i = 0; i < y.a.size(); ++i) s += r.a[i] * y.a[i];
        return s;
    };

    nn::Linear grad{Matrix(3, 5), Matrix(1, 5)};
    Matrix dx(4, 3);
    nn::linear_backward(l, x, r, grad, &dx);

    const Matrix fdW = fd_grad(l.W, eval);
    const Matrix fdb = fd_grad(l.b, eval);
    const Matrix fdx = fd_grad(x, eval);
    CHECK(stacked_rel_err({&grad.W, &grad.b, &dx}, {&fdW, &fdb, &fdx}) < 1e-6);
}

TEST_CASE("layer_norm: constant row maps to bias") {
    nn::LayerNorm l{Matrix(1, 4, {1, 1, 1, 1}), Matrix(1, 4)};
    Matrix x(2, 4, {3, 3, 3, 3, -1, -1, -1, -1});
    Matrix y = nn::layer_norm_forward(l, x, nullptr);
    for (double v : y.a) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("layer_norm: normalizes mean and variance per row") {
    nn::LayerNorm l{Matrix(1, 16, std::vector<double>(16, 1.0)), Matrix(1, 16)};
    Rng rng(13);
    Matrix x = random_matrix(3, 16, rng, 2.0);
    Matrix y = nn::layer_norm_forward(l, x, nullptr);
    for (int i = 0; i < y.rows; ++i) {
        double mean = 0.0, var = 0.0;
        for (int j = 0; j < 16; ++j) mean += y.at(i, j) / 16.0;
        for (int j = 0; j < 16; ++j) var += y.at(i, j) * y.at(i, j) / 16.0;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-3);
    }
}

TEST_CASE("layer_norm: gradients match finite differences") {
    Rng rng(17);
    nn::LayerNorm l{random_matrix(1, 6, rng), random_matrix(1, 6, rng)};
    Matrix x = random_matrix(3, 6, rng, 2.0);
    const Matrix r = random_matrix(3, 6, rng);

    auto eval = [&]() {
        const Matrix y = nn::layer_norm_forward(l, x, nullptr);
        double s = 0.0;
        for (size_t i = 0; i < y.a.size(); ++i) s += r.a[i] * y.a[i];
        return s;
    };

    nn::LayerNormCache cache;
    nn::layer_norm_forward(l, x, &cache);
    nn::LayerNorm grad{Matrix(1, 6), Matrix(1, 6)};
    Matrix dx(3, 6);
    nn::layer_norm_backward(l, cache, r, grad, &dx);

    const Matrix fdg = fd_grad(l.gain, eval);
    const Matrix fdb = fd_grad(l.bias, eval);
    const Matrix fdx = fd_grad(x, eval);
    CHECK(stacked_rel_err({&grad.gain, &grad.bias, &dx}, {&fdg, &fdb, &fdx}) < 1e-5);
}

TEST_CASE("mha: single row with identity projections is returned unchanged") {
    const int d = 4;
    nn::Mha m{identity(d), identity(d), identity(d), identity(d), 2};
    Matrix x(1, d, {0.3, -1.2, 0.5, 2.0});
    Matrix y = nn::mha_forward(m, x, x, nullptr);
    for (int j = 0; j < d; ++j) CHECK(y.at(0, j) == doctest::Approx(x.at(0, j)));
}

TEST_CASE("mha: identical keys split attention evenly") {
    Rng rng(19);
    nn::Mha m = make_mha(8, 2, rng);
    Matrix kv(2, 8);
    for (int j = 0; j < 8; ++j) {
        kv.at(0, j) = 0.37 * j - 1.0;
        kv.at(1, j) = kv.at(0, j);
    }
    Matrix q = random_matrix(3, 8, rng);
    nn::MhaCache cache;
    nn::mha_forward(m, q, kv, &cache);
    for (const auto& A : cache.attn)
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) CHECK(A.at(i, j) == doctest::Approx(0.5));
}

TEST_CASE("mha: attention weights are a distribution per query row") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const int heads = 1 + (trial % 3);
        const int d = heads * (2 + trial % 2);
        nn::Mha m = make_mha(d, heads, rng);
        Matrix q = random_matrix(1 + trial % 4, d, rng, 2.0);
        Matrix kv = random_matrix(1 + (trial * 7) % 5, d, rng, 2.0);
        nn::MhaCache cache;
        nn::mha_forward(m, q, kv, &cache);
        for (const auto& A : cache.attn) {
            for (int i = 0; i < A.rows; ++i) {
                double sum = 0.0;
                for (int j = 0; j < A.cols; ++j) {
                    CHECK(A.at(i, j) >= 0.0);
                    sum += A.at(i, j);
                }
                CHECK(std::abs(sum - 1.0) < 1e-6);
            }
        }
    }
}

TEST_CASE("mha: gradients match finite differences") {
    Rng rng(29);
    const int d = 6, heads = 2;
    nn::Mha m = make_mha(d, heads, rng);
    Matrix q = random_matrix(3, d, rng);
    Matrix kv = random_matrix(4, d, rng);
    const Matrix r = random_matrix(3, d, rng);

    auto eval = [&]() {
        const Matrix y = nn::mha_forward(m, q, kv, nullptr);
        double s = 0.0;
        for (size_t i = 0; i < y.a.size(); ++i) s += r.a[i] * y.a[i];
        return s;
    };

    nn::MhaCache cache;
    nn::mha_forward(m, q, kv, &cache);
    nn::Mha grad{Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(d, d), heads};
    Matrix dq(3, d), dkv(4, d);
    nn::mha_backward(m, q, kv, cache, r, grad, &dq, &dkv);

    const Matrix fq = fd_grad(m.Wq, eval);
    const Matrix fk = fd_grad(m.Wk, eval);
    const Matrix fv = fd_grad(m.Wv, eval);
    const Matrix fo = fd_grad(m.Wo, eval);
    const Matrix fdq = fd_grad(q, eval);
    const Matrix fdkv = fd_grad(kv, eval);
    CHECK(stacked_rel_err({&grad.Wq, &grad.Wk, &grad.Wv, &grad.Wo, &dq, &dkv},
                          {&fq, &fk, &fv, &fo, &fdq, &fdkv}) < 1e-4);
}

TEST_CASE("encoder block: output keeps the input shape") {
    Rng rng(31);
    nn::EncoderBlock blk = make_block(8, 2, 16, rng);
    for (int n : {1, 3, 7}) {
        Matrix h = random_matrix(n, 8, rng);
        Matrix out = nn::encoder_block_forward(blk, h, nullptr);
        CHECK(out.rows == n);
        CHECK(out.cols == 8);
    }
}

TEST_CASE("encoder block: permuting rows permutes outputs identically") {
    Rng rng(37);
    nn::EncoderBlock blk = make_block(8, 2, 16, rng);
    Matrix h = random_matrix(5, 8, rng);
    Matrix out = nn::encoder_block_forward(blk, h, nullptr);

    const std::vector<int> perm{3, 0, 4, 1, 2};
    Matrix hp(5, 8);
    for (int i = 0; i < 5; ++i)
        std::copy(h.row(perm[i]), h.row(perm[i]) + 8, hp.row(i));
    Matrix outp = nn::encoder_block_forward(blk, hp, nullptr);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 8; ++j)
            CHECK(std::abs(outp.at(i, j) - out.at(perm[i], j)) < 1e-10);
}

TEST_CASE("encoder block: full gradient matches finite differences") {
    Rng rng(41);
    const int d = 6, heads = 2, dff = 10;
    nn::EncoderBlock blk = make_block(d, heads, dff, rng);
    Matrix h = random_matrix(3, d, rng);
    const Matrix r = random_matrix(3, d, rng);

    auto eval = [&]() {
        const Matrix y = nn::encoder_block_forward(blk, h, nullptr);
        double s = 0.0;
        for (size_t i = 0; i < y.a.size(); ++i) s += r.a[i] * y.a[i];
        return s;
    };

    nn::EncoderBlockCache cache;
    nn::encoder_block_forward(blk, h, &cache);
    nn::EncoderBlock grad;
    grad.attn = {Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(d, d), heads};
    grad.ln1 = {Matrix(1, d), Matrix(1, d)};
    grad.ff1 = {Matrix(d, dff), Matrix(1, dff)};
    grad.ff2 = {Matrix(dff, d), Matrix(1, d)};
    grad.ln2 = {Matrix(1, d), Matrix(1, d)};
    Matrix dh(3, d);
    nn::encoder_block_backward(blk, cache, r, grad, &dh);

    std::vector<Matrix*> params{&blk.attn.Wq, &blk.attn.Wk, &blk.attn.Wv, &blk.attn.Wo,
                                &blk.ln1.gain, &blk.ln1.bias, &blk.ff1.W, &blk.ff1.b,
                                &blk.ff2.W, &blk.ff2.b, &blk.ln2.gain, &blk.ln2.bias, &h};
    std::vector<const Matrix*> analytic{&grad.attn.Wq, &grad.attn.Wk, &grad.attn.Wv,
                                        &grad.attn.Wo, &grad.ln1.gain, &grad.ln1.bias,
                                        &grad.ff1.W, &grad.ff1.b, &grad.ff2.W, &grad.ff2.b,
                                        &grad.ln2.gain, &grad.ln2.bias, &dh};
    std::vector<Matrix> fd;
    fd.reserve(params.size());
    for (Matrix* p : params) fd.push_back(fd_grad(*p, eval));
    std::vector<const Matrix*> fdp;
    for (const Matrix& m : fd) fdp.push_back(&m);
    CHECK(stacked_rel_err(analytic, fdp) < 1e-4);
}

TEST_CASE("init_uniform: samples stay strictly inside the bound") {
    Rng rng(43);
    Matrix m(256, 256);
    const double bound = 1.0 / 16.0;
    nn::init_uniform(m, bound, rng);
    double mean = 0.0;
    for (double v : m.a) {
        CHECK(std::abs(v) < bound);
        mean += v;
    }
    mean /= static_cast<double>(m.a.size());
    // Standard error of the mean of U(-b, b) is b / sqrt(3 N).
    const double sigma = bound / std::sqrt(3.0 * static_cast<double>(m.a.size()));
    CHECK(std::abs(mean) < 3.0 * sigma);
}

TEST_CASE("init_uniform: deterministic under the same seed") {
    Matrix a(16, 16), b(16, 16);
    Rng r1(99), r2(99);
    nn::init_uniform(a, 0.25, r1);
    nn::init_uniform(b, 0.25, r2);
    CHECK(a == b);
}

TEST_CASE("masked_softmax: uniform entropy and exact masked zeros") {
    std::vector<double> z{0.5, 0.5, 0.5, 0.5, 9.0};
    std::vector<uint8_t> mask{0, 0, 0, 0, 1};
    std::vector<double> p, lp;
    const double h = nn::masked_softmax(z, mask, p, lp);
    CHECK(h == doctest::Approx(std::log(4.0)));
    CHECK(p[4] == 0.0);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-6);
    for (size_t i = 0; i < p.size(); ++i)
        if (!mask[i]) CHECK(std::abs(std::exp(lp[i]) - p[i]) < 1e-6);
}

TEST_CASE("masked_softmax: throws when everything is masked") {
    std::vector<double> z{1.0, 2.0};
    std::vector<uint8_t> mask{1, 1};
    std::vector<double> p, lp;
    CHECK_THROWS_AS(nn::masked_softmax(z, mask, p, lp), NoActionAvailable);
}
