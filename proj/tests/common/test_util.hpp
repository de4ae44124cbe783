#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "colform/matrix.hpp"
#include "colform/policy.hpp"
#include "colform/rng.hpp"

namespace colform::testing {

inline double rel_err(const std::vector<double>& analytic, const std::vector<double>& fd) {
    double diff = 0.0, base = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
        base += fd[i] * fd[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(base), 1e-12);
}

// Central finite differences of a scalar function w.r.t. one matrix.
inline Matrix fd_grad(Matrix& param, const std::function<double()>& eval, double h = 1e-5) {
    Matrix g(param.rows, param.cols);
    for (size_t i = 0; i < param.a.size(); ++i) {
        const double saved = param.a[i];
        param.a[i] = saved + h;
        const double up = eval();
        param.a[i] = saved - h;
        const double down = eval();
        param.a[i] = saved;
        g.a[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.a) v = rng.uniform(-scale, scale);
    return m;
}

// rel_err between an analytic gradient and finite differences, stacked over
// several (analytic, fd) matrix pairs.
inline double stacked_rel_err(const std::vector<const Matrix*>& analytic,
                              const std::vector<const Matrix*>& fd) {
    std::vector<double> a, f;
    for (const Matrix* m : analytic) a.insert(a.end(), m->a.begin(), m->a.end());
    for (const Matrix* m : fd) f.insert(f.end(), m->a.begin(), m->a.end());
    return rel_err(a, f);
}

// Finite differences of a scalar function over every tensor of a policy.
inline PolicyParams fd_policy_grad(PolicyParams& params, const std::function<double()>& eval,
                                   double h = 1e-5) {
    PolicyParams fd = zeros_like(params);
    auto pts = named_tensors(params);
    auto fts = named_tensors(fd);
    for (size_t t = 0; t < pts.size(); ++t)
        *fts[t].tensor = fd_grad(*pts[t].tensor, eval, h);
    return fd;
}

inline double policy_rel_err(PolicyParams& analytic, PolicyParams& fd) {
    auto at = named_tensors(analytic);
    auto ft = named_tensors(fd);
    std::vector<const Matrix*> a, f;
    for (auto& t : at) a.push_back(t.tensor);
    for (auto& t : ft) f.push_back(t.tensor);
    return stacked_rel_err(a, f);
}

}  // namespace colform::testing
