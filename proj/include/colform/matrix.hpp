#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

#include "colform/errors.hpp"

namespace colform {

// Dense row-major matrix of doubles. All numerical kernels in this project
// run in 64-bit precision; checkpoints quantize to 32-bit on disk.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
        assert(a.size() == static_cast<size_t>(r) * c);
    }

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return a.size(); }

    void zero() { std::fill(a.begin(), a.end(), 0.0); }

    friend bool operator==(const Matrix& x, const Matrix& y) {
        return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
    }
};

// out = A * B
Matrix matmul(const Matrix& A, const Matrix& B);
// out = A^T * B
Matrix matmul_tn(const Matrix& A, const Matrix& B);
// out = A * B^T
Matrix matmul_nt(const Matrix& A, const Matrix& B);

// acc += A * B (and friends); used by the backward passes to accumulate
// into existing gradient buffers.
void add_matmul(Matrix& acc, const Matrix& A, const Matrix& B);
void add_matmul_tn(Matrix& acc, const Matrix& A, const Matrix& B);
void add_matmul_nt(Matrix& acc, const Matrix& A, const Matrix& B);

void add_inplace(Matrix& acc, const Matrix& x);
void scale_inplace(Matrix& m, double s);

inline void check_shape(bool ok, const char* what) {
    if (!ok) throw ShapeError(what);
}

}  // namespace colform
