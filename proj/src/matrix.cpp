#include "colform/matrix.hpp"

namespace colform {

Matrix matmul(const Matrix& A, const Matrix& B) {
    check_shape(A.cols == B.rows, "matmul: inner dimensions differ");
    Matrix out(A.rows, B.cols);
    add_matmul(out, A, B);
    return out;
}

Matrix matmul_tn(const Matrix& A, const Matrix& B) {
    check_shape(A.rows == B.rows, "matmul_tn: inner dimensions differ");
    Matrix out(A.cols, B.cols);
    add_matmul_tn(out, A, B);
    return out;
}

Matrix matmul_nt(const Matrix& A, const Matrix& B) {
    check_shape(A.cols == B.cols, "matmul_nt: inner dimensions differ");
    Matrix out(A.rows, B.rows);
    add_matmul_nt(out, A, B);
    return out;
}

void add_matmul(Matrix& acc, const Matrix& A, const Matrix& B) {
    check_shape(A.cols == B.rows && acc.rows == A.rows && acc.cols == B.cols,
                "add_matmul: shape mismatch");
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* oi = acc.row(i);
        for (int k = 0; k < A.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = B.row(k);
            for (int j = 0; j < B.cols; ++j) oi[j] += aik * bk[j];
        }
    }
}

void add_matmul_tn(Matrix& acc, const Matrix& A, const Matrix& B) {
    check_shape(A.rows == B.rows && acc.rows == A.cols && acc.cols == B.cols,
                "add_matmul_tn: shape mismatch");
    for (int k = 0; k < A.rows; ++k) {
        const double* ak = A.row(k);
        const double* bk = B.row(k);
        for (int i = 0; i < A.cols; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* oi = acc.row(i);
            for (int j = 0; j < B.cols; ++j) oi[j] += aki * bk[j];
        }
    }
}

void add_matmul_nt(Matrix& acc, const Matrix& A, const Matrix& B) {
    check_shape(A.cols == B.cols && acc.rows == A.rows && acc.cols == B.rows,
                "add_matmul_nt: shape mismatch");
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* oi = acc.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (int k = 0; k < A.cols; ++k) s += ai[k] * bj[k];
            oi[j] += s;
        }
    }
}

void add_inplace(Matrix& acc, const Matrix& x) {
    check_shape(acc.rows == x.rows && acc.cols == x.cols, "add_inplace: shape mismatch");
    for (size_t i = 0; i < acc.a.size(); ++i) acc.a[i] += x.a[i];
}

void scale_inplace(Matrix& m, double s) {
    for (double& v : m.a) v *= s;
}

}  // namespace colform
