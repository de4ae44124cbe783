#pragma once

#include <vector>

namespace colform {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation; used for the Student-t tail.
double incomplete_beta(double a, double b, double x);

// One-sided upper tail P(T >= t) for Student t with dof degrees of freedom.
double student_t_upper_tail(double t, double dof);

// One-sided paired T-test, H1: mean(model) > mean(baseline). Returns true
// when the p-value is <= alpha. Zero-variance differences degenerate to the
// sign of the mean difference.
bool paired_ttest_improves(const std::vector<double>& values_model,
                           const std::vector<double>& values_baseline, double alpha);

// The p-value behind paired_ttest_improves; exposed for verification.
double paired_ttest_pvalue(const std::vector<double>& values_model,
                           const std::vector<double>& values_baseline);

double mean_of(const std::vector<double>& v);

}  // namespace colform
