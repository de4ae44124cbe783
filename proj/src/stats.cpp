#include "colform/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace colform {

namespace {

// Lentz's continued fraction for the incomplete beta.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_upper_tail(double t, double dof) {
    const double x = dof / (dof + t * t);
    const double half_tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
    return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double paired_ttest_pvalue(const std::vector<double>& values_model,
                           const std::vector<double>& values_baseline) {
    if (values_model.size() != values_baseline.size())
        throw std::invalid_argument("paired t-test: length mismatch");
    const size_t n = values_model.size();
    if (n < 2) throw std::invalid_argument("paired t-test: need at least 2 pairs");

    std::vector<double> diff(n);
    for (size_t i = 0; i < n; ++i) diff[i] = values_model[i] - values_baseline[i];
    const double mean = mean_of(diff);
    double var = 0.0;
    for (double d : diff) var += (d - mean) * (d - mean);
    var /= static_cast<double>(n - 1);

    if (var == 0.0) return mean > 0.0 ? 0.0 : 1.0;
    const double t = mean / std::sqrt(var / static_cast<double>(n));
    return student_t_upper_tail(t, static_cast<double>(n - 1));
}

bool paired_ttest_improves(const std::vector<double>& values_model,
                           const std::vector<double>& values_baseline, double alpha) {
    return paired_ttest_pvalue(values_model, values_baseline) <= alpha;
}

}  // namespace colform
