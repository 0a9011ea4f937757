#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace fkpath::testing {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic two-sample KS critical value; c = 1.628 at the 1% level.
inline double ks_critical(std::size_t n, std::size_t m, double c = 1.628) {
    const double a = static_cast<double>(n), b = static_cast<double>(m);
    return c * std::sqrt((a + b) / (a * b));
}

/// |a - b| within k combined standard errors.
inline bool within_sigma(double a, double sa, double b, double sb, double k = 3.0) {
    return std::abs(a - b) <= k * std::sqrt(sa * sa + sb * sb);
}

}  // namespace fkpath::testing
