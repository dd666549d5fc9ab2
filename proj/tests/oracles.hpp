// Independent reference computations used to freeze expected test values.
// Nothing here may call into the implementation paths it checks.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// Unique degree-5 interpolant of (x,v,a) at both ends of [0,T]; returned as
// coefficients of Σ c_i u^i.
inline std::array<double, 6> quintic_interpolant(double T, double x0, double v0, double a0,
                                                 double x1, double v1, double a1) {
    Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
    A(0, 0) = 1.0;
    A(1, 1) = 1.0;
    A(2, 2) = 2.0;
    for (int i = 0; i < 6; ++i) {
        A(3, i) = std::pow(T, i);
        if (i >= 1) A(4, i) = i * std::pow(T, i - 1);
        if (i >= 2) A(5, i) = i * (i - 1) * std::pow(T, i - 2);
    }
    Eigen::Matrix<double, 6, 1> b;
    b << x0, v0, a0, x1, v1, a1;
    Eigen::Matrix<double, 6, 1> c = A.fullPivLu().solve(b);
    std::array<double, 6> out{};
    for (int i = 0; i < 6; ++i) out[static_cast<std::size_t>(i)] = c(i);
    return out;
}

// ∫_0^T (p'''(u))² du for a polynomial p, via 5-point Gauss-Legendre
// quadrature on [0,T] (exact through degree 9, enough for septic jerk²).
inline double squared_jerk_integral(std::span<const double> coeffs, double T) {
    static const double xs[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                                 0.538469310105683, 0.906179845938664};
    static const double ws[5] = {0.236926885056189, 0.478628670499366, 0.568888888888889,
                                 0.478628670499366, 0.236926885056189};
    auto jerk = [&](double u) {
        double j = 0.0;
        for (std::size_t i = 3; i < coeffs.size(); ++i)
            j += static_cast<double>(i * (i - 1) * (i - 2)) * coeffs[i] * std::pow(u, i - 3.0);
        return j;
    };
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double u = 0.5 * T * (xs[k] + 1.0);
        const double j = jerk(u);
        acc += ws[k] * j * j;
    }
    return acc * 0.5 * T;
}

// Plain-loop RMSE.
inline double brute_rmse(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace oracles
