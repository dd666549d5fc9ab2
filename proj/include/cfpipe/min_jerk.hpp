#pragma once

#include <array>
#include <cmath>
#include <span>
#include <utility>

#include <Eigen/Dense>

#include "cfpipe/errors.hpp"
#include "cfpipe/time_series.hpp"

namespace cfpipe {

// Boundary data for a jerk-minimizing degree-7 position polynomial:
// position, speed and acceleration at both ends of [t0, t1].
struct MinJerkProblem {
    double t0 = 0.0, t1 = 0.0;
    double x0 = 0.0, v0 = 0.0, a0 = 0.0;
    double x1 = 0.0, v1 = 0.0, a1 = 0.0;
};

// Solved fill segment. Coefficients are in local time u = t - t0, so
// x(t) = Σ coeffs[i]·(t-t0)^i.
struct MinJerkFill {
    std::array<double, 8> coeffs{};
    double t0 = 0.0, t1 = 0.0;
    double objective = 0.0;  // ∫ (x''')² du over the segment

    [[nodiscard]] double position(double t) const {
        double u = t - t0, p = 0.0, upow = 1.0;
        for (double c : coeffs) {
            p += c * upow;
            upow *= u;
        }
        return p;
    }
    [[nodiscard]] double velocity(double t) const {
        double u = t - t0, p = 0.0, upow = 1.0;
        for (std::size_t i = 1; i < coeffs.size(); ++i) {
            p += static_cast<double>(i) * coeffs[i] * upow;
            upow *= u;
        }
        return p;
    }
    [[nodiscard]] double acceleration(double t) const {
        double u = t - t0, p = 0.0, upow = 1.0;
        for (std::size_t i = 2; i < coeffs.size(); ++i) {
            p += static_cast<double>(i * (i - 1)) * coeffs[i] * upow;
            upow *= u;
        }
        return p;
    }
};

namespace detail {

// Gram matrix of the squared-jerk objective: J = pᵀ H p with
// H[i][j] = c_i c_j T^{i+j-5} / (i+j-5), c_i = i(i-1)(i-2), for i,j ≥ 3.
inline Eigen::Matrix<double, 8, 8> jerk_gram(double T) {
    Eigen::Matrix<double, 8, 8> H = Eigen::Matrix<double, 8, 8>::Zero();
    for (int i = 3; i < 8; ++i) {
        for (int j = 3; j < 8; ++j) {
            double ci = static_cast<double>(i * (i - 1) * (i - 2));
            double cj = static_cast<double>(j * (j - 1) * (j - 2));
            int k = i + j - 5;
            H(i, j) = ci * cj * std::pow(T, k) / static_cast<double>(k);
        }
    }
    return H;
}

inline Eigen::Matrix<double, 6, 8> boundary_rows(double T) {
    Eigen::Matrix<double, 6, 8> A = Eigen::Matrix<double, 6, 8>::Zero();
    A(0, 0) = 1.0;
    A(1, 1) = 1.0;
    A(2, 2) = 2.0;
    for (int i = 0; i < 8; ++i) {
        A(3, i) = std::pow(T, i);
        if (i >= 1) A(4, i) = static_cast<double>(i) * std::pow(T, i - 1);
        if (i >= 2) A(5, i) = static_cast<double>(i * (i - 1)) * std::pow(T, i - 2);
    }
    return A;
}

}  // namespace detail

// Minimizes ∫(x''')² over degree-7 polynomials subject to the six boundary
// conditions, via the KKT system of the equality-constrained QP.
inline MinJerkFill solve_min_jerk(const MinJerkProblem& pb) {
    const double T = pb.t1 - pb.t0;
    if (!(T >= 0.2)) throw InvalidInputError("solve_min_jerk: duration must be >= 0.2 s");
    for (double v : {pb.x0, pb.v0, pb.a0, pb.x1, pb.v1, pb.a1})
        if (!std::isfinite(v)) throw InvalidInputError("solve_min_jerk: non-finite boundary state");

    const auto H = detail::jerk_gram(T);
    const auto A = detail::boundary_rows(T);
    Eigen::Matrix<double, 14, 14> K = Eigen::Matrix<double, 14, 14>::Zero();
    K.topLeftCorner<8, 8>() = 2.0 * H;
    K.topRightCorner<8, 6>() = A.transpose();
    K.bottomLeftCorner<6, 8>() = A;
    Eigen::Matrix<double, 14, 1> rhs = Eigen::Matrix<double, 14, 1>::Zero();
    rhs(8) = pb.x0;
    rhs(9) = pb.v0;
    rhs(10) = pb.a0;
    rhs(11) = pb.x1;
    rhs(12) = pb.v1;
    rhs(13) = pb.a1;

    Eigen::FullPivLU<Eigen::Matrix<double, 14, 14>> lu(K);
    if (!lu.isInvertible())
        throw NumericalError("solve_min_jerk: singular KKT system (T=" + std::to_string(T) + ")");
    Eigen::Matrix<double, 14, 1> sol = lu.solve(rhs);

    MinJerkFill fill;
    fill.t0 = pb.t0;
    fill.t1 = pb.t1;
    Eigen::Matrix<double, 8, 1> p = sol.head<8>();
    for (int i = 0; i < 8; ++i) fill.coeffs[static_cast<std::size_t>(i)] = p(i);
    fill.objective = p.dot(H * p);

    // Boundary conditions must hold to 1e-6 (relative) or the solve is unusable.
    auto ok = [](double got, double want) {
        return std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want));
    };
    if (!ok(fill.position(pb.t0), pb.x0) || !ok(fill.velocity(pb.t0), pb.v0) ||
        !ok(fill.acceleration(pb.t0), pb.a0) || !ok(fill.position(pb.t1), pb.x1) ||
        !ok(fill.velocity(pb.t1), pb.v1) || !ok(fill.acceleration(pb.t1), pb.a1))
        throw NumericalError("solve_min_jerk: boundary conditions not met after solve");
    return fill;
}

// Evaluates the jerk-minimizing fill on the requested timestamps, which must
// lie within [t0, t1]. Returns position and speed series.
inline std::pair<TimeSeries, TimeSeries> fill_min_jerk(const MinJerkProblem& pb,
                                                       std::span<const double> timestamps) {
    MinJerkFill fill = solve_min_jerk(pb);
    TimeSeries x, v;
    x.t.reserve(timestamps.size());
    for (double t : timestamps) {
        if (t < pb.t0 - 1e-9 || t > pb.t1 + 1e-9)
            throw InvalidInputError("fill_min_jerk: timestamp outside fill segment");
        x.t.push_back(t);
        x.y.push_back(fill.position(t));
        v.t.push_back(t);
        v.y.push_back(fill.velocity(t));
    }
    return {std::move(x), std::move(v)};
}

}  // namespace cfpipe
