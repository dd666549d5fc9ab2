#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cfpipe/errors.hpp"
#include "cfpipe/time_series.hpp"

namespace cfpipe {

// Noise scales of the two forward filters (standard deviations per state
// component; covariances are diag(·)²). Values tuned for 10 Hz urban
// vehicle trajectories.
struct KalmanSpec {
    // constant-speed filter, state (x, v)
    Eigen::Vector2d q1{0.2, 0.8};
    Eigen::Vector2d r1{0.5, 1.1};
    // constant-acceleration filter, state (x, v, a)
    Eigen::Vector3d q2{0.2, 0.4, 1.5};
    Eigen::Vector3d r2{0.5, 1.0, 10.0};
};

namespace detail {

template <int N>
struct KfTrace {
    double min_cov_eigen = std::numeric_limits<double>::infinity();

    void record(Eigen::Matrix<double, N, N>& P) {
        P = (0.5 * (P + P.transpose())).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(P);
        min_cov_eigen = std::min(min_cov_eigen, es.eigenvalues().minCoeff());
    }
};

inline void require_finite(const TimeSeries& s, const char* op) {
    for (double v : s.y)
        if (!std::isfinite(v)) throw InvalidInputError(std::string(op) + ": non-finite measurement");
}

}  // namespace detail

struct Kf1Result {
    TimeSeries x, v;
    double min_cov_eigen = 0.0;  // smallest covariance eigenvalue seen over the run
};

// Constant-speed Kalman filter on position. Measurements are the given
// positions and their finite-difference speed; handles nonuniform Δt.
inline Kf1Result kf_constant_speed(const TimeSeries& x, const KalmanSpec& spec = {}) {
    if (x.size() < 2) throw InvalidInputError("kf_constant_speed: need at least 2 samples");
    detail::require_increasing(x, "kf_constant_speed");
    detail::require_finite(x, "kf_constant_speed");

    const TimeSeries v_meas = finite_diff(x);
    const Eigen::Matrix2d Q = spec.q1.cwiseProduct(spec.q1).asDiagonal();
    const Eigen::Matrix2d R = spec.r1.cwiseProduct(spec.r1).asDiagonal();

    Eigen::Vector2d s{x.y[0], v_meas.y[0]};
    Eigen::Matrix2d P = R;
    detail::KfTrace<2> trace;
    trace.record(P);

    Kf1Result out;
    out.x.t = x.t;
    out.v.t = x.t;
    out.x.y.resize(x.size());
    out.v.y.resize(x.size());
    out.x.y[0] = s(0);
    out.v.y[0] = s(1);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double dt = x.t[i] - x.t[i - 1];
        Eigen::Matrix2d F;
        F << 1.0, dt, 0.0, 1.0;
        s = F * s;
        P = F * P * F.transpose() + Q;
        const Eigen::Vector2d z{x.y[i], v_meas.y[i]};
        const Eigen::Matrix2d S = P + R;  // H = I
        const Eigen::Matrix2d K = P * S.inverse();
        s = s + K * (z - s);
        P = (Eigen::Matrix2d::Identity() - K) * P;
        trace.record(P);
        out.x.y[i] = s(0);
        out.v.y[i] = s(1);
    }
    out.min_cov_eigen = trace.min_cov_eigen;
    return out;
}

struct Kf2Result {
    TimeSeries x, v, a;  // a is deliberately over-smoothed
    double min_cov_eigen = 0.0;
};

// Constant-acceleration Kalman filter on (position, speed). The third
// measurement channel is finite-difference acceleration with a large
// noise scale, which over-smooths the acceleration estimate.
inline Kf2Result kf_constant_acc(const TimeSeries& x, const TimeSeries& v,
                                 const KalmanSpec& spec = {}) {
    if (x.size() != v.size() || x.size() < 2)
        throw InvalidInputError("kf_constant_acc: need matching series of length >= 2");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x.t[i] - v.t[i]) > 1e-9)
            throw InvalidInputError("kf_constant_acc: position/speed grids differ");
    detail::require_increasing(x, "kf_constant_acc");
    detail::require_finite(x, "kf_constant_acc");
    detail::require_finite(v, "kf_constant_acc");

    const TimeSeries a_meas = finite_diff(v);
    const Eigen::Matrix3d Q = spec.q2.cwiseProduct(spec.q2).asDiagonal();
    const Eigen::Matrix3d R = spec.r2.cwiseProduct(spec.r2).asDiagonal();

    Eigen::Vector3d s{x.y[0], v.y[0], a_meas.y[0]};
    Eigen::Matrix3d P = R;
    detail::KfTrace<3> trace;
    trace.record(P);

    Kf2Result out;
    out.x.t = x.t;
    out.v.t = x.t;
    out.a.t = x.t;
    out.x.y.resize(x.size());
    out.v.y.resize(x.size());
    out.a.y.resize(x.size());
    out.x.y[0] = s(0);
    out.v.y[0] = s(1);
    out.a.y[0] = s(2);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double dt = x.t[i] - x.t[i - 1];
        Eigen::Matrix3d F;
        F << 1.0, dt, 0.5 * dt * dt, 0.0, 1.0, dt, 0.0, 0.0, 1.0;
        s = F * s;
        P = F * P * F.transpose() + Q;
        const Eigen::Vector3d z{x.y[i], v.y[i], a_meas.y[i]};
        const Eigen::Matrix3d S = P + R;
        const Eigen::Matrix3d K = P * S.inverse();
        s = s + K * (z - s);
        P = (Eigen::Matrix3d::Identity() - K) * P;
        trace.record(P);
        out.x.y[i] = s(0);
        out.v.y[i] = s(1);
        out.a.y[i] = s(2);
    }
    out.min_cov_eigen = trace.min_cov_eigen;
    return out;
}

// σ_a: RMSE between differentiated speed and the over-smoothed filter
// acceleration, used as the wavelet noise scale.
inline double estimate_noise_sigma(const TimeSeries& a_v, const TimeSeries& a_k) {
    return rmse(a_v, a_k);
}

}  // namespace cfpipe
