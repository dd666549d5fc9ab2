#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cfpipe/errors.hpp"
#include "cfpipe/time_series.hpp"

namespace cfpipe {

// Kinematic plausibility bounds for passenger-car motion.
struct KinematicLimits {
    double a_min = -8.0;   // m/s²
    double a_max = 5.0;    // m/s²
    double j_min = -15.0;  // m/s³
    double j_max = 15.0;   // m/s³
    double jsi_window = 1.0;      // s
    int jsi_max_inversions = 1;   // allowed jerk sign inversions per window
};

// Which derivative chain produced the assessed acceleration/jerk.
enum class DerivSource { XBased, VBased, Enhanced };

inline const char* to_string(DerivSource s) {
    switch (s) {
        case DerivSource::XBased: return "x-based";
        case DerivSource::VBased: return "v-based";
        case DerivSource::Enhanced: return "enhanced";
    }
    return "?";
}

struct AnomalyReport {
    std::size_t n_frames = 0;
    double frac_acc_anomaly = 0.0;
    double frac_jerk_anomaly = 0.0;
    double frac_jsi_anomaly = 0.0;
    DerivSource source = DerivSource::VBased;
};

// Frame-weighted combination, used to aggregate per-vehicle reports into
// dataset-level statistics.
inline AnomalyReport merge_reports(std::span<const AnomalyReport> reports) {
    AnomalyReport out;
    if (reports.empty()) return out;
    out.source = reports.front().source;
    double acc = 0.0, jerk = 0.0, jsi = 0.0;
    for (const auto& r : reports) {
        const double w = static_cast<double>(r.n_frames);
        acc += w * r.frac_acc_anomaly;
        jerk += w * r.frac_jerk_anomaly;
        jsi += w * r.frac_jsi_anomaly;
        out.n_frames += r.n_frames;
    }
    if (out.n_frames > 0) {
        const double n = static_cast<double>(out.n_frames);
        out.frac_acc_anomaly = acc / n;
        out.frac_jerk_anomaly = jerk / n;
        out.frac_jsi_anomaly = jsi / n;
    }
    return out;
}

// Flags frames whose centered window contains more than `max_inversions`
// jerk sign inversions. An inversion is a transition between strictly
// positive and strictly negative jerk; zeros are transparent (the sign
// state persists through them). Each inversion is stamped at the midpoint
// between the last frame of the old sign and the first frame of the new
// sign, and windows are open intervals, so an inversion exactly one window
// apart from another never counts twice.
inline std::vector<bool> jsi_flags(const TimeSeries& jerk, double window = 1.0,
                                   int max_inversions = 1) {
    detail::require_increasing(jerk, "jsi_flags");
    const std::size_t n = jerk.size();
    std::vector<double> inversions;
    int sign = 0;
    std::size_t last_signed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int s = jerk.y[i] > 0.0 ? 1 : (jerk.y[i] < 0.0 ? -1 : 0);
        if (s == 0) continue;
        if (sign != 0 && s != sign)
            inversions.push_back(0.5 * (jerk.t[last_signed] + jerk.t[i]));
        sign = s;
        last_signed = i;
    }
    std::vector<bool> flags(n, false);
    const double half = 0.5 * window;
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (lo < inversions.size() && inversions[lo] <= jerk.t[i] - half) ++lo;
        while (hi < inversions.size() && inversions[hi] < jerk.t[i] + half) ++hi;
        flags[i] = static_cast<int>(hi - lo) > max_inversions;
    }
    return flags;
}

namespace detail {

inline AnomalyReport report_from(const TimeSeries& a, const TimeSeries& j, DerivSource source,
                                 const KinematicLimits& lim) {
    AnomalyReport rep;
    rep.source = source;
    rep.n_frames = a.size();
    if (a.empty()) return rep;
    std::size_t n_acc = 0, n_jerk = 0, n_jsi = 0;
    for (double ai : a.y)
        if (ai < lim.a_min || ai > lim.a_max) ++n_acc;
    for (double ji : j.y)
        if (ji < lim.j_min || ji > lim.j_max) ++n_jerk;
    for (bool f : jsi_flags(j, lim.jsi_window, lim.jsi_max_inversions))
        if (f) ++n_jsi;
    const double n = static_cast<double>(a.size());
    rep.frac_acc_anomaly = static_cast<double>(n_acc) / n;
    rep.frac_jerk_anomaly = static_cast<double>(n_jerk) / n;
    rep.frac_jsi_anomaly = static_cast<double>(n_jsi) / n;
    return rep;
}

}  // namespace detail

// Anomaly fractions of a raw trajectory. `traj` is position for XBased
// (a, j from the 2nd/3rd-order difference chain) or speed for VBased
// (1st/2nd-order chain).
inline AnomalyReport kinematic_anomalies(const TimeSeries& traj, DerivSource source,
                                         const KinematicLimits& lim = {}) {
    if (traj.size() < 4)
        throw InvalidInputError("kinematic_anomalies: need at least 4 samples");
    TimeSeries a = (source == DerivSource::XBased) ? finite_diff(finite_diff(traj))
                                                   : finite_diff(traj);
    TimeSeries j = finite_diff(a);
    return detail::report_from(a, j, source, lim);
}

// Anomaly fractions of an already-derived acceleration/jerk pair (used to
// re-assess enhanced output, whose published a and j do not come from a
// plain difference chain).
inline AnomalyReport kinematic_anomalies_from(const TimeSeries& a, const TimeSeries& j,
                                              const KinematicLimits& lim = {}) {
    if (a.size() != j.size() || a.size() < 4)
        throw InvalidInputError("kinematic_anomalies_from: need matching series of length >= 4");
    return detail::report_from(a, j, DerivSource::Enhanced, lim);
}

struct SpeedConsistency {
    double rmse = 0.0;                   // given speed vs position-derived speed
    std::vector<double> artifact_times;  // zero-speed samples that contradict position
};

// Compares the given speed with the position-derived speed and reports
// zero-speed artifacts: samples where the given speed is exactly zero while
// the position-derived speed exceeds 1 m/s (true stops are left alone).
inline SpeedConsistency speed_consistency(const TimeSeries& x, const TimeSeries& v) {
    if (v.empty()) throw InvalidInputError("speed_consistency: missing speed series");
    if (x.size() != v.size()) throw InvalidInputError("speed_consistency: grid mismatch");
    const TimeSeries derived = finite_diff(x);
    SpeedConsistency out;
    out.rmse = rmse(v, derived);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(v.y[i]) < 1e-6 && std::abs(derived.y[i]) > 1.0)
            out.artifact_times.push_back(v.t[i]);
    return out;
}

}  // namespace cfpipe
