#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfpipe/assess.hpp"
#include "cfpipe/errors.hpp"
#include "cfpipe/kalman.hpp"
#include "cfpipe/min_jerk.hpp"
#include "cfpipe/select.hpp"
#include "cfpipe/time_series.hpp"
#include "cfpipe/wavelet.hpp"

namespace cfpipe {

// Longitudinal state of one vehicle on its raw timestamps. The speed
// vector is empty when the source provides position only (the AV).
struct VehicleSeries {
    std::vector<double> t, x, v;

    [[nodiscard]] bool has_speed() const noexcept { return !v.empty(); }
};

struct FillInterval {
    double t_start = 0.0, t_end = 0.0;
    bool trimmed = false;  // span was cut off at a boundary instead of filled
    std::string vehicle;   // "lead" or "fol"
};

struct RepairConfig {
    double pre_window = 0.5;   // s removed before the first zero-value sample
    double post_window = 1.5;  // s removed after the last zero-value sample
};

namespace detail {

struct Window {
    double lo, hi;
};

inline std::vector<Window> artifact_windows(std::span<const double> artifacts,
                                            const RepairConfig& cfg) {
    std::vector<Window> wins;
    const double merge_gap = cfg.pre_window + cfg.post_window;
    for (double t : artifacts) {
        if (!wins.empty() && t - (wins.back().hi - cfg.post_window) <= merge_gap)
            wins.back().hi = t + cfg.post_window;
        else
            wins.push_back({t - cfg.pre_window, t + cfg.post_window});
    }
    // merge overlaps
    std::vector<Window> merged;
    for (const auto& w : wins) {
        if (!merged.empty() && w.lo <= merged.back().hi)
            merged.back().hi = std::max(merged.back().hi, w.hi);
        else
            merged.push_back(w);
    }
    return merged;
}

}  // namespace detail

// Deletes the samples around zero-speed artifacts (pre_window before the
// first zero, post_window after the last zero of each cluster) and refills
// the hole with a jerk-minimizing polynomial anchored on the surviving
// samples; boundary accelerations come from differentiated speed. The
// timestamp sequence is preserved. Holes that touch a series boundary are
// trimmed instead of filled.
inline std::pair<VehicleSeries, std::vector<FillInterval>> repair_zero_speed(
    const VehicleSeries& in, std::span<const double> artifacts, const RepairConfig& cfg = {}) {
    if (!in.has_speed()) throw InvalidInputError("repair_zero_speed: speed series required");
    if (in.t.size() != in.x.size() || in.t.size() != in.v.size())
        throw InvalidInputError("repair_zero_speed: series length mismatch");
    if (artifacts.empty()) return {in, {}};

    std::vector<double> sorted(artifacts.begin(), artifacts.end());
    std::sort(sorted.begin(), sorted.end());
    auto windows = detail::artifact_windows(sorted, cfg);

    const std::size_t n = in.t.size();
    std::vector<bool> deleted(n, false);
    for (const auto& w : windows)
        for (std::size_t i = 0; i < n; ++i)
            if (in.t[i] >= w.lo && in.t[i] <= w.hi) deleted[i] = true;

    // Merge windows with no surviving sample between them.
    {
        std::vector<detail::Window> merged;
        for (const auto& w : windows) {
            if (!merged.empty()) {
                bool survivor_between = false;
                for (std::size_t i = 0; i < n; ++i)
                    if (!deleted[i] && in.t[i] > merged.back().hi && in.t[i] < w.lo) {
                        survivor_between = true;
                        break;
                    }
                if (!survivor_between) {
                    merged.back().hi = w.hi;
                    continue;
                }
            }
            merged.push_back(w);
        }
        windows = std::move(merged);
    }

    // Surviving series and its differentiated-speed acceleration.
    VehicleSeries surv;
    for (std::size_t i = 0; i < n; ++i)
        if (!deleted[i]) {
            surv.t.push_back(in.t[i]);
            surv.x.push_back(in.x[i]);
            surv.v.push_back(in.v[i]);
        }
    if (surv.t.size() < 2)
        throw InvalidInputError("repair_zero_speed: artifacts cover the whole series");
    const TimeSeries acc = finite_diff({surv.t, surv.v});

    VehicleSeries out = in;
    std::vector<FillInterval> fills;
    std::vector<bool> dropped(n, false);
    for (const auto& w : windows) {
        std::size_t first_del = n, last_del = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (deleted[i] && in.t[i] >= w.lo && in.t[i] <= w.hi) {
                first_del = std::min(first_del, i);
                last_del = std::max(last_del, i);
            }
        if (first_del == n) continue;  // window held no samples

        auto left_it = std::upper_bound(surv.t.begin(), surv.t.end(), w.lo);
        auto right_it = std::lower_bound(surv.t.begin(), surv.t.end(), w.hi);
        const bool has_left = left_it != surv.t.begin();
        const bool has_right = right_it != surv.t.end();
        if (!has_left || !has_right) {
            for (std::size_t i = first_del; i <= last_del; ++i) dropped[i] = true;
            // also drop anything outside the surviving span
            if (!has_left)
                for (std::size_t i = 0; i < first_del; ++i)
                    if (in.t[i] <= w.hi) dropped[i] = true;
            fills.push_back({in.t[first_del], in.t[last_del], true, {}});
            continue;
        }
        const std::size_t li = static_cast<std::size_t>(left_it - surv.t.begin()) - 1;
        const std::size_t ri = static_cast<std::size_t>(right_it - surv.t.begin());
        MinJerkProblem pb;
        pb.t0 = surv.t[li];
        pb.t1 = surv.t[ri];
        pb.x0 = surv.x[li];
        pb.v0 = surv.v[li];
        pb.a0 = acc.y[li];
        pb.x1 = surv.x[ri];
        pb.v1 = surv.v[ri];
        pb.a1 = acc.y[ri];
        MinJerkFill fill = solve_min_jerk(pb);
        for (std::size_t i = first_del; i <= last_del; ++i) {
            out.x[i] = fill.position(in.t[i]);
            out.v[i] = fill.velocity(in.t[i]);
        }
        fills.push_back({in.t[first_del], in.t[last_del], false, {}});
    }

    if (std::find(dropped.begin(), dropped.end(), true) != dropped.end()) {
        VehicleSeries kept;
        for (std::size_t i = 0; i < n; ++i)
            if (!dropped[i]) {
                kept.t.push_back(out.t[i]);
                kept.x.push_back(out.x[i]);
                kept.v.push_back(out.v[i]);
            }
        out = std::move(kept);
    }
    return {std::move(out), std::move(fills)};
}

struct LengthEstimatorConfig {
    double var_threshold = 0.3;  // m²
    double clamp_lo = 3.5;       // m
    double clamp_hi = 6.5;       // m
    double percentile = 0.95;
};

// Single length from a perceived-length time series: the mean when the
// series is stable, otherwise the clamped 0.95 order statistic (perception
// mostly under-estimates size, so a high percentile tracks the true value).
inline double estimate_length(std::span<const double> series,
                              const LengthEstimatorConfig& cfg = {}) {
    std::vector<double> vals;
    vals.reserve(series.size());
    for (double v : series)
        if (std::isfinite(v)) vals.push_back(v);
    if (vals.empty()) throw InvalidInputError("estimate_length: empty series");

    const auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
    if (*lo_it == *hi_it) return *lo_it;  // constant series, exactly

    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vals.size());
    if (var < cfg.var_threshold) return mean;

    for (double& v : vals) v = std::clamp(v, cfg.clamp_lo, cfg.clamp_hi);
    std::sort(vals.begin(), vals.end());
    const double h = cfg.percentile * static_cast<double>(vals.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, vals.size() - 1);
    const double w = h - std::floor(h);
    return vals[lo] + w * (vals[hi] - vals[lo]);
}

struct EnhanceConfig {
    KalmanSpec kalman;
    int wavelet_max_levels = 4;
    double grid_dt = 0.1;   // s, output grid
    double hole_dt = 0.45;  // s, timestamp gaps above this are polynomial-filled
    RepairConfig repair;
    LengthEstimatorConfig length;
    double av_length = 4.87;  // m, fixed AV size
    double av_width = 1.85;   // m
};

// Smoothed output of one pair on a uniform grid.
struct EnhancedPair {
    std::string pair_id;
    LeaderType leader_type = LeaderType::HV;
    std::vector<double> t;
    std::vector<double> x_lead, v_lead, a_lead, j_lead;
    std::vector<double> x_fol, v_fol, a_fol, j_fol;
    double length_lead = 0.0, length_fol = 0.0;
    double sigma_a_lead = 0.0, sigma_a_fol = 0.0;
    std::vector<FillInterval> fill_intervals;

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
    [[nodiscard]] double duration() const noexcept { return t.empty() ? 0.0 : t.back() - t.front(); }
};

namespace detail {

// Fills timestamp gaps wider than hole_dt with jerk-minimizing segments so
// later resampling never bridges a dropout linearly.
inline void fill_time_holes(VehicleSeries& s, double hole_dt, double grid_dt,
                            const char* vehicle, std::vector<FillInterval>& fills) {
    const TimeSeries v_ref = s.has_speed() ? TimeSeries{s.t, s.v} : finite_diff({s.t, s.x});
    const TimeSeries a_ref = finite_diff(v_ref);
    VehicleSeries out;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        out.t.push_back(s.t[i]);
        out.x.push_back(s.x[i]);
        if (s.has_speed()) out.v.push_back(s.v[i]);
        if (i + 1 >= s.t.size()) break;
        const double gap = s.t[i + 1] - s.t[i];
        if (gap <= hole_dt) continue;
        MinJerkProblem pb;
        pb.t0 = s.t[i];
        pb.t1 = s.t[i + 1];
        pb.x0 = s.x[i];
        pb.v0 = v_ref.y[i];
        pb.a0 = a_ref.y[i];
        pb.x1 = s.x[i + 1];
        pb.v1 = v_ref.y[i + 1];
        pb.a1 = a_ref.y[i + 1];
        MinJerkFill fill = solve_min_jerk(pb);
        for (double tq = s.t[i] + grid_dt; tq < s.t[i + 1] - 1e-9; tq += grid_dt) {
            out.t.push_back(tq);
            out.x.push_back(fill.position(tq));
            if (s.has_speed()) out.v.push_back(fill.velocity(tq));
        }
        fills.push_back({s.t[i], s.t[i + 1], false, vehicle});
    }
    s = std::move(out);
}

struct EnhancedSide {
    std::vector<double> x, v, a, j;
    double sigma_a = 0.0;
};

inline EnhancedSide enhance_side(const VehicleSeries& raw, std::span<const double> grid,
                                 const EnhanceConfig& cfg) {
    TimeSeries xg{{grid.begin(), grid.end()}, {}};
    const TimeSeries xs{raw.t, raw.x};
    xg.y.reserve(grid.size());
    for (double tq : grid) xg.y.push_back(interp_at(xs, tq));

    TimeSeries vg{{grid.begin(), grid.end()}, {}};
    if (raw.has_speed()) {
        const TimeSeries vs{raw.t, raw.v};
        vg.y.reserve(grid.size());
        for (double tq : grid) vg.y.push_back(interp_at(vs, tq));
    } else {
        vg = kf_constant_speed(xg, cfg.kalman).v;
    }

    Kf2Result kf2 = kf_constant_acc(xg, vg, cfg.kalman);
    if (!(kf2.min_cov_eigen > 0.0))
        throw NumericalError("enhance: filter covariance lost positive definiteness");

    EnhancedSide side;
    side.x = kf2.x.y;
    side.v = kf2.v.y;
    const TimeSeries a_v = finite_diff(kf2.v);
    side.sigma_a = estimate_noise_sigma(a_v, kf2.a);
    side.a = wavelet_denoise(std::span<const double>(a_v.y), side.sigma_a, cfg.wavelet_max_levels);
    side.j = finite_diff({kf2.v.t, side.a}).y;
    return side;
}

}  // namespace detail

// The full per-pair enhancement chain: zero-speed repair (speed-carrying
// vehicles), dropout filling, resampling to the uniform grid, speed
// derivation for the AV, constant-acceleration filtering, wavelet
// acceleration smoothing, and size estimation. Throws on any stage error;
// the caller decides whether to continue with other pairs.
inline EnhancedPair enhance_pair(const CFPair& pair, const EnhanceConfig& cfg = {}) {
    if (pair.size() < 4) throw InvalidInputError("enhance_pair: pair too short");

    auto make_side = [&](bool lead) {
        VehicleSeries s;
        s.t = pair.time;
        s.x = lead ? pair.x_lead : pair.x_fol;
        s.v = lead ? pair.v_lead : pair.v_fol;
        return s;
    };
    EnhancedPair out;
    out.pair_id = pair.pair_id;
    out.leader_type = pair.leader_type;

    VehicleSeries sides[2] = {make_side(true), make_side(false)};
    const char* names[2] = {"lead", "fol"};
    for (int k = 0; k < 2; ++k) {
        VehicleSeries& s = sides[k];
        if (s.has_speed()) {
            const auto artifacts = speed_consistency({s.t, s.x}, {s.t, s.v}).artifact_times;
            auto [repaired, fills] = repair_zero_speed(s, artifacts, cfg.repair);
            s = std::move(repaired);
            for (auto& f : fills) {
                f.vehicle = names[k];
                out.fill_intervals.push_back(f);
            }
        }
        detail::fill_time_holes(s, cfg.hole_dt, cfg.grid_dt, names[k], out.fill_intervals);
        if (s.t.size() < 4) throw InvalidInputError("enhance_pair: too few samples after repair");
    }

    const double t_lo = std::max(sides[0].t.front(), sides[1].t.front());
    const double t_hi = std::min(sides[0].t.back(), sides[1].t.back());
    if (!(t_hi - t_lo > 3.0 * cfg.grid_dt))
        throw InvalidInputError("enhance_pair: no usable overlap after repair");
    for (std::size_t k = 0;; ++k) {
        const double tq = t_lo + static_cast<double>(k) * cfg.grid_dt;
        if (tq > t_hi + 1e-9) break;
        out.t.push_back(tq);
    }

    detail::EnhancedSide lead = detail::enhance_side(sides[0], out.t, cfg);
    detail::EnhancedSide fol = detail::enhance_side(sides[1], out.t, cfg);
    out.x_lead = std::move(lead.x);
    out.v_lead = std::move(lead.v);
    out.a_lead = std::move(lead.a);
    out.j_lead = std::move(lead.j);
    out.x_fol = std::move(fol.x);
    out.v_fol = std::move(fol.v);
    out.a_fol = std::move(fol.a);
    out.j_fol = std::move(fol.j);
    out.sigma_a_lead = lead.sigma_a;
    out.sigma_a_fol = fol.sigma_a;

    for (std::size_t i = 0; i < out.t.size(); ++i)
        if (!(out.x_lead[i] > out.x_fol[i]))
            throw NumericalError("enhance_pair: leader-follower ordering violated at t=" +
                                 std::to_string(out.t[i]));

    out.length_lead = pair.leader_type == LeaderType::AV
                          ? cfg.av_length
                          : estimate_length(pair.len_lead, cfg.length);
    out.length_fol = estimate_length(pair.len_fol, cfg.length);
    return out;
}

}  // namespace cfpipe
