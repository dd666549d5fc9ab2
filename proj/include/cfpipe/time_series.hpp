#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cfpipe/errors.hpp"

namespace cfpipe {

// A scalar signal sampled on a strictly increasing, possibly nonuniform
// time grid. Units of `y` depend on context (m, m/s, m/s², m/s³).
struct TimeSeries {
    std::vector<double> t;
    std::vector<double> y;

    TimeSeries() = default;
    TimeSeries(std::vector<double> times, std::vector<double> values)
        : t(std::move(times)), y(std::move(values)) {}

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
    [[nodiscard]] bool empty() const noexcept { return t.empty(); }
    [[nodiscard]] double duration() const noexcept { return t.empty() ? 0.0 : t.back() - t.front(); }
};

namespace detail {

inline void require_increasing(const TimeSeries& s, const char* op) {
    if (s.t.size() != s.y.size())
        throw InvalidInputError(std::string(op) + ": timestamp/value length mismatch");
    for (std::size_t i = 1; i < s.t.size(); ++i)
        if (!(s.t[i] > s.t[i - 1]))
            throw InvalidInputError(std::string(op) + ": timestamps not strictly increasing");
}

}  // namespace detail

// Derivative on the same grid. Interior points use the nonuniform central
// stencil (y[i+1]-y[i-1])/(t[i+1]-t[i-1]); endpoints fall back to one-sided
// first-order differences.
inline TimeSeries finite_diff(const TimeSeries& s) {
    if (s.size() < 2) throw InvalidInputError("finite_diff: need at least 2 samples");
    detail::require_increasing(s, "finite_diff");
    const std::size_t n = s.size();
    std::vector<double> d(n);
    d[0] = (s.y[1] - s.y[0]) / (s.t[1] - s.t[0]);
    d[n - 1] = (s.y[n - 1] - s.y[n - 2]) / (s.t[n - 1] - s.t[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        d[i] = (s.y[i + 1] - s.y[i - 1]) / (s.t[i + 1] - s.t[i - 1]);
    return {s.t, std::move(d)};
}

// Linear interpolation at time `tq`; `tq` must lie within the sampled span
// (float round-off at the endpoints is tolerated and clamped).
inline double interp_at(const TimeSeries& s, double tq) {
    if (s.empty()) throw InvalidInputError("interp_at: empty series");
    const double eps = 1e-9 * std::max(1.0, std::abs(tq));
    if (tq < s.t.front() || tq > s.t.back()) {
        if (tq >= s.t.front() - eps && tq <= s.t.front()) tq = s.t.front();
        else if (tq <= s.t.back() + eps && tq >= s.t.back()) tq = s.t.back();
        else throw InvalidInputError("interp_at: query outside sampled span");
    }
    auto it = std::lower_bound(s.t.begin(), s.t.end(), tq);
    std::size_t hi = static_cast<std::size_t>(it - s.t.begin());
    if (hi < s.t.size() && s.t[hi] == tq) return s.y[hi];
    std::size_t lo = hi - 1;
    double w = (tq - s.t[lo]) / (s.t[hi] - s.t[lo]);
    return s.y[lo] + w * (s.y[hi] - s.y[lo]);
}

// Resample by linear interpolation onto the grid t0, t0+dt, ... ≤ t_end.
// Never extrapolates beyond the original span.
inline TimeSeries resample_uniform(const TimeSeries& s, double dt) {
    if (!(dt > 0.0)) throw InvalidInputError("resample_uniform: dt must be > 0");
    if (s.size() < 2) throw InvalidInputError("resample_uniform: need at least 2 samples");
    detail::require_increasing(s, "resample_uniform");
    const double t0 = s.t.front();
    const double t_end = s.t.back();
    // Tolerate float round-off when the span is an exact multiple of dt.
    const double eps = 1e-9 * std::max(1.0, std::abs(t_end));
    TimeSeries out;
    for (std::size_t k = 0;; ++k) {
        double tq = t0 + static_cast<double>(k) * dt;
        if (tq > t_end + eps) break;
        tq = std::min(tq, t_end);
        out.t.push_back(tq);
        out.y.push_back(interp_at(s, tq));
    }
    return out;
}

// Root-mean-square difference of two series on identical grids.
inline double rmse(const TimeSeries& a, const TimeSeries& b) {
    if (a.size() != b.size() || a.empty())
        throw InvalidInputError("rmse: series lengths differ or empty");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a.t[i] - b.t[i]) > 1e-9)
            throw InvalidInputError("rmse: timestamp grids differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.y[i] - b.y[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace cfpipe
