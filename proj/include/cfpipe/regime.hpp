#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfpipe/enhance.hpp"
#include "cfpipe/errors.hpp"
#include "cfpipe/time_series.hpp"

namespace cfpipe {

// Newell-model fit of one pair: the follower trajectory is the leader's
// shifted by time gap tau and space shift delta.
struct NewellFit {
    double tau = 0.0;      // s
    double delta = 0.0;    // m
    double rmse_fit = 0.0; // m
};

struct RegimeConfig {
    double tau_min = 0.1, tau_max = 5.0, tau_step = 0.05;  // s, calibration grid
    double v_stop = 0.1;              // m/s, standstill speed
    double min_stop_duration = 0.5;   // s
    double a_th = 0.1;                // m/s², accel/decel threshold
    double min_section_duration = 1.0;  // s
    double threshold_k = 2.0;         // τ* = mean + k·std of the fitted taus

    void validate() const {
        for (double v : {tau_min, tau_max, tau_step, v_stop, min_stop_duration, a_th,
                         min_section_duration, threshold_k})
            if (!(v > 0.0)) throw ConfigError("regime parameters must be positive");
        if (!(tau_max > tau_min)) throw ConfigError("empty tau grid");
    }
};

enum class Regime : std::uint8_t { Fa, Fd, C, A, D, F, S };
inline constexpr std::array<Regime, 7> kAllRegimes{Regime::Fa, Regime::Fd, Regime::C,
                                                   Regime::A,  Regime::D,  Regime::F, Regime::S};

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Fa: return "Fa";
        case Regime::Fd: return "Fd";
        case Regime::C: return "C";
        case Regime::A: return "A";
        case Regime::D: return "D";
        case Regime::F: return "F";
        case Regime::S: return "S";
    }
    return "?";
}

struct Section {
    std::size_t first = 0, last = 0;  // inclusive frame indices
    enum class Motion { Stop, Accel, Decel, Const } motion = Motion::Const;

    [[nodiscard]] std::size_t frames() const noexcept { return last + 1 - first; }
};

struct RegimeSequence {
    std::vector<Regime> labels;  // one per frame
    std::vector<Section> sections;
    std::array<double, 7> durations{};  // s per regime, frame-count based
    NewellFit fit;
    double tau_star = 0.0;

    [[nodiscard]] double total_duration() const noexcept {
        double s = 0.0;
        for (double d : durations) s += d;
        return s;
    }
};

// Grid search over tau with the closed-form least-squares delta for each
// shift. Deterministic; near-ties resolve to the smaller tau, which pins
// the flat valley of steady cruising at the grid minimum.
inline std::optional<NewellFit> calibrate_newell(const EnhancedPair& pair,
                                                 const RegimeConfig& cfg = {}) {
    cfg.validate();
    if (!(pair.duration() > cfg.tau_max + 1.0)) return std::nullopt;
    const TimeSeries lead{pair.t, pair.x_lead};

    NewellFit best;
    bool have_best = false;
    for (double tau = cfg.tau_min; tau <= cfg.tau_max + 1e-9; tau += cfg.tau_step) {
        double sum = 0.0;
        std::size_t n = 0;
        const double t_from = pair.t.front() + tau;
        for (std::size_t i = 0; i < pair.t.size(); ++i) {
            if (pair.t[i] < t_from - 1e-9) continue;
            sum += interp_at(lead, pair.t[i] - tau) - pair.x_fol[i];
            ++n;
        }
        if (n < 2) continue;
        const double delta = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t i = 0; i < pair.t.size(); ++i) {
            if (pair.t[i] < t_from - 1e-9) continue;
            const double r = interp_at(lead, pair.t[i] - tau) - delta - pair.x_fol[i];
            sq += r * r;
        }
        const double rm = std::sqrt(sq / static_cast<double>(n));
        if (!have_best || rm < best.rmse_fit * (1.0 - 1e-9) - 1e-12) {
            best = {tau, delta, rm};
            have_best = true;
        }
    }
    if (!have_best) return std::nullopt;
    return best;
}

// τ* = mean + k·std of the fitted time gaps; needs a meaningful sample.
inline double fleet_gap_threshold(std::span<const NewellFit> fits, double k = 2.0) {
    if (fits.size() < 30)
        throw InvalidInputError("fleet_gap_threshold: need at least 30 fits, got " +
                                std::to_string(fits.size()));
    double mean = 0.0;
    for (const auto& f : fits) mean += f.tau;
    mean /= static_cast<double>(fits.size());
    double var = 0.0;
    for (const auto& f : fits) var += (f.tau - mean) * (f.tau - mean);
    var /= static_cast<double>(fits.size() - 1);
    return mean + k * std::sqrt(var);
}

// Splits a follower speed profile into standstill / accelerating /
// decelerating / constant-speed sections. Sub-minimum sections are merged
// into the longer neighbour (earlier neighbour on ties); standstill
// sections have their own duration gate and never merge.
inline std::vector<Section> segment_speed_profile(std::span<const double> v,
                                                  std::span<const double> a, double dt,
                                                  const RegimeConfig& cfg = {}) {
    if (v.size() != a.size()) throw InvalidInputError("segment_speed_profile: length mismatch");
    const std::size_t n = v.size();
    if (n == 0) return {};

    // standstill runs
    std::vector<bool> stopped(n, false);
    for (std::size_t i = 0; i < n;) {
        if (v[i] >= cfg.v_stop) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && v[j] < cfg.v_stop) ++j;
        if (static_cast<double>(j - i) * dt >= cfg.min_stop_duration)
            for (std::size_t k = i; k < j; ++k) stopped[k] = true;
        i = j;
    }

    std::vector<Section> sections;
    auto motion_of = [&](std::size_t i) {
        if (a[i] > cfg.a_th) return Section::Motion::Accel;
        if (a[i] < -cfg.a_th) return Section::Motion::Decel;
        return Section::Motion::Const;
    };
    for (std::size_t i = 0; i < n;) {
        if (stopped[i]) {
            std::size_t j = i;
            while (j < n && stopped[j]) ++j;
            sections.push_back({i, j - 1, Section::Motion::Stop});
            i = j;
            continue;
        }
        // segment the non-stop span [i, span_end) by acceleration class
        std::size_t span_end = i;
        while (span_end < n && !stopped[span_end]) ++span_end;
        std::vector<Section> local;
        for (std::size_t k = i; k < span_end;) {
            const auto m = motion_of(k);
            std::size_t j = k;
            while (j < span_end && motion_of(j) == m) ++j;
            local.push_back({k, j - 1, m});
            k = j;
        }
        // merge short sections into the longer neighbour
        while (local.size() > 1) {
            std::size_t shortest = local.size();
            for (std::size_t k = 0; k < local.size(); ++k) {
                const double dur = static_cast<double>(local[k].frames()) * dt;
                if (dur < cfg.min_section_duration &&
                    (shortest == local.size() || local[k].frames() < local[shortest].frames()))
                    shortest = k;
            }
            if (shortest == local.size()) break;
            std::size_t into;
            if (shortest == 0)
                into = 1;
            else if (shortest + 1 == local.size())
                into = shortest - 1;
            else
                into = local[shortest - 1].frames() >= local[shortest + 1].frames()
                           ? shortest - 1
                           : shortest + 1;
            Section merged = local[std::min(shortest, into)];
            merged.last = local[std::max(shortest, into)].last;
            merged.motion = local[into].motion;
            local[std::min(shortest, into)] = merged;
            local.erase(local.begin() + static_cast<std::ptrdiff_t>(std::max(shortest, into)));
        }
        for (const auto& s : local) sections.push_back(s);
        i = span_end;
    }
    return sections;
}

// Labels sections as free or following by comparing the section's mean
// bumper-to-bumper time gap against τ*, then maps (mode, motion) onto the
// seven regimes.
inline RegimeSequence label_regimes(std::span<const Section> sections, const EnhancedPair& pair,
                                    const NewellFit& fit, double tau_star,
                                    const RegimeConfig& cfg = {}) {
    RegimeSequence seq;
    seq.fit = fit;
    seq.tau_star = tau_star;
    seq.labels.assign(pair.size(), Regime::S);
    seq.sections.assign(sections.begin(), sections.end());
    const double dt = pair.size() >= 2 ? (pair.t.back() - pair.t.front()) /
                                             static_cast<double>(pair.size() - 1)
                                       : 0.0;
    for (const auto& sec : sections) {
        Regime r = Regime::S;
        if (sec.motion != Section::Motion::Stop) {
            double gap_sum = 0.0;
            std::size_t n = 0;
            for (std::size_t i = sec.first; i <= sec.last; ++i) {
                if (pair.v_fol[i] < cfg.v_stop) continue;
                gap_sum += (pair.x_lead[i] - pair.length_lead - pair.x_fol[i]) / pair.v_fol[i];
                ++n;
            }
            const bool free = n > 0 && (gap_sum / static_cast<double>(n)) > tau_star;
            switch (sec.motion) {
                case Section::Motion::Accel: r = free ? Regime::Fa : Regime::A; break;
                case Section::Motion::Decel: r = free ? Regime::Fd : Regime::D; break;
                default: r = free ? Regime::C : Regime::F; break;
            }
        }
        for (std::size_t i = sec.first; i <= sec.last; ++i) seq.labels[i] = r;
        seq.durations[static_cast<std::size_t>(r)] +=
            static_cast<double>(sec.frames()) * dt;
    }
    return seq;
}

// Accumulated per-regime duration fractions over a dataset.
inline std::map<Regime, double> regime_time_proportions(std::span<const RegimeSequence> seqs) {
    if (seqs.empty()) throw InvalidInputError("regime_time_proportions: empty dataset");
    std::map<Regime, double> acc;
    for (Regime r : kAllRegimes) acc[r] = 0.0;
    double total = 0.0;
    for (const auto& s : seqs)
        for (Regime r : kAllRegimes) {
            acc[r] += s.durations[static_cast<std::size_t>(r)];
            total += s.durations[static_cast<std::size_t>(r)];
        }
    if (total <= 0.0) throw InvalidInputError("regime_time_proportions: zero total duration");
    for (auto& [r, d] : acc) d /= total;
    return acc;
}

struct AdfClass {
    bool adf = false;  // true → "ADF+n"
    int extra = 0;     // n

    [[nodiscard]] std::string name() const {
        return adf ? "ADF+" + std::to_string(extra) : "others";
    }
};

// A pair supports full car-following calibration when regimes A, D and F
// are all present; n counts the additional regimes beyond those three.
inline AdfClass classify_adf(const RegimeSequence& seq) {
    std::array<bool, 7> present{};
    for (Regime r : seq.labels) present[static_cast<std::size_t>(r)] = true;
    int count = 0;
    for (bool p : present) count += p ? 1 : 0;
    const bool adf = present[static_cast<std::size_t>(Regime::A)] &&
                     present[static_cast<std::size_t>(Regime::D)] &&
                     present[static_cast<std::size_t>(Regime::F)];
    return {adf, adf ? count - 3 : 0};
}

}  // namespace cfpipe
