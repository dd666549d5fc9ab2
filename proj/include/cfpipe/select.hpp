#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cfpipe/detail/text.hpp"
#include "cfpipe/errors.hpp"
#include "cfpipe/frame.hpp"
#include "cfpipe/time_series.hpp"

namespace cfpipe {

// Thresholds of the two-pass car-following selection rules.
struct SelectionConfig {
    double prob_car_min = 0.95;    // 1.1
    double long_dist_max = 85.0;   // 1.2, m
    double lat_dist_max = 1.75;    // 1.3 and the 1.4 lateral tolerance, m
    double min_duration = 16.0;    // 1.7, s
    double yaw_dev_max = 0.035;    // 2.1, rad (std dev over the event)
    double yaw_to_lane_max = 0.087;  // 2.2, rad (per-frame max)
    double dt_max = 0.42;          // 2.3, s
    double step_dist_max = 5.0;    // 2.4, m
    double mean_speed_min = 1.0;   // 2.5, m/s
    double screen_stride = 1.0;    // s, within [1, 5]

    void validate() const {
        for (double v : {prob_car_min, long_dist_max, lat_dist_max, min_duration, yaw_dev_max,
                         yaw_to_lane_max, dt_max, step_dist_max, mean_speed_min})
            if (!(v > 0.0)) throw ConfigError("selection thresholds must be positive");
        if (screen_stride < 1.0 || screen_stride > 5.0)
            throw ConfigError("screen_stride must be within [1, 5] s");
    }
};

enum class Rule {
    R1_1, R1_2, R1_3, R1_4, R1_5, R1_6, R1_7,
    R2_1, R2_2, R2_3, R2_4, R2_5,
};

inline const char* rule_id(Rule r) {
    switch (r) {
        case Rule::R1_1: return "1.1";
        case Rule::R1_2: return "1.2";
        case Rule::R1_3: return "1.3";
        case Rule::R1_4: return "1.4";
        case Rule::R1_5: return "1.5";
        case Rule::R1_6: return "1.6";
        case Rule::R1_7: return "1.7";
        case Rule::R2_1: return "2.1";
        case Rule::R2_2: return "2.2";
        case Rule::R2_3: return "2.3";
        case Rule::R2_4: return "2.4";
        case Rule::R2_5: return "2.5";
    }
    return "?";
}

struct CandidateInterval {
    std::size_t leader = 0;   // track index
    std::size_t follower = 0;
    double t_start = 0.0, t_end = 0.0;
};

struct Rejection {
    Rule rule{};
    double t = 0.0;
};

enum class LeaderType { AV, HV };

// A verified leader-follower episode in road-aligned longitudinal
// coordinates. x is lane_s relative to the leader's initial position, so
// x_lead[0] == 0 and the follower is negative at the start. Absent values
// (AV speed/size) are NaN in the per-frame series.
struct CFPair {
    std::string pair_id;
    LeaderType leader_type = LeaderType::HV;
    std::vector<double> time;
    std::vector<double> x_lead, x_fol;
    std::vector<double> v_lead, v_fol;      // empty when the source lacked speed
    std::vector<double> yaw_lead, yaw_fol;
    std::vector<double> len_lead, len_fol;  // NaN where absent
    std::vector<double> wid_lead, wid_fol;
    std::vector<std::pair<Rule, double>> rejection_log;  // boundary violations trimmed away

    [[nodiscard]] std::size_t size() const noexcept { return time.size(); }
    [[nodiscard]] double duration() const noexcept {
        return time.empty() ? 0.0 : time.back() - time.front();
    }
};

// Why pairs were screened out or rejected; keyed by (leader, follower)
// track indices. Used by reports and rule-coverage tests.
struct SelectionDiagnostics {
    std::map<std::pair<std::size_t, std::size_t>, std::map<Rule, std::size_t>> screen_failures;
    std::vector<std::pair<CandidateInterval, Rejection>> verify_rejections;
};

namespace detail {

inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0.0) a += two_pi;
    return a - std::numbers::pi;
}

struct TrackView {
    const Track* track = nullptr;
    std::vector<double> times;
};

// Frame nearest to t within `tol`, earlier frame on ties.
inline std::optional<std::size_t> frame_near(const TrackView& tv, double t, double tol) {
    const auto& ts = tv.times;
    if (ts.empty()) return std::nullopt;
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    std::size_t best = ts.size();
    double best_d = tol;
    if (it != ts.end() && std::abs(*it - t) <= best_d) {
        best = static_cast<std::size_t>(it - ts.begin());
        best_d = std::abs(*it - t);
    }
    if (it != ts.begin()) {
        auto prev = it - 1;
        if (std::abs(*prev - t) <= best_d) best = static_cast<std::size_t>(prev - ts.begin());
    }
    if (best == ts.size()) return std::nullopt;
    return best;
}

struct PresentAgent {
    std::size_t track_idx;
    const AgentFrame* frame;
};

// Group-1 rule check for one ordered pair at one stride time. Returns the
// first violated rule, or nullopt on pass.
inline std::optional<Rule> check_group1(const PresentAgent& lead, const PresentAgent& fol,
                                        std::span<const PresentAgent> same_lane,
                                        const SelectionConfig& cfg) {
    auto prob = [](const AgentFrame& f) { return f.is_av ? 1.0 : f.class_prob_car; };
    if (!(prob(*lead.frame) > cfg.prob_car_min) || !(prob(*fol.frame) > cfg.prob_car_min))
        return Rule::R1_1;
    const double gap = lead.frame->lane_s - fol.frame->lane_s;
    if (!(gap > 0.0 && gap <= cfg.long_dist_max)) return Rule::R1_2;
    if (!(std::abs(lead.frame->lane_d - fol.frame->lane_d) < cfg.lat_dist_max)) return Rule::R1_3;
    // 1.4: no agent of any class inside the pair's lane-coordinate bounding
    // box (lateral tolerance lat_dist_max)
    const double d_lo = std::min(lead.frame->lane_d, fol.frame->lane_d) - cfg.lat_dist_max;
    const double d_hi = std::max(lead.frame->lane_d, fol.frame->lane_d) + cfg.lat_dist_max;
    for (const auto& other : same_lane) {
        if (other.track_idx == lead.track_idx || other.track_idx == fol.track_idx) continue;
        if (other.frame->lane_s > fol.frame->lane_s && other.frame->lane_s < lead.frame->lane_s &&
            other.frame->lane_d >= d_lo && other.frame->lane_d <= d_hi)
            return Rule::R1_4;
    }
    if (lead.frame->signal_segment_id != fol.frame->signal_segment_id) return Rule::R1_5;
    if (!lead.frame->lane_is_straight || !fol.frame->lane_is_straight) return Rule::R1_6;
    return std::nullopt;
}

}  // namespace detail

// First pass: scan every screen_stride seconds and collect maximal runs of
// stride points where a same-lane pair passes rules 1.1-1.6; runs longer
// than min_duration (rule 1.7) become candidate intervals.
inline std::vector<CandidateInterval> screen_candidates(std::span<const Track> tracks,
                                                        const SelectionConfig& cfg,
                                                        SelectionDiagnostics* diag = nullptr) {
    cfg.validate();
    std::vector<detail::TrackView> views(tracks.size());
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        views[i].track = &tracks[i];
        views[i].times.reserve(tracks[i].frames.size());
        for (const auto& f : tracks[i].frames) views[i].times.push_back(f.timestamp);
        if (!views[i].times.empty()) {
            t_min = std::min(t_min, views[i].times.front());
            t_max = std::max(t_max, views[i].times.back());
        }
    }
    if (!(t_min < t_max)) return {};

    struct Run {
        long last_k = -2;
        double t_first = 0.0, t_last = 0.0;
    };
    std::map<std::pair<std::size_t, std::size_t>, Run> active;
    std::vector<CandidateInterval> out;
    auto note_failure = [&](std::size_t lead, std::size_t fol, Rule r) {
        if (diag) ++diag->screen_failures[{lead, fol}][r];
    };
    auto finalize = [&](const std::pair<std::size_t, std::size_t>& key, const Run& run) {
        if (run.t_last - run.t_first > cfg.min_duration)
            out.push_back({key.first, key.second, run.t_first, run.t_last});
        else
            note_failure(key.first, key.second, Rule::R1_7);
    };

    const double tol = 0.5 * cfg.dt_max;
    const long n_strides = static_cast<long>(std::floor((t_max - t_min) / cfg.screen_stride)) + 1;
    for (long k = 0; k < n_strides; ++k) {
        const double t = t_min + static_cast<double>(k) * cfg.screen_stride;
        std::map<std::string, std::vector<detail::PresentAgent>> lanes;
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            if (auto fi = detail::frame_near(views[i], t, tol))
                lanes[tracks[i].frames[*fi].lane_id].push_back({i, &tracks[i].frames[*fi]});
        }
        for (auto& [lane_id, agents] : lanes) {
            for (std::size_t a = 0; a < agents.size(); ++a) {
                for (std::size_t b = a + 1; b < agents.size(); ++b) {
                    const auto& lead =
                        agents[a].frame->lane_s >= agents[b].frame->lane_s ? agents[a] : agents[b];
                    const auto& fol =
                        agents[a].frame->lane_s >= agents[b].frame->lane_s ? agents[b] : agents[a];
                    const std::pair<std::size_t, std::size_t> key{lead.track_idx, fol.track_idx};
                    if (auto violated = detail::check_group1(lead, fol, agents, cfg)) {
                        note_failure(key.first, key.second, *violated);
                        if (auto it = active.find(key); it != active.end()) {
                            finalize(key, it->second);
                            active.erase(it);
                        }
                        continue;
                    }
                    auto [it, inserted] = active.try_emplace(key);
                    Run& run = it->second;
                    if (!inserted && run.last_k + 1 != k) {
                        finalize(key, run);
                        run = Run{};
                        inserted = true;
                    }
                    if (run.last_k < 0) run.t_first = t;
                    run.last_k = k;
                    run.t_last = t;
                }
            }
        }
    }
    for (const auto& [key, run] : active) finalize(key, run);
    std::sort(out.begin(), out.end(), [](const CandidateInterval& a, const CandidateInterval& b) {
        if (a.leader != b.leader) return a.leader < b.leader;
        if (a.follower != b.follower) return a.follower < b.follower;
        return a.t_start < b.t_start;
    });
    return out;
}

namespace detail {

struct FrameRange {
    const Track* track = nullptr;
    std::size_t first = 0, last = 0;  // inclusive indices into track->frames

    [[nodiscard]] std::size_t count() const { return last + 1 - first; }
    [[nodiscard]] const AgentFrame& at(std::size_t k) const { return track->frames[first + k]; }
};

inline std::optional<FrameRange> frames_in(const Track& t, double a, double b) {
    FrameRange r;
    r.track = &t;
    const auto begin = t.frames.begin(), end = t.frames.end();
    auto lo = std::lower_bound(begin, end, a - 1e-9,
                               [](const AgentFrame& f, double v) { return f.timestamp < v; });
    auto hi = std::upper_bound(begin, end, b + 1e-9,
                               [](double v, const AgentFrame& f) { return v < f.timestamp; });
    if (lo >= hi) return std::nullopt;
    r.first = static_cast<std::size_t>(lo - begin);
    r.last = static_cast<std::size_t>(hi - begin) - 1;
    return r;
}

// Direction of increasing lane_s, fitted by regressing world positions on
// lane_s over both vehicles (robust to lateral noise on straight lanes).
inline double lane_direction(const FrameRange& lead, const FrameRange& fol) {
    double s_sum = 0.0, x_sum = 0.0, y_sum = 0.0;
    const double n = static_cast<double>(lead.count() + fol.count());
    auto each = [&](const FrameRange& r, auto&& fn) {
        for (std::size_t k = 0; k < r.count(); ++k) fn(r.at(k));
    };
    for (const FrameRange* r : {&lead, &fol})
        each(*r, [&](const AgentFrame& f) {
            s_sum += f.lane_s;
            x_sum += f.x;
            y_sum += f.y;
        });
    const double s_m = s_sum / n, x_m = x_sum / n, y_m = y_sum / n;
    double ex = 0.0, ey = 0.0, ss = 0.0;
    for (const FrameRange* r : {&lead, &fol})
        each(*r, [&](const AgentFrame& f) {
            ex += (f.lane_s - s_m) * (f.x - x_m);
            ey += (f.lane_s - s_m) * (f.y - y_m);
            ss += (f.lane_s - s_m) * (f.lane_s - s_m);
        });
    if (ss < 1e-9 || (ex == 0.0 && ey == 0.0))
        return lead.count() ? lead.at(0).yaw : 0.0;  // degenerate; rule 2.5 will reject anyway
    return std::atan2(ey, ex);
}

struct Violation {
    Rule rule{};
    double lo = 0.0, hi = 0.0;  // forbidden span; points have lo == hi
    double stamp = 0.0;
};

inline void scan_frame_rules(const FrameRange& r, double lane_dir, const SelectionConfig& cfg,
                             std::vector<Violation>& out) {
    for (std::size_t k = 0; k < r.count(); ++k) {
        const AgentFrame& f = r.at(k);
        if (!(std::abs(wrap_angle(f.yaw - lane_dir)) < cfg.yaw_to_lane_max))
            out.push_back({Rule::R2_2, f.timestamp, f.timestamp, f.timestamp});
    }
    for (std::size_t k = 0; k + 1 < r.count(); ++k) {
        const AgentFrame& a = r.at(k);
        const AgentFrame& b = r.at(k + 1);
        if (!(b.timestamp - a.timestamp < cfg.dt_max))
            out.push_back({Rule::R2_3, a.timestamp, b.timestamp, b.timestamp});
        if (!(std::hypot(b.x - a.x, b.y - a.y) < cfg.step_dist_max))
            out.push_back({Rule::R2_4, a.timestamp, b.timestamp, b.timestamp});
    }
}

inline double yaw_std(const FrameRange& r) {
    if (r.count() < 2) return 0.0;
    std::vector<double> unwrapped(r.count());
    unwrapped[0] = r.at(0).yaw;
    for (std::size_t k = 1; k < r.count(); ++k)
        unwrapped[k] = unwrapped[k - 1] + wrap_angle(r.at(k).yaw - unwrapped[k - 1]);
    double mean = 0.0;
    for (double y : unwrapped) mean += y;
    mean /= static_cast<double>(unwrapped.size());
    double var = 0.0;
    for (double y : unwrapped) var += (y - mean) * (y - mean);
    return std::sqrt(var / static_cast<double>(unwrapped.size()));
}

inline double mean_speed(const FrameRange& r) {
    bool all_given = true;
    for (std::size_t k = 0; k < r.count(); ++k)
        if (!r.at(k).speed) {
            all_given = false;
            break;
        }
    if (all_given) {
        double m = 0.0;
        for (std::size_t k = 0; k < r.count(); ++k) m += *r.at(k).speed;
        return m / static_cast<double>(r.count());
    }
    if (r.count() < 2) return 0.0;
    TimeSeries xs, ys;
    for (std::size_t k = 0; k < r.count(); ++k) {
        xs.t.push_back(r.at(k).timestamp);
        xs.y.push_back(r.at(k).x);
        ys.t.push_back(r.at(k).timestamp);
        ys.y.push_back(r.at(k).y);
    }
    const TimeSeries dx = finite_diff(xs), dy = finite_diff(ys);
    double m = 0.0;
    for (std::size_t k = 0; k < dx.size(); ++k) m += std::hypot(dx.y[k], dy.y[k]);
    return m / static_cast<double>(dx.size());
}

inline std::string sanitize_id(std::string s) {
    for (char& c : s)
        if (c == '/' || c == ',' || c == ' ') c = '.';
    return s;
}

}  // namespace detail

// Second pass: frame-by-frame verification of one candidate. Boundary
// violations of the per-frame rules (2.2-2.4) are trimmed away as long as
// the surviving window still exceeds min_duration; aggregate rules (2.1,
// 2.5) are evaluated on the trimmed window and reject the candidate
// outright. Returns the pair, or the first violated rule with a timestamp.
inline std::variant<CFPair, Rejection> verify_candidate(const CandidateInterval& cand,
                                                        std::span<const Track> tracks,
                                                        const SelectionConfig& cfg) {
    using detail::FrameRange;
    const Track& lead_track = tracks[cand.leader];
    const Track& fol_track = tracks[cand.follower];
    auto lead_full = detail::frames_in(lead_track, cand.t_start, cand.t_end);
    auto fol_full = detail::frames_in(fol_track, cand.t_start, cand.t_end);
    if (!lead_full || !fol_full || lead_full->count() < 2 || fol_full->count() < 2)
        return Rejection{Rule::R2_3, cand.t_start};

    const double lane_dir = detail::lane_direction(*lead_full, *fol_full);
    std::vector<detail::Violation> violations;
    detail::scan_frame_rules(*lead_full, lane_dir, cfg, violations);
    detail::scan_frame_rules(*fol_full, lane_dir, cfg, violations);
    std::sort(violations.begin(), violations.end(),
              [](const detail::Violation& a, const detail::Violation& b) {
                  if (a.lo != b.lo) return a.lo < b.lo;
                  return a.rule < b.rule;
              });

    // Longest violation-free window (ties to the earlier window). Point
    // violations are excluded by nudging past the frame timestamp; the
    // nudge must exceed the frame-lookup tolerance and stay far below any
    // realistic frame spacing.
    double best_a = 0.0, best_b = -1.0;
    double cur_a = cand.t_start;
    const double nudge = 1e-6;
    for (const auto& v : violations) {
        const double b = v.lo - (v.lo == v.hi ? nudge : 0.0);
        if (b - cur_a > best_b - best_a) {
            best_a = cur_a;
            best_b = b;
        }
        cur_a = std::max(cur_a, v.hi + (v.lo == v.hi ? nudge : 0.0));
    }
    if (cand.t_end - cur_a > best_b - best_a) {
        best_a = cur_a;
        best_b = cand.t_end;
    }
    if (!(best_b - best_a > cfg.min_duration)) {
        const auto& first = violations.front();  // non-empty: full window was long enough
        return Rejection{first.rule, first.stamp};
    }

    auto lead_r = detail::frames_in(lead_track, best_a, best_b);
    auto fol_r = detail::frames_in(fol_track, best_a, best_b);
    if (!lead_r || !fol_r || lead_r->count() < 2 || fol_r->count() < 2)
        return Rejection{Rule::R2_3, best_a};

    if (!(detail::yaw_std(*lead_r) < cfg.yaw_dev_max) ||
        !(detail::yaw_std(*fol_r) < cfg.yaw_dev_max))
        return Rejection{Rule::R2_1, best_a};
    if (!(detail::mean_speed(*lead_r) > cfg.mean_speed_min) ||
        !(detail::mean_speed(*fol_r) > cfg.mean_speed_min))
        return Rejection{Rule::R2_5, best_a};

    // Build the pair on the common timestamp grid.
    CFPair pair;
    pair.leader_type = lead_track.is_av ? LeaderType::AV : LeaderType::HV;
    std::size_t i = 0, j = 0;
    bool lead_has_speed = true, fol_has_speed = true;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    while (i < lead_r->count() && j < fol_r->count()) {
        const AgentFrame& fl = lead_r->at(i);
        const AgentFrame& ff = fol_r->at(j);
        const double tol = 1e-9 * std::max(1.0, std::abs(fl.timestamp));
        if (fl.timestamp < ff.timestamp - tol) {
            ++i;
            continue;
        }
        if (ff.timestamp < fl.timestamp - tol) {
            ++j;
            continue;
        }
        pair.time.push_back(fl.timestamp);
        pair.x_lead.push_back(fl.lane_s);
        pair.x_fol.push_back(ff.lane_s);
        pair.yaw_lead.push_back(fl.yaw);
        pair.yaw_fol.push_back(ff.yaw);
        lead_has_speed = lead_has_speed && fl.speed.has_value();
        fol_has_speed = fol_has_speed && ff.speed.has_value();
        pair.v_lead.push_back(fl.speed.value_or(nan));
        pair.v_fol.push_back(ff.speed.value_or(nan));
        pair.len_lead.push_back(fl.length.value_or(nan));
        pair.len_fol.push_back(ff.length.value_or(nan));
        pair.wid_lead.push_back(fl.width.value_or(nan));
        pair.wid_fol.push_back(ff.width.value_or(nan));
        ++i;
        ++j;
    }
    if (pair.time.size() < 2 || !(pair.time.back() - pair.time.front() > cfg.min_duration))
        return Rejection{Rule::R2_3, best_a};
    if (!lead_has_speed) pair.v_lead.clear();
    if (!fol_has_speed) pair.v_fol.clear();

    const double s0 = pair.x_lead.front();
    for (std::size_t k = 0; k < pair.time.size(); ++k) {
        pair.x_lead[k] -= s0;
        pair.x_fol[k] -= s0;
        if (!(pair.x_lead[k] > pair.x_fol[k])) return Rejection{Rule::R1_2, pair.time[k]};
    }
    for (const auto& v : violations)
        if (v.stamp < best_a || v.stamp > best_b) pair.rejection_log.push_back({v.rule, v.stamp});

    const long t0_cs = static_cast<long>(std::llround(pair.time.front() * 100.0));
    pair.pair_id = detail::sanitize_id(lead_track.track_id) + "__" +
                   detail::sanitize_id(fol_track.track_id) + "__t" + std::to_string(t0_cs);
    return pair;
}

struct ExtractResult {
    std::vector<CFPair> ha;  // leader is the AV
    std::vector<CFPair> hh;  // both human-driven
    SelectionDiagnostics diagnostics;
};

// Full selection: screening, verification, and leader-type labelling.
// Pairs whose follower is the AV are discarded.
inline ExtractResult extract_pairs(std::span<const Track> tracks, const SelectionConfig& cfg) {
    ExtractResult result;
    auto candidates = screen_candidates(tracks, cfg, &result.diagnostics);
    for (const auto& cand : candidates) {
        if (tracks[cand.follower].is_av) continue;
        auto outcome = verify_candidate(cand, tracks, cfg);
        if (std::holds_alternative<Rejection>(outcome)) {
            result.diagnostics.verify_rejections.push_back({cand, std::get<Rejection>(outcome)});
            continue;
        }
        auto& pair = std::get<CFPair>(outcome);
        (pair.leader_type == LeaderType::AV ? result.ha : result.hh).push_back(std::move(pair));
    }
    return result;
}

}  // namespace cfpipe
