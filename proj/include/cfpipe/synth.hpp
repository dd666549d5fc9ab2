#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "cfpipe/errors.hpp"
#include "cfpipe/frame.hpp"
#include "cfpipe/select.hpp"

namespace cfpipe {

// One piece of the leader's speed script. Cruise and Stop hold the current
// (resp. zero) speed; Accel/Decel ramp linearly to `target` over the
// segment duration.
struct SpeedSegment {
    enum class Kind { Cruise, Accel, Decel, Stop } kind = Kind::Cruise;
    double duration = 5.0;  // s
    double target = 0.0;    // m/s, ramp segments only
};

struct IdmParams {
    double v_desired = 12.0;   // m/s
    double time_headway = 1.5; // s
    double a_max = 1.5;        // m/s²
    double b_comf = 2.0;       // m/s², comfortable deceleration
    double s0 = 2.0;           // m, jam distance
    double exponent = 4.0;
};

struct NewellParams {
    double tau = 1.2;   // s
    double delta = 8.0; // m
};

struct NoiseSpec {
    double position_sigma = 0.0;  // m, world x/y
    double speed_sigma = 0.0;     // m/s, perceived HV speed
};

struct ArtifactSpec {
    double scene_length = 25.0;        // s
    bool zero_speed_endpoints = false; // overwrite HV speed with 0 at scene edges
    std::optional<std::pair<double, double>> hole;  // (start s, duration s): dropped frames
    double length_jitter_sigma = 0.0;  // m, one-sided (perception under-estimates)
    double length_outlier_prob = 0.0;
    std::vector<double> length_outlier_values{8.0, 3.0};
};

struct SynthScenario {
    std::vector<SpeedSegment> leader_script;
    double leader_v0 = 10.0;  // m/s
    double initial_gap = -1.0;  // m bumper-to-bumper; <0 → equilibrium-ish default
    std::variant<IdmParams, NewellParams> follower = IdmParams{};
    bool leader_is_av = true;
    double leader_length = 4.87, leader_width = 1.85;   // m
    double follower_length = 4.5, follower_width = 1.85; // m
    NoiseSpec noise;
    ArtifactSpec artifacts;
    double dt = 0.1;        // s
    double duration = 60.0; // s
    double t_offset = 0.0;  // s, epoch of the first frame
    std::uint64_t seed = 0;
    std::string lane_id = "L0";
    std::string signal_segment_id = "SIG0";
    std::string scene_prefix = "s";

    void validate() const {
        if (!(dt > 0.0) || !(duration > dt)) throw ConfigError("synth: bad dt/duration");
        if (!(leader_v0 >= 0.0)) throw ConfigError("synth: negative initial speed");
        if (!(artifacts.scene_length > dt)) throw ConfigError("synth: bad scene length");
    }
};

// Ground truth of one generated episode at the simulation rate.
struct TruthPair {
    std::vector<double> t;
    std::vector<double> x_lead, v_lead, a_lead;
    std::vector<double> x_fol, v_fol, a_fol;
};

namespace detail {

inline std::pair<std::vector<double>, std::vector<double>> leader_speed_profile(
    const SynthScenario& sc, std::size_t n) {
    std::vector<double> v(n), a(n);
    double cur_v = sc.leader_v0;
    std::size_t seg = 0;
    double seg_elapsed = 0.0;
    double seg_v0 = cur_v;
    for (std::size_t i = 0; i < n; ++i) {
        double accel = 0.0;
        if (seg < sc.leader_script.size()) {
            const SpeedSegment& s = sc.leader_script[seg];
            switch (s.kind) {
                case SpeedSegment::Kind::Cruise: accel = 0.0; break;
                case SpeedSegment::Kind::Stop: cur_v = 0.0; accel = 0.0; break;
                case SpeedSegment::Kind::Accel:
                case SpeedSegment::Kind::Decel:
                    accel = (s.target - seg_v0) / s.duration;
                    break;
            }
        }
        v[i] = std::max(0.0, cur_v);
        a[i] = accel;
        cur_v = std::max(0.0, cur_v + accel * sc.dt);
        if (seg < sc.leader_script.size()) {
            seg_elapsed += sc.dt;
            if (seg_elapsed >= sc.leader_script[seg].duration - 1e-9) {
                const SpeedSegment& s = sc.leader_script[seg];
                if (s.kind == SpeedSegment::Kind::Accel || s.kind == SpeedSegment::Kind::Decel)
                    cur_v = s.target;
                if (s.kind == SpeedSegment::Kind::Stop) cur_v = 0.0;
                ++seg;
                seg_elapsed = 0.0;
                seg_v0 = cur_v;
            }
        }
    }
    return {v, a};
}

inline double idm_accel(const IdmParams& p, double v, double gap_net, double dv) {
    const double s_star =
        p.s0 + std::max(0.0, v * p.time_headway + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf)));
    const double free = std::pow(v / p.v_desired, p.exponent);
    return p.a_max * (1.0 - free - (s_star / gap_net) * (s_star / gap_net));
}

}  // namespace detail

// Integrates the leader's speed script and the follower model at the
// simulation rate. Throws when the scenario produces a collision.
inline TruthPair simulate_pair(const SynthScenario& sc) {
    sc.validate();
    const std::size_t n = static_cast<std::size_t>(std::floor(sc.duration / sc.dt + 1e-9)) + 1;
    TruthPair out;
    out.t.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.t[i] = sc.t_offset + static_cast<double>(i) * sc.dt;

    auto [vl, al] = detail::leader_speed_profile(sc, n);
    out.v_lead = std::move(vl);
    out.a_lead = std::move(al);
    out.x_lead.resize(n);
    out.x_lead[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        out.x_lead[i] = out.x_lead[i - 1] + 0.5 * (out.v_lead[i] + out.v_lead[i - 1]) * sc.dt;

    out.x_fol.resize(n);
    out.v_fol.resize(n);
    out.a_fol.resize(n);
    if (const auto* nw = std::get_if<NewellParams>(&sc.follower)) {
        // Exact shift of the leader; history before t0 extends the initial
        // cruise backwards.
        auto lead_x_at = [&](double tq) {
            const double t0 = out.t.front();
            if (tq <= t0) return out.x_lead[0] + sc.leader_v0 * (tq - t0);
            const double u = (tq - t0) / sc.dt;
            const std::size_t i = std::min(static_cast<std::size_t>(u), n - 2);
            const double w = u - static_cast<double>(i);
            return out.x_lead[i] + w * (out.x_lead[i + 1] - out.x_lead[i]);
        };
        auto lead_v_at = [&](double tq) {
            const double t0 = out.t.front();
            if (tq <= t0) return sc.leader_v0;
            const double u = (tq - t0) / sc.dt;
            const std::size_t i = std::min(static_cast<std::size_t>(u), n - 2);
            const double w = u - static_cast<double>(i);
            return out.v_lead[i] + w * (out.v_lead[i + 1] - out.v_lead[i]);
        };
        for (std::size_t i = 0; i < n; ++i) {
            out.x_fol[i] = lead_x_at(out.t[i] - nw->tau) - nw->delta;
            out.v_fol[i] = lead_v_at(out.t[i] - nw->tau);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = i == 0 ? 0 : i - 1;
            const std::size_t b = i + 1 == n ? i : i + 1;
            out.a_fol[i] = (out.v_fol[b] - out.v_fol[a]) / (out.t[b] - out.t[a]);
        }
    } else {
        const IdmParams& p = std::get<IdmParams>(sc.follower);
        double v = std::min(sc.leader_v0, p.v_desired);
        double gap0 = sc.initial_gap;
        if (gap0 < 0.0) gap0 = p.s0 + v * p.time_headway + 2.0;
        double x = out.x_lead[0] - sc.leader_length - gap0;
        for (std::size_t i = 0; i < n; ++i) {
            const double gap_net = out.x_lead[i] - sc.leader_length - x;
            if (!(gap_net > 0.0))
                throw InvalidInputError("simulate_pair: scenario produced a collision at t=" +
                                        std::to_string(out.t[i]));
            double a = detail::idm_accel(p, v, gap_net, v - out.v_lead[i]);
            a = std::clamp(a, -8.0, p.a_max);
            double v_next = v + a * sc.dt;
            if (v_next < 0.0) {
                a = -v / sc.dt;
                v_next = 0.0;
            }
            out.x_fol[i] = x;
            out.v_fol[i] = v;
            out.a_fol[i] = a;
            x += 0.5 * (v + v_next) * sc.dt;
            v = v_next;
        }
    }
    return out;
}

// Converts ground truth into the road-aligned pair layout (leader's first
// position is the origin).
inline CFPair truth_to_cfpair(const TruthPair& truth, const SynthScenario& sc,
                              const std::string& pair_id = "synthetic") {
    CFPair pair;
    pair.pair_id = pair_id;
    pair.leader_type = sc.leader_is_av ? LeaderType::AV : LeaderType::HV;
    pair.time = truth.t;
    const double s0 = truth.x_lead.front();
    const std::size_t n = truth.t.size();
    pair.x_lead.resize(n);
    pair.x_fol.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        pair.x_lead[i] = truth.x_lead[i] - s0;
        pair.x_fol[i] = truth.x_fol[i] - s0;
    }
    pair.v_fol = truth.v_fol;
    if (!sc.leader_is_av) pair.v_lead = truth.v_lead;
    pair.yaw_lead.assign(n, 0.0);
    pair.yaw_fol.assign(n, 0.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    pair.len_lead.assign(n, sc.leader_is_av ? nan : sc.leader_length);
    pair.len_fol.assign(n, sc.follower_length);
    pair.wid_lead.assign(n, sc.leader_is_av ? nan : sc.leader_width);
    pair.wid_fol.assign(n, sc.follower_width);
    return pair;
}

// Applies the perception-style corruption and serializes to canonical
// frames: world noise, per-scene splitting and id renumbering, zero-speed
// samples at HV scene edges, size jitter, dropped spans, and removal of AV
// speed/size fields.
inline std::vector<AgentFrame> corrupt(const TruthPair& truth, const SynthScenario& sc) {
    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> pos_noise(0.0, sc.noise.position_sigma);
    std::normal_distribution<double> speed_noise(0.0, sc.noise.speed_sigma);
    std::normal_distribution<double> len_noise(0.0, sc.artifacts.length_jitter_sigma);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t n = truth.t.size();
    std::vector<AgentFrame> frames;
    frames.reserve(2 * n);

    struct Perceived {
        bool is_av;
        const std::vector<double>* x;
        const std::vector<double>* v;
        double length, width;
        int slot;  // per-scene id slot for HVs
    };
    const Perceived vehicles[2] = {
        {sc.leader_is_av, &truth.x_lead, &truth.v_lead, sc.leader_length, sc.leader_width, 1},
        {false, &truth.x_fol, &truth.v_fol, sc.follower_length, sc.follower_width, 2},
    };

    std::vector<std::size_t> scene_of(n);
    for (std::size_t i = 0; i < n; ++i)
        scene_of[i] = static_cast<std::size_t>(
            std::floor((truth.t[i] - truth.t.front()) / sc.artifacts.scene_length + 1e-9));

    for (const Perceived& veh : vehicles) {
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < n; ++i) {
            if (!veh.is_av && sc.artifacts.hole) {
                const double rel = truth.t[i] - truth.t.front();
                if (rel >= sc.artifacts.hole->first &&
                    rel < sc.artifacts.hole->first + sc.artifacts.hole->second)
                    continue;
            }
            kept.push_back(i);
        }
        for (std::size_t k = 0; k < kept.size(); ++k) {
            const std::size_t i = kept[k];
            AgentFrame f;
            char scene_suffix[16];
            std::snprintf(scene_suffix, sizeof(scene_suffix), "%03zu", scene_of[i]);
            f.scene_id = sc.scene_prefix + scene_suffix;
            f.timestamp = truth.t[i];
            f.is_av = veh.is_av;
            f.agent_id = veh.is_av ? "ego" : std::to_string(veh.slot);
            f.class_prob_car = 1.0;
            const double noise_x = sc.noise.position_sigma > 0.0 ? pos_noise(rng) : 0.0;
            const double noise_y = sc.noise.position_sigma > 0.0 ? pos_noise(rng) : 0.0;
            f.x = (*veh.x)[i] + noise_x;
            f.y = noise_y;
            f.yaw = 0.0;
            f.lane_id = sc.lane_id;
            f.lane_s = f.x;
            f.lane_d = f.y;
            f.lane_is_straight = true;
            f.signal_segment_id = sc.signal_segment_id;
            if (!veh.is_av) {
                double v = (*veh.v)[i] + (sc.noise.speed_sigma > 0.0 ? speed_noise(rng) : 0.0);
                v = std::max(0.0, v);
                const bool scene_edge =
                    (k == 0 || scene_of[kept[k - 1]] != scene_of[i]) ||
                    (k + 1 == kept.size() || scene_of[kept[k + 1]] != scene_of[i]);
                if (sc.artifacts.zero_speed_endpoints && scene_edge) v = 0.0;
                f.speed = v;
                double len = veh.length;
                if (sc.artifacts.length_jitter_sigma > 0.0) len -= std::abs(len_noise(rng));
                if (sc.artifacts.length_outlier_prob > 0.0 &&
                    unit(rng) < sc.artifacts.length_outlier_prob &&
                    !sc.artifacts.length_outlier_values.empty()) {
                    const auto pick = static_cast<std::size_t>(
                        unit(rng) * static_cast<double>(sc.artifacts.length_outlier_values.size()));
                    len = sc.artifacts.length_outlier_values[std::min(
                        pick, sc.artifacts.length_outlier_values.size() - 1)];
                }
                f.length = len;
                f.width = veh.width;
            }
            frames.push_back(std::move(f));
        }
    }
    std::sort(frames.begin(), frames.end(), [](const AgentFrame& a, const AgentFrame& b) {
        if (a.scene_id != b.scene_id) return a.scene_id < b.scene_id;
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.agent_id < b.agent_id;
    });
    return frames;
}

}  // namespace cfpipe
