// Shared builders for synthetic tracks and scenes used across test suites.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cfpipe/frame.hpp"
#include "cfpipe/select.hpp"

namespace helpers {

struct TrackSpec {
    std::string agent_id = "a";
    bool is_av = false;
    double t0 = 0.0;
    double duration = 20.0;
    double dt = 0.1;
    double s0 = 0.0;        // initial lane_s
    double speed = 8.0;     // constant cruise speed
    double lane_d = 0.0;
    double yaw = 0.0;
    double prob_car = 1.0;
    std::string lane_id = "L0";
    std::string signal = "SIG0";
    bool straight = true;
    bool with_speed_field = true;
    double length = 4.5;
    // per-frame tweak hook, applied after default construction
    std::function<void(std::size_t, cfpipe::AgentFrame&)> tweak;
};

inline cfpipe::Track make_track(const TrackSpec& spec) {
    cfpipe::Track t;
    t.track_id = "scene/" + spec.agent_id;
    t.agent_id = spec.agent_id;
    t.is_av = spec.is_av;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration / spec.dt)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        cfpipe::AgentFrame f;
        f.scene_id = "scene";
        f.timestamp = spec.t0 + static_cast<double>(i) * spec.dt;
        f.agent_id = spec.agent_id;
        f.is_av = spec.is_av;
        f.class_prob_car = spec.prob_car;
        f.lane_s = spec.s0 + spec.speed * (f.timestamp - spec.t0);
        f.x = f.lane_s;
        f.y = spec.lane_d;
        f.lane_d = spec.lane_d;
        f.yaw = spec.yaw;
        f.lane_id = spec.lane_id;
        f.lane_is_straight = spec.straight;
        f.signal_segment_id = spec.signal;
        if (spec.with_speed_field && !spec.is_av) f.speed = spec.speed;
        if (!spec.is_av) {
            f.length = spec.length;
            f.width = 1.85;
        }
        if (spec.tweak) spec.tweak(i, f);
        t.frames.push_back(std::move(f));
    }
    t.provenance.push_back({"scene", 0, t.frames.size()});
    return t;
}

// Leader + follower cruising in lane, compliant with every selection rule.
inline std::vector<cfpipe::Track> compliant_pair_tracks(double duration = 20.0,
                                                        double gap = 20.0,
                                                        double speed = 8.0) {
    TrackSpec lead;
    lead.agent_id = "lead";
    lead.s0 = gap;
    lead.speed = speed;
    lead.duration = duration;
    TrackSpec fol = lead;
    fol.agent_id = "fol";
    fol.s0 = 0.0;
    return {make_track(lead), make_track(fol)};
}

}  // namespace helpers
