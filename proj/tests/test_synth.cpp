#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cfpipe/assess.hpp"
#include "cfpipe/enhance.hpp"
#include "cfpipe/scene_io.hpp"
#include "cfpipe/select.hpp"
#include "cfpipe/stitch.hpp"
#include "cfpipe/synth.hpp"

using cfpipe::AgentFrame;
using cfpipe::IdmParams;
using cfpipe::NewellParams;
using cfpipe::Scene;
using cfpipe::SpeedSegment;
using cfpipe::SynthScenario;
using cfpipe::corrupt;
using cfpipe::simulate_pair;
using cfpipe::truth_to_cfpair;

namespace {

std::vector<Scene> to_scenes(const std::vector<AgentFrame>& frames) {
    std::vector<Scene> scenes;
    for (const auto& f : frames) {
        if (scenes.empty() || scenes.back().scene_id != f.scene_id)
            scenes.push_back({f.scene_id, {}});
        scenes.back().frames.push_back(f);
    }
    return scenes;
}

}  // namespace

TEST_CASE("newell followers mirror a constant-speed leader exactly", "[synth]") {
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 60.0, 0.0}};
    sc.leader_v0 = 11.0;
    sc.follower = NewellParams{1.2, 8.0};
    const auto truth = simulate_pair(sc);
    for (std::size_t i = 0; i < truth.t.size(); ++i) {
        CHECK(truth.v_fol[i] == Catch::Approx(11.0).margin(1e-9));
        CHECK(truth.x_lead[i] - truth.x_fol[i] ==
              Catch::Approx(8.0 + 11.0 * 1.2).margin(1e-9));
    }
}

TEST_CASE("idm followers stop behind a stopping leader", "[synth]") {
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 10.0, 0.0},
                        {SpeedSegment::Kind::Decel, 8.0, 0.0},
                        {SpeedSegment::Kind::Stop, 30.0, 0.0}};
    sc.leader_v0 = 9.0;
    sc.duration = 48.0;
    IdmParams idm;
    sc.follower = idm;
    const auto truth = simulate_pair(sc);
    CHECK(truth.v_fol.back() < 0.05);
    const double final_gap = truth.x_lead.back() - sc.leader_length - truth.x_fol.back();
    CHECK(final_gap >= idm.s0 * 0.95);
    CHECK(final_gap < idm.s0 * 3.0);
    // no collision anywhere
    for (std::size_t i = 0; i < truth.t.size(); ++i)
        CHECK(truth.x_lead[i] - sc.leader_length - truth.x_fol[i] > 0.0);
}

TEST_CASE("clean scenarios survive the full selection and assess cleanly", "[synth]") {
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 25.0, 0.0},
                        {SpeedSegment::Kind::Accel, 10.0, 12.0},
                        {SpeedSegment::Kind::Cruise, 25.0, 0.0}};
    sc.leader_v0 = 9.0;
    const auto truth = simulate_pair(sc);
    const auto frames = corrupt(truth, sc);  // all corruption knobs off
    const auto tracks = cfpipe::stitch_tracks(to_scenes(frames));
    const auto result = cfpipe::extract_pairs(tracks, {});
    REQUIRE(result.ha.size() == 1);
    const auto& pair = result.ha[0];
    const auto rep = cfpipe::kinematic_anomalies({pair.time, pair.v_fol},
                                                 cfpipe::DerivSource::VBased);
    CHECK(rep.frac_acc_anomaly == Catch::Approx(0.0).margin(1e-6));
    CHECK(rep.frac_jerk_anomaly == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("no-op corruption round-trips the truth", "[synth]") {
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 30.0, 0.0}};
    sc.duration = 30.0;
    sc.leader_is_av = false;
    const auto truth = simulate_pair(sc);
    const auto frames = corrupt(truth, sc);
    // two agents per timestep, nothing dropped
    CHECK(frames.size() == 2 * truth.t.size());
    for (const auto& f : frames) {
        const auto i = static_cast<std::size_t>(std::llround(f.timestamp / sc.dt));
        const double want = f.agent_id == "1" ? truth.x_lead[i] : truth.x_fol[i];
        CHECK(f.lane_s == Catch::Approx(want).margin(1e-9));
        REQUIRE(f.speed.has_value());
        const double want_v = f.agent_id == "1" ? truth.v_lead[i] : truth.v_fol[i];
        CHECK(*f.speed == Catch::Approx(want_v).margin(1e-9));
    }
}

TEST_CASE("zero-speed insertion hits exactly the scene edge frames", "[synth]") {
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 60.0, 0.0}};
    sc.leader_v0 = 8.0;
    sc.artifacts.zero_speed_endpoints = true;
    const auto truth = simulate_pair(sc);
    const auto frames = corrupt(truth, sc);

    std::vector<double> zero_times;
    for (const auto& f : frames)
        if (!f.is_av && f.speed && *f.speed == 0.0) zero_times.push_back(f.timestamp);
    // scenes are 25 s: edges at 0, 24.9/25.0, 49.9/50.0, and the last frame
    REQUIRE(zero_times.size() == 6);

    // feed through speed_consistency on the follower series
    cfpipe::TimeSeries x, v;
    for (const auto& f : frames)
        if (!f.is_av) {
            x.t.push_back(f.timestamp);
            x.y.push_back(f.lane_s);
            v.t.push_back(f.timestamp);
            v.y.push_back(*f.speed);
        }
    const auto artifacts = cfpipe::speed_consistency(x, v).artifact_times;
    CHECK(artifacts == zero_times);
}

TEST_CASE("generation is deterministic per seed and varies across seeds", "[synth]") {
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 30.0, 0.0}};
    sc.duration = 30.0;
    sc.noise.position_sigma = 0.05;
    sc.seed = 5;
    const auto truth = simulate_pair(sc);
    const auto a = corrupt(truth, sc);
    const auto b = corrupt(truth, sc);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].x == b[i].x);

    sc.seed = 6;
    const auto c = corrupt(truth, sc);
    bool any_different = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].x != c[i].x) any_different = true;
    CHECK(any_different);
}

TEST_CASE("holes drop the configured span", "[synth]") {
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 40.0, 0.0}};
    sc.duration = 40.0;
    sc.artifacts.hole = {{20.0, 1.5}};
    const auto truth = simulate_pair(sc);
    const auto frames = corrupt(truth, sc);
    for (const auto& f : frames) {
        if (f.is_av) continue;
        CHECK((f.timestamp < 20.0 - 1e-9 || f.timestamp >= 21.5 - 1e-9));
    }
}

TEST_CASE("length jitter with outliers still yields a usable estimate", "[synth]") {
    // long vehicle near the clamp ceiling; jitter under-estimates, 5% of
    // frames are 8 m merged-box outliers
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SynthScenario sc;
        sc.leader_script = {{SpeedSegment::Kind::Cruise, 40.0, 0.0}};
        sc.duration = 40.0;
        sc.leader_is_av = false;
        sc.follower_length = 6.3;
        sc.artifacts.length_jitter_sigma = 0.4;
        sc.artifacts.length_outlier_prob = 0.05;
        sc.artifacts.length_outlier_values = {8.0};
        sc.seed = seed;
        const auto truth = simulate_pair(sc);
        const auto frames = corrupt(truth, sc);
        std::vector<double> series;
        for (const auto& f : frames)
            if (f.agent_id == "2") series.push_back(*f.length);
        REQUIRE(series.size() == truth.t.size());
        if (std::abs(cfpipe::estimate_length(series) - 6.3) <= 0.3) ++hits;
    }
    CHECK(hits >= 45);
}

TEST_CASE("collision scenarios are rejected", "[synth]") {
    // leader parked from the first frame, follower arriving at speed with no
    // room to brake: the first integration step overlaps the leader
    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Stop, 30.0, 0.0}};
    sc.duration = 30.0;
    sc.leader_v0 = 12.0;  // follower starts at this speed
    sc.initial_gap = 0.3;
    sc.follower = IdmParams{};
    CHECK_THROWS_AS(simulate_pair(sc), cfpipe::InvalidInputError);
}
