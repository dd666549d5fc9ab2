// Minimal library walk-through: generate one noisy episode, run it through
// selection and enhancement in-process, and print before/after anomaly
// fractions.

#include <cstdio>

#include "cfpipe/assess.hpp"
#include "cfpipe/enhance.hpp"
#include "cfpipe/scene_io.hpp"
#include "cfpipe/select.hpp"
#include "cfpipe/stitch.hpp"
#include "cfpipe/synth.hpp"

int main() {
    using namespace cfpipe;

    SynthScenario sc;
    sc.leader_script = {{SpeedSegment::Kind::Cruise, 15.0, 0.0},
                        {SpeedSegment::Kind::Decel, 6.0, 4.0},
                        {SpeedSegment::Kind::Cruise, 12.0, 0.0},
                        {SpeedSegment::Kind::Accel, 8.0, 11.0},
                        {SpeedSegment::Kind::Cruise, 19.0, 0.0}};
    sc.leader_v0 = 10.0;
    sc.noise.position_sigma = 0.05;
    sc.noise.speed_sigma = 0.12;
    sc.artifacts.zero_speed_endpoints = true;
    sc.seed = 7;

    const TruthPair truth = simulate_pair(sc);
    const auto frames = corrupt(truth, sc);

    std::vector<Scene> scenes;  // corrupt() emits frames already grouped by scene
    for (const auto& f : frames) {
        if (scenes.empty() || scenes.back().scene_id != f.scene_id)
            scenes.push_back({f.scene_id, {}});
        scenes.back().frames.push_back(f);
    }
    const auto tracks = stitch_tracks(scenes);
    const auto extracted = extract_pairs(tracks, SelectionConfig{});
    if (extracted.ha.empty()) {
        std::puts("no pair selected (unexpected for this scenario)");
        return 1;
    }
    const CFPair& pair = extracted.ha.front();
    const auto raw = kinematic_anomalies({pair.time, pair.v_fol}, DerivSource::VBased);

    const EnhancedPair enhanced = enhance_pair(pair);
    const auto post = kinematic_anomalies_from({enhanced.t, enhanced.a_fol},
                                               {enhanced.t, enhanced.j_fol});

    std::printf("selected pair %s: %zu frames, %.1f s\n", pair.pair_id.c_str(), pair.size(),
                pair.duration());
    std::printf("follower anomalies  raw:      acc %.3f%%  jerk %.3f%%  jsi %.2f%%\n",
                100.0 * raw.frac_acc_anomaly, 100.0 * raw.frac_jerk_anomaly,
                100.0 * raw.frac_jsi_anomaly);
    std::printf("follower anomalies  enhanced: acc %.3f%%  jerk %.3f%%  jsi %.2f%%\n",
                100.0 * post.frac_acc_anomaly, 100.0 * post.frac_jerk_anomaly,
                100.0 * post.frac_jsi_anomaly);
    std::printf("estimated follower length %.2f m (true %.2f m), sigma_a %.3f m/s^2\n",
                enhanced.length_fol, sc.follower_length, enhanced.sigma_a_fol);
    return 0;
}
