#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cfpipe {

// One observation of one agent. Positions are world-frame; lane_s/lane_d
// are the road-aligned coordinates supplied by the upstream map matching.
struct AgentFrame {
    std::string scene_id;
    double timestamp = 0.0;  // s
    std::string agent_id;    // "ego" denotes the recording AV
    bool is_av = false;
    double class_prob_car = 0.0;
    double x = 0.0, y = 0.0;  // m
    double yaw = 0.0;         // rad, (-pi, pi]
    std::optional<double> speed;   // m/s; absent for AV frames
    std::optional<double> length;  // m; absent for AV frames
    std::optional<double> width;   // m; absent for AV frames
    std::string lane_id;
    double lane_s = 0.0;  // m along lane
    double lane_d = 0.0;  // m signed offset from centerline
    bool lane_is_straight = false;
    std::string signal_segment_id;  // equal ids ⇔ same side of the traffic lights
};

// Contiguous block of frames contributed by one scene to a stitched track.
struct ProvenanceSpan {
    std::string scene_id;
    std::size_t first = 0;  // index into Track::frames
    std::size_t count = 0;
};

struct Track {
    std::string track_id;  // unique across the run
    std::string agent_id;  // id within the first contributing scene
    bool is_av = false;
    std::vector<AgentFrame> frames;  // strictly increasing timestamps
    std::vector<ProvenanceSpan> provenance;
};

struct Scene {
    std::string scene_id;
    std::vector<AgentFrame> frames;  // time-sorted
};

}  // namespace cfpipe
