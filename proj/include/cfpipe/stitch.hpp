#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cfpipe/frame.hpp"

namespace cfpipe {

// Gates for joining per-scene tracks across scene boundaries. Chosen
// stricter than the frame-to-frame selection rules so that a stitched join
// can never manufacture a continuity the selection stage would reject.
struct StitchConfig {
    double max_time_gap = 0.5;    // s
    double max_extrap_error = 2.0;  // m, against constant-velocity extrapolation
    double min_prob_car = 0.5;    // both boundary frames must exceed this
};

namespace detail {

struct RawTrack {
    std::size_t scene_index = 0;
    std::string agent_id;
    bool is_av = false;
    std::vector<AgentFrame> frames;
    int chain = -1;  // index of the chain this segment was appended to
};

}  // namespace detail

// Re-links per-scene tracks into continuous per-agent tracks. Within a
// scene, frames with equal agent_id form one segment; across consecutive
// scenes, a segment is joined to at most one successor when the time gap
// and constant-velocity extrapolation error pass the gates. Ego segments
// join on scene adjacency alone. Deterministic: candidate joins are ranked
// by extrapolation error, then time gap, then agent ids.
inline std::vector<Track> stitch_tracks(std::span<const Scene> scenes,
                                        const StitchConfig& cfg = {}) {
    using detail::RawTrack;
    std::vector<RawTrack> raw;
    std::vector<std::vector<std::size_t>> by_scene(scenes.size());
    for (std::size_t si = 0; si < scenes.size(); ++si) {
        std::map<std::string, std::vector<AgentFrame>> groups;
        for (const auto& f : scenes[si].frames) groups[f.agent_id].push_back(f);
        for (auto& [agent_id, frames] : groups) {
            RawTrack t;
            t.scene_index = si;
            t.agent_id = agent_id;
            t.is_av = !frames.empty() && frames.front().is_av;
            t.frames = std::move(frames);
            by_scene[si].push_back(raw.size());
            raw.push_back(std::move(t));
        }
    }

    // chains[i] = ordered raw-track indices forming one stitched track
    std::vector<std::vector<std::size_t>> chains;
    std::vector<int> chain_of(raw.size(), -1);
    auto chain_start = [&](std::size_t idx) {
        chain_of[idx] = static_cast<int>(chains.size());
        chains.push_back({idx});
    };
    for (std::size_t idx : by_scene.empty() ? std::vector<std::size_t>{} : by_scene[0])
        chain_start(idx);

    for (std::size_t si = 1; si < scenes.size(); ++si) {
        struct Join {
            double err, dt;
            std::size_t pred, succ;
        };
        std::vector<Join> candidates;
        for (std::size_t pi : by_scene[si - 1]) {
            // the chain end living in scene si-1
            const RawTrack& pred = raw[pi];
            if (pred.frames.empty()) continue;
            const AgentFrame& last = pred.frames.back();
            for (std::size_t ci : by_scene[si]) {
                const RawTrack& succ = raw[ci];
                if (succ.frames.empty()) continue;
                const AgentFrame& first = succ.frames.front();
                const double dt = first.timestamp - last.timestamp;
                if (!(dt > 0.0)) continue;
                if (pred.is_av && succ.is_av) {
                    candidates.push_back({0.0, dt, pi, ci});
                    continue;
                }
                if (pred.is_av != succ.is_av) continue;
                if (dt >= cfg.max_time_gap) continue;
                if (last.class_prob_car <= cfg.min_prob_car ||
                    first.class_prob_car <= cfg.min_prob_car)
                    continue;
                double vx = 0.0, vy = 0.0;
                if (pred.frames.size() >= 2) {
                    const AgentFrame& prev = pred.frames[pred.frames.size() - 2];
                    const double h = last.timestamp - prev.timestamp;
                    vx = (last.x - prev.x) / h;
                    vy = (last.y - prev.y) / h;
                }
                const double ex = first.x - (last.x + vx * dt);
                const double ey = first.y - (last.y + vy * dt);
                const double err = std::hypot(ex, ey);
                if (err >= cfg.max_extrap_error) continue;
                candidates.push_back({err, dt, pi, ci});
            }
        }
        std::sort(candidates.begin(), candidates.end(), [&](const Join& a, const Join& b) {
            if (a.err != b.err) return a.err < b.err;
            if (a.dt != b.dt) return a.dt < b.dt;
            if (raw[a.succ].agent_id != raw[b.succ].agent_id)
                return raw[a.succ].agent_id < raw[b.succ].agent_id;
            return raw[a.pred].agent_id < raw[b.pred].agent_id;
        });
        std::vector<bool> pred_used(raw.size(), false), succ_used(raw.size(), false);
        for (const Join& j : candidates) {
            if (pred_used[j.pred] || succ_used[j.succ]) continue;
            pred_used[j.pred] = true;
            succ_used[j.succ] = true;
            const int chain = chain_of[j.pred];
            chain_of[j.succ] = chain;
            chains[static_cast<std::size_t>(chain)].push_back(j.succ);
        }
        for (std::size_t ci : by_scene[si])
            if (chain_of[ci] < 0) chain_start(ci);
    }

    std::vector<Track> tracks;
    tracks.reserve(chains.size());
    for (const auto& chain : chains) {
        Track t;
        const RawTrack& head = raw[chain.front()];
        t.agent_id = head.agent_id;
        t.is_av = head.is_av;
        t.track_id = scenes[head.scene_index].scene_id + "/" + head.agent_id;
        for (std::size_t idx : chain) {
            const RawTrack& seg = raw[idx];
            t.provenance.push_back(
                {scenes[seg.scene_index].scene_id, t.frames.size(), seg.frames.size()});
            t.frames.insert(t.frames.end(), seg.frames.begin(), seg.frames.end());
        }
        tracks.push_back(std::move(t));
    }
    std::sort(tracks.begin(), tracks.end(),
              [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
    return tracks;
}

}  // namespace cfpipe
