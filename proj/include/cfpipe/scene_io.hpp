#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cfpipe/detail/text.hpp"
#include "cfpipe/errors.hpp"
#include "cfpipe/frame.hpp"

namespace cfpipe {

inline constexpr const char* kSceneHeader =
    "scene_id,timestamp,agent_id,is_av,class_prob_car,x,y,yaw,speed,length,width,"
    "lane_id,lane_s,lane_d,lane_is_straight,signal_segment_id";

struct RejectedLine {
    std::string source;  // file the line came from
    std::size_t line_no = 0;
    std::string reason;
    std::string text;
};

struct ReadResult {
    std::vector<Scene> scenes;  // ordered by (first timestamp, scene_id)
    std::vector<RejectedLine> rejects;
    std::size_t n_records = 0;  // data lines seen (valid + rejected)
};

namespace detail {

inline std::optional<bool> parse_bool01(std::string_view s) {
    s = trim(s);
    if (s == "0") return false;
    if (s == "1") return true;
    return std::nullopt;
}

// Parses one data line; on failure returns the reject reason.
inline std::optional<std::string> parse_frame_line(std::string_view line, AgentFrame& f) {
    auto cols = split(line, ',');
    if (cols.size() != 16) return "wrong column count";

    f.scene_id = std::string(trim(cols[0]));
    if (f.scene_id.empty()) return "empty scene_id";
    auto ts = parse_double(cols[1]);
    if (!ts || !std::isfinite(*ts)) return "bad timestamp";
    f.timestamp = *ts;
    f.agent_id = std::string(trim(cols[2]));
    if (f.agent_id.empty()) return "empty agent_id";
    auto av = parse_bool01(cols[3]);
    if (!av) return "bad is_av flag";
    f.is_av = *av;
    auto prob = parse_double(cols[4]);
    if (!prob) return "bad class_prob_car";
    if (*prob < 0.0 || *prob > 1.0) return "probability out of range";
    f.class_prob_car = *prob;
    auto px = parse_double(cols[5]), py = parse_double(cols[6]);
    if (!px || !py || !std::isfinite(*px) || !std::isfinite(*py)) return "bad position";
    f.x = *px;
    f.y = *py;
    auto yaw = parse_double(cols[7]);
    if (!yaw) return "bad yaw";
    if (*yaw <= -std::numbers::pi - 1e-9 || *yaw > std::numbers::pi + 1e-9)
        return "yaw out of range";
    f.yaw = *yaw;

    auto opt_field = [](std::string_view s) -> std::pair<bool, std::optional<double>> {
        if (trim(s).empty()) return {true, std::nullopt};
        auto v = parse_double(s);
        if (!v || !std::isfinite(*v)) return {false, std::nullopt};
        return {true, v};
    };
    auto [ok_s, speed] = opt_field(cols[8]);
    if (!ok_s) return "bad speed";
    f.speed = speed;
    auto [ok_l, length] = opt_field(cols[9]);
    if (!ok_l) return "bad length";
    f.length = length;
    auto [ok_w, width] = opt_field(cols[10]);
    if (!ok_w) return "bad width";
    f.width = width;

    f.lane_id = std::string(trim(cols[11]));
    auto ls = parse_double(cols[12]), ld = parse_double(cols[13]);
    if (!ls || !ld) return "bad lane coordinates";
    f.lane_s = *ls;
    f.lane_d = *ld;
    auto straight = parse_bool01(cols[14]);
    if (!straight) return "bad lane_is_straight flag";
    f.lane_is_straight = *straight;
    f.signal_segment_id = std::string(trim(cols[15]));
    return std::nullopt;
}

inline std::vector<Scene> group_scenes(std::vector<AgentFrame> frames) {
    std::map<std::string, std::vector<AgentFrame>> by_scene;
    for (auto& f : frames) by_scene[f.scene_id].push_back(std::move(f));
    std::vector<Scene> scenes;
    scenes.reserve(by_scene.size());
    for (auto& [id, fs] : by_scene) {
        std::stable_sort(fs.begin(), fs.end(), [](const AgentFrame& a, const AgentFrame& b) {
            if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
            return a.agent_id < b.agent_id;
        });
        scenes.push_back({id, std::move(fs)});
    }
    std::stable_sort(scenes.begin(), scenes.end(), [](const Scene& a, const Scene& b) {
        double ta = a.frames.empty() ? 0.0 : a.frames.front().timestamp;
        double tb = b.frames.empty() ? 0.0 : b.frames.front().timestamp;
        if (ta != tb) return ta < tb;
        return a.scene_id < b.scene_id;
    });
    return scenes;
}

}  // namespace detail

// Reads one canonical scene file. Malformed lines are collected into the
// rejects report; more than 1% malformed lines aborts the read (the file is
// probably not a scene file at all).
inline ReadResult read_frames(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty scene file: " + path);
    if (std::string(detail::trim(line)) != kSceneHeader)
        throw FormatError("scene file header mismatch: " + path);

    ReadResult result;
    std::vector<AgentFrame> frames;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::trim(line);
        if (text.empty()) continue;
        ++result.n_records;
        AgentFrame f;
        if (auto reason = detail::parse_frame_line(text, f))
            result.rejects.push_back({path, line_no, *reason, std::string(text)});
        else
            frames.push_back(std::move(f));
    }
    if (result.n_records > 0 &&
        static_cast<double>(result.rejects.size()) > 0.01 * static_cast<double>(result.n_records))
        throw FormatError("more than 1% malformed lines in " + path +
                          " (" + std::to_string(result.rejects.size()) + "/" +
                          std::to_string(result.n_records) + ")");
    result.scenes = detail::group_scenes(std::move(frames));
    return result;
}

// Merges per-file read results; scenes split across files are recombined by
// scene_id, and global ordering is (first timestamp, scene_id).
inline ReadResult merge_reads(std::vector<ReadResult> parts) {
    ReadResult all;
    std::vector<AgentFrame> frames;
    for (auto& part : parts) {
        all.n_records += part.n_records;
        for (auto& r : part.rejects) all.rejects.push_back(std::move(r));
        for (auto& scene : part.scenes)
            for (auto& f : scene.frames) frames.push_back(std::move(f));
    }
    all.scenes = detail::group_scenes(std::move(frames));
    return all;
}

inline std::string frame_to_line(const AgentFrame& f) {
    using detail::fmt_num;
    std::ostringstream os;
    os << f.scene_id << ',' << fmt_num(f.timestamp) << ',' << f.agent_id << ','
       << (f.is_av ? '1' : '0') << ',' << fmt_num(f.class_prob_car) << ',' << fmt_num(f.x) << ','
       << fmt_num(f.y) << ',' << fmt_num(f.yaw) << ',';
    if (f.speed) os << fmt_num(*f.speed);
    os << ',';
    if (f.length) os << fmt_num(*f.length);
    os << ',';
    if (f.width) os << fmt_num(*f.width);
    os << ',' << f.lane_id << ',' << fmt_num(f.lane_s) << ',' << fmt_num(f.lane_d) << ','
       << (f.lane_is_straight ? '1' : '0') << ',' << f.signal_segment_id;
    return os.str();
}

inline void write_scene_file(const std::string& path, const std::vector<AgentFrame>& frames) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scene file: " + path);
    out << kSceneHeader << '\n';
    for (const auto& f : frames) out << frame_to_line(f) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace cfpipe
