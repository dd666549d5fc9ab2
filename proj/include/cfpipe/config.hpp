#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cfpipe/assess.hpp"
#include "cfpipe/detail/text.hpp"
#include "cfpipe/enhance.hpp"
#include "cfpipe/errors.hpp"
#include "cfpipe/regime.hpp"
#include "cfpipe/select.hpp"
#include "cfpipe/stitch.hpp"
#include "cfpipe/synth.hpp"

namespace cfpipe {

// Flat key-value config text with [section] headers, '#' comments, and
// CFPIPE_<SECTION>_<KEY> environment overrides.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

inline IniData parse_ini(std::istream& in) {
    IniData data;
    std::string section = "";
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::trim(line);
        if (text.empty() || text.front() == '#' || text.front() == ';') continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
            section = detail::to_lower(detail::trim(text.substr(1, text.size() - 2)));
            continue;
        }
        auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        auto key = detail::to_lower(detail::trim(text.substr(0, eq)));
        auto value = std::string(detail::trim(text.substr(eq + 1)));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        data[section][key] = value;
    }
    return data;
}

inline IniData parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_ini(in);
}

// Environment variables named <prefix>_<SECTION>_<KEY> override both file
// values and defaults for every known key.
inline std::optional<std::string> env_override(const std::string& prefix,
                                               const std::string& section,
                                               const std::string& key) {
    if (prefix.empty()) return std::nullopt;
    const std::string name = prefix + "_" + detail::to_upper(section) + "_" + detail::to_upper(key);
    if (const char* env = std::getenv(name.c_str())) return std::string(env);
    return std::nullopt;
}

struct PipelineConfig {
    std::vector<std::string> inputs;  // files or simple globs
    std::string output_dir;
    StitchConfig stitch;
    SelectionConfig selection;
    KinematicLimits limits;
    EnhanceConfig enhance;
    RegimeConfig regime;
    bool stage_select = true;
    bool stage_assess = true;
    bool stage_enhance = true;
    bool stage_regime = true;
    int workers = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (inputs.empty()) throw ConfigError("config: no input paths");
        if (output_dir.empty()) throw ConfigError("config: no output directory");
        if (workers < 1 || workers > 256) throw ConfigError("config: workers out of range");
        selection.validate();
        regime.validate();
        if (!(limits.a_min < 0.0 && 0.0 < limits.a_max))
            throw ConfigError("config: acceleration limits must straddle 0");
        if (limits.j_min != -limits.j_max) throw ConfigError("config: jerk limits must be symmetric");
    }
};

namespace detail {

struct IniReader {
    const IniData& data;
    std::string env_prefix;  // empty disables environment overrides
    std::map<std::string, std::map<std::string, bool>> seen;

    std::optional<std::string> raw(const std::string& sec, const std::string& key) {
        if (auto env = env_override(env_prefix, sec, key)) {
            seen[sec][key] = true;
            return env;
        }
        auto s = data.find(sec);
        if (s == data.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        seen[sec][key] = true;
        return k->second;
    }
    double num(const std::string& sec, const std::string& key, double fallback) {
        auto value = raw(sec, key);
        if (!value) return fallback;
        auto v = parse_double(*value);
        if (!v) throw ConfigError("config: bad number for " + sec + "." + key);
        return *v;
    }
    bool flag(const std::string& sec, const std::string& key, bool fallback) {
        auto value = raw(sec, key);
        if (!value) return fallback;
        if (*value == "1" || *value == "true" || *value == "on") return true;
        if (*value == "0" || *value == "false" || *value == "off") return false;
        throw ConfigError("config: bad boolean for " + sec + "." + key);
    }
    std::string str(const std::string& sec, const std::string& key, const std::string& fallback) {
        return raw(sec, key).value_or(fallback);
    }
    void reject_unknown() {
        for (const auto& [sec, entries] : data)
            for (const auto& [key, value] : entries)
                if (!seen[sec][key])
                    throw ConfigError("config: unknown key " + (sec.empty() ? key : sec + "." + key));
    }
};

}  // namespace detail

inline PipelineConfig pipeline_config_from_ini(const IniData& data, bool env_overrides = true) {
    detail::IniReader r{data, env_overrides ? "CFPIPE" : "", {}};
    PipelineConfig cfg;

    const std::string paths = r.str("input", "paths", "");
    for (auto part : detail::split(paths, ','))
        if (auto p = detail::trim(part); !p.empty()) cfg.inputs.emplace_back(p);
    cfg.output_dir = r.str("output", "dir", "");

    cfg.stitch.max_time_gap = r.num("stitch", "max_time_gap", cfg.stitch.max_time_gap);
    cfg.stitch.max_extrap_error = r.num("stitch", "max_extrap_error", cfg.stitch.max_extrap_error);
    cfg.stitch.min_prob_car = r.num("stitch", "min_prob_car", cfg.stitch.min_prob_car);

    auto& sel = cfg.selection;
    sel.prob_car_min = r.num("selection", "prob_car_min", sel.prob_car_min);
    sel.long_dist_max = r.num("selection", "long_dist_max", sel.long_dist_max);
    sel.lat_dist_max = r.num("selection", "lat_dist_max", sel.lat_dist_max);
    sel.min_duration = r.num("selection", "min_duration", sel.min_duration);
    sel.yaw_dev_max = r.num("selection", "yaw_dev_max", sel.yaw_dev_max);
    sel.yaw_to_lane_max = r.num("selection", "yaw_to_lane_max", sel.yaw_to_lane_max);
    sel.dt_max = r.num("selection", "dt_max", sel.dt_max);
    sel.step_dist_max = r.num("selection", "step_dist_max", sel.step_dist_max);
    sel.mean_speed_min = r.num("selection", "mean_speed_min", sel.mean_speed_min);
    sel.screen_stride = r.num("selection", "screen_stride", sel.screen_stride);

    auto& lim = cfg.limits;
    lim.a_min = r.num("limits", "a_min", lim.a_min);
    lim.a_max = r.num("limits", "a_max", lim.a_max);
    lim.j_min = r.num("limits", "j_min", lim.j_min);
    lim.j_max = r.num("limits", "j_max", lim.j_max);
    lim.jsi_window = r.num("limits", "jsi_window", lim.jsi_window);
    lim.jsi_max_inversions =
        static_cast<int>(r.num("limits", "jsi_max_inversions", lim.jsi_max_inversions));

    auto& kal = cfg.enhance.kalman;
    kal.q1[0] = r.num("kalman", "q1_x", kal.q1[0]);
    kal.q1[1] = r.num("kalman", "q1_v", kal.q1[1]);
    kal.r1[0] = r.num("kalman", "r1_x", kal.r1[0]);
    kal.r1[1] = r.num("kalman", "r1_v", kal.r1[1]);
    kal.q2[0] = r.num("kalman", "q2_x", kal.q2[0]);
    kal.q2[1] = r.num("kalman", "q2_v", kal.q2[1]);
    kal.q2[2] = r.num("kalman", "q2_a", kal.q2[2]);
    kal.r2[0] = r.num("kalman", "r2_x", kal.r2[0]);
    kal.r2[1] = r.num("kalman", "r2_v", kal.r2[1]);
    kal.r2[2] = r.num("kalman", "r2_a", kal.r2[2]);

    cfg.enhance.wavelet_max_levels =
        static_cast<int>(r.num("wavelet", "max_levels", cfg.enhance.wavelet_max_levels));
    cfg.enhance.grid_dt = r.num("enhance", "grid_dt", cfg.enhance.grid_dt);
    cfg.enhance.hole_dt = r.num("enhance", "hole_dt", cfg.enhance.hole_dt);
    cfg.enhance.repair.pre_window = r.num("enhance", "repair_pre_window", cfg.enhance.repair.pre_window);
    cfg.enhance.repair.post_window =
        r.num("enhance", "repair_post_window", cfg.enhance.repair.post_window);
    cfg.enhance.av_length = r.num("enhance", "av_length", cfg.enhance.av_length);
    cfg.enhance.av_width = r.num("enhance", "av_width", cfg.enhance.av_width);
    auto& len = cfg.enhance.length;
    len.var_threshold = r.num("length", "var_threshold", len.var_threshold);
    len.clamp_lo = r.num("length", "clamp_lo", len.clamp_lo);
    len.clamp_hi = r.num("length", "clamp_hi", len.clamp_hi);
    len.percentile = r.num("length", "percentile", len.percentile);

    auto& reg = cfg.regime;
    reg.tau_min = r.num("regime", "tau_min", reg.tau_min);
    reg.tau_max = r.num("regime", "tau_max", reg.tau_max);
    reg.tau_step = r.num("regime", "tau_step", reg.tau_step);
    reg.v_stop = r.num("regime", "v_stop", reg.v_stop);
    reg.min_stop_duration = r.num("regime", "min_stop_duration", reg.min_stop_duration);
    reg.a_th = r.num("regime", "a_th", reg.a_th);
    reg.min_section_duration = r.num("regime", "min_section_duration", reg.min_section_duration);
    reg.threshold_k = r.num("regime", "threshold_k", reg.threshold_k);

    cfg.stage_select = r.flag("stages", "select", cfg.stage_select);
    cfg.stage_assess = r.flag("stages", "assess", cfg.stage_assess);
    cfg.stage_enhance = r.flag("stages", "enhance", cfg.stage_enhance);
    cfg.stage_regime = r.flag("stages", "regime", cfg.stage_regime);

    cfg.workers = static_cast<int>(r.num("run", "workers", cfg.workers));
    cfg.seed = static_cast<std::uint64_t>(r.num("run", "seed", 0.0));
    r.reject_unknown();
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path, bool env_overrides = true) {
    return pipeline_config_from_ini(parse_ini_file(path), env_overrides);
}

// Canonical serialization of the effective config; hashed into the run
// manifest so reruns can prove they used identical settings.
inline std::string config_canonical_text(const PipelineConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "[input]\npaths = ";
    for (std::size_t i = 0; i < c.inputs.size(); ++i) os << (i ? "," : "") << c.inputs[i];
    os << "\n[output]\ndir = " << c.output_dir << "\n";
    os << "[stitch]\nmax_time_gap = " << c.stitch.max_time_gap
       << "\nmax_extrap_error = " << c.stitch.max_extrap_error
       << "\nmin_prob_car = " << c.stitch.min_prob_car << "\n";
    const auto& s = c.selection;
    os << "[selection]\nprob_car_min = " << s.prob_car_min
       << "\nlong_dist_max = " << s.long_dist_max << "\nlat_dist_max = " << s.lat_dist_max
       << "\nmin_duration = " << s.min_duration << "\nyaw_dev_max = " << s.yaw_dev_max
       << "\nyaw_to_lane_max = " << s.yaw_to_lane_max << "\ndt_max = " << s.dt_max
       << "\nstep_dist_max = " << s.step_dist_max << "\nmean_speed_min = " << s.mean_speed_min
       << "\nscreen_stride = " << s.screen_stride << "\n";
    const auto& l = c.limits;
    os << "[limits]\na_min = " << l.a_min << "\na_max = " << l.a_max << "\nj_min = " << l.j_min
       << "\nj_max = " << l.j_max << "\njsi_window = " << l.jsi_window
       << "\njsi_max_inversions = " << l.jsi_max_inversions << "\n";
    const auto& k = c.enhance.kalman;
    os << "[kalman]\nq1 = " << k.q1[0] << "," << k.q1[1] << "\nr1 = " << k.r1[0] << "," << k.r1[1]
       << "\nq2 = " << k.q2[0] << "," << k.q2[1] << "," << k.q2[2] << "\nr2 = " << k.r2[0] << ","
       << k.r2[1] << "," << k.r2[2] << "\n";
    os << "[enhance]\ngrid_dt = " << c.enhance.grid_dt << "\nhole_dt = " << c.enhance.hole_dt
       << "\nrepair = " << c.enhance.repair.pre_window << "," << c.enhance.repair.post_window
       << "\nwavelet_max_levels = " << c.enhance.wavelet_max_levels
       << "\nav_size = " << c.enhance.av_length << "," << c.enhance.av_width
       << "\nlength = " << c.enhance.length.var_threshold << "," << c.enhance.length.clamp_lo << ","
       << c.enhance.length.clamp_hi << "," << c.enhance.length.percentile << "\n";
    const auto& g = c.regime;
    os << "[regime]\ntau = " << g.tau_min << "," << g.tau_max << "," << g.tau_step
       << "\nv_stop = " << g.v_stop << "\nmin_stop_duration = " << g.min_stop_duration
       << "\na_th = " << g.a_th << "\nmin_section_duration = " << g.min_section_duration
       << "\nthreshold_k = " << g.threshold_k << "\n";
    os << "[stages]\nselect = " << c.stage_select << "\nassess = " << c.stage_assess
       << "\nenhance = " << c.stage_enhance << "\nregime = " << c.stage_regime << "\n";
    os << "[run]\nworkers = " << c.workers << "\nseed = " << c.seed << "\n";
    return os.str();
}

// -------- synth scenario files --------

inline std::vector<SpeedSegment> parse_speed_script(std::string_view text) {
    std::vector<SpeedSegment> script;
    for (auto part : detail::split(text, ',')) {
        auto spec = detail::trim(part);
        if (spec.empty()) continue;
        auto fields = detail::split(spec, ':');
        SpeedSegment seg;
        const auto kind = detail::to_lower(detail::trim(fields[0]));
        if (kind == "cruise") seg.kind = SpeedSegment::Kind::Cruise;
        else if (kind == "accel") seg.kind = SpeedSegment::Kind::Accel;
        else if (kind == "decel") seg.kind = SpeedSegment::Kind::Decel;
        else if (kind == "stop") seg.kind = SpeedSegment::Kind::Stop;
        else throw ConfigError("scenario: unknown script segment '" + std::string(kind) + "'");
        if (fields.size() < 2) throw ConfigError("scenario: script segment needs a duration");
        auto dur = detail::parse_double(fields[1]);
        if (!dur || !(*dur > 0.0)) throw ConfigError("scenario: bad segment duration");
        seg.duration = *dur;
        const bool ramp =
            seg.kind == SpeedSegment::Kind::Accel || seg.kind == SpeedSegment::Kind::Decel;
        if (ramp) {
            if (fields.size() < 3) throw ConfigError("scenario: ramp segment needs a target speed");
            auto target = detail::parse_double(fields[2]);
            if (!target || *target < 0.0) throw ConfigError("scenario: bad target speed");
            seg.target = *target;
        }
        script.push_back(seg);
    }
    if (script.empty()) throw ConfigError("scenario: empty leader script");
    return script;
}

struct ScenarioFile {
    SynthScenario scenario;
    int pairs = 1;
};

inline ScenarioFile load_scenario(const std::string& path, bool env_overrides = true) {
    const IniData data = parse_ini_file(path);
    detail::IniReader r{data, env_overrides ? "CFPIPE" : "", {}};
    ScenarioFile out;
    SynthScenario& sc = out.scenario;

    sc.leader_script = parse_speed_script(r.str("leader", "script", "cruise:60"));
    sc.leader_v0 = r.num("leader", "v0", sc.leader_v0);
    sc.leader_is_av = detail::to_lower(r.str("leader", "type", "av")) == "av";
    sc.leader_length = r.num("leader", "length", sc.leader_length);
    sc.leader_width = r.num("leader", "width", sc.leader_width);

    const auto model = detail::to_lower(r.str("follower", "model", "idm"));
    if (model == "idm") {
        IdmParams p;
        p.v_desired = r.num("follower", "v_desired", p.v_desired);
        p.time_headway = r.num("follower", "time_headway", p.time_headway);
        p.a_max = r.num("follower", "a_max", p.a_max);
        p.b_comf = r.num("follower", "b_comf", p.b_comf);
        p.s0 = r.num("follower", "s0", p.s0);
        sc.follower = p;
    } else if (model == "newell") {
        NewellParams p;
        p.tau = r.num("follower", "tau", p.tau);
        p.delta = r.num("follower", "delta", p.delta);
        sc.follower = p;
    } else {
        throw ConfigError("scenario: unknown follower model '" + model + "'");
    }
    sc.initial_gap = r.num("follower", "initial_gap", sc.initial_gap);
    sc.follower_length = r.num("follower", "length", sc.follower_length);
    sc.follower_width = r.num("follower", "width", sc.follower_width);

    sc.noise.position_sigma = r.num("noise", "position_sigma", sc.noise.position_sigma);
    sc.noise.speed_sigma = r.num("noise", "speed_sigma", sc.noise.speed_sigma);

    sc.artifacts.scene_length = r.num("artifacts", "scene_length", sc.artifacts.scene_length);
    sc.artifacts.zero_speed_endpoints =
        r.flag("artifacts", "zero_speed", sc.artifacts.zero_speed_endpoints);
    const double hole_at = r.num("artifacts", "hole_at", -1.0);
    const double hole_dur = r.num("artifacts", "hole_duration", 0.0);
    if (hole_at >= 0.0 && hole_dur > 0.0) sc.artifacts.hole = {hole_at, hole_dur};
    sc.artifacts.length_jitter_sigma =
        r.num("artifacts", "length_jitter_sigma", sc.artifacts.length_jitter_sigma);
    sc.artifacts.length_outlier_prob =
        r.num("artifacts", "length_outlier_prob", sc.artifacts.length_outlier_prob);

    sc.duration = r.num("meta", "duration", sc.duration);
    sc.dt = r.num("meta", "dt", sc.dt);
    sc.seed = static_cast<std::uint64_t>(r.num("meta", "seed", 0.0));
    out.pairs = static_cast<int>(r.num("meta", "pairs", 1.0));
    sc.lane_id = r.str("lane", "lane_id", sc.lane_id);
    sc.signal_segment_id = r.str("lane", "signal_segment_id", sc.signal_segment_id);
    r.reject_unknown();
    if (out.pairs < 1 || out.pairs > 100000) throw ConfigError("scenario: bad pair count");
    return out;
}

}  // namespace cfpipe
