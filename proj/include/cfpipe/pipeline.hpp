#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfpipe/assess.hpp"
#include "cfpipe/config.hpp"
#include "cfpipe/detail/parallel.hpp"
#include "cfpipe/detail/text.hpp"
#include "cfpipe/enhance.hpp"
#include "cfpipe/errors.hpp"
#include "cfpipe/regime.hpp"
#include "cfpipe/scene_io.hpp"
#include "cfpipe/select.hpp"
#include "cfpipe/stitch.hpp"

namespace cfpipe {

namespace detail {

inline bool wild_match(std::string_view pattern, std::string_view text) {
    std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

inline std::string leader_type_name(LeaderType t) { return t == LeaderType::AV ? "H-A" : "H-H"; }

}  // namespace detail

// Expands the configured input paths: plain files, directories (all *.csv
// inside) and basename globs. Deterministically sorted.
inline std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
    namespace fs = std::filesystem;
    std::set<std::string> files;
    for (const auto& entry : inputs) {
        const bool has_wildcard = entry.find_first_of("*?") != std::string::npos;
        if (has_wildcard) {
            fs::path p(entry);
            fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
            if (!fs::is_directory(dir)) continue;
            for (const auto& e : fs::directory_iterator(dir))
                if (e.is_regular_file() &&
                    detail::wild_match(p.filename().string(), e.path().filename().string()))
                    files.insert(e.path().string());
        } else if (fs::is_directory(entry)) {
            for (const auto& e : fs::directory_iterator(entry))
                if (e.is_regular_file() && e.path().extension() == ".csv")
                    files.insert(e.path().string());
        } else if (fs::is_regular_file(entry)) {
            files.insert(entry);
        }
    }
    if (files.empty()) throw IoError("no scene files");
    return {files.begin(), files.end()};
}

struct RunSummary {
    std::size_t files = 0, scenes = 0, frames = 0, rejects = 0, tracks = 0;
    std::size_t candidates = 0, pairs_ha = 0, pairs_hh = 0, rejected_candidates = 0;
    std::size_t enhanced_ok = 0, enhanced_failed = 0;
    std::size_t regime_labeled = 0;
    std::optional<double> tau_star_ha, tau_star_hh;
};

namespace detail {

struct PairArtifacts {
    const CFPair* raw = nullptr;
    std::optional<EnhancedPair> enhanced;
    std::string enhance_error;
    std::optional<NewellFit> fit;
    std::optional<RegimeSequence> regimes;
};

inline void write_pair_index(const std::filesystem::path& dir, std::span<const CFPair> pairs) {
    auto out = open_out(dir / "pairs_index.csv");
    out << "pair_id,leader_type,t_start,t_end,duration,n_frames,mean_gap\n";
    for (const auto& p : pairs) {
        double gap = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) gap += p.x_lead[i] - p.x_fol[i];
        if (!p.time.empty()) gap /= static_cast<double>(p.size());
        out << p.pair_id << ',' << leader_type_name(p.leader_type) << ','
            << fmt_num(p.time.front()) << ',' << fmt_num(p.time.back()) << ','
            << fmt_num(p.duration()) << ',' << p.size() << ',' << fmt_num(gap) << '\n';
    }
}

inline void write_raw_pair(const std::filesystem::path& dir, const CFPair& p) {
    auto out = open_out(dir / (p.pair_id + ".csv"));
    out << "t,x_lead,v_lead,x_fol,v_fol\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << fmt_num(p.time[i]) << ',' << fmt_num(p.x_lead[i]) << ',';
        if (!p.v_lead.empty()) out << fmt_num(p.v_lead[i]);
        out << ',' << fmt_num(p.x_fol[i]) << ',';
        if (!p.v_fol.empty()) out << fmt_num(p.v_fol[i]);
        out << '\n';
    }
}

inline void write_enhanced_pair(const std::filesystem::path& dir, const EnhancedPair& p) {
    auto out = open_out(dir / (p.pair_id + ".csv"));
    out << "t,x_lead,v_lead,a_lead,j_lead,x_fol,v_fol,a_fol,j_fol\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << fmt_num(p.t[i]) << ',' << fmt_num(p.x_lead[i]) << ',' << fmt_num(p.v_lead[i]) << ','
            << fmt_num(p.a_lead[i]) << ',' << fmt_num(p.j_lead[i]) << ',' << fmt_num(p.x_fol[i])
            << ',' << fmt_num(p.v_fol[i]) << ',' << fmt_num(p.a_fol[i]) << ','
            << fmt_num(p.j_fol[i]) << '\n';
    }

    nlohmann::json meta;
    meta["pair_id"] = p.pair_id;
    meta["leader_type"] = leader_type_name(p.leader_type);
    meta["length_lead"] = p.length_lead;
    meta["length_fol"] = p.length_fol;
    meta["sigma_a_lead"] = p.sigma_a_lead;
    meta["sigma_a_fol"] = p.sigma_a_fol;
    meta["fill_intervals"] = nlohmann::json::array();
    for (const auto& f : p.fill_intervals)
        meta["fill_intervals"].push_back({{"t_start", f.t_start},
                                          {"t_end", f.t_end},
                                          {"trimmed", f.trimmed},
                                          {"vehicle", f.vehicle}});
    auto meta_out = open_out(dir / (p.pair_id + ".meta.json"));
    meta_out << meta.dump(2) << '\n';
}

struct AssessmentRow {
    std::string pair_id;
    std::string vehicle;  // "lead" / "fol"
    AnomalyReport report;
};

inline void write_assessment(const std::filesystem::path& path,
                             std::span<const AssessmentRow> rows) {
    auto out = open_out(path);
    out << "pair_id,vehicle,source,frac_acc,frac_jerk,frac_jsi,n_frames\n";
    for (const auto& r : rows)
        out << r.pair_id << ',' << r.vehicle << ',' << to_string(r.report.source) << ','
            << fmt_num(r.report.frac_acc_anomaly) << ',' << fmt_num(r.report.frac_jerk_anomaly)
            << ',' << fmt_num(r.report.frac_jsi_anomaly) << ',' << r.report.n_frames << '\n';
}

inline std::vector<AssessmentRow> assess_raw_pair(const CFPair& p, const KinematicLimits& lim) {
    std::vector<AssessmentRow> rows;
    auto one = [&](const char* vehicle, const std::vector<double>& x,
                   const std::vector<double>& v) {
        AnomalyReport rep =
            v.empty() ? kinematic_anomalies({p.time, x}, DerivSource::XBased, lim)
                      : kinematic_anomalies({p.time, v}, DerivSource::VBased, lim);
        rows.push_back({p.pair_id, vehicle, rep});
    };
    one("lead", p.x_lead, p.v_lead);
    one("fol", p.x_fol, p.v_fol);
    return rows;
}

inline std::vector<AssessmentRow> assess_enhanced_pair(const EnhancedPair& p,
                                                       const KinematicLimits& lim) {
    std::vector<AssessmentRow> rows;
    rows.push_back(
        {p.pair_id, "lead", kinematic_anomalies_from({p.t, p.a_lead}, {p.t, p.j_lead}, lim)});
    rows.push_back(
        {p.pair_id, "fol", kinematic_anomalies_from({p.t, p.a_fol}, {p.t, p.j_fol}, lim)});
    return rows;
}

}  // namespace detail

// Executes the configured stages end to end and writes all artifacts under
// config.output_dir. Per-pair failures are logged and skipped; whole-run
// failures (unreadable input, unwritable output) throw.
inline RunSummary run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr) {
    namespace fs = std::filesystem;
    config.validate();
    auto say = [&](const std::string& line) {
        if (log) (*log) << line << '\n';
    };

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);
    RunSummary summary;

    // ---- ingest ----
    const auto files = expand_inputs(config.inputs);
    summary.files = files.size();
    std::vector<ReadResult> parts(files.size());
    detail::parallel_for(files.size(), config.workers,
                         [&](std::size_t i) { parts[i] = read_frames(files[i]); });
    ReadResult data = merge_reads(std::move(parts));
    summary.scenes = data.scenes.size();
    summary.rejects = data.rejects.size();
    for (const auto& s : data.scenes) summary.frames += s.frames.size();
    {
        auto rej = detail::open_out(out_dir / "ingest_rejects.csv");
        rej << "file,line_no,reason,text\n";
        for (const auto& r : data.rejects)
            rej << r.source << ',' << r.line_no << ',' << r.reason << ',' << '"' << r.text << '"'
                << '\n';
    }
    const auto tracks = stitch_tracks(data.scenes, config.stitch);
    summary.tracks = tracks.size();
    say("ingest: " + std::to_string(summary.frames) + " frames, " +
        std::to_string(summary.scenes) + " scenes, " + std::to_string(tracks.size()) + " tracks");

    std::vector<CFPair> pairs;
    std::vector<detail::PairArtifacts> artifacts;
    if (config.stage_select) {
        // ---- select ----
        auto candidates = screen_candidates(tracks, config.selection, nullptr);
        summary.candidates = candidates.size();
        std::vector<std::variant<CFPair, Rejection>> outcomes(candidates.size());
        detail::parallel_for(candidates.size(), config.workers, [&](std::size_t i) {
            outcomes[i] = verify_candidate(candidates[i], tracks, config.selection);
        });
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (tracks[candidates[i].follower].is_av) continue;
            if (std::holds_alternative<Rejection>(outcomes[i])) {
                ++summary.rejected_candidates;
                continue;
            }
            pairs.push_back(std::move(std::get<CFPair>(outcomes[i])));
        }
        std::sort(pairs.begin(), pairs.end(),
                  [](const CFPair& a, const CFPair& b) { return a.pair_id < b.pair_id; });
        for (const auto& p : pairs)
            (p.leader_type == LeaderType::AV ? summary.pairs_ha : summary.pairs_hh) += 1;

        detail::write_pair_index(out_dir, pairs);
        const fs::path raw_dir = out_dir / "raw";
        fs::create_directories(raw_dir);
        detail::parallel_for(pairs.size(), config.workers,
                             [&](std::size_t i) { detail::write_raw_pair(raw_dir, pairs[i]); });
        say("select: " + std::to_string(pairs.size()) + " pairs (" +
            std::to_string(summary.pairs_ha) + " H-A, " + std::to_string(summary.pairs_hh) +
            " H-H), " + std::to_string(summary.rejected_candidates) + " rejected");
        artifacts.resize(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) artifacts[i].raw = &pairs[i];
    }

    // ---- assess raw ----
    std::vector<detail::AssessmentRow> raw_rows;
    if (config.stage_select && config.stage_assess) {
        std::vector<std::vector<detail::AssessmentRow>> per_pair(pairs.size());
        detail::parallel_for(pairs.size(), config.workers, [&](std::size_t i) {
            per_pair[i] = detail::assess_raw_pair(pairs[i], config.limits);
        });
        for (auto& rows : per_pair)
            for (auto& r : rows) raw_rows.push_back(std::move(r));
        detail::write_assessment(out_dir / "assessment_raw.csv", raw_rows);
        say("assess raw: " + std::to_string(raw_rows.size()) + " rows");
    }

    // ---- enhance ----
    std::vector<detail::AssessmentRow> enh_rows;
    if (config.stage_select && config.stage_enhance) {
        const fs::path enh_dir = out_dir / "enhanced";
        fs::create_directories(enh_dir);
        detail::parallel_for(pairs.size(), config.workers, [&](std::size_t i) {
            try {
                artifacts[i].enhanced = enhance_pair(pairs[i], config.enhance);
            } catch (const Error& e) {
                artifacts[i].enhance_error = e.what();
            }
        });
        auto failures = detail::open_out(out_dir / "enhance_failures.csv");
        failures << "pair_id,reason\n";
        for (auto& a : artifacts) {
            if (a.enhanced) {
                ++summary.enhanced_ok;
            } else {
                ++summary.enhanced_failed;
                failures << a.raw->pair_id << ',' << '"' << a.enhance_error << '"' << '\n';
            }
        }
        detail::parallel_for(artifacts.size(), config.workers, [&](std::size_t i) {
            if (artifacts[i].enhanced) detail::write_enhanced_pair(enh_dir, *artifacts[i].enhanced);
        });
        say("enhance: " + std::to_string(summary.enhanced_ok) + " ok, " +
            std::to_string(summary.enhanced_failed) + " failed");

        if (config.stage_assess) {
            std::vector<std::vector<detail::AssessmentRow>> per_pair(artifacts.size());
            detail::parallel_for(artifacts.size(), config.workers, [&](std::size_t i) {
                if (artifacts[i].enhanced)
                    per_pair[i] = detail::assess_enhanced_pair(*artifacts[i].enhanced, config.limits);
            });
            for (auto& rows : per_pair)
                for (auto& r : rows) enh_rows.push_back(std::move(r));
            detail::write_assessment(out_dir / "assessment_enhanced.csv", enh_rows);
            say("assess enhanced: " + std::to_string(enh_rows.size()) + " rows");
        }
    }

    // ---- regime ----
    std::string regime_skip_ha, regime_skip_hh;
    if (config.stage_select && config.stage_enhance && config.stage_regime) {
        detail::parallel_for(artifacts.size(), config.workers, [&](std::size_t i) {
            if (artifacts[i].enhanced)
                artifacts[i].fit = calibrate_newell(*artifacts[i].enhanced, config.regime);
        });
        std::vector<NewellFit> fits_ha, fits_hh;
        for (const auto& a : artifacts) {
            if (!a.fit) continue;
            (a.raw->leader_type == LeaderType::AV ? fits_ha : fits_hh).push_back(*a.fit);
        }
        auto threshold = [&](const std::vector<NewellFit>& fits, std::optional<double>& tau_star,
                             std::string& skip_reason) {
            try {
                tau_star = fleet_gap_threshold(fits, config.regime.threshold_k);
            } catch (const Error& e) {
                skip_reason = e.what();
            }
        };
        threshold(fits_ha, summary.tau_star_ha, regime_skip_ha);
        threshold(fits_hh, summary.tau_star_hh, regime_skip_hh);

        const fs::path reg_dir = out_dir / "regimes";
        fs::create_directories(reg_dir);
        detail::parallel_for(artifacts.size(), config.workers, [&](std::size_t i) {
            auto& a = artifacts[i];
            if (!a.enhanced || !a.fit) return;
            const auto tau_star = a.raw->leader_type == LeaderType::AV ? summary.tau_star_ha
                                                                       : summary.tau_star_hh;
            if (!tau_star) return;
            const auto& ep = *a.enhanced;
            const double dt =
                ep.size() >= 2 ? (ep.t.back() - ep.t.front()) / static_cast<double>(ep.size() - 1)
                               : 0.1;
            auto sections = segment_speed_profile(ep.v_fol, ep.a_fol, dt, config.regime);
            a.regimes = label_regimes(sections, ep, *a.fit, *tau_star, config.regime);
        });
        for (const auto& a : artifacts) {
            if (!a.regimes) continue;
            ++summary.regime_labeled;
            auto out = detail::open_out(reg_dir / (a.raw->pair_id + ".csv"));
            out << "t,label\n";
            for (std::size_t i = 0; i < a.enhanced->size(); ++i)
                out << detail::fmt_num(a.enhanced->t[i]) << ','
                    << regime_name(a.regimes->labels[i]) << '\n';
        }

        // dataset-level regime summary + tau histogram
        auto reg_sum = detail::open_out(out_dir / "regime_summary.csv");
        reg_sum << "subset,metric,key,value\n";
        auto tau_hist = detail::open_out(out_dir / "tau_histogram.csv");
        tau_hist << "subset,bin_lo,bin_hi,count\n";
        for (const auto& [subset, is_av] :
             std::vector<std::pair<std::string, bool>>{{"H-A", true}, {"H-H", false}}) {
            std::vector<RegimeSequence> seqs;
            std::vector<NewellFit> fits;
            std::map<std::string, std::size_t> adf_groups;
            for (const auto& a : artifacts) {
                if (!a.raw || (a.raw->leader_type == LeaderType::AV) != is_av) continue;
                if (a.fit) fits.push_back(*a.fit);
                if (a.regimes) {
                    seqs.push_back(*a.regimes);
                    ++adf_groups[classify_adf(*a.regimes).name()];
                }
            }
            const auto tau_star = is_av ? summary.tau_star_ha : summary.tau_star_hh;
            const auto& skip = is_av ? regime_skip_ha : regime_skip_hh;
            reg_sum << subset << ",fits,count," << fits.size() << '\n';
            if (tau_star)
                reg_sum << subset << ",tau_star,value," << detail::fmt_num(*tau_star) << '\n';
            else
                reg_sum << subset << ",tau_star,skipped,\"" << skip << "\"\n";
            if (!seqs.empty()) {
                for (const auto& [regime, fraction] : regime_time_proportions(seqs))
                    reg_sum << subset << ",fraction," << regime_name(regime) << ','
                            << detail::fmt_num(fraction) << '\n';
                for (const auto& [group, count] : adf_groups)
                    reg_sum << subset << ",adf," << group << ',' << count << '\n';
            }
            if (!fits.empty()) {
                const double bin = 0.1;
                std::map<long, std::size_t> hist;
                for (const auto& f : fits)
                    ++hist[static_cast<long>(std::floor(f.tau / bin + 1e-9))];
                for (const auto& [b, count] : hist)
                    tau_hist << subset << ',' << detail::fmt_num(static_cast<double>(b) * bin)
                             << ',' << detail::fmt_num(static_cast<double>(b + 1) * bin) << ','
                             << count << '\n';
            }
        }
        say("regime: " + std::to_string(summary.regime_labeled) + " pairs labeled");
    }

    // ---- dataset summary (pair counts, km, hours) ----
    {
        auto out = detail::open_out(out_dir / "summary.csv");
        out << "subset,pairs,total_km,total_hours\n";
        for (const auto& [subset, is_av] :
             std::vector<std::pair<std::string, bool>>{{"H-A", true}, {"H-H", false}}) {
            std::size_t count = 0;
            double km = 0.0, hours = 0.0;
            for (const auto& p : pairs) {
                if ((p.leader_type == LeaderType::AV) != is_av) continue;
                ++count;
                km += (p.x_fol.back() - p.x_fol.front()) / 1000.0;
                hours += p.duration() / 3600.0;
            }
            out << subset << ',' << count << ',' << detail::fmt_num(km) << ','
                << detail::fmt_num(hours) << '\n';
        }
    }

    // ---- manifest ----
    {
        const std::string canonical = config_canonical_text(config);
        {
            auto cfg_out = detail::open_out(out_dir / "effective_config.ini");
            cfg_out << canonical;
        }
        nlohmann::json m;
        {
            char stamp[64];
            const std::time_t now = std::time(nullptr);
            std::tm tm_utc{};
            gmtime_r(&now, &tm_utc);
            std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
            m["created_at"] = stamp;
        }
        {
            char hash[32];
            std::snprintf(hash, sizeof(hash), "%016llx",
                          static_cast<unsigned long long>(detail::fnv1a(canonical)));
            m["config_hash"] = hash;
        }
        m["stages"]["ingest"] = {{"files", summary.files},
                                 {"scenes", summary.scenes},
                                 {"frames", summary.frames},
                                 {"rejects", summary.rejects},
                                 {"tracks", summary.tracks}};
        m["stages"]["select"] = {{"run", config.stage_select},
                                 {"candidates", summary.candidates},
                                 {"pairs_ha", summary.pairs_ha},
                                 {"pairs_hh", summary.pairs_hh},
                                 {"rejected", summary.rejected_candidates}};
        m["stages"]["assess_raw"] = {{"run", config.stage_select && config.stage_assess},
                                     {"rows", raw_rows.size()}};
        m["stages"]["enhance"] = {{"run", config.stage_select && config.stage_enhance},
                                  {"ok", summary.enhanced_ok},
                                  {"failed", summary.enhanced_failed}};
        m["stages"]["assess_enhanced"] = {
            {"run", config.stage_select && config.stage_enhance && config.stage_assess},
            {"rows", enh_rows.size()}};
        auto& reg = m["stages"]["regime"];
        reg["run"] = config.stage_select && config.stage_enhance && config.stage_regime;
        reg["labeled"] = summary.regime_labeled;
        if (summary.tau_star_ha) reg["tau_star_ha"] = *summary.tau_star_ha;
        if (summary.tau_star_hh) reg["tau_star_hh"] = *summary.tau_star_hh;
        if (!regime_skip_ha.empty()) reg["skipped_ha"] = regime_skip_ha;
        if (!regime_skip_hh.empty()) reg["skipped_hh"] = regime_skip_hh;
        auto out = detail::open_out(out_dir / "manifest.json");
        out << m.dump(2) << '\n';
    }
    return summary;
}

namespace detail {

struct IndexedPair {
    std::string pair_id, subset;
};

inline std::vector<IndexedPair> read_pair_index(const std::filesystem::path& dir) {
    std::ifstream in(dir / "pairs_index.csv");
    if (!in) throw IoError("missing pairs_index.csv in " + dir.string());
    std::string line;
    std::getline(in, line);
    std::vector<IndexedPair> out;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        auto cols = split(line, ',');
        if (cols.size() < 2) throw FormatError("integrity error: pairs_index.csv malformed");
        out.push_back({std::string(cols[0]), std::string(cols[1])});
    }
    return out;
}

// Structural check of a per-pair CSV: header + fully parsed numeric rows.
inline void check_series_csv(const std::filesystem::path& path, std::size_t expect_cols) {
    std::ifstream in(path);
    if (!in) throw IoError("integrity error: missing " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("integrity error: " + path.string() + " is empty");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        auto text = detail::trim(line);
        if (text.empty()) continue;
        auto cols = split(text, ',');
        if (cols.size() != expect_cols)
            throw FormatError("integrity error: " + path.string() + " truncated or malformed");
        for (auto c : cols)
            if (!detail::trim(c).empty() && !parse_double(c))
                throw FormatError("integrity error: " + path.string() + " truncated or malformed");
        ++rows;
    }
    if (rows < 2) throw FormatError("integrity error: " + path.string() + " truncated or malformed");
}

}  // namespace detail

// Reads run artifacts back, verifies their integrity, and prints a compact
// report. Read-only.
inline void summarize(const std::string& output_dir, std::ostream& os) {
    namespace fs = std::filesystem;
    const fs::path dir(output_dir);
    std::ifstream manifest_in(dir / "manifest.json");
    if (!manifest_in) throw IoError("missing manifest.json in " + output_dir);
    nlohmann::json manifest;
    try {
        manifest_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("integrity error: manifest.json unparsable: " + std::string(e.what()));
    }

    const auto pairs = detail::read_pair_index(dir);
    const bool enhance_ran = manifest["stages"]["enhance"]["run"].get<bool>();
    const bool regime_ran = manifest["stages"]["regime"]["run"].get<bool>();
    for (const auto& p : pairs) {
        detail::check_series_csv(dir / "raw" / (p.pair_id + ".csv"), 5);
        if (enhance_ran) {
            const fs::path enh = dir / "enhanced" / (p.pair_id + ".csv");
            if (fs::exists(enh)) detail::check_series_csv(enh, 9);
        }
    }

    os << "run " << manifest["config_hash"].get<std::string>() << " (" << pairs.size()
       << " pairs)\n";
    {
        std::ifstream sum(dir / "summary.csv");
        if (!sum) throw IoError("missing summary.csv in " + output_dir);
        std::string line;
        std::getline(sum, line);
        os << "subset  pairs  km      hours\n";
        while (std::getline(sum, line)) {
            auto cols = detail::split(line, ',');
            if (cols.size() != 4) continue;
            os << cols[0] << "    " << cols[1] << "    " << cols[2] << "    " << cols[3] << "\n";
        }
    }

    auto print_assessment = [&](const char* name, const fs::path& path) {
        std::ifstream in(path);
        if (!in) {
            os << name << ": not computed\n";
            return;
        }
        std::map<std::string, std::vector<AnomalyReport>> by_subset;
        std::map<std::string, std::string> subset_of;
        for (const auto& p : pairs) subset_of[p.pair_id] = p.subset;
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            auto cols = detail::split(line, ',');
            if (cols.size() != 7) throw FormatError("integrity error: " + path.string());
            AnomalyReport rep;
            rep.frac_acc_anomaly = detail::parse_double(cols[3]).value_or(0.0);
            rep.frac_jerk_anomaly = detail::parse_double(cols[4]).value_or(0.0);
            rep.frac_jsi_anomaly = detail::parse_double(cols[5]).value_or(0.0);
            rep.n_frames = static_cast<std::size_t>(detail::parse_int(cols[6]).value_or(0));
            by_subset[subset_of[std::string(cols[0])]].push_back(rep);
        }
        for (const auto& [subset, reports] : by_subset) {
            const auto agg = merge_reports(reports);
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s  %-8s acc %.4f%%  jerk %.4f%%  jsi %.3f%%",
                          subset.c_str(), name, 100.0 * agg.frac_acc_anomaly,
                          100.0 * agg.frac_jerk_anomaly, 100.0 * agg.frac_jsi_anomaly);
            os << buf << "\n";
        }
    };
    os << "anomalies:\n";
    print_assessment("raw", dir / "assessment_raw.csv");
    print_assessment("enhanced", dir / "assessment_enhanced.csv");

    if (!regime_ran) {
        os << "regimes: not computed\n";
    } else {
        std::ifstream in(dir / "regime_summary.csv");
        if (!in) throw IoError("missing regime_summary.csv in " + output_dir);
        os << "regimes:\n";
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) os << "  " << line << "\n";
    }
}

}  // namespace cfpipe
