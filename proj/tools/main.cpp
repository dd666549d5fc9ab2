// cfpipe command-line front end: run / summarize / synth / validate.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 internal.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfpipe/config.hpp"
#include "cfpipe/pipeline.hpp"
#include "cfpipe/scene_io.hpp"
#include "cfpipe/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int cmd_run(const std::string& config_path, int workers_override) {
    cfpipe::PipelineConfig config = cfpipe::load_pipeline_config(config_path);
    if (workers_override > 0) config.workers = workers_override;
    cfpipe::run_pipeline(config, &std::cout);
    std::cout << "artifacts written to " << config.output_dir << "\n";
    return kExitOk;
}

int cmd_summarize(const std::string& output_dir) {
    cfpipe::summarize(output_dir, std::cout);
    return kExitOk;
}

int cmd_synth(const std::string& scenario_path, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const auto file = cfpipe::load_scenario(scenario_path);
    fs::create_directories(fs::path(out_dir) / "scenes");
    fs::create_directories(fs::path(out_dir) / "truth");
    for (int i = 0; i < file.pairs; ++i) {
        cfpipe::SynthScenario sc = file.scenario;
        sc.seed = file.scenario.seed + static_cast<std::uint64_t>(i);
        sc.lane_id = file.scenario.lane_id + "_" + std::to_string(i);
        sc.scene_prefix = "p" + std::to_string(i) + "_s";
        sc.t_offset = static_cast<double>(i) * (sc.duration + 40.0);

        const auto truth = cfpipe::simulate_pair(sc);
        const auto frames = cfpipe::corrupt(truth, sc);
        char name[64];
        std::snprintf(name, sizeof(name), "pair%04d", i);
        cfpipe::write_scene_file((fs::path(out_dir) / "scenes" / (std::string(name) + ".csv")).string(),
                                 frames);
        std::ofstream t_out(fs::path(out_dir) / "truth" / (std::string(name) + "_truth.csv"));
        if (!t_out) throw cfpipe::IoError("cannot write truth sidecar");
        t_out << "t,x_lead,v_lead,a_lead,x_fol,v_fol,a_fol\n";
        for (std::size_t k = 0; k < truth.t.size(); ++k) {
            using cfpipe::detail::fmt_num;
            t_out << fmt_num(truth.t[k]) << ',' << fmt_num(truth.x_lead[k]) << ','
                  << fmt_num(truth.v_lead[k]) << ',' << fmt_num(truth.a_lead[k]) << ','
                  << fmt_num(truth.x_fol[k]) << ',' << fmt_num(truth.v_fol[k]) << ','
                  << fmt_num(truth.a_fol[k]) << '\n';
        }
    }
    std::cout << "generated " << file.pairs << " pair(s) under " << out_dir << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& scene_file) {
    const auto result = cfpipe::read_frames(scene_file);
    std::size_t frames = 0;
    for (const auto& s : result.scenes) frames += s.frames.size();
    std::cout << scene_file << ": " << result.scenes.size() << " scene(s), " << frames
              << " frame(s), " << result.rejects.size() << " rejected line(s)\n";
    for (const auto& r : result.rejects)
        std::cout << "  line " << r.line_no << ": " << r.reason << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"car-following trajectory extraction and enhancement pipeline"};
    app.require_subcommand(1);

    std::string config_path, output_dir, scenario_path, synth_out, scene_file;
    int workers_override = 0;

    auto* run = app.add_subcommand("run", "execute the pipeline from a config file");
    run->add_option("--config", config_path, "pipeline config file")->required();
    run->add_option("--workers", workers_override, "override worker count");

    auto* summarize = app.add_subcommand("summarize", "report on an existing output directory");
    summarize->add_option("output_dir", output_dir, "pipeline output directory")->required();

    auto* synth = app.add_subcommand("synth", "generate synthetic scene files");
    synth->add_option("--scenario", scenario_path, "scenario description file")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* validate = app.add_subcommand("validate", "format-check one scene file");
    validate->add_option("scene_file", scene_file, "canonical scene file")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, workers_override);
        if (summarize->parsed()) return cmd_summarize(output_dir);
        if (synth->parsed()) return cmd_synth(scenario_path, synth_out);
        if (validate->parsed()) return cmd_validate(scene_file);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const cfpipe::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const cfpipe::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const cfpipe::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const cfpipe::InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
