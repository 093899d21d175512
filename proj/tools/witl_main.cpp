// SPDX-License-Identifier: Apache-2.0
//
// witl: simulate / analyze / segment / model / estimate-k over CSI traces.
//
// Exit codes: 0 success, 2 usage or input validation failure, 3 output I/O
// failure, 4 internal invariant breach.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "witl/channel_model.hpp"
#include "witl/dsp.hpp"
#include "witl/pipeline.hpp"
#include "witl/scenario.hpp"
#include "witl/segmentation.hpp"
#include "witl/synth.hpp"
#include "witl/trace_io.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_io = 3;
constexpr int exit_internal = 4;

// All outputs go through a temp file in the target directory followed by a
// rename, so partially written files never appear under the final name.
template <typename WriteFn>
void write_atomically(const std::filesystem::path &path, WriteFn &&write) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    write(tmp);
    std::filesystem::rename(tmp, path);
}

struct SimulateArgs {
    std::string config_path;
    std::string out_path;
    std::string truth_out_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs &args) {
    witl::channel_model::SimScenario scenario;
    try {
        scenario = witl::channel_model::load_scenario_file(args.config_path);
        std::string extra;
        for (const std::string &kv : args.overrides)
            extra += kv + "\n";
        if (!extra.empty()) {
            // Re-parse the file followed by overrides so later keys win.
            std::ifstream in(args.config_path);
            std::ostringstream buf;
            buf << in.rdbuf();
            scenario = witl::channel_model::parse_scenario_text(buf.str() + extra);
        }
        if (args.seed)
            scenario.seed = *args.seed;
        scenario.validate();
    } catch (const std::exception &e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return exit_usage;
    }

    witl::channel_model::SynthesisResult result;
    try {
        result = witl::channel_model::synthesize_trace(scenario);
    } catch (const std::exception &e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return exit_usage;
    }

    write_atomically(args.out_path, [&](const std::filesystem::path &tmp) {
        witl::trace_io::write_trace(tmp, result.trace);
    });
    if (!args.truth_out_path.empty())
        write_atomically(args.truth_out_path, [&](const std::filesystem::path &tmp) {
            witl::trace_io::write_ground_truth(tmp, result.truth);
        });

    std::printf("simulated %.3f s at %u Hz: K=%.6g rho=%.6g events=%zu -> %s\n",
                scenario.duration, result.trace.sample_rate_hz,
                scenario.channel.k_factor, scenario.channel.rho,
                scenario.motion_events.size(), args.out_path.c_str());
    return exit_ok;
}

struct AnalyzeArgs {
    std::string in_path;
    std::string report_path;
    double window_s = 30.0;
    double step_s = 5.0;
    double gate_ratio = 5.0;
    std::size_t med_stride = 1;
    std::size_t stream = 0;
};

int cmd_analyze(const AnalyzeArgs &args) {
    witl::CsiTrace trace;
    witl::pipeline::VitalReport report;
    try {
        trace = witl::trace_io::read_trace(args.in_path);
        witl::pipeline::PipelineConfig cfg;
        cfg.window_s = args.window_s;
        cfg.step_s = args.step_s;
        cfg.gate_ratio = args.gate_ratio;
        cfg.segmentation.med_stride = args.med_stride;
        cfg.stream = args.stream;
        report = witl::pipeline::run_pipeline(trace, cfg);
    } catch (const std::exception &e) {
        std::cerr << "analyze: " << e.what() << "\n";
        return exit_usage;
    }

    const std::string json = witl::trace_io::report_to_json(report);
    if (args.report_path.empty()) {
        std::fputs(json.c_str(), stdout);
    } else {
        write_atomically(args.report_path, [&](const std::filesystem::path &tmp) {
            std::ofstream out(tmp, std::ios::binary);
            out << json;
            if (!out)
                throw witl::trace_io::TraceIoError(witl::trace_io::IoErrorKind::Io,
                                                   "write failed");
        });
        std::size_t reported = 0;
        for (const auto &w : report.windows)
            if (w.breathing.bpm || w.heart.bpm)
                ++reported;
        std::printf("analyzed %zu windows (%zu with estimates), %zu segments -> %s\n",
                    report.windows.size(), reported, report.segments.size(),
                    args.report_path.c_str());
    }
    return exit_ok;
}

struct SegmentArgs {
    std::string in_path;
    double v = 2.5;
    std::size_t med_stride = 1;
    std::size_t stream = 0;
    std::string out_csv;
};

int cmd_segment(const SegmentArgs &args) {
    std::string csv;
    try {
        const witl::CsiTrace trace = witl::trace_io::read_trace(args.in_path);
        trace.validate();
        const std::size_t sc = witl::dsp::select_subcarrier(trace, args.stream);
        const witl::dsp::AmplitudeSeries denoised =
            witl::dsp::hampel_filter(witl::dsp::amplitude_series(trace, args.stream, sc));
        witl::segmentation::SegmentationConfig cfg;
        cfg.activation_factor = args.v;
        cfg.med_stride = args.med_stride;
        const auto segments = witl::segmentation::segment_trace(denoised, cfg);

        std::ostringstream out;
        out << "start_s,end_s,label\n";
        char line[96];
        for (const auto &seg : segments) {
            std::snprintf(line, sizeof(line), "%.6f,%.6f,%s\n",
                          seg.start / double(trace.sample_rate_hz),
                          seg.end / double(trace.sample_rate_hz),
                          seg.label == witl::segmentation::SegmentLabel::Vital
                              ? "Vital"
                              : "OtherMotion");
            out << line;
        }
        csv = out.str();
    } catch (const std::exception &e) {
        std::cerr << "segment: " << e.what() << "\n";
        return exit_usage;
    }

    if (args.out_csv.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        write_atomically(args.out_csv, [&](const std::filesystem::path &tmp) {
            std::ofstream out(tmp, std::ios::binary);
            out << csv;
            if (!out)
                throw witl::trace_io::TraceIoError(witl::trace_io::IoErrorKind::Io,
                                                   "write failed");
        });
    }
    return exit_ok;
}

struct ModelArgs {
    double rho = 0.7;
    double theta = 0.0;
    double k_min = 0.0;
    double k_max = 100.0;
    std::size_t points = 101;
    std::string out_path;
};

int cmd_model(const ModelArgs &args) {
    std::string csv;
    try {
        if (args.points < 1 || !(args.k_max >= args.k_min))
            throw std::invalid_argument("need points >= 1 and k-max >= k-min");
        std::vector<double> grid;
        for (std::size_t i = 0; i < args.points; ++i)
            grid.push_back(args.points == 1
                               ? args.k_min
                               : args.k_min + (args.k_max - args.k_min) *
                                                  static_cast<double>(i) /
                                                  static_cast<double>(args.points - 1));
        const auto sweep = witl::channel_model::model_sweep(args.rho, args.theta, grid);
        std::ostringstream out;
        out << "k,rho,theta,f,df_dk,df_drho,as_max\n";
        char line[256];
        for (const auto &p : sweep) {
            std::snprintf(line, sizeof(line),
                          "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", p.k_factor,
                          p.rho, p.theta, p.f_value, p.df_dk, p.df_drho, p.as_max);
            out << line;
        }
        csv = out.str();
    } catch (const std::exception &e) {
        std::cerr << "model: " << e.what() << "\n";
        return exit_usage;
    }

    if (args.out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        write_atomically(args.out_path, [&](const std::filesystem::path &tmp) {
            std::ofstream out(tmp, std::ios::binary);
            out << csv;
            if (!out)
                throw witl::trace_io::TraceIoError(witl::trace_io::IoErrorKind::Io,
                                                   "write failed");
        });
    }
    return exit_ok;
}

struct EstimateKArgs {
    std::string in_path;
    std::optional<std::size_t> stream;
    std::optional<std::size_t> subcarrier;
};

int cmd_estimate_k(const EstimateKArgs &args) {
    try {
        const witl::CsiTrace trace = witl::trace_io::read_trace(args.in_path);
        trace.validate();
        const std::size_t stream = args.stream.value_or(0);
        const std::size_t subcarrier =
            args.subcarrier ? *args.subcarrier
                            : witl::dsp::select_subcarrier(trace, stream);
        const double k = witl::channel_model::estimate_ricean_k(trace, stream, subcarrier);
        std::printf("stream=%zu subcarrier=%zu k=%.6g\n", stream, subcarrier, k);
        return exit_ok;
    } catch (const std::exception &e) {
        std::cerr << "estimate-k: " << e.what() << "\n";
        return exit_usage;
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"CSI vital-sign toolkit: Ricean channel simulation and "
                 "breathing/heart-rate analysis"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App *simulate = app.add_subcommand("simulate", "synthesize a CSI trace");
    simulate->add_option("--config", sim.config_path, "scenario key=value file")
        ->required();
    simulate->add_option("--out", sim.out_path, "output trace (WITL)")->required();
    simulate->add_option("--truth-out", sim.truth_out_path, "ground-truth sidecar (JSON)");
    simulate->add_option("--set", sim.overrides, "override key=value (repeatable)");
    simulate->add_option("--seed", sim.seed, "override the scenario seed");

    AnalyzeArgs ana;
    CLI::App *analyze = app.add_subcommand("analyze", "run the vital-sign pipeline");
    analyze->add_option("--in", ana.in_path, "input trace (WITL)")->required();
    analyze->add_option("--report", ana.report_path, "report JSON path (default stdout)");
    analyze->add_option("--window-s", ana.window_s, "analysis window, seconds");
    analyze->add_option("--step-s", ana.step_s, "window step, seconds");
    analyze->add_option("--gate", ana.gate_ratio, "prominence gate ratio");
    analyze->add_option("--med-stride", ana.med_stride, "MED offset stride");
    analyze->add_option("--stream", ana.stream, "stream index to analyze");

    SegmentArgs seg;
    CLI::App *segment = app.add_subcommand("segment", "motion segmentation only");
    segment->add_option("--in", seg.in_path, "input trace (WITL)")->required();
    segment->add_option("--v", seg.v, "activation factor");
    segment->add_option("--med-stride", seg.med_stride, "MED offset stride");
    segment->add_option("--stream", seg.stream, "stream index");
    segment->add_option("--out-csv", seg.out_csv, "segment CSV path (default stdout)");

    ModelArgs mdl;
    CLI::App *model = app.add_subcommand("model", "sweep the sensing model over K");
    model->add_option("--rho", mdl.rho, "static NLOS fraction")->required();
    model->add_option("--theta", mdl.theta, "static-dynamic phase difference")->required();
    model->add_option("--k-min", mdl.k_min, "grid start")->required();
    model->add_option("--k-max", mdl.k_max, "grid end")->required();
    model->add_option("--points", mdl.points, "grid size")->required();
    model->add_option("--out", mdl.out_path, "CSV path (default stdout)");

    EstimateKArgs est;
    CLI::App *estimate = app.add_subcommand("estimate-k", "Ricean K moment estimate");
    estimate->add_option("--in", est.in_path, "input trace (WITL)")->required();
    estimate->add_option("--stream", est.stream, "stream index (default 0)");
    estimate->add_option("--subcarrier", est.subcarrier,
                         "subcarrier index (default: largest variance)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(sim);
        if (analyze->parsed())
            return cmd_analyze(ana);
        if (segment->parsed())
            return cmd_segment(seg);
        if (model->parsed())
            return cmd_model(mdl);
        if (estimate->parsed())
            return cmd_estimate_k(est);
    } catch (const witl::trace_io::TraceIoError &e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::logic_error &e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}
