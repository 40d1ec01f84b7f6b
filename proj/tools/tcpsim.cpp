/*
 * Copyright 2026 the tcpsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// tcpsim command line: run scenarios, sweep the loss matrix, analyze saved
// traces and emit SVG plots of throughput and cwnd.
//
// Exit codes: 0 success, 1 invalid configuration or unparseable input,
// 2 runtime fault during a simulation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcpsim/tcpsim.hpp"

namespace fs = std::filesystem;
using namespace tcpsim;

namespace {

constexpr const char* kBanner = "# tcpsim v" TCPSIM_VERSION "\n";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    out << content;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (out.size() == 1 && out[0].empty())
        out.clear();
    return out;
}

std::vector<double> parse_loss_list(const std::string& s) {
    std::vector<double> out;
    for (const std::string& tok : split_csv(s))
        out.push_back(cfgtext::parse_double(tok, "sweep.losses"));
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const std::string& tok : split_csv(s)) {
        std::size_t dots = tok.find("..");
        if (dots != std::string::npos) {
            std::uint64_t a = cfgtext::parse_uint(tok.substr(0, dots), "sweep.seeds");
            std::uint64_t b = cfgtext::parse_uint(tok.substr(dots + 2), "sweep.seeds");
            if (b < a)
                throw ConfigError("sweep.seeds: bad range '" + tok + "'");
            for (std::uint64_t v = a; v <= b; ++v)
                out.push_back(v);
        } else {
            out.push_back(cfgtext::parse_uint(tok, "sweep.seeds"));
        }
    }
    return out;
}

std::vector<TcpVariant> parse_variant_list(const std::string& s) {
    std::vector<TcpVariant> out;
    for (const std::string& tok : split_csv(s)) {
        if (tok == "tahoe")
            out.push_back(TcpVariant::Tahoe);
        else if (tok == "reno")
            out.push_back(TcpVariant::Reno);
        else
            throw ConfigError("sweep.variants: unknown variant '" + tok +
                              "' (expected tahoe or reno)");
    }
    return out;
}

std::string render_summary(const RunResult& result) {
    std::string out;
    out += "run.seed=" + std::to_string(result.seed) + "\n";
    out += "run.duration_s=" + cfgtext::fmt_double(result.config_echo.duration_s) + "\n";
    out += "run.events=" + std::to_string(result.event_count) + "\n";
    for (const FlowSummary& s : result.summaries)
        out += summary_to_kv(s);
    return out;
}

struct SimulateArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool no_banner = false;
};

int cmd_simulate(const SimulateArgs& args) {
    ScenarioConfig cfg = parse_config(read_file(args.config_path));
    if (args.seed)
        cfg.seed = *args.seed;
    cfg.validate();

    fs::create_directories(args.out_dir);
    std::string banner = args.no_banner ? "" : kBanner;

    Simulation sim(cfg);
    RunResult result;
    try {
        result = sim.run();
    } catch (const ProtocolError&) {
        // keep what we have: the trace up to the fault
        std::ostringstream trace_text;
        sim.trace().write(trace_text);
        write_file(fs::path(args.out_dir) / "trace.log", banner + trace_text.str());
        std::cerr << "tcpsim: partial trace written to "
                  << (fs::path(args.out_dir) / "trace.log").string() << "\n";
        throw;
    }

    std::ostringstream trace_text;
    result.trace.write(trace_text);
    write_file(fs::path(args.out_dir) / "trace.log", banner + trace_text.str());
    write_file(fs::path(args.out_dir) / "summary.txt", banner + render_summary(result));
    write_file(fs::path(args.out_dir) / "config.echo",
               banner + serialize_config(result.config_echo));
    return 0;
}

struct SweepArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::string losses;
    std::string variants = "tahoe,reno";
    std::string seeds;
    unsigned jobs = 0;
};

int cmd_sweep(const SweepArgs& args) {
    ScenarioConfig base = parse_config(read_file(args.config_path));
    base.validate();
    SweepResult sweep = run_sweep(base, parse_loss_list(args.losses),
                                  parse_variant_list(args.variants),
                                  parse_seed_list(args.seeds), args.jobs);
    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / "sweep.csv", sweep_csv(sweep));
    write_file(fs::path(args.out_dir) / "sweep_summary.csv", sweep_summary_csv(sweep));
    return 0;
}

struct AnalyzeArgs {
    std::string trace_path;
    int flow = 0;  // 0 = every flow in the trace
    double window_s = 1.0;
    std::string throughput_csv;
    std::string cwnd_csv;
};

int cmd_analyze(const AnalyzeArgs& args) {
    std::ifstream in(args.trace_path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + args.trace_path + "'");
    TraceLog trace = TraceLog::read(in);
    if (trace.empty())
        throw ConfigError("trace '" + args.trace_path + "' contains no records");

    std::vector<FlowId> flows;
    if (args.flow != 0)
        flows.push_back(args.flow);
    else
        flows = flows_in_trace(trace);

    for (FlowId id : flows)
        std::cout << summary_to_kv(build_flow_summary(trace, id));

    if (!args.throughput_csv.empty()) {
        if (args.flow == 0)
            throw ConfigError("--throughput-csv requires --flow");
        write_file(args.throughput_csv,
                   series_to_csv(throughput_series(trace, args.flow, args.window_s),
                                 "window_start_s", "throughput_bps"));
    }
    if (!args.cwnd_csv.empty()) {
        if (args.flow == 0)
            throw ConfigError("--cwnd-csv requires --flow");
        write_file(args.cwnd_csv,
                   series_to_csv(cwnd_series(trace, args.flow), "t_s", "cwnd_mss"));
    }
    return 0;
}

struct PlotArgs {
    std::vector<std::string> inputs;
    std::string kind = "throughput";
    std::string out_path;
    int flow = 1;
    double window_s = 1.0;
    std::string labels;
    std::string title;
};

std::vector<SeriesPoint> parse_csv_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::vector<SeriesPoint> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        if (lineno == 1 && !line.empty() && !(line[0] >= '0' && line[0] <= '9') && line[0] != '-')
            continue;  // header
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError(path + ": line " + std::to_string(lineno) + ": expected 2 columns");
        SeriesPoint p;
        p.t = cfgtext::parse_double(line.substr(0, comma), path + " col 1");
        p.value = cfgtext::parse_double(line.substr(comma + 1), path + " col 2");
        out.push_back(p);
    }
    return out;
}

int cmd_plot(const PlotArgs& args) {
    std::string kind = args.kind;
    if (kind != "throughput" && kind != "cwnd" && kind != "compare")
        throw ConfigError("plot.kind: expected throughput, cwnd or compare");
    if (kind == "compare" && args.inputs.size() != 2)
        throw ConfigError("plot: kind=compare takes exactly two inputs");
    bool cwnd = kind == "cwnd";

    std::vector<std::string> labels = split_csv(args.labels);
    std::vector<ChartSeries> series;
    for (std::size_t i = 0; i < args.inputs.size(); ++i) {
        const std::string& path = args.inputs[i];
        ChartSeries s;
        if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
            s.points = parse_csv_series(path);
        } else {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw ConfigError("cannot open '" + path + "'");
            TraceLog trace = TraceLog::read(in);
            if (trace.empty())
                throw ConfigError("trace '" + path + "' contains no records");
            s.points = cwnd ? cwnd_series(trace, args.flow)
                            : [&] {
                                  auto sp = throughput_series(trace, args.flow, args.window_s);
                                  return sp;
                              }();
        }
        if (i < labels.size())
            s.label = labels[i];
        else if (args.inputs.size() == 2)
            s.label = i == 0 ? "tahoe" : "reno";
        else
            s.label = fs::path(path).stem().string();
        series.push_back(std::move(s));
    }

    std::string title = args.title;
    if (title.empty())
        title = cwnd ? "Congestion window" : "Throughput";
    std::string svg = render_line_chart(title, "time (s)",
                                        cwnd ? "cwnd (MSS)" : "throughput (bps)", series);
    write_file(args.out_path, svg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tcpsim - deterministic Tahoe/Reno dumbbell simulator"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "run one scenario from a config file");
    sim->add_option("config", sim_args.config_path, "scenario config file")->required();
    sim->add_option("-o,--out", sim_args.out_dir, "output directory (trace.log, summary.txt, config.echo)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = sim->add_option("--seed", seed_value, "override the config seed");
    sim->add_flag("--no-banner", sim_args.no_banner, "omit the version banner from outputs");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "run a loss x variant x seed matrix");
    sweep->add_option("config", sweep_args.config_path, "base scenario config file")->required();
    sweep->add_option("--losses", sweep_args.losses, "comma list of loss rates, e.g. 0,0.01,0.1")
        ->required();
    sweep->add_option("--variants", sweep_args.variants, "comma list: tahoe,reno");
    sweep->add_option("--seeds", sweep_args.seeds, "comma list of seeds; ranges allowed (1..20)")
        ->required();
    sweep->add_option("-o,--out", sweep_args.out_dir, "output directory (sweep.csv, sweep_summary.csv)");
    sweep->add_option("--jobs", sweep_args.jobs, "parallel runs (0 = hardware threads)");

    AnalyzeArgs an_args;
    auto* an = app.add_subcommand("analyze", "recompute flow summaries from a trace file");
    an->add_option("trace", an_args.trace_path, "trace.log file")->required();
    an->add_option("--flow", an_args.flow, "flow id (default: all flows)");
    an->add_option("--window", an_args.window_s, "throughput window seconds");
    an->add_option("--throughput-csv", an_args.throughput_csv, "write throughput series CSV here");
    an->add_option("--cwnd-csv", an_args.cwnd_csv, "write cwnd series CSV here");

    PlotArgs plot_args;
    auto* plot = app.add_subcommand("plot", "render an SVG chart from traces or CSV series");
    plot->add_option("inputs", plot_args.inputs, "trace.log or .csv files (2 for compare)")
        ->required();
    plot->add_option("-k,--kind", plot_args.kind, "throughput | cwnd | compare");
    plot->add_option("-o,--out", plot_args.out_path, "output SVG path")->required();
    plot->add_option("--flow", plot_args.flow, "flow id for trace inputs");
    plot->add_option("--window", plot_args.window_s, "throughput window seconds");
    plot->add_option("--labels", plot_args.labels, "comma list of legend labels");
    plot->add_option("--title", plot_args.title, "chart title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(sim)) {
            if (seed_opt->count() > 0)
                sim_args.seed = seed_value;
            return cmd_simulate(sim_args);
        }
        if (app.got_subcommand(sweep))
            return cmd_sweep(sweep_args);
        if (app.got_subcommand(an))
            return cmd_analyze(an_args);
        if (app.got_subcommand(plot))
            return cmd_plot(plot_args);
    } catch (const ConfigError& e) {
        std::cerr << "tcpsim: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "tcpsim: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
