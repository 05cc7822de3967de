#include "epb/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "epb/scenario.hpp"

namespace epb {

namespace {

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write output file '" + path + "'");
    f << text;
}

std::string render(const ResultTable& t, const std::string& format) {
    return format == "json" ? to_json(t).dump(2) + "\n" : to_csv(t);
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kerr whispering-gallery resonator photon statistics near exceptional points", "epb"};
    std::string config, task, engine, out_path, format, figure, dump_path, trace_path;
    int threads = 1;
    bool list_figures = false, version = false;
    app.add_option("-c,--config", config, "scenario JSON file");
    app.add_option("--task", task, "override the scenario task")
        ->check(CLI::IsMember({"ep_scan_h", "ep_scan_l", "eigen_sweep", "beta_sweep", "detuning_sweep", "thermal_sweep",
                               "single_point", "upb_solve"}));
    app.add_option("--engine", engine, "analytic, master or both")->check(CLI::IsMember({"analytic", "master", "both"}));
    app.add_option("-o,--out", out_path, "output path ('-' for stdout)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--figure", figure, "run a canned figure scenario");
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--dump-operators", dump_path, "write basis and operator matrices as JSON");
    app.add_option("--trace-log", trace_path, "log t, trace, purity, <m>, <n> during time-marching");
    app.add_flag("--list-figures", list_figures, "print canned figure ids");
    app.add_flag("--version", version, "print version");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    if (version) {
        out << artifact_version << "\n";
        return exit_ok;
    }
    if (list_figures) {
        for (const auto& id : figure_ids()) out << id << "\n";
        return exit_ok;
    }

    try {
        if (config.empty() == figure.empty()) throw ConfigError("give exactly one of --config and --figure");
        Scenario s = figure.empty() ? load_scenario(config) : figure_scenario(figure);
        if (!task.empty()) {
            nlohmann::json j = s.resolved;
            j["task"] = task;
            s = parse_scenario(j);
        }
        if (!engine.empty()) s.engine = detail::parse_enum(nlohmann::json(engine), "engine", detail::engine_names());
        if (!format.empty()) s.format = format;
        if (!out_path.empty()) s.output_path = out_path;
        s.threads = threads;

        if (!dump_path.empty()) write_text(dump_path, dump_operators(s).dump(2) + "\n", out);

        std::unique_ptr<std::ofstream> trace;
        if (!trace_path.empty()) {
            trace = std::make_unique<std::ofstream>(trace_path);
            if (!*trace) throw ConfigError("cannot write trace log '" + trace_path + "'");
            *trace << "t,trace_re,trace_im,purity,mean_m,mean_n\n";
            s.master.method = SteadyMethod::time_march;
            const FockBasis basis = build_basis(s.master.truncation);
            std::ofstream* log = trace.get();
            auto calls = std::make_shared<long>(0);
            s.master.evolution.trace_log = [log, basis, calls](double t, const Matrix& rho) {
                if ((*calls)++ % 100 != 0) return;
                double m = 0, n = 0;
                for (int i = 0; i < basis.dim(); ++i) {
                    m += basis[i].first * rho(i, i).real();
                    n += basis[i].second * rho(i, i).real();
                }
                const cplx tr = rho.trace();
                *log << format_number(t) << "," << format_number(tr.real()) << "," << format_number(tr.imag()) << ","
                     << format_number((rho * rho).trace().real()) << "," << format_number(m) << "," << format_number(n) << "\n";
            };
            if (s.threads > 1) {
                err << "trace log requested; running single-threaded\n";
                s.threads = 1;
            }
        }

        const auto start = std::chrono::steady_clock::now();
        ResultTable t = run_scenario(s);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!figure.empty()) t.metadata["figure"] = figure;
        write_text(s.output_path, render(t, s.format), out);
        if (!s.output_path.empty() && s.output_path != "-")
            err << s.name << ": " << t.rows.size() << " rows -> " << s.output_path << " (" << seconds << " s)\n";
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const DimensionCap& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}

} // namespace epb
