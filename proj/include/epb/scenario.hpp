#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "epb/analytic.hpp"
#include "epb/errors.hpp"
#include "epb/hilbert.hpp"
#include "epb/master.hpp"
#include "epb/parallel.hpp"
#include "epb/params.hpp"
#include "epb/spectra.hpp"

namespace epb {

inline constexpr const char* artifact_version = "epb 1.0.0";

using json = nlohmann::json;

enum class Task { ep_scan_h, ep_scan_l, eigen_sweep, beta_sweep, detuning_sweep, thermal_sweep, single_point, upb_solve };
enum class Engine { analytic, master, both };

struct Grid {
    double start = 0;
    double stop = 2;
    int count = 2;
    bool in_pi = true;       // beta grids are given in units of pi
    bool endpoint = true;

    std::vector<double> values() const {
        std::vector<double> v;
        const double scale = in_pi ? pi : 1.0;
        const int gaps = endpoint ? count - 1 : count;
        for (int i = 0; i < count; ++i) v.push_back(scale * (start + (stop - start) * (gaps > 0 ? double(i) / gaps : 0.0)));
        return v;
    }
};

struct Scenario {
    std::string name = "scenario";
    Task task = Task::single_point;
    SystemParams params;
    Grid grid;
    bool has_grid = false;
    Engine engine = Engine::analytic;
    std::string output_path;
    std::string format = "csv";
    MasterOptions master;
    EpCriteria ep;
    int subspace = 1;
    PairSelection pair;
    std::vector<double> betas;     // radians; detuning and thermal sweeps
    std::vector<double> nth_grid;
    UpbMode upb_mode = UpbMode::resonant_closed_form;
    CorrelationVariant variant = CorrelationVariant::full_threephoton;
    int threads = 1;
    json resolved;
};

inline std::string to_string(Task t) {
    switch (t) {
    case Task::ep_scan_h: return "ep_scan_h";
    case Task::ep_scan_l: return "ep_scan_l";
    case Task::eigen_sweep: return "eigen_sweep";
    case Task::beta_sweep: return "beta_sweep";
    case Task::detuning_sweep: return "detuning_sweep";
    case Task::thermal_sweep: return "thermal_sweep";
    case Task::single_point: return "single_point";
    case Task::upb_solve: return "upb_solve";
    }
    return "unknown";
}

inline std::string to_string(Engine e) {
    return e == Engine::analytic ? "analytic" : e == Engine::master ? "master" : "both";
}

inline std::string to_string(UpbMode m) {
    switch (m) {
    case UpbMode::resonant_closed_form: return "resonant_closed_form";
    case UpbMode::resonant_phase: return "resonant_phase";
    case UpbMode::general_cubic: return "general_cubic";
    }
    return "unknown";
}

namespace detail {

template <class E>
E parse_enum(const json& j, const std::string& key, const std::map<std::string, E>& names) {
    if (!j.is_string()) throw ConfigError("key '" + key + "' must be a string");
    auto it = names.find(j.get<std::string>());
    if (it == names.end()) {
        std::string options;
        for (const auto& [n, v] : names) options += (options.empty() ? "" : ", ") + n;
        throw ConfigError("key '" + key + "' has unknown value '" + j.get<std::string>() + "' (expected " + options + ")");
    }
    return it->second;
}

inline double number(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError("key '" + key + "' must be a number");
    return j.get<double>();
}

inline int integer(const json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ConfigError("key '" + key + "' must be an integer");
    return j.get<int>();
}

inline cplx complex_value(const json& j, const std::string& key) {
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    if (j.is_object() && j.contains("re") && j.contains("im"))
        return {number(j.at("re"), key + ".re"), number(j.at("im"), key + ".im")};
    throw ConfigError("key '" + key + "' must be [re, im] or {\"re\":..,\"im\":..}");
}

inline void allow_only(const json& j, const std::string& where, const std::set<std::string>& keys) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) throw ConfigError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

inline std::vector<double> number_list(const json& j, const std::string& key, double scale = 1.0) {
    if (!j.is_array() || j.empty()) throw ConfigError("key '" + key + "' must be a nonempty array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(scale * number(j[i], key + "[" + std::to_string(i) + "]"));
    return v;
}

inline const std::map<std::string, Task>& task_names() {
    static const std::map<std::string, Task> m{{"ep_scan_h", Task::ep_scan_h},         {"ep_scan_l", Task::ep_scan_l},
                                               {"eigen_sweep", Task::eigen_sweep},     {"beta_sweep", Task::beta_sweep},
                                               {"detuning_sweep", Task::detuning_sweep}, {"thermal_sweep", Task::thermal_sweep},
                                               {"single_point", Task::single_point},   {"upb_solve", Task::upb_solve}};
    return m;
}

inline const std::map<std::string, Engine>& engine_names() {
    static const std::map<std::string, Engine> m{{"analytic", Engine::analytic}, {"master", Engine::master}, {"both", Engine::both}};
    return m;
}

inline SystemParams parse_params(const json& j) {
    allow_only(j, "params", {"preset", "eps1", "eps2", "sigma", "beta", "beta_pi", "chi", "lambda_si", "n2_si", "n0",
                             "veff_si", "q", "delta0", "xi", "gamma", "nth", "temperature_si", "nth_convention",
                             "loss_model", "spectrum_norm"});
    SystemParams p;
    if (j.contains("preset")) {
        const std::map<std::string, double> presets{{"strong_kerr", strong_kerr_n2}, {"table_kerr", table_kerr_n2}, {"weak_kerr", weak_kerr_n2}};
        p = resonator_preset(parse_enum(j.at("preset"), "params.preset", presets));
    }
    if (j.contains("eps1")) p.eps1 = complex_value(j.at("eps1"), "params.eps1");
    if (j.contains("eps2")) p.eps2 = complex_value(j.at("eps2"), "params.eps2");
    if (j.contains("sigma")) p.sigma = integer(j.at("sigma"), "params.sigma");
    if (j.contains("beta") && j.contains("beta_pi")) throw ConfigError("give only one of 'params.beta' and 'params.beta_pi'");
    if (j.contains("beta")) p.beta = normalize_angle(number(j.at("beta"), "params.beta"));
    if (j.contains("beta_pi")) p.beta = normalize_angle(pi * number(j.at("beta_pi"), "params.beta_pi"));
    const bool si_kerr = j.contains("n2_si") || j.contains("lambda_si") || j.contains("veff_si") || j.contains("n0") || j.contains("q");
    if (j.contains("chi") && si_kerr) throw ConfigError("give either 'params.chi' or the SI Kerr inputs, not both");
    if (j.contains("chi")) p.chi = number(j.at("chi"), "params.chi");
    if (si_kerr) {
        KerrPreset k{.n2 = strong_kerr_n2};
        if (j.contains("lambda_si")) k.lambda = number(j.at("lambda_si"), "params.lambda_si");
        if (j.contains("n2_si")) k.n2 = number(j.at("n2_si"), "params.n2_si");
        if (j.contains("n0")) k.n0 = number(j.at("n0"), "params.n0");
        if (j.contains("veff_si")) k.veff = number(j.at("veff_si"), "params.veff_si");
        if (j.contains("q")) k.q = number(j.at("q"), "params.q");
        p.chi = k.chi();
    }
    if (j.contains("delta0")) {
        const json& d = j.at("delta0");
        if (d.is_string() && d.get<std::string>() == "resonant")
            p.delta0 = resonant_delta0(p);
        else
            p.delta0 = number(d, "params.delta0");
    } else if (!j.contains("preset")) {
        p.delta0 = 0.0;
    }
    if (j.contains("xi")) p.xi = number(j.at("xi"), "params.xi");
    if (j.contains("gamma")) p.gamma = number(j.at("gamma"), "params.gamma");
    if (j.contains("nth") && j.contains("temperature_si")) throw ConfigError("give either 'params.nth' or 'params.temperature_si'");
    if (j.contains("nth")) p.nth = number(j.at("nth"), "params.nth");
    if (j.contains("temperature_si")) {
        NthConvention conv = NthConvention::bose_einstein;
        if (j.contains("nth_convention"))
            conv = parse_enum(j.at("nth_convention"), "params.nth_convention",
                              std::map<std::string, NthConvention>{{"bose_einstein", NthConvention::bose_einstein},
                                                                   {"paper_literal", NthConvention::paper_literal}});
        const double lambda = j.contains("lambda_si") ? number(j.at("lambda_si"), "params.lambda_si") : 1550e-9;
        p.nth = nth_from_temperature(number(j.at("temperature_si"), "params.temperature_si"), lambda, conv);
    }
    if (j.contains("loss_model"))
        p.loss_model = parse_enum(j.at("loss_model"), "params.loss_model",
                                  std::map<std::string, LossModel>{{"gamma_only", LossModel::gamma_only}, {"kappa", LossModel::kappa}});
    if (j.contains("spectrum_norm"))
        p.spectrum_norm = parse_enum(j.at("spectrum_norm"), "params.spectrum_norm",
                                     std::map<std::string, SpectrumNorm>{{"kappa", SpectrumNorm::kappa}, {"gamma", SpectrumNorm::gamma}});
    validate(p);
    return p;
}

inline MasterOptions parse_master(const json& j) {
    allow_only(j, "master", {"truncation", "n_max", "n1_max", "n2_max", "method", "dt", "t_max", "tol", "probe_interval",
                             "renormalize", "shift"});
    MasterOptions m;
    std::string trunc = "per_mode";
    if (j.contains("truncation"))
        trunc = parse_enum(j.at("truncation"), "master.truncation",
                           std::map<std::string, std::string>{{"per_mode", "per_mode"}, {"total_excitation", "total_excitation"}});
    if (trunc == "per_mode") {
        const int n1 = j.contains("n1_max") ? integer(j.at("n1_max"), "master.n1_max") : 4;
        const int n2 = j.contains("n2_max") ? integer(j.at("n2_max"), "master.n2_max") : n1;
        m.truncation = Truncation::per_mode(n1, n2);
    } else {
        m.truncation = Truncation::total(j.contains("n_max") ? integer(j.at("n_max"), "master.n_max") : 6);
    }
    if (j.contains("method"))
        m.method = parse_enum(j.at("method"), "master.method",
                              std::map<std::string, SteadyMethod>{{"spectral", SteadyMethod::spectral}, {"time_march", SteadyMethod::time_march}});
    if (j.contains("dt")) m.evolution.dt = number(j.at("dt"), "master.dt");
    if (j.contains("t_max")) m.evolution.t_max = number(j.at("t_max"), "master.t_max");
    if (j.contains("tol")) m.evolution.convergence_tol = number(j.at("tol"), "master.tol");
    if (j.contains("probe_interval")) m.evolution.probe_interval = number(j.at("probe_interval"), "master.probe_interval");
    if (j.contains("renormalize")) {
        if (!j.at("renormalize").is_boolean()) throw ConfigError("key 'master.renormalize' must be a boolean");
        m.evolution.renormalize_each_step = j.at("renormalize").get<bool>();
    }
    if (j.contains("shift")) m.spectral.shift = number(j.at("shift"), "master.shift");
    m.evolution.validate();
    return m;
}

inline json params_echo(const SystemParams& p) {
    return json{{"eps1", {p.eps1.real(), p.eps1.imag()}},
                {"eps2", {p.eps2.real(), p.eps2.imag()}},
                {"sigma", p.sigma},
                {"beta", p.beta},
                {"chi", p.chi},
                {"delta0", p.delta0},
                {"xi", p.xi},
                {"gamma", p.gamma},
                {"nth", p.nth},
                {"loss_model", to_string(p.loss_model)},
                {"spectrum_norm", p.spectrum_norm == SpectrumNorm::kappa ? "kappa" : "gamma"}};
}

} // namespace detail

/// Validates a JSON scenario; every error names the offending key.
inline Scenario parse_scenario(const json& j) {
    detail::allow_only(j, "", {"name", "task", "params", "grid", "engine", "output", "master", "ep", "pair", "betas_pi",
                               "nth_grid", "upb_mode", "variant", "threads"});
    Scenario s;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) throw ConfigError("key 'name' must be a string");
        s.name = j.at("name").get<std::string>();
    }
    if (!j.contains("task")) throw ConfigError("missing key 'task'");
    s.task = detail::parse_enum(j.at("task"), "task", detail::task_names());
    s.params = j.contains("params") ? detail::parse_params(j.at("params")) : SystemParams{};
    if (j.contains("engine")) s.engine = detail::parse_enum(j.at("engine"), "engine", detail::engine_names());
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        detail::allow_only(g, "grid", {"start", "stop", "count", "unit", "endpoint"});
        for (const char* k : {"start", "stop", "count"})
            if (!g.contains(k)) throw ConfigError(std::string("missing key 'grid.") + k + "'");
        s.grid.start = detail::number(g.at("start"), "grid.start");
        s.grid.stop = detail::number(g.at("stop"), "grid.stop");
        s.grid.count = detail::integer(g.at("count"), "grid.count");
        s.grid.in_pi = s.task != Task::detuning_sweep;
        if (g.contains("unit"))
            s.grid.in_pi = detail::parse_enum(g.at("unit"), "grid.unit", std::map<std::string, bool>{{"pi", true}, {"gamma", false}, {"rad", false}});
        if (g.contains("endpoint")) {
            if (!g.at("endpoint").is_boolean()) throw ConfigError("key 'grid.endpoint' must be a boolean");
            s.grid.endpoint = g.at("endpoint").get<bool>();
        }
        if (s.grid.count < 2) throw ConfigError("key 'grid.count' must be >= 2 for sweeps");
        s.has_grid = true;
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        detail::allow_only(o, "output", {"path", "format"});
        if (o.contains("path")) {
            if (!o.at("path").is_string()) throw ConfigError("key 'output.path' must be a string");
            s.output_path = o.at("path").get<std::string>();
        }
        if (o.contains("format"))
            s.format = detail::parse_enum(o.at("format"), "output.format", std::map<std::string, std::string>{{"csv", "csv"}, {"json", "json"}});
    }
    if (j.contains("master")) s.master = detail::parse_master(j.at("master"));
    if (j.contains("ep")) {
        const json& e = j.at("ep");
        detail::allow_only(e, "ep", {"subspace", "gap_tol", "overlap_tol"});
        if (e.contains("subspace")) s.subspace = detail::integer(e.at("subspace"), "ep.subspace");
        if (e.contains("gap_tol")) s.ep.gap_tol = detail::number(e.at("gap_tol"), "ep.gap_tol");
        if (e.contains("overlap_tol")) s.ep.overlap_tol = detail::number(e.at("overlap_tol"), "ep.overlap_tol");
    }
    if (j.contains("pair")) {
        const json& e = j.at("pair");
        detail::allow_only(e, "pair", {"sector", "rank", "ambiguity_ratio", "n_max"});
        if (e.contains("sector")) s.pair.sector = detail::integer(e.at("sector"), "pair.sector");
        if (e.contains("rank")) s.pair.rank = detail::integer(e.at("rank"), "pair.rank");
        if (e.contains("ambiguity_ratio")) s.pair.ambiguity_ratio = detail::number(e.at("ambiguity_ratio"), "pair.ambiguity_ratio");
        if (e.contains("n_max")) s.pair.n_max = detail::integer(e.at("n_max"), "pair.n_max");
    }
    if (j.contains("betas_pi")) s.betas = detail::number_list(j.at("betas_pi"), "betas_pi", pi);
    if (j.contains("nth_grid")) s.nth_grid = detail::number_list(j.at("nth_grid"), "nth_grid");
    if (j.contains("upb_mode"))
        s.upb_mode = detail::parse_enum(j.at("upb_mode"), "upb_mode",
                                        std::map<std::string, UpbMode>{{"resonant_closed_form", UpbMode::resonant_closed_form},
                                                                       {"resonant_phase", UpbMode::resonant_phase},
                                                                       {"general_cubic", UpbMode::general_cubic}});
    if (j.contains("variant"))
        s.variant = detail::parse_enum(j.at("variant"), "variant",
                                       std::map<std::string, CorrelationVariant>{{"full_threephoton", CorrelationVariant::full_threephoton},
                                                                                 {"approximate", CorrelationVariant::approximate}});
    if (j.contains("threads")) s.threads = detail::integer(j.at("threads"), "threads");
    const bool sweep = s.task == Task::ep_scan_h || s.task == Task::ep_scan_l || s.task == Task::eigen_sweep ||
                       s.task == Task::beta_sweep || s.task == Task::detuning_sweep;
    if (sweep && !s.has_grid) throw ConfigError("missing key 'grid' for task " + to_string(s.task));
    if (s.task == Task::thermal_sweep && s.nth_grid.empty()) throw ConfigError("missing key 'nth_grid' for thermal_sweep");
    s.resolved = j;
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_scenario(j);
}

using Cell = std::variant<double, std::string>;

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    json metadata = json::object();
    std::vector<std::string> notes;
};

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan-flagged";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", x);
    return buf;
}

inline std::string to_csv(const ResultTable& t) {
    std::ostringstream out;
    out << "# " << artifact_version << "\n";
    out << "# metadata " << t.metadata.dump() << "\n";
    for (const auto& n : t.notes) out << "# " << n << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            if (const auto* d = std::get_if<double>(&row[i]))
                out << format_number(*d);
            else
                out << std::get<std::string>(row[i]);
        }
        out << "\n";
    }
    return out.str();
}

inline json to_json(const ResultTable& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& c : row) {
            if (const auto* d = std::get_if<double>(&c))
                r.push_back(std::isfinite(*d) ? json(*d) : json(format_number(*d)));
            else
                r.push_back(std::get<std::string>(c));
        }
        rows.push_back(r);
    }
    return json{{"version", artifact_version}, {"metadata", t.metadata}, {"notes", t.notes}, {"columns", t.columns}, {"rows", rows}};
}

namespace detail {

struct StatPoint {
    double g2_11, g2_22, g2_12, g3_11, g3_22, p10, p01, p20, p11, p02;
    double s11 = NAN, s22 = NAN;
    int poles = 0;
};

inline StatPoint analytic_stats(const SystemParams& p, CorrelationVariant v) {
    const AnalyticPoint a = analytic_point(p, v);
    const auto& c = a.corr;
    StatPoint s{c.g2_11, c.g2_22, c.g2_12, c.g3_11, c.g3_22,
                a.probs(1, 0), a.probs(0, 1), a.probs(2, 0), a.probs(1, 1), a.probs(0, 2)};
    s.s11 = spectrum_value(p, Mode::cw);
    s.s22 = spectrum_value(p, Mode::ccw);
    s.poles = static_cast<int>(a.amps.poles.size());
    return s;
}

inline StatPoint master_stats(const SystemParams& p, const MasterOptions& opts) {
    const DensityState st = master_steady_state(p, opts);
    const Observables o = observables(st);
    auto prob = [&](int m, int n) {
        auto i = st.basis.index(m, n);
        return i ? st.rho(*i, *i).real() : 0.0;
    };
    StatPoint s{o.g2_11, o.g2_22, o.g2_12, o.g3_11, o.g3_22, prob(1, 0), prob(0, 1), prob(2, 0), prob(1, 1), prob(0, 2)};
    const double rate = p.spectrum_norm == SpectrumNorm::kappa ? derive(p).kappa : p.gamma;
    const double n0 = p.xi * p.xi / (rate * rate);
    s.s11 = n0 > 0 ? o.mean_m / n0 : INFINITY;
    s.s22 = n0 > 0 ? o.mean_n / n0 : INFINITY;
    return s;
}

inline std::vector<Cell> stat_cells(const StatPoint& s) {
    return {s.g2_11, s.g2_22, s.g2_12, s.g3_11, s.g3_22, s.p10, s.p01, s.p20, s.p11, s.p02};
}

inline const std::vector<std::string>& stat_columns() {
    static const std::vector<std::string> c{"g2_11", "g2_22", "g2_12", "g3_11", "g3_22", "P10", "P01", "P20", "P11", "P02"};
    return c;
}

/// One-dimensional sweep over beta or delta0 producing the fixed statistics columns.
inline ResultTable stat_sweep(const Scenario& s, bool over_beta, double fixed_beta) {
    const std::vector<double> xs = s.grid.values();
    const double step = xs.size() > 1 ? xs[1] - xs[0] : 1e-3;
    // stencil needs neighbours beyond both ends
    std::vector<double> ext;
    ext.push_back(xs.front() - step);
    ext.insert(ext.end(), xs.begin(), xs.end());
    ext.push_back(xs.back() + step);
    auto at = [&](double x) {
        SystemParams p = over_beta ? s.params.at_beta(x) : s.params.at_beta(fixed_beta).at_delta0(x);
        return p;
    };
    const bool want_a = s.engine != Engine::master, want_m = s.engine != Engine::analytic;
    std::vector<StatPoint> an(ext.size()), ma(ext.size());
    parallel_for(ext.size(), s.threads, [&](std::size_t i) {
        const bool edge = i == 0 || i + 1 == ext.size();
        if (want_a) an[i] = analytic_stats(at(ext[i]), s.variant);
        if (want_m && (!edge || !want_a)) ma[i] = master_stats(at(ext[i]), s.master);
    });
    const std::vector<StatPoint>& primary = want_a ? an : ma;
    std::vector<double> upb;
    for (const auto& u : upb_angles(s.params, UpbMode::resonant_closed_form)) upb.push_back(u.beta);
    for (const auto& u : upb_angles(s.params, UpbMode::resonant_phase)) upb.push_back(u.beta);

    ResultTable t;
    t.columns.push_back(over_beta ? "beta" : "delta0");
    for (const auto& c : stat_columns()) t.columns.push_back(c);
    t.columns.push_back("regime");
    if (s.engine == Engine::both) {
        for (const auto& c : stat_columns()) t.columns.push_back("master_" + c);
        t.columns.push_back("rel_diff_g2_11");
    }
    t.columns.push_back("S11");
    t.columns.push_back("S22");
    t.columns.push_back("poles");
    if (!over_beta) t.columns.push_back("beta_fixed");
    for (std::size_t i = 1; i + 1 < ext.size(); ++i) {
        const StatPoint& a = primary[i];
        std::vector<Cell> row{ext[i]};
        for (auto& c : stat_cells(a)) row.push_back(c);
        const std::optional<double> b = over_beta ? std::optional<double>(ext[i]) : std::nullopt;
        const RegimeLabel lab = classify_regime(a.g2_11, a.g3_11, {primary[i - 1].g2_11, a.g2_11, primary[i + 1].g2_11}, b, upb);
        row.emplace_back(to_string(lab));
        if (s.engine == Engine::both) {
            for (auto& c : stat_cells(ma[i])) row.push_back(c);
            row.emplace_back(std::abs(an[i].g2_11 - ma[i].g2_11) / std::abs(ma[i].g2_11));
        }
        row.emplace_back(a.s11);
        row.emplace_back(a.s22);
        row.emplace_back(static_cast<double>(an[i].poles));
        if (!over_beta) row.emplace_back(fixed_beta);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline ResultTable ep_scan_table(const EpScan& scan, bool hamiltonian) {
    ResultTable t;
    t.columns = hamiltonian ? std::vector<std::string>{"beta", "reEgap", "imEgap", "overlap", "is_ep"}
                            : std::vector<std::string>{"beta", "reLgap", "imLgap", "is_ep"};
    for (const auto& r : scan.rows) {
        std::vector<Cell> row{r.beta, r.gap.real(), r.gap.imag()};
        if (hamiltonian) row.emplace_back(r.overlap);
        row.emplace_back(r.is_ep ? 1.0 : 0.0);
        t.rows.push_back(std::move(row));
    }
    for (const auto& m : scan.minima) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "minimum beta=%.9f (%.6f pi) gap=%.6e overlap=%.6f is_ep=%d", m.beta, m.beta / pi,
                      m.gap_abs, m.overlap, m.is_ep ? 1 : 0);
        t.notes.emplace_back(buf);
    }
    return t;
}

} // namespace detail

inline ResultTable run_scenario(const Scenario& s) {
    ResultTable t;
    switch (s.task) {
    case Task::ep_scan_h:
        t = detail::ep_scan_table(hamiltonian_ep_scan(s.params, s.grid.values(), s.subspace, s.ep), true);
        break;
    case Task::ep_scan_l:
        t = detail::ep_scan_table(liouvillian_ep_scan(s.params, s.grid.values(), s.pair, s.ep), false);
        break;
    case Task::eigen_sweep: {
        t.columns = {"beta", "reE1p", "imE1p", "reE1m", "imE1m", "overlap1", "reE2p", "imE2p", "reE20", "imE20", "reE2m", "imE2m", "overlap2"};
        for (double b : s.grid.values()) {
            const SystemParams p = s.params.at_beta(b);
            const auto one = closed_form_eigensystem(p, 1), two = closed_form_eigensystem(p, 2);
            t.rows.push_back({b, one.eigenvalues[0].real(), one.eigenvalues[0].imag(), one.eigenvalues[1].real(),
                              one.eigenvalues[1].imag(), overlap(one.eigenvectors[0], one.eigenvectors[1]),
                              two.eigenvalues[0].real(), two.eigenvalues[0].imag(), two.eigenvalues[1].real(),
                              two.eigenvalues[1].imag(), two.eigenvalues[2].real(), two.eigenvalues[2].imag(),
                              overlap(two.eigenvectors[0], two.eigenvectors[1])});
        }
        break;
    }
    case Task::beta_sweep:
        t = detail::stat_sweep(s, true, 0.0);
        break;
    case Task::detuning_sweep: {
        const std::vector<double> betas = s.betas.empty() ? std::vector<double>{s.params.beta} : s.betas;
        for (double b : betas) {
            ResultTable part = detail::stat_sweep(s, false, b);
            if (t.columns.empty()) t.columns = part.columns;
            for (auto& r : part.rows) t.rows.push_back(std::move(r));
        }
        break;
    }
    case Task::thermal_sweep: {
        const std::vector<double> betas = s.betas.empty() ? std::vector<double>{s.params.beta} : s.betas;
        const ThermalSweep sw = thermal_sweep(s.params, s.nth_grid, betas, s.master, s.threads);
        t.columns = {"beta", "nth", "g2_11"};
        for (const auto& r : sw.rows) t.rows.push_back({r.beta, r.nth, r.g2_11});
        for (const auto& c : sw.crossings) {
            char buf[260];
            if (c.nth) {
                const double tb = temperature_from_nth(*c.nth, 1550e-9, NthConvention::bose_einstein);
                const double tl = temperature_from_nth(*c.nth, 1550e-9, NthConvention::paper_literal);
                std::snprintf(buf, sizeof buf, "critical beta=%.6f pi level=%g nth=%.6e T_bose_einstein=%.1fK T_paper_literal=%.1fK",
                              c.beta / pi, c.level, *c.nth, tb, tl);
            } else {
                std::snprintf(buf, sizeof buf, "critical beta=%.6f pi level=%g nth=none-in-grid", c.beta / pi, c.level);
            }
            t.notes.emplace_back(buf);
        }
        break;
    }
    case Task::single_point: {
        t.columns = {"beta", "delta0"};
        const auto& sc = detail::stat_columns();
        std::vector<Cell> row{s.params.beta, s.params.delta0};
        if (s.engine != Engine::master) {
            for (const auto& c : sc) t.columns.push_back(c);
            for (auto& c : detail::stat_cells(detail::analytic_stats(s.params, s.variant))) row.push_back(c);
        }
        if (s.engine != Engine::analytic) {
            for (const auto& c : sc) t.columns.push_back("master_" + c);
            for (auto& c : detail::stat_cells(detail::master_stats(s.params, s.master))) row.push_back(c);
        }
        t.rows.push_back(std::move(row));
        break;
    }
    case Task::upb_solve: {
        t.columns = {"beta", "re_delta", "delta0", "abs_C20", "abs_C20_plus", "abs_C20_minus"};
        for (const auto& u : upb_angles(s.params, s.upb_mode)) {
            auto c20 = [&](double b) { return std::abs(steady_amplitudes(s.params.at_beta(b).at_delta0(u.delta0))(2, 0)); };
            t.rows.push_back({u.beta, u.re_delta, u.delta0, c20(u.beta), c20(u.beta + 0.05 * pi), c20(u.beta - 0.05 * pi)});
        }
        break;
    }
    }
    t.metadata = json{{"name", s.name},
                      {"task", to_string(s.task)},
                      {"engine", to_string(s.engine)},
                      {"params", detail::params_echo(s.params)},
                      {"config", s.resolved},
                      {"units", "rates in gamma; beta in radians"},
                      {"master", {{"truncation", to_string(s.master.truncation)},
                                  {"method", s.master.method == SteadyMethod::spectral ? "spectral" : "time_march"}}}};
    return t;
}

inline const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "figS1", "figS2", "figS6", "figS7", "figS8"};
    return ids;
}

/// Canned scenarios with the resonator values baked in, at desk-scale grids.
inline Scenario figure_scenario(const std::string& id) {
    auto make = [&](json j) {
        j["name"] = id;
        return parse_scenario(j);
    };
    const json strong = {{"preset", "strong_kerr"}};
    const json detuning_grid = {{"start", -8.0}, {"stop", 2.0}, {"count", 101}, {"unit", "gamma"}};
    const json beta_grid = {{"start", 0.0}, {"stop", 2.0}, {"count", 81}};
    if (id == "fig1b")
        return make({{"task", "detuning_sweep"}, {"engine", "both"}, {"params", strong}, {"grid", detuning_grid}, {"betas_pi", {0.5, 0.75, 1.0}}});
    if (id == "fig2a" || id == "fig2b")
        return make({{"task", "beta_sweep"}, {"engine", "both"}, {"params", strong}, {"grid", beta_grid}});
    if (id == "fig3a")
        return make({{"task", "detuning_sweep"}, {"engine", "both"}, {"params", strong}, {"grid", detuning_grid},
                     {"betas_pi", {0.5, 0.75, 1.0, 1.25, 1.5}}});
    if (id == "fig3b")
        return make({{"task", "detuning_sweep"}, {"engine", "master"}, {"params", strong}, {"grid", detuning_grid},
                     {"betas_pi", {0.5, 0.75, 1.0, 1.25, 1.5}}});
    if (id == "figS1")
        return make({{"task", "eigen_sweep"}, {"params", strong}, {"grid", {{"start", 0.0}, {"stop", 2.0}, {"count", 401}}}});
    if (id == "figS2")
        return make({{"task", "ep_scan_l"}, {"params", strong},
                     {"grid", {{"start", 0.0}, {"stop", 2.0}, {"count", 400}, {"endpoint", false}}}});
    if (id == "figS6")
        return make({{"task", "beta_sweep"}, {"engine", "both"}, {"params", {{"preset", "table_kerr"}}}, {"grid", beta_grid}});
    if (id == "figS7")
        return make({{"task", "detuning_sweep"}, {"engine", "analytic"}, {"params", {{"preset", "weak_kerr"}}},
                     {"grid", {{"start", -6.0}, {"stop", 0.0}, {"count", 121}, {"unit", "gamma"}}},
                     {"betas_pi", {0.35, 0.5, 0.65, 1.0}}});
    if (id == "figS8")
        return make({{"task", "thermal_sweep"}, {"engine", "master"}, {"params", strong},
                     {"master", {{"n1_max", 8}, {"n2_max", 8}}},
                     {"betas_pi", {0.5, 0.6, 1.0}},
                     {"nth_grid", {0.0, 0.001, 0.002, 0.003, 0.005, 0.01, 0.02, 0.03, 0.05, 0.08, 0.11, 0.15, 0.2, 0.3, 0.5}}});
    throw UnknownFigure("unknown figure id '" + id + "'");
}

inline ResultTable reproduce_figure(const std::string& id, int threads = 1) {
    Scenario s = figure_scenario(id);
    s.threads = threads;
    return run_scenario(s);
}

/// Operators of the scenario point as row-major [re, im] pairs.
inline json dump_operators(const Scenario& s) {
    const FockBasis basis = build_basis(s.master.truncation);
    const SystemParams& p = s.params;
    auto mat = [](const Matrix& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
            rows.push_back(row);
        }
        return rows;
    };
    json states = json::array();
    for (const auto& [m, n] : basis.states()) states.push_back({m, n});
    const OperatorMatrix h = build_hamiltonian(p, basis, HamiltonianKind::rotating_driven);
    json jumps = json::array();
    for (const Matrix& a : ladder_jumps(p, basis)) jumps.push_back(mat(a));
    return json{{"basis", states},
                {"truncation", to_string(basis.truncation())},
                {"params", detail::params_echo(p)},
                {"isolated", mat(build_hamiltonian(p, basis, HamiltonianKind::isolated).m)},
                {"rotating_driven", mat(h.m)},
                {"effective", mat(build_hamiltonian(p, basis, HamiltonianKind::effective).m)},
                {"hermitian_part", mat(hermitian_part(h).m)},
                {"antihermitian_part", mat(antihermitian_part(h).m)},
                {"jumps", jumps}};
}

} // namespace epb
