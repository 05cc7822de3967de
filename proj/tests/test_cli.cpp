#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "epb/cli.hpp"
#include "epb/scenario.hpp"

using namespace epb;
namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string& name) { return std::string(EPB_SOURCE_DIR) + "/configs/" + name; }

struct CliRun {
    int code;
    std::string out, err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string expect_config_error(const json& j) {
    try {
        parse_scenario(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigError for " << j.dump();
    return {};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "epb_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> lines;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

} // namespace

TEST(Config, ShippedConfigsParse) {
    for (const auto& entry : fs::directory_iterator(std::string(EPB_SOURCE_DIR) + "/configs"))
        if (entry.path().extension() == ".json") {
            EXPECT_NO_THROW(load_scenario(entry.path().string())) << entry.path();
        }
}

TEST(Config, SiKerrInputsResolveToPreset) {
    const Scenario s = load_scenario(config_path("beta_sweep.json"));
    EXPECT_NEAR(s.params.chi, resonator_preset(table_kerr_n2).chi, 1e-12);
    EXPECT_NEAR(s.params.delta0, -2.985, 1e-12);
    EXPECT_EQ(s.engine, Engine::both);
    EXPECT_EQ(s.grid.values().size(), 41u);
    EXPECT_NEAR(s.grid.values().back(), two_pi, 1e-12);
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_NE(expect_config_error({{"task", "beta_sweep"}, {"grid", {{"start", 0}, {"stop", 1}, {"count", 5}}}, {"colour", 1}})
                  .find("colour"),
              std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "single_point"}, {"params", {{"xi", "big"}}}}).find("params.xi"), std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "single_point"}, {"params", {{"chii", 2}}}}).find("params.chii"), std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "fly"}}).find("task"), std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "beta_sweep"}}).find("grid"), std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "single_point"}, {"master", {{"dt", -1.0}}}}).find("dt"), std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "single_point"}, {"params", {{"xi", -0.1}}}}).find("xi"), std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "single_point"}, {"params", {{"chi", 1.0}, {"n2_si", 1e-14}}}}).find("chi"),
              std::string::npos);
    EXPECT_NE(expect_config_error({{"task", "thermal_sweep"}}).find("nth_grid"), std::string::npos);
    EXPECT_NO_THROW(parse_scenario({{"task", "single_point"}, {"params", {{"eps1", {{"re", 1.0}, {"im", -0.1}}}}}}));
}

TEST(Config, TemperatureConventions) {
    const Scenario be = parse_scenario(
        {{"task", "single_point"}, {"params", {{"temperature_si", 20000.0}, {"nth_convention", "bose_einstein"}}}});
    const Scenario pl = parse_scenario(
        {{"task", "single_point"}, {"params", {{"temperature_si", 20000.0}, {"nth_convention", "paper_literal"}}}});
    EXPECT_NEAR(be.params.nth, nth_from_temperature(20000.0, 1550e-9, NthConvention::bose_einstein), 1e-15);
    EXPECT_LT(pl.params.nth, be.params.nth);
}

TEST(Output, NumberFormatting) {
    EXPECT_EQ(format_number(1.0), "1.00000000000e+00");
    EXPECT_EQ(format_number(INFINITY), "inf");
    EXPECT_EQ(format_number(NAN), "nan-flagged");
    ResultTable t;
    t.columns = {"x", "label"};
    t.rows.push_back({0.5, std::string("1PB")});
    t.rows.push_back({INFINITY, std::string("none")});
    t.metadata = {{"task", "demo"}};
    const std::string csv = to_csv(t);
    const auto lines = data_lines(csv);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "x,label");
    EXPECT_EQ(lines[1], "5.00000000000e-01,1PB");
    EXPECT_EQ(lines[2], "inf,none");
    EXPECT_NE(csv.find(artifact_version), std::string::npos);
    const json j = to_json(t);
    EXPECT_EQ(j["rows"][1][0], "inf");
    EXPECT_EQ(j["columns"][1], "label");
}

TEST(Scenario, BetaSweepColumnsAndRegimes) {
    json j = {{"task", "beta_sweep"},
              {"params", {{"preset", "table_kerr"}}},
              {"grid", {{"start", 0.3}, {"stop", 0.7}, {"count", 41}}}};
    const ResultTable t = run_scenario(parse_scenario(j));
    const std::vector<std::string> head{"beta", "g2_11", "g2_22", "g2_12", "g3_11", "g3_22", "P10", "P01", "P20", "P11", "P02", "regime"};
    ASSERT_GE(t.columns.size(), head.size());
    EXPECT_TRUE(std::equal(head.begin(), head.end(), t.columns.begin()));
    ASSERT_EQ(t.rows.size(), 41u);
    int labelled = 0;
    for (const auto& r : t.rows) labelled += std::get<std::string>(r[11]) != "none";
    EXPECT_GT(labelled, 0);
}

TEST(Scenario, BothEnginesAddMasterColumns) {
    json j = {{"task", "beta_sweep"},
              {"engine", "both"},
              {"params", {{"preset", "table_kerr"}}},
              {"master", {{"n1_max", 3}, {"n2_max", 3}}},
              {"grid", {{"start", 0.45}, {"stop", 0.55}, {"count", 3}}}};
    const ResultTable t = run_scenario(parse_scenario(j));
    const auto it = std::find(t.columns.begin(), t.columns.end(), "master_g2_11");
    ASSERT_NE(it, t.columns.end());
    const auto rel = std::find(t.columns.begin(), t.columns.end(), "rel_diff_g2_11");
    ASSERT_NE(rel, t.columns.end());
    for (const auto& r : t.rows) EXPECT_LT(std::get<double>(r[static_cast<std::size_t>(rel - t.columns.begin())]), 0.5);
}

TEST(Scenario, UpbSolveReportsVanishingAmplitude) {
    const ResultTable t = run_scenario(load_scenario(config_path("upb_solve.json")));
    ASSERT_FALSE(t.rows.empty());
    for (const auto& r : t.rows) {
        EXPECT_LT(std::get<double>(r[3]), 1e-12);
        EXPECT_GT(std::get<double>(r[4]), std::get<double>(r[3]));
    }
}

TEST(Figures, AllIdsResolve) {
    for (const auto& id : figure_ids()) EXPECT_NO_THROW(figure_scenario(id)) << id;
    EXPECT_THROW(figure_scenario("fig9z"), UnknownFigure);
    const ResultTable s1 = reproduce_figure("figS1");
    EXPECT_EQ(s1.rows.size(), 401u);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"--version"}).code, exit_ok);
    EXPECT_EQ(run({"--config", "/nonexistent/cfg.json"}).code, exit_config);
    EXPECT_EQ(run({"--figure", "fig9z"}).code, exit_config);
    EXPECT_EQ(run({"--bogus"}).code, exit_usage);
    const fs::path bad = scratch("bad.json");
    std::ofstream(bad) << R"({"task": "single_point", "params": {"xi": -1}})";
    const CliRun r = run({"--config", bad.string()});
    EXPECT_EQ(r.code, exit_config);
    EXPECT_NE(r.err.find("xi"), std::string::npos);
    const fs::path slow = scratch("slow.json");
    std::ofstream(slow) << R"({"task": "single_point", "engine": "master", "params": {"preset": "table_kerr"},
        "master": {"method": "time_march", "n1_max": 2, "n2_max": 2, "t_max": 0.5, "probe_interval": 0.1}})";
    EXPECT_EQ(run({"--config", slow.string()}).code, exit_numerical);
}

TEST(Cli, WritesCsvAndOperatorDump) {
    const fs::path out = scratch("scan.csv"), ops = scratch("ops.json");
    const CliRun r = run({"--config", config_path("eigen_sweep.json"), "--out", out.string(), "--dump-operators", ops.string()});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    std::ifstream in(out);
    std::stringstream buf;
    buf << in.rdbuf();
    EXPECT_EQ(data_lines(buf.str()).size(), 202u);
    std::ifstream oin(ops);
    const json dump = json::parse(oin);
    const auto n = dump["basis"].size();
    EXPECT_EQ(dump["rotating_driven"].size(), n);
    EXPECT_EQ(dump["rotating_driven"][0].size(), n);
    EXPECT_EQ(dump["jumps"].size(), 2u);
}

TEST(Cli, TaskOverrideAndTraceLog) {
    const fs::path cfg = scratch("point.json"), log = scratch("trace.csv");
    std::ofstream(cfg) << R"({"task": "single_point", "engine": "master", "params": {"preset": "table_kerr", "beta_pi": 0.5},
        "master": {"n1_max": 2, "n2_max": 2, "dt": 0.002}})";
    const CliRun r = run({"--config", cfg.string(), "--format", "json", "--trace-log", log.string()});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["metadata"]["task"], "single_point");
    std::ifstream in(log);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "t,trace_re,trace_im,purity,mean_m,mean_n");
    EXPECT_FALSE(first.empty());
    const CliRun upb = run({"--config", config_path("upb_solve.json"), "--task", "single_point"});
    EXPECT_EQ(upb.code, exit_ok);
}
