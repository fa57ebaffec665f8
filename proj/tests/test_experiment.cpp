#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "xbarsim/errors.hpp"
#include "xbarsim/experiment.hpp"
#include "xbarsim/io.hpp"

using namespace xbarsim;
using xbarsim::testing::scratch_dir;
using xbarsim::testing::source_path;

namespace {

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

std::string paths_json(const fs::path& out) {
    return "\"network\": \"" + source_path("data/fixtures/mlp").string() + "\", \"dataset\": \"" +
           source_path("data/digits/test").string() + "\", \"calibration\": \"" +
           source_path("data/digits/train").string() + "\", \"output\": \"" + out.string() + "\"";
}

std::string message_of(const std::string& text) {
    try {
        parse_experiment_config(text).validate();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ExperimentConfig, ParsesFieldsAndResolvesRelativePaths) {
    const auto c = parse_experiment_config(R"({
        "experiment": "adc_tile", "network": "nets/a", "dataset": "/abs/data", "seed": 4,
        "engine": {"adc_bits": 6, "tile": 32},
        "grid": {"tile": [64, 128], "adc_bits": [2, 4, 8]},
        "output": "out"})",
                                           "/base");
    EXPECT_EQ(c.network, fs::path("/base/nets/a"));
    EXPECT_EQ(c.dataset, fs::path("/abs/data"));
    EXPECT_EQ(c.output, fs::path("/base/out"));
    EXPECT_EQ(c.seed, 4u);
    EXPECT_EQ(c.engine.adc_bits, 6);
    ASSERT_EQ(c.engine.tiles.size(), 1u);
    EXPECT_EQ(c.engine.tiles[0].rows, 32u);
    ASSERT_EQ(c.grid.size(), 2u);
    EXPECT_EQ(c.grid[0].key, "tile");
    EXPECT_EQ(c.grid[1].key, "adc_bits");
    EXPECT_EQ(c.grid_size(), 6u);
}

TEST(ExperimentConfig, ErrorsNameTheField) {
    const auto out = scratch_dir("cfg_errors");
    const auto p = paths_json(out);
    EXPECT_NE(message_of(R"({"experiment": "saf_grid", "bogus": 1})").find("bogus"), std::string::npos);
    EXPECT_NE(message_of(R"({"experiment": "saf_grid", "engine": {"adc_bitz": 4}})").find("engine.adc_bitz"),
              std::string::npos);
    EXPECT_NE(message_of(R"({"experiment": "saf_grid", "grid": {"volume": [1]}})").find("grid.volume"),
              std::string::npos);
    EXPECT_NE(message_of(R"({"experiment": "nope", )" + p + "}").find("experiment"), std::string::npos);
    EXPECT_NE(message_of(R"({"experiment": "saf_grid", "seed": 1, "grid": {"p_lrs": [0.5, 1.5]}, )" + p + "}")
                  .find("grid.p_lrs"),
              std::string::npos);
    EXPECT_NE(message_of(R"({"experiment": "adc_tile", "grid": {"adc_bits": [2.5]}, )" + p + "}").find("adc_bits"),
              std::string::npos);
    EXPECT_NE(message_of(R"({"experiment": "miv_sweep", "grid": {"v_max": [-1]}, )" + p + "}").find("v_max"),
              std::string::npos);
    EXPECT_NE(message_of("[1, 2]").find("config"), std::string::npos);
    EXPECT_NE(message_of("{ nope").find("config"), std::string::npos);
}

TEST(ExperimentConfig, StochasticExperimentsRequireASeed) {
    const auto p = paths_json(scratch_dir("cfg_seed"));
    EXPECT_NE(message_of(R"({"experiment": "sigma_states", "grid": {"sigma": [0, 10]}, )" + p + "}").find("seed"),
              std::string::npos);
    EXPECT_NE(message_of(R"({"experiment": "miv_sweep", "nonideal": {"sigma": 5}, "grid": {"v_max": [1]}, )" + p +
                         "}")
                  .find("seed"),
              std::string::npos);
    EXPECT_EQ(message_of(R"({"experiment": "miv_sweep", "grid": {"v_max": [1, 2]}, )" + p + "}"), "");
}

TEST(ExperimentConfig, MissingContainersAreReported) {
    const auto out = scratch_dir("cfg_missing");
    const std::string text = R"({"experiment": "miv_sweep", "network": "/nonexistent/net", "dataset": "/nonexistent",
        "grid": {"v_max": [1]}, "output": ")" + out.string() + "\"}";
    EXPECT_NE(message_of(text).find("network"), std::string::npos);
}

TEST(ResultsCsv, HeaderAndRowFormat) {
    EXPECT_EQ(results_header({"p_lrs", "p_hrs"}, false), "experiment,p_lrs,p_hrs,accuracy,runtime_s,seed");
    EXPECT_EQ(results_header({"sigma"}, true), "experiment,sigma,replicate,accuracy,runtime_s,seed");
    ResultRow row;
    row.experiment = "saf_grid";
    row.params = {{"p_lrs", 0.01}, {"p_hrs", 0.0}};
    row.accuracy = 0.912345;
    row.runtime_s = 1.23456;
    row.seed = 7;
    EXPECT_EQ(format_row(row, false, false), "saf_grid,0.01,0,0.9123,,7");
    EXPECT_EQ(format_row(row, false, true), "saf_grid,0.01,0,0.9123,1.235,7");
    row.error = "boom";
    EXPECT_EQ(format_row(row, false, false), "saf_grid,0.01,0,error,,7");
}

TEST(RunExperiment, RowCountMatchesGridAndRerunsAreByteIdentical) {
    const auto out = scratch_dir("run_saf");
    const std::string text = R"({"experiment": "saf_grid", "seed": 11, "limit": 60, "replicates": 2,
        "grid": {"p_lrs": [0, 0.05], "p_hrs": [0, 0.01, 0.05]}, )" + paths_json(out) + "}";
    const auto config = parse_experiment_config(text);
    const auto rows = run_experiment(config);
    ASSERT_EQ(rows.size(), 2u * 3u * 2u);
    const auto first = read_text(out / "saf_grid.csv");
    const auto first_lines = lines(first);
    ASSERT_EQ(first_lines.size(), 1u + rows.size());
    EXPECT_EQ(first_lines[0], "experiment,p_lrs,p_hrs,replicate,accuracy,runtime_s,seed");
    // Last axis fastest, replicates innermost.
    EXPECT_EQ(rows[0].params[1].second, 0.0);
    EXPECT_EQ(rows[2].params[1].second, 0.01);
    EXPECT_EQ(rows[1].replicate, 1u);
    EXPECT_EQ(rows[6].params[0].second, 0.05);
    for (const auto& r : rows) {
        EXPECT_FALSE(r.failed()) << r.error;
        EXPECT_EQ(r.total, 60u);
    }
    EXPECT_TRUE(fs::exists(out / "saf_grid.full.csv"));

    run_experiment(config);
    EXPECT_EQ(read_text(out / "saf_grid.csv"), first);
}

TEST(RunExperiment, ReplicatesShareStreamsAcrossGridPoints) {
    const auto out = scratch_dir("run_crn");
    const std::string text = R"({"experiment": "sigma_states", "seed": 3, "limit": 40, "replicates": 2,
        "grid": {"sigma": [0, 0]}, )" + paths_json(out) + "}";
    const auto rows = run_experiment(parse_experiment_config(text));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].accuracy, rows[2].accuracy);
    EXPECT_EQ(rows[1].accuracy, rows[3].accuracy);
}

TEST(RunExperiment, FailingPointBecomesAnErrorRow) {
    // Labels beyond the network's outputs make evaluation fail at every point.
    const auto dir = scratch_dir("run_error");
    Dataset d;
    d.name = "bad";
    d.sample_shape = {1, 8, 8};
    d.num_classes = 12;
    d.images = {Tensor({1, 8, 8}, 0.5), Tensor({1, 8, 8}, 0.25)};
    d.labels = {1, 11};
    write_dataset(dir / "bad", d);
    const std::string text = R"({"experiment": "miv_sweep", "network": ")" +
                             source_path("data/fixtures/mlp").string() + R"(", "dataset": ")" +
                             (dir / "bad").string() + R"(", "calibration": ")" +
                             source_path("data/digits/train").string() + R"(", "output": ")" +
                             (dir / "out").string() + R"(", "grid": {"v_max": [1, 2]}})";
    const auto rows = run_experiment(parse_experiment_config(text));
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_TRUE(r.failed());
        EXPECT_NE(r.error.find("label"), std::string::npos);
    }
    const auto csv = lines(read_text(dir / "out" / "miv_sweep.csv"));
    ASSERT_EQ(csv.size(), 3u);
    EXPECT_EQ(csv[1], "miv_sweep,1,error,,0");
}

TEST(Hysteresis, ZeroAmplitudeGivesNoLoop) {
    const auto out = scratch_dir("hyst_zero");
    auto c = parse_experiment_config(R"({"experiment": "hysteresis", "sweep": {"amplitude": 0,
        "frequencies": [1e8], "periods": 2, "samples_per_period": 200}, "output": ")" + out.string() + "\"}");
    const auto r = emit_hysteresis(c);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].metrics.loop_area, 0.0);
    EXPECT_TRUE(r[0].metrics.pinched_at_origin);
    EXPECT_TRUE(fs::exists(out / "hysteresis_0.csv"));
    EXPECT_EQ(lines(read_text(out / "hysteresis_0.csv"))[0], "t,v,i,w");
}

TEST(Hysteresis, SubThresholdAmplitudeGivesNoArea) {
    const auto out = scratch_dir("hyst_sub");
    auto c = parse_experiment_config(R"({"experiment": "hysteresis", "sweep": {"amplitude": 0.015,
        "frequencies": [1e8], "periods": 2, "samples_per_period": 400}, "output": ")" + out.string() + "\"}");
    const auto r = emit_hysteresis(c);
    EXPECT_NEAR(r[0].metrics.loop_area, 0.0, 1e-12);
}

TEST(Hysteresis, SummaryListsEveryFrequency) {
    const auto out = scratch_dir("hyst_summary");
    auto c = parse_experiment_config(R"({"experiment": "hysteresis", "sweep": {"amplitude": 1,
        "frequencies": [1e7, 1e8, 1e9], "periods": 4, "samples_per_period": 500}, "output": ")" +
                                     out.string() + "\"}");
    const auto r = emit_hysteresis(c);
    const auto summary = lines(read_text(out / "hysteresis_summary.csv"));
    ASSERT_EQ(summary.size(), 4u);
    EXPECT_EQ(summary[0], "frequency,loop_area,pinched");
    EXPECT_GT(r[0].metrics.loop_area, r[1].metrics.loop_area);
    EXPECT_GT(r[1].metrics.loop_area, r[2].metrics.loop_area);
    for (const auto& x : r) {
        EXPECT_TRUE(x.metrics.pinched_at_origin);
    }
}
