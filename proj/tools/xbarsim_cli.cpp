#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "xbarsim/errors.hpp"
#include "xbarsim/experiment.hpp"
#include "xbarsim/format.hpp"
#include "xbarsim/io.hpp"
#include "xbarsim/kernels.hpp"
#include "xbarsim/patch.hpp"
#include "xbarsim/training.hpp"

using namespace xbarsim;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment or training config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "override the config seed");
    cmd->add_option("--out", c.out, "override the output directory");
    cmd->add_option("--threads", c.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
}

ExperimentConfig load(const Common& c) {
    auto config = load_experiment_config(c.config);
    if (c.seed) {
        config.seed = c.seed;
    }
    if (!c.out.empty()) {
        config.output = c.out;
    }
    return config;
}

int cmd_train(const Common& c) {
    std::ifstream in(c.config);
    std::stringstream text;
    text << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const fs::path base = fs::path(c.config).parent_path();
    auto path = [&](const char* key) -> fs::path {
        if (!j.contains(key) || !j.at(key).is_string()) {
            throw ConfigError(std::string(key) + ": required path string");
        }
        fs::path p = j.at(key).get<std::string>();
        return p.is_relative() ? base / p : p;
    };
    TrainOptions opt;
    try {
        opt.architecture = j.value("architecture", opt.architecture);
        opt.epochs = j.value("epochs", opt.epochs);
        opt.learning_rate = j.value("learning_rate", opt.learning_rate);
        opt.seed = j.value("seed", opt.seed);
        opt.hidden = j.value("hidden", opt.hidden);
        opt.channels = j.value("channels", opt.channels);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.seed) {
        opt.seed = *c.seed;
    }
    const fs::path out = c.out.empty() ? path("output") : fs::path(c.out);
    const Dataset train = read_dataset(path("dataset"));

    TrainReport report;
    const NetworkSpec net = train_fixture(train, opt, &report);
    write_network(out, net);
    std::cout << "architecture " << opt.architecture << ", " << opt.epochs << " epochs, lr "
              << format_double(opt.learning_rate) << ", seed " << opt.seed << '\n'
              << "final loss " << format_fixed(report.loss.empty() ? 0.0 : report.loss.back(), 6)
              << ", train accuracy " << format_fixed(report.train_accuracy, 4) << '\n';
    if (j.contains("test")) {
        const Dataset test = read_dataset(path("test"));
        std::cout << "test accuracy " << format_fixed(evaluate(net, test).accuracy, 4) << '\n';
    }
    std::cout << "wrote " << out.string() << '\n';
    return 0;
}

int cmd_run(const Common& c, bool timing) {
    auto config = load(c);
    if (timing) {
        config.record_runtime = true;
    }
    const auto rows = run_experiment(config);
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (r.failed()) {
            ++failed;
            std::cerr << "warning: grid point failed: " << r.error << '\n';
        }
    }
    std::cout << rows.size() << " rows -> " << (config.output / (config.experiment + ".csv")).string() << '\n';
    if (failed > 0) {
        std::cerr << failed << " of " << rows.size() << " grid points failed\n";
    }
    return 0;
}

int cmd_hysteresis(const Common& c) {
    auto config = load(c);
    if (config.experiment != "hysteresis") {
        throw ConfigError("experiment: expected 'hysteresis', got '" + config.experiment + "'");
    }
    for (const auto& r : emit_hysteresis(config)) {
        std::cout << format_double(r.frequency) << " Hz: area " << format_double(r.metrics.loop_area)
                  << (r.metrics.pinched_at_origin ? ", pinched" : ", not pinched") << '\n';
    }
    return 0;
}

int cmd_inspect(const Common& c) {
    auto config = load(c);
    if (config.experiment == "hysteresis") {
        throw ConfigError("experiment: inspect-tiles needs a network experiment");
    }
    if (!config.seed) {
        config.seed = 0;
    }
    config.validate();
    const NetworkSpec net = read_network(config.network);
    const Dataset calib = read_dataset(config.calibration.empty() ? config.dataset : config.calibration)
                              .head(config.calibration_samples);
    NonIdealityConfig nonideal = config.nonideal;
    nonideal.seed = *config.seed;
    const PatchedNetwork patched = patch_network(net, config.device, config.engine, nonideal, calib.images);
    fs::create_directories(config.output);
    for (std::size_t i = 0; i < patched.layers.size(); ++i) {
        const MappedLayer* mapped = nullptr;
        const FaultMask* faults = nullptr;
        if (const auto* a = std::get_if<AnalogConv>(&patched.layers[i])) {
            mapped = &a->mapped;
            faults = &a->faults;
        } else if (const auto* l = std::get_if<AnalogLinear>(&patched.layers[i])) {
            mapped = &l->mapped;
            faults = &l->faults;
        } else {
            continue;
        }
        std::vector<TilePlacement> placements;
        for (const auto& t : mapped->pos) {
            placements.push_back(t.placement);
        }
        std::ofstream tiles(config.output / ("tiles_" + std::to_string(i) + ".csv"));
        write_tile_layout_csv(tiles, placements);
        std::ofstream mask(config.output / ("faults_" + std::to_string(i) + ".csv"));
        write_fault_mask_csv(mask, *mapped, *faults);
        std::cout << "layer " << i << ": " << mapped->rows << "x" << mapped->cols << " on " << placements.size()
                  << " tile(s) per array, " << faults->count(Fault::stuck_lrs) << " stuck-LRS, "
                  << faults->count(Fault::stuck_hrs) << " stuck-HRS, K " << format_double(mapped->k) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memristor crossbar inference simulator"};
    app.require_subcommand(1);

    Common train_opts, run_opts, hyst_opts, inspect_opts;
    bool timing = false;
    auto* train = app.add_subcommand("train-fixture", "train a fixture network and write its weight container");
    add_common(train, train_opts);
    auto* run = app.add_subcommand("run", "run an accuracy sweep");
    add_common(run, run_opts);
    run->add_flag("--timing", timing, "record per-point runtime in the results CSV");
    auto* hyst = app.add_subcommand("hysteresis", "simulate I-V loops over a frequency sweep");
    add_common(hyst, hyst_opts);
    auto* inspect = app.add_subcommand("inspect-tiles", "write tile layouts and fault masks of a patched network");
    add_common(inspect, inspect_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const Common& active = train->parsed() ? train_opts
                               : run->parsed() ? run_opts
                               : hyst->parsed() ? hyst_opts
                                                : inspect_opts;
        if (active.threads > 0) {
            set_threads(active.threads);
        }
        if (train->parsed()) {
            return cmd_train(train_opts);
        }
        if (run->parsed()) {
            return cmd_run(run_opts, timing);
        }
        if (hyst->parsed()) {
            return cmd_hysteresis(hyst_opts);
        }
        return cmd_inspect(inspect_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
