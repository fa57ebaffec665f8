#include "xbarsim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "xbarsim/errors.hpp"
#include "xbarsim/format.hpp"
#include "xbarsim/io.hpp"
#include "xbarsim/patch.hpp"
#include "xbarsim/rng.hpp"

namespace xbarsim {

using json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kAccuracyExperiments = {"miv_sweep", "adc_tile", "sigma_states", "saf_grid",
                                                    "endurance_retention"};

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw ConfigError(where + key + ": unknown field");
        }
    }
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError(where + key + ": expected a number");
    }
    return v.get<double>();
}

std::size_t get_count(const json& obj, const char* key, const std::string& where, std::size_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(where + key + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

int get_int(const json& obj, const char* key, const std::string& where, int fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_number_integer()) {
        throw ConfigError(where + key + ": expected an integer");
    }
    return obj.at(key).get<int>();
}

fs::path get_path(const json& obj, const char* key, const fs::path& base) {
    if (!obj.contains(key)) {
        return {};
    }
    if (!obj.at(key).is_string()) {
        throw ConfigError(std::string(key) + ": expected a path string");
    }
    fs::path p = obj.at(key).get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
}

void parse_device(const json& j, DeviceParams& d) {
    const std::string w = "device.";
    reject_unknown(j, w, {"r_on", "r_off", "v_on", "v_off", "k_on", "k_off", "alpha_on", "alpha_off", "w_min",
                          "w_max", "dt"});
    d.r_on = get_number(j, "r_on", w, d.r_on);
    d.r_off = get_number(j, "r_off", w, d.r_off);
    d.v_on = get_number(j, "v_on", w, d.v_on);
    d.v_off = get_number(j, "v_off", w, d.v_off);
    d.k_on = get_number(j, "k_on", w, d.k_on);
    d.k_off = get_number(j, "k_off", w, d.k_off);
    d.alpha_on = get_number(j, "alpha_on", w, d.alpha_on);
    d.alpha_off = get_number(j, "alpha_off", w, d.alpha_off);
    d.w_min = get_number(j, "w_min", w, d.w_min);
    d.w_max = get_number(j, "w_max", w, d.w_max);
    d.dt = get_number(j, "dt", w, d.dt);
}

void parse_engine(const json& j, EngineConfig& e) {
    const std::string w = "engine.";
    reject_unknown(j, w, {"tile", "tiles", "v_max", "v_prog", "adc_bits", "overflow_rate", "states", "use_adc",
                          "k_samples"});
    if (j.contains("tile")) {
        const auto n = get_count(j, "tile", w, 0);
        e.tiles = {{n, n}};
    }
    if (j.contains("tiles")) {
        const auto& list = j.at("tiles");
        if (!list.is_array()) {
            throw ConfigError("engine.tiles: expected a list of [rows, cols] pairs");
        }
        e.tiles.clear();
        for (const auto& t : list) {
            if (!t.is_array() || t.size() != 2 || !t[0].is_number_unsigned() || !t[1].is_number_unsigned()) {
                throw ConfigError("engine.tiles: expected a list of [rows, cols] pairs");
            }
            e.tiles.push_back({t[0].get<std::size_t>(), t[1].get<std::size_t>()});
        }
    }
    e.v_max = get_number(j, "v_max", w, e.v_max);
    e.v_prog = get_number(j, "v_prog", w, e.v_prog);
    e.adc_bits = get_int(j, "adc_bits", w, e.adc_bits);
    e.overflow_rate = get_number(j, "overflow_rate", w, e.overflow_rate);
    e.states = get_int(j, "states", w, e.states);
    if (j.contains("use_adc")) {
        if (!j.at("use_adc").is_boolean()) {
            throw ConfigError("engine.use_adc: expected true or false");
        }
        e.use_adc = j.at("use_adc").get<bool>();
    }
    e.k_samples = get_count(j, "k_samples", w, e.k_samples);
}

void parse_nonideal(const json& j, NonIdealityConfig& n) {
    const std::string w = "nonideal.";
    reject_unknown(j, w, {"sigma", "states", "p_lrs", "p_hrs", "cycles", "temperature", "drift_nu", "drift_time",
                          "activation_energy_ev", "endurance_lambda"});
    n.sigma = get_number(j, "sigma", w, n.sigma);
    n.states = get_int(j, "states", w, n.states);
    n.p_lrs = get_number(j, "p_lrs", w, n.p_lrs);
    n.p_hrs = get_number(j, "p_hrs", w, n.p_hrs);
    n.cycles = get_number(j, "cycles", w, n.cycles);
    n.temperature = get_number(j, "temperature", w, n.temperature);
    n.drift_nu = get_number(j, "drift_nu", w, n.drift_nu);
    n.drift_time = get_number(j, "drift_time", w, n.drift_time);
    n.endurance.activation_energy_ev = get_number(j, "activation_energy_ev", w, n.endurance.activation_energy_ev);
    n.endurance.lambda = get_number(j, "endurance_lambda", w, n.endurance.lambda);
}

void parse_sweep(const json& j, HysteresisSweep& s) {
    const std::string w = "sweep.";
    reject_unknown(j, w, {"amplitude", "frequencies", "periods", "samples_per_period"});
    s.amplitude = get_number(j, "amplitude", w, s.amplitude);
    if (j.contains("frequencies")) {
        const auto& f = j.at("frequencies");
        if (!f.is_array() || !std::all_of(f.begin(), f.end(), [](const json& v) { return v.is_number(); })) {
            throw ConfigError("sweep.frequencies: expected a list of numbers");
        }
        s.frequencies = f.get<std::vector<double>>();
    }
    s.periods = get_count(j, "periods", w, s.periods);
    s.samples_per_period = get_count(j, "samples_per_period", w, s.samples_per_period);
}

bool is_integral(double v) { return std::floor(v) == v; }

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

}  // namespace

bool ExperimentConfig::stochastic() const {
    if (experiment == "sigma_states" || experiment == "saf_grid" || experiment == "endurance_retention") {
        return true;
    }
    return nonideal.sigma > 0.0 || nonideal.p_lrs > 0.0 || nonideal.p_hrs > 0.0 ||
           (nonideal.drift_nu > 0.0 && nonideal.drift_time > 0.0);
}

std::size_t ExperimentConfig::grid_size() const {
    std::size_t n = 1;
    for (const auto& axis : grid) {
        n *= axis.values.size();
    }
    return n;
}

void apply_grid_value(const std::string& key, double value, EngineConfig& engine, NonIdealityConfig& nonideal) {
    auto need_int = [&](double lo) {
        if (!is_integral(value) || value < lo) {
            throw ConfigError("grid." + key + ": " + format_double(value) + " is not an integer >= " +
                              format_double(lo));
        }
    };
    if (key == "v_max") {
        engine.v_max = value;
    } else if (key == "v_prog") {
        engine.v_prog = value;
    } else if (key == "adc_bits") {
        need_int(1);
        engine.adc_bits = static_cast<int>(value);
    } else if (key == "overflow_rate") {
        engine.overflow_rate = value;
    } else if (key == "tile") {
        need_int(1);
        const auto n = static_cast<std::size_t>(value);
        engine.tiles = {{n, n}};
    } else if (key == "sigma") {
        nonideal.sigma = value;
    } else if (key == "states") {
        need_int(0);
        nonideal.states = static_cast<int>(value);
    } else if (key == "p_lrs") {
        nonideal.p_lrs = value;
    } else if (key == "p_hrs") {
        nonideal.p_hrs = value;
    } else if (key == "cycles") {
        nonideal.cycles = value;
    } else if (key == "temperature") {
        nonideal.temperature = value;
    } else if (key == "drift_nu") {
        nonideal.drift_nu = value;
    } else if (key == "drift_time") {
        nonideal.drift_time = value;
    } else {
        throw ConfigError("grid." + key + ": unknown parameter");
    }
    try {
        engine.validate();
        nonideal.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("grid." + key + " = " + format_double(value) + ": " + e.what());
    }
}

void ExperimentConfig::validate() const {
    const bool hysteresis = experiment == "hysteresis";
    if (!hysteresis && !kAccuracyExperiments.contains(experiment)) {
        throw ConfigError("experiment: unknown experiment '" + experiment + "'");
    }
    device.validate();
    engine.validate();
    nonideal.validate();
    if (output.empty()) {
        throw ConfigError("output: an output directory is required");
    }
    if (hysteresis) {
        if (sweep.frequencies.empty()) {
            throw ConfigError("sweep.frequencies: must not be empty");
        }
        for (double f : sweep.frequencies) {
            if (!(f > 0.0)) {
                throw ConfigError("sweep.frequencies: must be > 0");
            }
        }
        if (!(sweep.amplitude >= 0.0)) {
            throw ConfigError("sweep.amplitude: must be >= 0");
        }
        if (sweep.periods == 0 || sweep.samples_per_period < 4) {
            throw ConfigError("sweep: need periods >= 1 and samples_per_period >= 4");
        }
        return;
    }
    if (network.empty() || !fs::exists(network / "manifest")) {
        throw ConfigError("network: no weight container at '" + network.string() + "'");
    }
    if (dataset.empty() || !fs::exists(dataset / "manifest")) {
        throw ConfigError("dataset: no dataset container at '" + dataset.string() + "'");
    }
    if (!calibration.empty() && !fs::exists(calibration / "manifest")) {
        throw ConfigError("calibration: no dataset container at '" + calibration.string() + "'");
    }
    if (calibration_samples == 0) {
        throw ConfigError("calibration_samples: must be >= 1");
    }
    if (replicates == 0) {
        throw ConfigError("replicates: must be >= 1");
    }
    if (stochastic() && !seed) {
        throw ConfigError("seed: required for " + experiment);
    }
    if (grid.empty()) {
        throw ConfigError("grid: at least one axis is required");
    }
    std::set<std::string> seen;
    for (const auto& axis : grid) {
        if (!seen.insert(axis.key).second) {
            throw ConfigError("grid." + axis.key + ": duplicate axis");
        }
        if (axis.values.empty()) {
            throw ConfigError("grid." + axis.key + ": must not be empty");
        }
        for (double v : axis.values) {
            EngineConfig e = engine;
            NonIdealityConfig n = nonideal;
            apply_grid_value(axis.key, v, e, n);
        }
    }
}

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    reject_unknown(j, "", {"experiment", "network", "dataset", "calibration", "calibration_samples", "limit", "seed",
                           "replicates", "device", "engine", "nonideal", "grid", "sweep", "output",
                           "record_runtime"});
    ExperimentConfig c;
    if (!j.contains("experiment") || !j.at("experiment").is_string()) {
        throw ConfigError("experiment: required string");
    }
    c.experiment = j.at("experiment").get<std::string>();
    c.network = get_path(j, "network", base_dir);
    c.dataset = get_path(j, "dataset", base_dir);
    c.calibration = get_path(j, "calibration", base_dir);
    c.output = get_path(j, "output", base_dir);
    c.calibration_samples = get_count(j, "calibration_samples", "", c.calibration_samples);
    c.limit = get_count(j, "limit", "", c.limit);
    c.replicates = get_count(j, "replicates", "", c.replicates);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) {
            throw ConfigError("seed: expected a non-negative integer");
        }
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("record_runtime")) {
        if (!j.at("record_runtime").is_boolean()) {
            throw ConfigError("record_runtime: expected true or false");
        }
        c.record_runtime = j.at("record_runtime").get<bool>();
    }
    for (const char* section : {"device", "engine", "nonideal", "sweep", "grid"}) {
        if (j.contains(section) && !j.at(section).is_object()) {
            throw ConfigError(std::string(section) + ": expected an object");
        }
    }
    if (j.contains("device")) {
        parse_device(j.at("device"), c.device);
    }
    if (j.contains("engine")) {
        parse_engine(j.at("engine"), c.engine);
    }
    if (j.contains("nonideal")) {
        parse_nonideal(j.at("nonideal"), c.nonideal);
    }
    if (j.contains("sweep")) {
        parse_sweep(j.at("sweep"), c.sweep);
    }
    if (j.contains("grid")) {
        for (const auto& [key, values] : j.at("grid").items()) {
            if (std::find(std::begin(kGridKeys), std::end(kGridKeys), key) == std::end(kGridKeys)) {
                throw ConfigError("grid." + key + ": unknown parameter");
            }
            if (!values.is_array() ||
                !std::all_of(values.begin(), values.end(), [](const json& v) { return v.is_number(); })) {
                throw ConfigError("grid." + key + ": expected a list of numbers");
            }
            c.grid.push_back({key, values.get<std::vector<double>>()});
        }
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config: cannot read " + path.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    return parse_experiment_config(text.str(), path.parent_path());
}

std::string results_header(const std::vector<std::string>& keys, bool with_replicate) {
    std::string h = "experiment";
    for (const auto& k : keys) {
        h += ',' + k;
    }
    if (with_replicate) {
        h += ",replicate";
    }
    return h + ",accuracy,runtime_s,seed";
}

std::string format_row(const ResultRow& row, bool with_replicate, bool with_runtime) {
    std::string s = row.experiment;
    for (const auto& [_, v] : row.params) {
        s += ',' + format_double(v);
    }
    if (with_replicate) {
        s += ',' + std::to_string(row.replicate);
    }
    s += ',' + (row.failed() ? std::string("error") : format_fixed(row.accuracy, 4));
    s += ',' + (with_runtime ? format_fixed(row.runtime_s, 3) : std::string());
    return s + ',' + std::to_string(row.seed);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.experiment == "hysteresis") {
        throw UsageError("run_experiment: use emit_hysteresis for the hysteresis experiment");
    }
    const NetworkSpec net = read_network(config.network);
    Dataset data = read_dataset(config.dataset);
    if (config.limit > 0) {
        data = data.head(config.limit);
    }
    const Dataset calib_data = config.calibration.empty() ? data : read_dataset(config.calibration);
    const Dataset calib_head = calib_data.head(config.calibration_samples);
    const std::vector<Tensor>& calibration = calib_head.images;
    const std::uint64_t master = config.seed.value_or(0);

    fs::create_directories(config.output);
    auto csv = open_output(config.output / (config.experiment + ".csv"));
    auto full = open_output(config.output / (config.experiment + ".full.csv"));

    std::vector<std::string> keys;
    for (const auto& axis : config.grid) {
        keys.push_back(axis.key);
    }
    const bool with_replicate = config.replicates > 1;
    csv << results_header(keys, with_replicate) << '\n' << std::flush;
    {
        std::string h = "experiment";
        for (const auto& k : keys) {
            h += ',' + k;
        }
        full << h << ",replicate,correct,total,accuracy,runtime_s,seed,error\n" << std::flush;
    }

    std::vector<ResultRow> rows;
    const std::size_t points = config.grid_size();
    for (std::size_t p = 0; p < points; ++p) {
        EngineConfig engine = config.engine;
        NonIdealityConfig nonideal = config.nonideal;
        ResultRow base;
        base.experiment = config.experiment;
        base.seed = master;
        std::size_t rest = p;
        std::vector<std::size_t> index(config.grid.size());
        for (std::size_t a = config.grid.size(); a-- > 0;) {
            index[a] = rest % config.grid[a].values.size();
            rest /= config.grid[a].values.size();
        }
        for (std::size_t a = 0; a < config.grid.size(); ++a) {
            const double v = config.grid[a].values[index[a]];
            apply_grid_value(config.grid[a].key, v, engine, nonideal);
            base.params.emplace_back(config.grid[a].key, v);
        }
        for (std::size_t r = 0; r < config.replicates; ++r) {
            ResultRow row = base;
            row.replicate = r;
            nonideal.seed = derive_seed(master, {r});
            const auto start = std::chrono::steady_clock::now();
            try {
                const PatchedNetwork patched = patch_network(net, config.device, engine, nonideal, calibration);
                const EvalResult res = evaluate(patched, data);
                row.accuracy = res.accuracy;
                row.correct = res.correct;
                row.total = res.total;
            } catch (const std::exception& e) {
                row.error = e.what();
                if (row.error.empty()) {
                    row.error = "unknown error";
                }
            }
            row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            csv << format_row(row, with_replicate, config.record_runtime) << '\n' << std::flush;
            std::string f = row.experiment;
            for (const auto& [_, v] : row.params) {
                f += ',' + format_double(v);
            }
            std::string message = row.error;
            std::replace(message.begin(), message.end(), '"', '\'');
            full << f << ',' << r << ',' << row.correct << ',' << row.total << ','
                 << (row.failed() ? std::string() : format_double(row.accuracy)) << ','
                 << format_double(row.runtime_s) << ',' << row.seed << ','
                 << (message.empty() ? std::string() : '"' + message + '"') << '\n'
                 << std::flush;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<HysteresisResult> emit_hysteresis(const ExperimentConfig& config) {
    config.validate();
    fs::create_directories(config.output);
    std::vector<HysteresisResult> results;
    const DeviceState hrs = make_state(config.device, config.device.w_min);
    for (std::size_t n = 0; n < config.sweep.frequencies.size(); ++n) {
        const double f = config.sweep.frequencies[n];
        const auto wave = sine_waveform(config.sweep.amplitude, f, config.sweep.periods,
                                        config.sweep.samples_per_period);
        const auto trace = simulate_waveform(config.device, hrs, wave);
        HysteresisResult r;
        r.frequency = f;
        // The first periods carry the turn-on transient from HRS; the loop
        // is measured on the last one.
        const std::size_t last = trace.size() - config.sweep.samples_per_period - 1;
        r.metrics = hysteresis_metrics(std::span(trace).subspan(last));
        r.trace = config.output / ("hysteresis_" + std::to_string(n) + ".csv");
        auto out = open_output(r.trace);
        write_trace_csv(out, trace);
        results.push_back(std::move(r));
    }
    auto summary = open_output(config.output / "hysteresis_summary.csv");
    summary << "frequency,loop_area,pinched\n";
    for (const auto& r : results) {
        summary << format_double(r.frequency) << ',' << format_double(r.metrics.loop_area) << ','
                << (r.metrics.pinched_at_origin ? "true" : "false") << '\n';
    }
    return results;
}

}  // namespace xbarsim
