#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xbarsim/crossbar_engine.hpp"
#include "xbarsim/device_model.hpp"
#include "xbarsim/nonidealities.hpp"

namespace xbarsim {

namespace fs = std::filesystem;

/// Grid axis names a config may sweep. `tile` is a square tile edge.
inline constexpr const char* kGridKeys[] = {"v_max",  "v_prog", "adc_bits", "overflow_rate", "tile",
                                           "sigma",  "states", "p_lrs",    "p_hrs",         "cycles",
                                           "temperature", "drift_nu", "drift_time"};

struct GridAxis {
    std::string key;
    std::vector<double> values;
};

struct HysteresisSweep {
    double amplitude = 1.0;  // V
    std::vector<double> frequencies{1e7, 1e8, 1e9};  // Hz
    std::size_t periods = 4;  // metrics use the last one
    std::size_t samples_per_period = 2000;
};

/// One experiment file, JSON:
///
///   {
///     "experiment": "saf_grid",
///     "network": "fixtures/cnn", "dataset": "../data/digits/test",
///     "calibration": "../data/digits/train", "calibration_samples": 64,
///     "seed": 7, "replicates": 1,
///     "device": {...}, "engine": {...}, "nonideal": {...},
///     "grid": {"p_lrs": [0, 0.01, 0.05], "p_hrs": [0, 0.01, 0.05]},
///     "output": "out/saf"
///   }
///
/// Relative paths resolve against the config file's directory. Grid axes
/// keep their file order; the cartesian product is walked with the last
/// axis fastest.
struct ExperimentConfig {
    std::string experiment;
    fs::path network;
    fs::path dataset;
    fs::path calibration;              // defaults to `dataset`
    std::size_t calibration_samples = 64;
    std::size_t limit = 0;             // evaluate only the first n items; 0 = all
    std::optional<std::uint64_t> seed;
    std::size_t replicates = 1;
    DeviceParams device;
    EngineConfig engine;
    NonIdealityConfig nonideal;
    std::vector<GridAxis> grid;
    HysteresisSweep sweep;
    fs::path output;
    bool record_runtime = false;       // fill runtime_s in the results CSV

    bool stochastic() const;
    std::size_t grid_size() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir = {});
ExperimentConfig load_experiment_config(const fs::path& path);

struct ResultRow {
    std::string experiment;
    std::vector<std::pair<std::string, double>> params;
    std::size_t replicate = 0;
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    double runtime_s = 0.0;
    std::uint64_t seed = 0;
    std::string error;  // non-empty for a failed grid point

    bool failed() const { return !error.empty(); }
};

/// Apply one grid point to the base settings. Throws ConfigError for an
/// unknown key or an out-of-range value.
void apply_grid_value(const std::string& key, double value, EngineConfig& engine, NonIdealityConfig& nonideal);

/// Patch and evaluate the network at every grid point (times replicates).
/// Rows are written to `<output>/<experiment>.csv` as each point finishes,
/// with a full-precision sidecar `<experiment>.full.csv`. A failing point
/// becomes an error row and the run continues.
///
/// Replicate r of every grid point uses seed derive_seed(seed, {r}), so all
/// points of a replicate share their random streams.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

struct HysteresisResult {
    double frequency = 0.0;
    HysteresisMetrics metrics;
    fs::path trace;
};

/// Sine sweep at each frequency from the HRS state, loop metrics taken
/// over the final period. Writes
/// `hysteresis_<n>.csv` traces and `hysteresis_summary.csv`
/// (`frequency,loop_area,pinched`) under the output directory.
std::vector<HysteresisResult> emit_hysteresis(const ExperimentConfig& config);

/// Results CSV header for the given parameter keys.
std::string results_header(const std::vector<std::string>& keys, bool with_replicate);
std::string format_row(const ResultRow& row, bool with_replicate, bool with_runtime);

}  // namespace xbarsim
