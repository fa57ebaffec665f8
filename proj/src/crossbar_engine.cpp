#include "xbarsim/crossbar_engine.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

#include "xbarsim/errors.hpp"
#include "xbarsim/rng.hpp"

namespace xbarsim {

void EngineConfig::validate() const {
    if (tiles.empty()) {
        throw ConfigError("engine.tiles: at least one tile shape is required");
    }
    for (const auto& t : tiles) {
        if (t.rows == 0 || t.cols == 0) {
            throw ConfigError("engine.tiles: tile dimensions must be >= 1");
        }
    }
    if (!(v_max > 0.0)) {
        throw ConfigError("engine.v_max: must be > 0");
    }
    if (!(v_prog > 0.0)) {
        throw ConfigError("engine.v_prog: must be > 0");
    }
    if (adc_bits < 1 || adc_bits > 48) {
        throw ConfigError("engine.adc_bits: must be in [1, 48]");
    }
    if (!(overflow_rate >= 0.0 && overflow_rate < 1.0)) {
        throw ConfigError("engine.overflow_rate: must be in [0, 1)");
    }
    if (states < 0 || states == 1) {
        throw ConfigError("engine.states: must be 0 (continuous) or >= 2");
    }
    if (k_samples == 0) {
        throw ConfigError("engine.k_samples: must be >= 1");
    }
}

namespace {

std::optional<TileShape> best_fit(std::size_t rows, std::size_t cols, std::span<const TileShape> available) {
    std::optional<TileShape> best;
    for (const auto& s : available) {
        if (s.rows < rows || s.cols < cols) {
            continue;
        }
        if (!best || s.area() < best->area() || (s.area() == best->area() && s.rows < best->rows)) {
            best = s;
        }
    }
    return best;
}

}  // namespace

std::vector<TilePlacement> partition_tiles(std::size_t rows, std::size_t cols, std::span<const TileShape> available) {
    if (available.empty()) {
        throw UsageError("partition_tiles: no tile shapes available");
    }
    if (auto fit = best_fit(rows, cols, available)) {
        return {TilePlacement{*fit, 0, 0, rows, cols}};
    }
    const TileShape largest = *std::max_element(available.begin(), available.end(), [](auto& a, auto& b) {
        return a.area() < b.area() || (a.area() == b.area() && a.rows < b.rows);
    });
    std::vector<TilePlacement> out;
    for (std::size_t r0 = 0; r0 < rows; r0 += largest.rows) {
        for (std::size_t c0 = 0; c0 < cols; c0 += largest.cols) {
            const std::size_t br = std::min(largest.rows, rows - r0);
            const std::size_t bc = std::min(largest.cols, cols - c0);
            const auto fit = best_fit(br, bc, available);
            out.push_back(TilePlacement{*fit, r0, c0, br, bc});
        }
    }
    return out;
}

std::vector<double> dac_encode(std::span<const double> x, const DacConfig& dac, double x_ref) {
    if (!(x_ref > 0.0)) {
        throw DomainError("dac_encode: reference amplitude must be > 0");
    }
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        v[i] = std::clamp(x[i] / x_ref, -1.0, 1.0) * dac.v_max;
    }
    return v;
}

std::vector<double> tile_mvm(const CrossbarTile& tile, std::span<const double> v) {
    const auto& p = tile.placement;
    if (v.size() != p.rows) {
        throw UsageError("tile_mvm: voltage vector length does not match occupied rows");
    }
    std::vector<double> out(p.cols, 0.0);
    const double* g = tile.g.data();
    for (std::size_t r = 0; r < p.rows; ++r) {
        const double vr = v[r];
        const double* row = g + r * p.shape.cols;
        for (std::size_t c = 0; c < p.cols; ++c) {
            out[c] += vr * row[c];
        }
    }
    return out;
}

double adc_decode(double current, const AdcConfig& adc) {
    if (!(adc.i_max > 0.0)) {
        throw UsageError("adc_decode: converter is not calibrated");
    }
    const double levels = std::ldexp(1.0, adc.bits);
    const double step = 2.0 * adc.i_max / (levels - 1.0);
    const double clipped = std::clamp(current, -adc.i_max, adc.i_max);
    const double code = std::clamp(std::floor((clipped + adc.i_max) / step + 0.5), 0.0, levels - 1.0);
    if (code >= levels - 1.0) {
        return adc.i_max;
    }
    return -adc.i_max + code * step;
}

std::vector<double> adc_decode(std::span<const double> currents, const AdcConfig& adc) {
    std::vector<double> out(currents.size());
    for (std::size_t j = 0; j < currents.size(); ++j) {
        out[j] = adc_decode(currents[j], adc);
    }
    return out;
}

AdcConfig calibrate_adc(AdcConfig adc, std::span<const double> observed, double overflow_rate) {
    if (observed.empty()) {
        throw UsageError("calibrate_adc: no observations");
    }
    if (!(overflow_rate >= 0.0 && overflow_rate < 1.0)) {
        throw ConfigError("calibrate_adc: overflow_rate must be in [0, 1)");
    }
    std::vector<double> mag(observed.size());
    std::transform(observed.begin(), observed.end(), mag.begin(), [](double i) { return std::abs(i); });
    std::sort(mag.begin(), mag.end());
    if (!(mag.back() > 0.0)) {
        throw CalibrationError("calibrate_adc: all observed currents are zero");
    }
    const double n = static_cast<double>(mag.size());
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - overflow_rate) * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, mag.size());
    const double i_max = mag[rank - 1];
    if (!(i_max > 0.0)) {
        throw CalibrationError("calibrate_adc: overflow quantile of the observed currents is zero");
    }
    adc.overflow_rate = overflow_rate;
    adc.i_max = i_max;
    return adc;
}

void rederive_conductances(CrossbarTile& tile) {
    const auto& p = tile.placement;
    for (std::size_t r = 0; r < p.rows; ++r) {
        for (std::size_t c = 0; c < p.cols; ++c) {
            const std::size_t n = tile.index(r, c);
            tile.g[n] = tile.g_off[n] + (tile.g_on[n] - tile.g_off[n]) * tile.level[n];
        }
    }
}

namespace {

CrossbarTile make_tile(const TilePlacement& p, const Matrix& g, double g_on, double g_off, double reach) {
    CrossbarTile t;
    t.placement = p;
    const std::size_t cells = p.shape.area();
    t.g.assign(cells, g_off);
    t.level.assign(cells, 0.0);
    t.g_on.assign(cells, g_on);
    t.g_off.assign(cells, g_off);
    t.fault.assign(cells, Fault::none);
    for (std::size_t r = 0; r < p.rows; ++r) {
        for (std::size_t c = 0; c < p.cols; ++c) {
            const double level = (g(p.origin_row + r, p.origin_col + c) - g_off) / (g_on - g_off);
            t.level[t.index(r, c)] = std::min(std::clamp(level, 0.0, 1.0), reach);
        }
    }
    rederive_conductances(t);
    return t;
}

// Sum of per-tile column outputs, aggregated in placement order.
std::vector<double> run_pipeline(const MappedLayer& layer, std::span<const double> x, bool quantize) {
    if (x.size() != layer.rows) {
        throw UsageError("mapped_mvm: input length does not match layer rows");
    }
    const auto v = dac_encode(x, layer.dac, layer.x_ref);
    std::vector<double> y(layer.cols, 0.0);
    for (std::size_t t = 0; t < layer.pos.size(); ++t) {
        const auto& p = layer.pos[t].placement;
        const std::span<const double> slice(v.data() + p.origin_row, p.rows);
        const auto ip = tile_mvm(layer.pos[t], slice);
        const auto in = tile_mvm(layer.neg[t], slice);
        for (std::size_t c = 0; c < p.cols; ++c) {
            const double d = quantize ? adc_decode(ip[c], layer.adc[t]) - adc_decode(in[c], layer.adc[t])
                                      : ip[c] - in[c];
            y[p.origin_col + c] += d;
        }
    }
    return y;
}

}  // namespace

MappedLayer map_layer(const WeightMatrix& w, double g_on, double g_off, const EngineConfig& config) {
    config.validate();
    if (w.rows() == 0 || w.cols() == 0) {
        throw UsageError("map_layer: empty weight matrix");
    }
    const ConductancePlan plan = map_weights(w, g_on, g_off, config.states);
    const double reach = std::min(1.0, config.v_max / config.v_prog);

    MappedLayer layer;
    layer.rows = w.rows();
    layer.cols = w.cols();
    layer.g_on = g_on;
    layer.g_off = g_off;
    layer.reference = w;
    layer.dac = DacConfig{config.v_max};
    layer.use_adc = config.use_adc;
    layer.k_samples = config.k_samples;
    for (const auto& p : partition_tiles(w.rows(), w.cols(), config.tiles)) {
        layer.pos.push_back(make_tile(p, plan.g_pos, g_on, g_off, reach));
        layer.neg.push_back(make_tile(p, plan.g_neg, g_on, g_off, reach));
        layer.adc.push_back(AdcConfig{config.adc_bits, config.overflow_rate, 0.0});
    }
    return layer;
}

namespace {

// Per-tile ADC ranges from the currents `inputs` produce. Returns false
// when no tile saw any current.
bool calibrate_adcs(MappedLayer& layer, const Matrix& inputs) {
    std::vector<std::vector<double>> observed(layer.pos.size());
    for (std::size_t s = 0; s < inputs.rows; ++s) {
        const auto v = dac_encode(inputs.row(s), layer.dac, layer.x_ref);
        for (std::size_t t = 0; t < layer.pos.size(); ++t) {
            const auto& p = layer.pos[t].placement;
            const std::span<const double> slice(v.data() + p.origin_row, p.rows);
            for (const auto* tile : {&layer.pos[t], &layer.neg[t]}) {
                const auto i = tile_mvm(*tile, slice);
                observed[t].insert(observed[t].end(), i.begin(), i.end());
            }
        }
    }
    double fallback = 0.0;
    std::vector<bool> silent(layer.pos.size(), false);
    for (std::size_t t = 0; t < layer.pos.size(); ++t) {
        try {
            layer.adc[t] = calibrate_adc(layer.adc[t], observed[t], layer.adc[t].overflow_rate);
            fallback = std::max(fallback, layer.adc[t].i_max);
        } catch (const CalibrationError&) {
            silent[t] = true;
        }
    }
    if (!(fallback > 0.0)) {
        return false;
    }
    // Tiles whose inputs were never driven share the layer's widest range.
    for (std::size_t t = 0; t < layer.pos.size(); ++t) {
        if (silent[t]) {
            layer.adc[t].i_max = fallback;
        }
    }
    return true;
}

Matrix probe_batch(std::size_t count, std::size_t width, double scale, std::uint64_t seed) {
    CounterRng rng(derive_seed(seed, {0x9B0BEULL}));
    Matrix probes(count, width);
    for (auto& v : probes.data) {
        v = scale * rng.uniform();
    }
    return probes;
}

}  // namespace

void calibrate_layer(MappedLayer& layer, const Matrix& inputs, std::uint64_t seed) {
    if (inputs.rows == 0 || inputs.cols != layer.rows) {
        throw UsageError("calibrate_layer: calibration batch shape does not match the layer");
    }
    double x_ref = 0.0;
    for (double v : inputs.data) {
        x_ref = std::max(x_ref, std::abs(v));
    }
    // A silent batch (upstream layers dead) leaves nothing to fit; the
    // converters are then ranged on unit-scale probes instead.
    const bool silent = !(x_ref > 0.0);
    layer.x_ref = silent ? 1.0 : x_ref;

    if (layer.use_adc) {
        const bool ok = !silent && calibrate_adcs(layer, inputs);
        if (!ok && !calibrate_adcs(layer, probe_batch(layer.k_samples, layer.rows, layer.x_ref, seed))) {
            throw CalibrationError("calibrate_layer: no tile produced any current");
        }
    }

    const AnalogEngine engine = [&layer](std::span<const double> x) { return analog_mvm(layer, x); };
    try {
        layer.k = fit_k(layer.reference, engine, layer.k_samples, seed, layer.x_ref);
    } catch (const CalibrationError&) {
        // No differential signal is left (every cell pair identical, or zero
        // weights); the output is zero whatever K is.
        layer.k = 1.0;
    }
}

std::vector<double> mapped_mvm(const MappedLayer& layer, std::span<const double> x) {
    if (!layer.calibrated()) {
        throw UsageError("mapped_mvm: layer is not calibrated");
    }
    auto y = run_pipeline(layer, x, layer.use_adc);
    for (auto& v : y) {
        v *= layer.k;
    }
    return y;
}

std::vector<double> analog_mvm(const MappedLayer& layer, std::span<const double> x) {
    return run_pipeline(layer, x, false);
}

void write_tile_layout_csv(std::ostream& out, std::span<const TilePlacement> placements) {
    out << "tile_id,origin_row,origin_col,rows,cols,shape_rows,shape_cols\n";
    for (std::size_t t = 0; t < placements.size(); ++t) {
        const auto& p = placements[t];
        out << t << ',' << p.origin_row << ',' << p.origin_col << ',' << p.rows << ',' << p.cols << ','
            << p.shape.rows << ',' << p.shape.cols << '\n';
    }
}

}  // namespace xbarsim
