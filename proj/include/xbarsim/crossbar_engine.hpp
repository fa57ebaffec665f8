#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "xbarsim/matrix.hpp"
#include "xbarsim/weight_mapping.hpp"

namespace xbarsim {

struct TileShape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t area() const { return rows * cols; }
    bool operator==(const TileShape&) const = default;
};

/// Where one tile sits in its parent matrix and how much of it is used.
struct TilePlacement {
    TileShape shape;
    std::size_t origin_row = 0;
    std::size_t origin_col = 0;
    std::size_t rows = 0;  // occupied
    std::size_t cols = 0;  // occupied

    bool operator==(const TilePlacement&) const = default;
};

/// Best-fit allocation: the smallest fitting shape when one exists (ties
/// prefer fewer rows), otherwise a grid over the largest shape with each
/// block allocated best-fit. Placements come back in ascending row-major
/// origin order.
std::vector<TilePlacement> partition_tiles(std::size_t rows, std::size_t cols, std::span<const TileShape> available);

enum class Fault : std::uint8_t { none, stuck_lrs, stuck_hrs };

/// One crossbar. Cell arrays are shape-sized and row-major; cells outside
/// the occupied region are padding and hold exactly the nominal g_off.
struct CrossbarTile {
    TilePlacement placement;
    std::vector<double> g;      // S
    std::vector<double> level;  // programmed fraction of the cell's [g_off, g_on]
    std::vector<double> g_on;   // per-device bounds
    std::vector<double> g_off;
    std::vector<Fault> fault;

    std::size_t index(std::size_t r, std::size_t c) const { return r * placement.shape.cols + c; }
    bool occupied(std::size_t r, std::size_t c) const { return r < placement.rows && c < placement.cols; }

    bool operator==(const CrossbarTile&) const = default;
};

struct DacConfig {
    double v_max = 9.0;  // V

    bool operator==(const DacConfig&) const = default;
};

/// Symmetric uniform quantizer with 2^bits levels including +-i_max.
struct AdcConfig {
    int bits = 8;
    double overflow_rate = 0.0;
    double i_max = 0.0;  // A, zero until calibrated

    bool operator==(const AdcConfig&) const = default;
};

/// Crossbar, converter and mapping settings shared by all patched layers.
struct EngineConfig {
    std::vector<TileShape> tiles{{64, 64}};
    double v_max = 9.0;          // maximum input voltage
    double v_prog = 6.0;         // programming scale of the conductance-range clamp
    int adc_bits = 8;
    double overflow_rate = 0.0;
    int states = 0;              // 0 = continuous
    bool use_adc = true;
    std::size_t k_samples = 64;

    void validate() const;
};

/// v_i = clamp(x_i / x_ref, -1, 1) * v_max.
std::vector<double> dac_encode(std::span<const double> x, const DacConfig& dac, double x_ref);

/// Kirchhoff column sums over the occupied region: i_j = sum_i v_i g[i, j].
std::vector<double> tile_mvm(const CrossbarTile& tile, std::span<const double> v);

std::vector<double> adc_decode(std::span<const double> currents, const AdcConfig& adc);
double adc_decode(double current, const AdcConfig& adc);

/// i_max = (1 - overflow_rate) quantile of |observed| (nearest rank).
AdcConfig calibrate_adc(AdcConfig adc, std::span<const double> observed, double overflow_rate);

/// A weight matrix realized on positive/negative tile sets.
struct MappedLayer {
    std::size_t rows = 0;  // inputs
    std::size_t cols = 0;  // outputs
    double g_on = 0.0;     // nominal device bounds
    double g_off = 0.0;
    WeightMatrix reference;                  // digital weights, for calibration
    std::vector<CrossbarTile> pos;           // aligned with neg and adc
    std::vector<CrossbarTile> neg;
    std::vector<AdcConfig> adc;
    DacConfig dac;
    bool use_adc = true;
    std::size_t k_samples = 64;
    double x_ref = 0.0;
    double k = 0.0;

    bool calibrated() const { return x_ref > 0.0 && k != 0.0; }
    bool operator==(const MappedLayer&) const = default;
};

/// Map, quantize and tile a weight matrix. Levels above the fraction
/// reachable at v_max (min(1, v_max / v_prog)) are clipped.
MappedLayer map_layer(const WeightMatrix& w, double g_on, double g_off, const EngineConfig& config);

/// Re-derive every occupied cell's conductance from its level and bounds.
void rederive_conductances(CrossbarTile& tile);

/// Freeze the DAC reference, calibrate each tile's ADC on the currents the
/// calibration batch (rows of `inputs`) produces, then regress K.
/// An all-zero batch falls back to unit-scale random probes; an array with
/// no differential signal gets K = 1.
void calibrate_layer(MappedLayer& layer, const Matrix& inputs, std::uint64_t seed);

/// Full pipeline: DAC -> tiles -> ADC -> aggregation -> K.
std::vector<double> mapped_mvm(const MappedLayer& layer, std::span<const double> x);

/// Pipeline output before K and without ADC quantization.
std::vector<double> analog_mvm(const MappedLayer& layer, std::span<const double> x);

/// CSV `tile_id,origin_row,origin_col,rows,cols,shape_rows,shape_cols`.
void write_tile_layout_csv(std::ostream& out, std::span<const TilePlacement> placements);

}  // namespace xbarsim
