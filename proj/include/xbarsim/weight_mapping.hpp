#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "xbarsim/matrix.hpp"

namespace xbarsim {

/// Weights in crossbar orientation: rows are inputs (word lines), columns
/// are outputs (bit lines), so y_j = sum_i x_i W[i, j].
struct WeightMatrix {
    Matrix values;
    double w_min = 0.0;
    double w_max = 0.0;

    /// Wraps `values` and caches its bounds. Throws DomainError on
    /// non-finite entries.
    static WeightMatrix from(Matrix values);

    std::size_t rows() const { return values.rows; }
    std::size_t cols() const { return values.cols; }

    bool operator==(const WeightMatrix&) const = default;
};

/// Digital reference product y = x^T W.
std::vector<double> digital_mvm(const WeightMatrix& w, std::span<const double> x);

/// w = w_plus - w_minus with both halves non-negative.
std::pair<WeightMatrix, WeightMatrix> split_double_column(const WeightMatrix& w);

/// Affine map of [w_min, w_max] onto [g_off, g_on].
double weight_to_conductance(double w_val, double w_min, double w_max, double g_on, double g_off);

/// Snap g to the nearest of `states` evenly spaced levels on [g_off, g_on];
/// ties go toward g_on. states == 0 means continuous (identity).
double quantize_linear(double g, int states, double g_off, double g_on);

/// Signed weights realized as a pair of conductance matrices.
struct ConductancePlan {
    Matrix g_pos;
    Matrix g_neg;
    double g_on = 0.0;
    double g_off = 0.0;
    int states = 0;
    double k = 0.0;
    // Weight magnitude mapped onto g_on (shared by both halves).
    double weight_span = 0.0;
};

/// Double-column split then per-matrix affine mapping. Both halves share
/// one set of bounds, so g_pos - g_neg stays proportional to W and a
/// single K recovers it. A degenerate range maps every cell to the
/// midpoint conductance.
ConductancePlan map_weights(const WeightMatrix& w, double g_on, double g_off, int states);

/// Analog output of a plan before K scaling: sum_i x_i (g_pos - g_neg)[i, j].
std::vector<double> plan_mvm(const ConductancePlan& plan, std::span<const double> x);

using AnalogEngine = std::function<std::vector<double>(std::span<const double>)>;

/// Least-squares scale through the origin, fitted on `samples` seeded
/// uniform probes in [0, probe_scale]. Throws CalibrationError when the
/// analog outputs are identically zero.
double fit_k(const WeightMatrix& source, const AnalogEngine& engine, std::size_t samples, std::uint64_t seed,
             double probe_scale = 1.0);

/// fit_k stored into plan.k.
double calibrate_k(ConductancePlan& plan, const WeightMatrix& source, const AnalogEngine& engine,
                   std::size_t samples, std::uint64_t seed);

}  // namespace xbarsim
