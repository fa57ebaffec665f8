#include "xbarsim/weight_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xbarsim/errors.hpp"
#include "xbarsim/rng.hpp"

namespace xbarsim {

WeightMatrix WeightMatrix::from(Matrix values) {
    WeightMatrix w;
    w.values = std::move(values);
    if (w.values.data.empty()) {
        return w;
    }
    w.w_min = std::numeric_limits<double>::infinity();
    w.w_max = -std::numeric_limits<double>::infinity();
    for (double v : w.values.data) {
        if (!std::isfinite(v)) {
            throw DomainError("weight matrix contains a non-finite entry");
        }
        w.w_min = std::min(w.w_min, v);
        w.w_max = std::max(w.w_max, v);
    }
    return w;
}

std::vector<double> digital_mvm(const WeightMatrix& w, std::span<const double> x) {
    if (x.size() != w.rows()) {
        throw UsageError("digital_mvm: input length does not match weight rows");
    }
    std::vector<double> y(w.cols(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const auto row = w.values.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) {
            y[j] += x[i] * row[j];
        }
    }
    return y;
}

std::pair<WeightMatrix, WeightMatrix> split_double_column(const WeightMatrix& w) {
    Matrix plus(w.rows(), w.cols());
    Matrix minus(w.rows(), w.cols());
    for (std::size_t n = 0; n < w.values.data.size(); ++n) {
        const double v = w.values.data[n];
        plus.data[n] = std::max(v, 0.0);
        minus.data[n] = std::max(-v, 0.0);
    }
    return {WeightMatrix::from(std::move(plus)), WeightMatrix::from(std::move(minus))};
}

double weight_to_conductance(double w_val, double w_min, double w_max, double g_on, double g_off) {
    if (!(w_max > w_min)) {
        throw DomainError("weight_to_conductance: degenerate weight range");
    }
    if (!(g_on > g_off) || !(g_off > 0.0)) {
        throw DomainError("weight_to_conductance: require g_on > g_off > 0");
    }
    if (w_val <= w_min) {
        return g_off;
    }
    if (w_val >= w_max) {
        return g_on;
    }
    return g_off + (g_on - g_off) * (w_val - w_min) / (w_max - w_min);
}

double quantize_linear(double g, int states, double g_off, double g_on) {
    if (states == 0) {
        return g;
    }
    if (states < 2) {
        throw ConfigError("quantize_linear: states must be 0 (continuous) or >= 2");
    }
    const double steps = static_cast<double>(states - 1);
    const double pos = std::clamp((g - g_off) / (g_on - g_off), 0.0, 1.0) * steps;
    // Midpoints rarely divide out to exactly .5; treat anything within
    // rounding noise of a tie as one.
    const double level = std::floor(pos + 0.5 + 1e-9);
    if (level >= steps) {
        return g_on;
    }
    if (level <= 0.0) {
        return g_off;
    }
    return g_off + (g_on - g_off) * level / steps;
}

ConductancePlan map_weights(const WeightMatrix& w, double g_on, double g_off, int states) {
    if (!(g_on > g_off) || !(g_off > 0.0)) {
        throw ConfigError("map_weights: require g_on > g_off > 0");
    }
    if (states == 1 || states < 0) {
        throw ConfigError("map_weights: states must be 0 (continuous) or >= 2");
    }
    auto [plus, minus] = split_double_column(w);
    const double lo = std::min(plus.w_min, minus.w_min);
    const double hi = std::max(plus.w_max, minus.w_max);

    ConductancePlan plan;
    plan.g_on = g_on;
    plan.g_off = g_off;
    plan.states = states;
    plan.weight_span = hi - lo;
    plan.g_pos = Matrix(w.rows(), w.cols());
    plan.g_neg = Matrix(w.rows(), w.cols());

    const bool degenerate = !(hi > lo);
    const double mid = 0.5 * (g_on + g_off);
    auto to_g = [&](double v) {
        if (degenerate) {
            return quantize_linear(mid, states, g_off, g_on);
        }
        return quantize_linear(weight_to_conductance(v, lo, hi, g_on, g_off), states, g_off, g_on);
    };
    for (std::size_t n = 0; n < w.values.data.size(); ++n) {
        plan.g_pos.data[n] = to_g(plus.values.data[n]);
        plan.g_neg.data[n] = to_g(minus.values.data[n]);
    }
    return plan;
}

std::vector<double> plan_mvm(const ConductancePlan& plan, std::span<const double> x) {
    if (x.size() != plan.g_pos.rows) {
        throw UsageError("plan_mvm: input length does not match plan rows");
    }
    std::vector<double> y(plan.g_pos.cols, 0.0);
    for (std::size_t i = 0; i < plan.g_pos.rows; ++i) {
        for (std::size_t j = 0; j < plan.g_pos.cols; ++j) {
            y[j] += x[i] * (plan.g_pos(i, j) - plan.g_neg(i, j));
        }
    }
    return y;
}

double fit_k(const WeightMatrix& source, const AnalogEngine& engine, std::size_t samples, std::uint64_t seed,
             double probe_scale) {
    if (samples == 0) {
        throw UsageError("fit_k: need at least one calibration sample");
    }
    CounterRng rng(derive_seed(seed, {0x4B5CA1ULL}));
    std::vector<double> x(source.rows());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        for (auto& v : x) {
            v = probe_scale * rng.uniform();
        }
        const auto analog = engine(x);
        const auto digital = digital_mvm(source, x);
        if (analog.size() != digital.size()) {
            throw UsageError("fit_k: engine output length does not match weight columns");
        }
        for (std::size_t j = 0; j < analog.size(); ++j) {
            num += analog[j] * digital[j];
            den += analog[j] * analog[j];
        }
    }
    if (!(den > 0.0)) {
        throw CalibrationError("fit_k: analog outputs are identically zero");
    }
    return num / den;
}

double calibrate_k(ConductancePlan& plan, const WeightMatrix& source, const AnalogEngine& engine,
                   std::size_t samples, std::uint64_t seed) {
    plan.k = fit_k(source, engine, samples, seed);
    return plan.k;
}

}  // namespace xbarsim
