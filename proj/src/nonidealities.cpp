#include "xbarsim/nonidealities.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "xbarsim/errors.hpp"
#include "xbarsim/rng.hpp"

namespace xbarsim {

namespace {

constexpr double kBoltzmannEv = 8.617333262e-5;  // eV/K

// Stream purposes.
constexpr std::uint64_t kVariability = 1;
constexpr std::uint64_t kFaults = 2;
constexpr std::uint64_t kRetention = 3;

// Visit every occupied cell of both arrays with a per-cell random stream.
template <typename F>
void for_each_cell(MappedLayer& layer, std::uint64_t seed, std::uint64_t purpose, F&& fn) {
    for (std::uint64_t array = 0; array < 2; ++array) {
        auto& tiles = array == 0 ? layer.pos : layer.neg;
        for (std::size_t t = 0; t < tiles.size(); ++t) {
            auto& tile = tiles[t];
            const auto& p = tile.placement;
            for (std::size_t r = 0; r < p.rows; ++r) {
                for (std::size_t c = 0; c < p.cols; ++c) {
                    const std::size_t n = tile.index(r, c);
                    CounterRng rng(derive_seed(seed, {purpose, array, t, n}));
                    fn(tile, n, rng);
                }
            }
        }
    }
}

}  // namespace

double EnduranceModel::acceleration(double temperature) const {
    if (!(temperature > 0.0)) {
        throw DomainError("endurance: temperature must be > 0 K");
    }
    const double ea = activation_energy_ev / kBoltzmannEv;
    return std::exp(-ea / temperature + ea / 300.0);
}

double EnduranceModel::contraction(double cycles, double temperature) const {
    return std::exp(-lambda * cycles * acceleration(temperature));
}

void NonIdealityConfig::validate() const {
    if (!(sigma >= 0.0)) {
        throw ConfigError("nonideal.sigma: must be >= 0");
    }
    if (states < 0 || states == 1) {
        throw ConfigError("nonideal.states: must be 0 (continuous) or >= 2");
    }
    if (!(p_lrs >= 0.0) || !(p_hrs >= 0.0) || !(p_lrs + p_hrs <= 1.0)) {
        throw ConfigError("nonideal.p_lrs/p_hrs: need 0 <= p and p_lrs + p_hrs <= 1");
    }
    if (!(cycles >= 0.0)) {
        throw ConfigError("nonideal.cycles: must be >= 0");
    }
    if (!(temperature > 0.0)) {
        throw ConfigError("nonideal.temperature: must be > 0");
    }
    if (!(drift_nu >= 0.0)) {
        throw ConfigError("nonideal.drift_nu: must be >= 0");
    }
    if (!(drift_time >= 0.0)) {
        throw ConfigError("nonideal.drift_time: must be >= 0");
    }
    if (!(endurance.lambda >= 0.0) || !(endurance.activation_energy_ev >= 0.0)) {
        throw ConfigError("nonideal.endurance: lambda and activation energy must be >= 0");
    }
}

std::size_t FaultMask::count(Fault kind) const {
    std::size_t n = 0;
    for (const auto* set : {&pos, &neg}) {
        for (const auto& tile : *set) {
            n += static_cast<std::size_t>(std::count(tile.begin(), tile.end(), kind));
        }
    }
    return n;
}

MappedLayer apply_variability(MappedLayer layer, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) {
        throw DomainError("apply_variability: sigma must be >= 0");
    }
    if (sigma == 0.0) {
        return layer;
    }
    const double r_on = 1.0 / layer.g_on;
    const double r_off = 1.0 / layer.g_off;
    for_each_cell(layer, seed, kVariability, [&](CrossbarTile& tile, std::size_t n, CounterRng& rng) {
        double on = rng.normal(r_on, sigma);
        while (!(on > 0.0)) {
            on = rng.normal(r_on, sigma);
        }
        double off = rng.normal(r_off, sigma);
        while (!(off > on)) {
            off = rng.normal(r_off, sigma);
        }
        tile.g_on[n] = 1.0 / on;
        tile.g_off[n] = 1.0 / off;
    });
    for (auto* tiles : {&layer.pos, &layer.neg}) {
        for (auto& tile : *tiles) {
            rederive_conductances(tile);
        }
    }
    return layer;
}

MappedLayer apply_discretization(MappedLayer layer, int states) {
    if (states < 0 || states == 1) {
        throw ConfigError("apply_discretization: states must be 0 (continuous) or >= 2");
    }
    if (states == 0) {
        return layer;
    }
    for (auto* tiles : {&layer.pos, &layer.neg}) {
        for (auto& tile : *tiles) {
            const auto& p = tile.placement;
            for (std::size_t r = 0; r < p.rows; ++r) {
                for (std::size_t c = 0; c < p.cols; ++c) {
                    auto& level = tile.level[tile.index(r, c)];
                    level = quantize_linear(level, states, 0.0, 1.0);
                }
            }
            rederive_conductances(tile);
        }
    }
    return layer;
}

std::pair<MappedLayer, FaultMask> apply_saf(MappedLayer layer, double p_lrs, double p_hrs, std::uint64_t seed) {
    if (!(p_lrs >= 0.0) || !(p_hrs >= 0.0) || !(p_lrs + p_hrs <= 1.0)) {
        throw DomainError("apply_saf: need p_lrs, p_hrs >= 0 and p_lrs + p_hrs <= 1");
    }
    if (p_lrs > 0.0 || p_hrs > 0.0) {
        for_each_cell(layer, seed, kFaults, [&](CrossbarTile& tile, std::size_t n, CounterRng& rng) {
            const double u = rng.uniform();
            if (u < p_lrs) {
                tile.fault[n] = Fault::stuck_lrs;
                tile.level[n] = 1.0;
                tile.g[n] = tile.g_on[n];
            } else if (u < p_lrs + p_hrs) {
                tile.fault[n] = Fault::stuck_hrs;
                tile.level[n] = 0.0;
                tile.g[n] = tile.g_off[n];
            }
        });
    }
    FaultMask mask;
    for (const auto& t : layer.pos) {
        mask.pos.push_back(t.fault);
    }
    for (const auto& t : layer.neg) {
        mask.neg.push_back(t.fault);
    }
    return {std::move(layer), std::move(mask)};
}

MappedLayer apply_endurance(MappedLayer layer, double cycles, double temperature, const EnduranceModel& model) {
    if (!(cycles >= 0.0)) {
        throw DomainError("apply_endurance: cycles must be >= 0");
    }
    const double f = model.contraction(cycles, temperature);
    if (f == 1.0) {
        return layer;
    }
    for (auto* tiles : {&layer.pos, &layer.neg}) {
        for (auto& tile : *tiles) {
            const auto& p = tile.placement;
            for (std::size_t r = 0; r < p.rows; ++r) {
                for (std::size_t c = 0; c < p.cols; ++c) {
                    const std::size_t n = tile.index(r, c);
                    const double gm = std::sqrt(tile.g_on[n] * tile.g_off[n]);
                    tile.g_on[n] = gm * std::pow(tile.g_on[n] / gm, f);
                    tile.g_off[n] = gm * std::pow(tile.g_off[n] / gm, f);
                }
            }
            rederive_conductances(tile);
        }
    }
    return layer;
}

MappedLayer apply_retention(MappedLayer layer, double drift_nu, double drift_time, std::uint64_t seed) {
    if (!(drift_time >= 0.0) || !(drift_nu >= 0.0)) {
        throw DomainError("apply_retention: drift exponent and time must be >= 0");
    }
    if (drift_time == 0.0 || drift_nu == 0.0) {
        return layer;
    }
    const double log_t = std::log1p(drift_time);
    for_each_cell(layer, seed, kRetention, [&](CrossbarTile& tile, std::size_t n, CounterRng& rng) {
        const double nu = std::max(0.0, rng.normal(drift_nu, drift_nu / 10.0));
        tile.g[n] *= std::exp(-nu * log_t);
    });
    return layer;
}

std::pair<MappedLayer, FaultMask> apply_programming_effects(MappedLayer layer, const NonIdealityConfig& config,
                                                            std::uint64_t layer_id) {
    config.validate();
    const std::uint64_t seed = derive_seed(config.seed, {layer_id});
    layer = apply_variability(std::move(layer), config.sigma, seed);
    layer = apply_discretization(std::move(layer), config.states);
    return apply_saf(std::move(layer), config.p_lrs, config.p_hrs, seed);
}

MappedLayer apply_aging(MappedLayer layer, const NonIdealityConfig& config, std::uint64_t layer_id) {
    config.validate();
    const std::uint64_t seed = derive_seed(config.seed, {layer_id});
    layer = apply_endurance(std::move(layer), config.cycles, config.temperature, config.endurance);
    return apply_retention(std::move(layer), config.drift_nu, config.drift_time, seed);
}

std::pair<MappedLayer, FaultMask> apply_nonidealities(MappedLayer layer, const NonIdealityConfig& config,
                                                      std::uint64_t layer_id) {
    auto [programmed, mask] = apply_programming_effects(std::move(layer), config, layer_id);
    return {apply_aging(std::move(programmed), config, layer_id), std::move(mask)};
}

const char* to_string(Fault fault) {
    switch (fault) {
        case Fault::stuck_lrs:
            return "stuck_lrs";
        case Fault::stuck_hrs:
            return "stuck_hrs";
        case Fault::none:
            break;
    }
    return "none";
}

void write_fault_mask_csv(std::ostream& out, const MappedLayer& layer, const FaultMask& mask) {
    out << "tile_id,row,col,fault\n";
    for (int array = 0; array < 2; ++array) {
        const auto& tiles = array == 0 ? layer.pos : layer.neg;
        const auto& flags = array == 0 ? mask.pos : mask.neg;
        for (std::size_t t = 0; t < tiles.size(); ++t) {
            const auto& p = tiles[t].placement;
            for (std::size_t r = 0; r < p.rows; ++r) {
                for (std::size_t c = 0; c < p.cols; ++c) {
                    out << (array == 0 ? "pos:" : "neg:") << t << ',' << p.origin_row + r << ','
                        << p.origin_col + c << ',' << to_string(flags[t][tiles[t].index(r, c)]) << '\n';
                }
            }
        }
    }
}

}  // namespace xbarsim
