#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "xbarsim/crossbar_engine.hpp"

namespace xbarsim {

/// Arrhenius-accelerated dynamic-range contraction.
struct EnduranceModel {
    double activation_energy_ev = 0.5;
    // Per-cycle contraction rate at the 300 K reference. The default makes
    // 1e4 cycles at 350 K halve the log-range (f = 0.5).
    double lambda = 4.3739949173026915e-6;

    /// A(T) = exp(-Ea / kT) / exp(-Ea / k 300K).
    double acceleration(double temperature) const;
    /// f = exp(-lambda * cycles * A(T)).
    double contraction(double cycles, double temperature) const;
};

struct NonIdealityConfig {
    double sigma = 0.0;        // ohm
    int states = 0;            // 0 = continuous
    double p_lrs = 0.0;
    double p_hrs = 0.0;
    double cycles = 0.0;
    double temperature = 300.0;  // K
    double drift_nu = 0.0;
    double drift_time = 0.0;     // s
    std::uint64_t seed = 0;
    EnduranceModel endurance{};

    void validate() const;
};

/// Per-tile fault flags for both arrays, aligned with MappedLayer::pos/neg.
struct FaultMask {
    std::vector<std::vector<Fault>> pos;
    std::vector<std::vector<Fault>> neg;

    std::size_t count(Fault kind) const;
};

/// Resistance-bound perturbation per device; sigma == 0 is the identity.
MappedLayer apply_variability(MappedLayer layer, double sigma, std::uint64_t seed);

/// Snap every occupied cell's level to `states` evenly spaced levels.
MappedLayer apply_discretization(MappedLayer layer, int states);

std::pair<MappedLayer, FaultMask> apply_saf(MappedLayer layer, double p_lrs, double p_hrs, std::uint64_t seed);

MappedLayer apply_endurance(MappedLayer layer, double cycles, double temperature, const EnduranceModel& model = {});

/// g(t) = g(0) (1 + t)^-nu_i, nu_i ~ Normal(nu, nu/10) truncated at 0.
MappedLayer apply_retention(MappedLayer layer, double drift_nu, double drift_time, std::uint64_t seed);

/// Effects present once the array is programmed: variability,
/// discretization, SAF.
std::pair<MappedLayer, FaultMask> apply_programming_effects(MappedLayer layer, const NonIdealityConfig& config,
                                                            std::uint64_t layer_id);

/// Wear after deployment: endurance, then retention.
MappedLayer apply_aging(MappedLayer layer, const NonIdealityConfig& config, std::uint64_t layer_id);

/// All injectors in their fixed order: variability, discretization, SAF,
/// endurance, retention. `layer_id` selects this layer's random streams.
std::pair<MappedLayer, FaultMask> apply_nonidealities(MappedLayer layer, const NonIdealityConfig& config,
                                                      std::uint64_t layer_id);

/// CSV `tile_id,row,col,fault` over every occupied cell; tile ids are
/// `pos:<n>` / `neg:<n>` with n the placement index.
void write_fault_mask_csv(std::ostream& out, const MappedLayer& layer, const FaultMask& mask);

const char* to_string(Fault fault);

}  // namespace xbarsim
