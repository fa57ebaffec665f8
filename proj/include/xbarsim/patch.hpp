#pragma once

#include <variant>
#include <vector>

#include "xbarsim/crossbar_engine.hpp"
#include "xbarsim/dataset.hpp"
#include "xbarsim/device_model.hpp"
#include "xbarsim/lowering.hpp"
#include "xbarsim/network.hpp"
#include "xbarsim/nonidealities.hpp"

namespace xbarsim {

/// Convolution executed as one crossbar MVM per output pixel.
struct AnalogConv {
    Conv2d spec;
    PatchGatherer gatherer;
    MappedLayer mapped;
    FaultMask faults;
};

struct AnalogLinear {
    Linear spec;
    MappedLayer mapped;
    FaultMask faults;
};

using PatchedLayer = std::variant<Layer, AnalogConv, AnalogLinear>;

struct PatchedNetwork {
    Shape input_shape;
    std::size_t num_classes = 0;
    std::vector<PatchedLayer> layers;
};

/// Replace every conv2d/linear layer by its crossbar realization.
///
/// Per layer: map and tile, inject the programming-time effects
/// (variability, discretization, SAF), calibrate DAC reference, ADC ranges
/// and K, then apply wear (endurance, retention) that the calibration does
/// not see. Calibration uses the activations `calibration` produces at that
/// layer's input when run through the already-patched prefix. Bias, pooling,
/// normalization and activations stay digital. Failures are rethrown as
/// PatchError with the layer index.
PatchedNetwork patch_network(const NetworkSpec& net, const DeviceParams& device, const EngineConfig& engine,
                             const NonIdealityConfig& nonideal, const std::vector<Tensor>& calibration);

Tensor forward(const PatchedNetwork& net, Tensor x);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> per_class;  // NaN for classes absent from the data
    double latency = 0.0;           // wall seconds for the whole pass
    std::size_t correct = 0;
    std::size_t total = 0;
};

/// Top-1 accuracy. Items are independent and may be processed in
/// parallel; the reduction is over integer counts.
EvalResult evaluate(const NetworkSpec& net, const Dataset& data);
EvalResult evaluate(const PatchedNetwork& net, const Dataset& data);

/// Top-1 predictions, in dataset order.
std::vector<std::size_t> predict(const NetworkSpec& net, const Dataset& data);
std::vector<std::size_t> predict(const PatchedNetwork& net, const Dataset& data);

}  // namespace xbarsim
