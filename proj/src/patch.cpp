#include "xbarsim/patch.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "xbarsim/errors.hpp"
#include "xbarsim/rng.hpp"

namespace xbarsim {

Dataset Dataset::head(std::size_t n) const {
    Dataset d;
    d.name = name;
    d.sample_shape = sample_shape;
    d.num_classes = num_classes;
    n = std::min(n, size());
    d.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n));
    d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
    return d;
}

namespace {

Tensor forward_patched_layer(const Tensor& x, const PatchedLayer& layer) {
    if (const auto* digital = std::get_if<Layer>(&layer)) {
        return forward_layer(x, *digital);
    }
    if (const auto* conv = std::get_if<AnalogConv>(&layer)) {
        const Matrix patches = conv->gatherer.gather(x);
        Matrix out(patches.rows, conv->spec.out_channels);
        for (std::size_t p = 0; p < patches.rows; ++p) {
            const auto y = mapped_mvm(conv->mapped, patches.row(p));
            std::copy(y.begin(), y.end(), out.row(p).begin());
        }
        return scatter_outputs(out, conv->spec.bias, conv->gatherer);
    }
    const auto& lin = std::get<AnalogLinear>(layer);
    if (x.shape != Shape{lin.spec.in_features}) {
        throw ShapeError("linear: expected (" + std::to_string(lin.spec.in_features) + "), got " + to_string(x.shape));
    }
    auto y = mapped_mvm(lin.mapped, x.values);
    for (std::size_t o = 0; o < y.size(); ++o) {
        y[o] += lin.spec.bias[o];
    }
    const std::size_t n = y.size();
    return Tensor(Shape{n}, std::move(y));
}

// Converters and K are calibrated once the array is programmed; wear
// afterwards is not compensated.
MappedLayer map_and_degrade(const WeightMatrix& w, const DeviceParams& device, const EngineConfig& engine,
                            const NonIdealityConfig& nonideal, std::size_t index, FaultMask& faults,
                            const Matrix& batch, std::uint64_t calib_seed) {
    auto [programmed, mask] = apply_programming_effects(map_layer(w, device.g_on(), device.g_off(), engine),
                                                        nonideal, index);
    faults = std::move(mask);
    calibrate_layer(programmed, batch, calib_seed);
    return apply_aging(std::move(programmed), nonideal, index);
}

template <typename Net>
std::vector<std::size_t> predict_impl(const Net& net, const Dataset& data) {
    std::vector<std::size_t> pred(data.size());
    const auto n = static_cast<std::ptrdiff_t>(data.size());
    // Exceptions must not escape the parallel region.
    std::vector<std::string> errors(data.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const auto i = static_cast<std::size_t>(s);
        try {
            pred[i] = argmax(forward(net, data.images[i]));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) {
            throw UsageError("evaluate: " + e);
        }
    }
    return pred;
}

template <typename Net>
EvalResult evaluate_impl(const Net& net, const Dataset& data) {
    if (data.size() == 0) {
        throw UsageError("evaluate: empty dataset");
    }
    if (data.labels.size() != data.size()) {
        throw UsageError("evaluate: label count does not match image count");
    }
    for (auto label : data.labels) {
        if (label >= net.num_classes) {
            throw UsageError("evaluate: label " + std::to_string(label) + " outside the network's " +
                             std::to_string(net.num_classes) + " outputs");
        }
    }
    const auto start = std::chrono::steady_clock::now();
    const auto pred = predict_impl(net, data);
    const auto stop = std::chrono::steady_clock::now();

    EvalResult r;
    r.total = data.size();
    std::vector<std::size_t> hits(net.num_classes, 0);
    std::vector<std::size_t> seen(net.num_classes, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        ++seen[data.labels[i]];
        if (pred[i] == data.labels[i]) {
            ++hits[data.labels[i]];
            ++r.correct;
        }
    }
    r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
    r.per_class.resize(net.num_classes);
    for (std::size_t c = 0; c < net.num_classes; ++c) {
        r.per_class[c] = seen[c] ? static_cast<double>(hits[c]) / static_cast<double>(seen[c])
                                 : std::numeric_limits<double>::quiet_NaN();
    }
    r.latency = std::chrono::duration<double>(stop - start).count();
    return r;
}

}  // namespace

PatchedNetwork patch_network(const NetworkSpec& net, const DeviceParams& device, const EngineConfig& engine,
                             const NonIdealityConfig& nonideal, const std::vector<Tensor>& calibration) {
    device.validate();
    engine.validate();
    nonideal.validate();
    if (calibration.empty()) {
        throw UsageError("patch_network: empty calibration batch");
    }
    const auto shapes = net.shapes();

    PatchedNetwork out;
    out.input_shape = net.input_shape;
    out.num_classes = net.num_classes;
    std::vector<Tensor> acts = calibration;
    Shape in_shape = net.input_shape;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        const std::uint64_t calib_seed = derive_seed(nonideal.seed, {0xCA11B, i});
        try {
            if (const auto* conv = std::get_if<Conv2d>(&layer)) {
                const LoweredConv lowered = lower_conv_to_matmul(*conv, in_shape);
                AnalogConv a{*conv, lowered.gatherer, {}, {}};
                const std::size_t pixels = lowered.gatherer.patch_count();
                Matrix batch(acts.size() * pixels, lowered.gatherer.patch_size());
                for (std::size_t s = 0; s < acts.size(); ++s) {
                    const Matrix patches = lowered.gatherer.gather(acts[s]);
                    std::copy(patches.data.begin(), patches.data.end(),
                              batch.data.begin() + static_cast<std::ptrdiff_t>(s * patches.data.size()));
                }
                a.mapped = map_and_degrade(lowered.crossbar_weights(), device, engine, nonideal, i, a.faults, batch, calib_seed);
                out.layers.emplace_back(std::move(a));
            } else if (const auto* lin = std::get_if<Linear>(&layer)) {
                AnalogLinear a{*lin, {}, {}};
                Matrix batch(acts.size(), lin->in_features);
                for (std::size_t s = 0; s < acts.size(); ++s) {
                    if (acts[s].size() != lin->in_features) {
                        throw ShapeError("calibration activation width does not match the layer");
                    }
                    std::copy(acts[s].values.begin(), acts[s].values.end(), batch.row(s).begin());
                }
                a.mapped = map_and_degrade(WeightMatrix::from(transpose(lin->weight)), device, engine, nonideal, i,
                                           a.faults, batch, calib_seed);
                out.layers.emplace_back(std::move(a));
            } else {
                out.layers.emplace_back(layer);
            }
            for (auto& t : acts) {
                t = forward_patched_layer(t, out.layers.back());
            }
        } catch (const PatchError&) {
            throw;
        } catch (const std::exception& e) {
            throw PatchError(i, e.what());
        }
        in_shape = shapes[i];
    }
    return out;
}

Tensor forward(const PatchedNetwork& net, Tensor x) {
    if (x.shape != net.input_shape) {
        throw ShapeError("forward: input shape " + to_string(x.shape) + " does not match network input " +
                         to_string(net.input_shape));
    }
    for (const auto& layer : net.layers) {
        x = forward_patched_layer(x, layer);
    }
    return x;
}

EvalResult evaluate(const NetworkSpec& net, const Dataset& data) { return evaluate_impl(net, data); }
EvalResult evaluate(const PatchedNetwork& net, const Dataset& data) { return evaluate_impl(net, data); }

std::vector<std::size_t> predict(const NetworkSpec& net, const Dataset& data) { return predict_impl(net, data); }
std::vector<std::size_t> predict(const PatchedNetwork& net, const Dataset& data) { return predict_impl(net, data); }

}  // namespace xbarsim
