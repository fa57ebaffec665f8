#include "xbarsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "xbarsim/errors.hpp"

namespace xbarsim {

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape)) {
        throw ShapeError("tensor: value count " + std::to_string(values.size()) + " does not match shape " +
                         to_string(shape));
    }
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? ", " : "") << shape[i];
    }
    os << ')';
    return os.str();
}

const char* layer_kind(const Layer& layer) {
    struct Visitor {
        const char* operator()(const Conv2d&) const { return "conv2d"; }
        const char* operator()(const Linear&) const { return "linear"; }
        const char* operator()(const Relu&) const { return "relu"; }
        const char* operator()(const MaxPool&) const { return "maxpool"; }
        const char* operator()(const BatchNorm&) const { return "batchnorm"; }
        const char* operator()(const Flatten&) const { return "flatten"; }
        const char* operator()(const Dropout&) const { return "dropout"; }
    };
    return std::visit(Visitor{}, layer);
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (stride == 0 || kernel == 0) {
        throw ShapeError("kernel and stride must be >= 1");
    }
    const std::size_t span = in + 2 * padding;
    if (span < kernel || (span - kernel) % stride != 0) {
        throw ShapeError("non-integer output size: (" + std::to_string(in) + " + 2*" + std::to_string(padding) +
                         " - " + std::to_string(kernel) + ") / " + std::to_string(stride) + " + 1");
    }
    return (span - kernel) / stride + 1;
}

namespace {

void require_chw(const Shape& in, const char* what) {
    if (in.size() != 3) {
        throw ShapeError(std::string(what) + ": expected a (C, H, W) input, got " + to_string(in));
    }
}

}  // namespace

Shape output_shape(const Layer& layer, const Shape& in) {
    struct Visitor {
        const Shape& in;
        Shape operator()(const Conv2d& l) const {
            require_chw(in, "conv2d");
            if (in[0] != l.in_channels) {
                throw ShapeError("conv2d: input has " + std::to_string(in[0]) + " channels, layer expects " +
                                 std::to_string(l.in_channels));
            }
            if (l.weight.size() != l.out_channels * l.in_channels * l.kernel * l.kernel ||
                l.bias.size() != l.out_channels) {
                throw ShapeError("conv2d: parameter sizes do not match the layer geometry");
            }
            return {l.out_channels, conv_output_size(in[1], l.kernel, l.stride, l.padding),
                    conv_output_size(in[2], l.kernel, l.stride, l.padding)};
        }
        Shape operator()(const Linear& l) const {
            if (in.size() != 1 || in[0] != l.in_features) {
                throw ShapeError("linear: expected (" + std::to_string(l.in_features) + "), got " + to_string(in));
            }
            if (l.weight.rows != l.out_features || l.weight.cols != l.in_features || l.bias.size() != l.out_features) {
                throw ShapeError("linear: parameter sizes do not match the layer geometry");
            }
            return {l.out_features};
        }
        Shape operator()(const Relu&) const { return in; }
        Shape operator()(const Dropout&) const { return in; }
        Shape operator()(const MaxPool& l) const {
            require_chw(in, "maxpool");
            return {in[0], conv_output_size(in[1], l.kernel, l.stride, 0), conv_output_size(in[2], l.kernel, l.stride, 0)};
        }
        Shape operator()(const BatchNorm& l) const {
            if (in.empty()) {
                throw ShapeError("batchnorm: scalar input");
            }
            const std::size_t c = in[0];
            if (l.gamma.size() != c || l.beta.size() != c || l.running_mean.size() != c || l.running_var.size() != c) {
                throw ShapeError("batchnorm: statistics do not match " + std::to_string(c) + " channels");
            }
            if (!(l.epsilon > 0.0)) {
                throw ShapeError("batchnorm: epsilon must be > 0");
            }
            return in;
        }
        Shape operator()(const Flatten&) const { return {shape_size(in)}; }
    };
    return std::visit(Visitor{in}, layer);
}

std::vector<Shape> NetworkSpec::shapes() const {
    std::vector<Shape> out;
    Shape s = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        try {
            s = output_shape(layers[i], s);
        } catch (const ShapeError& e) {
            throw ShapeError("layer " + std::to_string(i) + " (" + layer_kind(layers[i]) + "): " + e.what());
        }
        out.push_back(s);
    }
    return out;
}

Tensor conv2d_forward(const Tensor& x, const Conv2d& layer) {
    const Shape os = output_shape(layer, x.shape);
    const std::size_t h = x.shape[1];
    const std::size_t w = x.shape[2];
    Tensor y(os);
    for (std::size_t o = 0; o < os[0]; ++o) {
        for (std::size_t oy = 0; oy < os[1]; ++oy) {
            for (std::size_t ox = 0; ox < os[2]; ++ox) {
                double acc = 0.0;
                for (std::size_t c = 0; c < layer.in_channels; ++c) {
                    for (std::size_t ky = 0; ky < layer.kernel; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * layer.stride + ky) -
                                        static_cast<std::ptrdiff_t>(layer.padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                            continue;
                        }
                        for (std::size_t kx = 0; kx < layer.kernel; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * layer.stride + kx) -
                                            static_cast<std::ptrdiff_t>(layer.padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) {
                                continue;
                            }
                            acc += layer.w(o, c, ky, kx) * x.values[(c * h + static_cast<std::size_t>(iy)) * w +
                                                                   static_cast<std::size_t>(ix)];
                        }
                    }
                }
                y.values[(o * os[1] + oy) * os[2] + ox] = acc + layer.bias[o];
            }
        }
    }
    return y;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.values) {
        v = std::max(0.0, v);
    }
    return y;
}

Tensor maxpool_forward(const Tensor& x, std::size_t kernel, std::size_t stride) {
    const Shape os = output_shape(MaxPool{kernel, stride}, x.shape);
    const std::size_t h = x.shape[1];
    const std::size_t w = x.shape[2];
    Tensor y(os);
    for (std::size_t c = 0; c < os[0]; ++c) {
        for (std::size_t oy = 0; oy < os[1]; ++oy) {
            for (std::size_t ox = 0; ox < os[2]; ++ox) {
                double m = -std::numeric_limits<double>::infinity();
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        m = std::max(m, x.values[(c * h + oy * stride + ky) * w + ox * stride + kx]);
                    }
                }
                y.values[(c * os[1] + oy) * os[2] + ox] = m;
            }
        }
    }
    return y;
}

Tensor batchnorm_inference(const Tensor& x, const BatchNorm& stats) {
    output_shape(stats, x.shape);
    Tensor y = x;
    const std::size_t channels = x.shape[0];
    const std::size_t per_channel = x.size() / channels;
    for (std::size_t c = 0; c < channels; ++c) {
        const double scale = stats.gamma[c] / std::sqrt(stats.running_var[c] + stats.epsilon);
        for (std::size_t n = 0; n < per_channel; ++n) {
            auto& v = y.values[c * per_channel + n];
            v = (v - stats.running_mean[c]) * scale + stats.beta[c];
        }
    }
    return y;
}

Tensor linear_forward(const Tensor& x, const Linear& layer) {
    output_shape(layer, x.shape);
    Tensor y(Shape{layer.out_features});
    for (std::size_t o = 0; o < layer.out_features; ++o) {
        double acc = 0.0;
        const auto row = layer.weight.row(o);
        for (std::size_t i = 0; i < layer.in_features; ++i) {
            acc += row[i] * x.values[i];
        }
        y.values[o] = acc + layer.bias[o];
    }
    return y;
}

Tensor flatten(const Tensor& x) { return Tensor(Shape{x.size()}, x.values); }

Tensor forward_layer(const Tensor& x, const Layer& layer) {
    struct Visitor {
        const Tensor& x;
        Tensor operator()(const Conv2d& l) const { return conv2d_forward(x, l); }
        Tensor operator()(const Linear& l) const { return linear_forward(x, l); }
        Tensor operator()(const Relu&) const { return relu(x); }
        Tensor operator()(const MaxPool& l) const { return maxpool_forward(x, l.kernel, l.stride); }
        Tensor operator()(const BatchNorm& l) const { return batchnorm_inference(x, l); }
        Tensor operator()(const Flatten&) const { return flatten(x); }
        Tensor operator()(const Dropout&) const { return x; }
    };
    return std::visit(Visitor{x}, layer);
}

Tensor forward(const NetworkSpec& net, Tensor x) {
    if (x.shape != net.input_shape) {
        throw ShapeError("forward: input shape " + to_string(x.shape) + " does not match network input " +
                         to_string(net.input_shape));
    }
    for (const auto& layer : net.layers) {
        x = forward_layer(x, layer);
    }
    return x;
}

std::size_t argmax(const Tensor& logits) {
    if (logits.values.empty()) {
        throw UsageError("argmax: empty tensor");
    }
    return static_cast<std::size_t>(std::max_element(logits.values.begin(), logits.values.end()) -
                                    logits.values.begin());
}

}  // namespace xbarsim
