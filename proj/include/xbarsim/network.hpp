#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "xbarsim/matrix.hpp"

namespace xbarsim {

using Shape = std::vector<std::size_t>;

/// Row-major tensor; shape is (channels, height, width) or (features).
struct Tensor {
    Shape shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);
    Tensor(Shape s, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    bool operator==(const Tensor&) const = default;
};

std::size_t shape_size(const Shape& shape);
std::string to_string(const Shape& shape);

struct Conv2d {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::vector<double> weight;  // out x in x kernel x kernel
    std::vector<double> bias;    // out

    double w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
        return weight[((o * in_channels + i) * kernel + ky) * kernel + kx];
    }
};

struct Linear {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    Matrix weight;  // out x in
    std::vector<double> bias;
};

struct Relu {};

struct MaxPool {
    std::size_t kernel = 2;
    std::size_t stride = 2;
};

struct BatchNorm {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double epsilon = 1e-5;
};

struct Flatten {};

struct Dropout {
    double rate = 0.0;
};

using Layer = std::variant<Conv2d, Linear, Relu, MaxPool, BatchNorm, Flatten, Dropout>;

const char* layer_kind(const Layer& layer);

struct NetworkSpec {
    Shape input_shape;
    std::size_t num_classes = 0;
    std::vector<Layer> layers;
    std::map<std::string, std::string> metadata;

    /// Output shape after every layer; throws ShapeError on the first
    /// incompatible layer.
    std::vector<Shape> shapes() const;
};

/// (in + 2 padding - kernel) / stride + 1; ShapeError when not integral.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

Shape output_shape(const Layer& layer, const Shape& in);

Tensor conv2d_forward(const Tensor& x, const Conv2d& layer);
Tensor relu(const Tensor& x);
Tensor maxpool_forward(const Tensor& x, std::size_t kernel, std::size_t stride);
Tensor batchnorm_inference(const Tensor& x, const BatchNorm& stats);
Tensor linear_forward(const Tensor& x, const Linear& layer);
Tensor flatten(const Tensor& x);

Tensor forward_layer(const Tensor& x, const Layer& layer);
Tensor forward(const NetworkSpec& net, Tensor x);

std::size_t argmax(const Tensor& logits);

}  // namespace xbarsim
