#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xbarsim/dataset.hpp"
#include "xbarsim/network.hpp"

namespace xbarsim {

struct TrainOptions {
    std::string architecture = "mlp";  // linear | mlp | cnn
    std::size_t epochs = 300;
    double learning_rate = 0.5;
    std::uint64_t seed = 1;
    std::size_t hidden = 32;    // mlp hidden units
    std::size_t channels = 8;   // cnn feature maps
};

struct TrainReport {
    std::vector<double> loss;  // mean cross-entropy before each update
    double train_accuracy = 0.0;
};

/// Seeded Xavier-uniform initialization of one of the fixture topologies:
///   linear: flatten -> linear
///   mlp:    flatten -> linear(hidden) -> relu -> linear
///   cnn:    conv3x3(channels, pad 1) -> relu -> maxpool 2 -> flatten -> linear
NetworkSpec make_architecture(const TrainOptions& options, const Shape& sample_shape, std::size_t num_classes);

/// Full-batch gradient descent on mean softmax cross-entropy,
/// w <- w - lr * dE/dw, for `epochs` updates. Conv and linear parameters
/// are trained; batchnorm is treated as a fixed affine map. Gradient
/// accumulation uses a fixed chunking, so results do not depend on the
/// thread count. Throws TrainingError if the loss becomes non-finite.
NetworkSpec train(NetworkSpec net, const Dataset& data, std::size_t epochs, double learning_rate,
                  TrainReport* report = nullptr);

/// make_architecture + train, parameters rounded to float32 and training
/// settings recorded in the network metadata.
NetworkSpec train_fixture(const Dataset& data, const TrainOptions& options, TrainReport* report = nullptr);

/// Mean softmax cross-entropy of the network over the dataset.
double cross_entropy(const NetworkSpec& net, const Dataset& data);

}  // namespace xbarsim
