#pragma once

#include "xbarsim/network.hpp"
#include "xbarsim/weight_mapping.hpp"

namespace xbarsim {

/// Extracts the sliding receptive fields of a (C, H, W) input as rows
/// ordered (channel, ky, kx); zero padding is materialized.
struct PatchGatherer {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t out_height = 0;
    std::size_t out_width = 0;

    std::size_t patch_size() const { return channels * kernel * kernel; }
    std::size_t patch_count() const { return out_height * out_width; }

    /// patch_count x patch_size, one row per output pixel (row-major).
    Matrix gather(const Tensor& x) const;
};

struct LoweredConv {
    Matrix weights;  // out_channels x (in_channels * kernel^2)
    PatchGatherer gatherer;

    /// Same weights in crossbar orientation (patch elements x out_channels).
    WeightMatrix crossbar_weights() const;
};

LoweredConv lower_conv_to_matmul(const Conv2d& layer, const Shape& input_shape);

/// Reassemble per-pixel outputs (patch_count x out_channels) into a
/// (out_channels, out_h, out_w) tensor, adding the bias.
Tensor scatter_outputs(const Matrix& pixel_outputs, const std::vector<double>& bias, const PatchGatherer& gatherer);

/// Digital conv via the lowered product.
Tensor lowered_conv_forward(const LoweredConv& lowered, const std::vector<double>& bias, const Tensor& x);

}  // namespace xbarsim
