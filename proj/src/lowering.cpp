#include "xbarsim/lowering.hpp"

#include "xbarsim/errors.hpp"

namespace xbarsim {

Matrix PatchGatherer::gather(const Tensor& x) const {
    if (x.shape != Shape{channels, height, width}) {
        throw ShapeError("gather: input shape " + to_string(x.shape) + " does not match the lowered layer");
    }
    Matrix patches(patch_count(), patch_size());
    for (std::size_t oy = 0; oy < out_height; ++oy) {
        for (std::size_t ox = 0; ox < out_width; ++ox) {
            auto row = patches.row(oy * out_width + ox);
            std::size_t col = 0;
            for (std::size_t c = 0; c < channels; ++c) {
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    for (std::size_t kx = 0; kx < kernel; ++kx, ++col) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
                        const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                        if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(height) ||
                            ix >= static_cast<std::ptrdiff_t>(width)) {
                            continue;
                        }
                        row[col] = x.values[(c * height + static_cast<std::size_t>(iy)) * width +
                                            static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
    return patches;
}

WeightMatrix LoweredConv::crossbar_weights() const { return WeightMatrix::from(transpose(weights)); }

LoweredConv lower_conv_to_matmul(const Conv2d& layer, const Shape& input_shape) {
    const Shape os = output_shape(layer, input_shape);
    LoweredConv lowered;
    lowered.gatherer = PatchGatherer{layer.in_channels, input_shape[1], input_shape[2], layer.kernel,
                                     layer.stride,      layer.padding,  os[1],          os[2]};
    // out x (in * k * k) is exactly the row-major weight layout.
    lowered.weights = Matrix(layer.out_channels, lowered.gatherer.patch_size());
    lowered.weights.data = layer.weight;
    return lowered;
}

Tensor scatter_outputs(const Matrix& pixel_outputs, const std::vector<double>& bias, const PatchGatherer& gatherer) {
    if (pixel_outputs.rows != gatherer.patch_count() || pixel_outputs.cols != bias.size()) {
        throw ShapeError("scatter_outputs: output matrix does not match the lowered layer");
    }
    const std::size_t pixels = gatherer.patch_count();
    Tensor y(Shape{bias.size(), gatherer.out_height, gatherer.out_width});
    for (std::size_t o = 0; o < bias.size(); ++o) {
        for (std::size_t p = 0; p < pixels; ++p) {
            y.values[o * pixels + p] = pixel_outputs(p, o) + bias[o];
        }
    }
    return y;
}

Tensor lowered_conv_forward(const LoweredConv& lowered, const std::vector<double>& bias, const Tensor& x) {
    const Matrix patches = lowered.gatherer.gather(x);
    Matrix out(patches.rows, lowered.weights.rows);
    for (std::size_t p = 0; p < patches.rows; ++p) {
        for (std::size_t o = 0; o < lowered.weights.rows; ++o) {
            double acc = 0.0;
            for (std::size_t k = 0; k < patches.cols; ++k) {
                acc += lowered.weights(o, k) * patches(p, k);
            }
            out(p, o) = acc;
        }
    }
    return scatter_outputs(out, bias, lowered.gatherer);
}

}  // namespace xbarsim
