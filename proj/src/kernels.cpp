#include "xbarsim/kernels.hpp"

#include <algorithm>

#include "xbarsim/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace xbarsim {

Matrix mapped_mvm_batch(const MappedLayer& layer, const Matrix& inputs) {
    if (inputs.cols != layer.rows) {
        throw UsageError("mapped_mvm_batch: input width does not match layer rows");
    }
    Matrix out(inputs.rows, layer.cols);
    const auto n = static_cast<std::ptrdiff_t>(inputs.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const auto y = mapped_mvm(layer, inputs.row(static_cast<std::size_t>(s)));
        std::copy(y.begin(), y.end(), out.row(static_cast<std::size_t>(s)).begin());
    }
    return out;
}

Matrix digital_mvm_batch(const WeightMatrix& w, const Matrix& inputs) {
    if (inputs.cols != w.rows()) {
        throw UsageError("digital_mvm_batch: input width does not match weight rows");
    }
    Matrix out(inputs.rows, w.cols());
    const auto n = static_cast<std::ptrdiff_t>(inputs.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const auto x = inputs.row(static_cast<std::size_t>(s));
        auto y = out.row(static_cast<std::size_t>(s));
        for (std::size_t i = 0; i < w.rows(); ++i) {
            const auto wr = w.values.row(i);
            for (std::size_t j = 0; j < w.cols(); ++j) {
                y[j] += x[i] * wr[j];
            }
        }
    }
    return out;
}

namespace reference {

std::vector<double> tile_mvm(const CrossbarTile& tile, std::span<const double> v) {
    const auto& p = tile.placement;
    if (v.size() != p.rows) {
        throw UsageError("tile_mvm: voltage vector length does not match occupied rows");
    }
    std::vector<double> out(p.cols, 0.0);
    for (std::size_t c = 0; c < p.cols; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < p.rows; ++r) {
            acc += v[r] * tile.g[tile.index(r, c)];
        }
        out[c] = acc;
    }
    return out;
}

Matrix mapped_mvm_batch(const MappedLayer& layer, const Matrix& inputs) {
    if (inputs.cols != layer.rows) {
        throw UsageError("mapped_mvm_batch: input width does not match layer rows");
    }
    Matrix out(inputs.rows, layer.cols);
    for (std::size_t s = 0; s < inputs.rows; ++s) {
        const auto v = dac_encode(inputs.row(s), layer.dac, layer.x_ref);
        auto y = out.row(s);
        for (std::size_t t = 0; t < layer.pos.size(); ++t) {
            const auto& p = layer.pos[t].placement;
            const std::span<const double> slice(v.data() + p.origin_row, p.rows);
            const auto ip = reference::tile_mvm(layer.pos[t], slice);
            const auto in = reference::tile_mvm(layer.neg[t], slice);
            for (std::size_t c = 0; c < p.cols; ++c) {
                y[p.origin_col + c] += layer.use_adc
                                           ? adc_decode(ip[c], layer.adc[t]) - adc_decode(in[c], layer.adc[t])
                                           : ip[c] - in[c];
            }
        }
        for (auto& val : y) {
            val *= layer.k;
        }
    }
    return out;
}

Matrix digital_mvm_batch(const WeightMatrix& w, const Matrix& inputs) {
    Matrix out(inputs.rows, w.cols());
    for (std::size_t s = 0; s < inputs.rows; ++s) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < w.rows(); ++i) {
                acc += inputs(s, i) * w.values(i, j);
            }
            out(s, j) = acc;
        }
    }
    return out;
}

}  // namespace reference

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) {
        omp_set_num_threads(n);
    }
#else
    (void)n;
#endif
}

}  // namespace xbarsim
