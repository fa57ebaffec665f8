#pragma once

#include "xbarsim/crossbar_engine.hpp"
#include "xbarsim/matrix.hpp"

namespace xbarsim {

/// mapped_mvm over every row of `inputs`, rows spread over OpenMP threads.
/// Each row is computed exactly as by mapped_mvm, so results match the
/// serial reference bit for bit.
Matrix mapped_mvm_batch(const MappedLayer& layer, const Matrix& inputs);

/// Dense digital product of every input row with `w` (inputs x outputs).
Matrix digital_mvm_batch(const WeightMatrix& w, const Matrix& inputs);

namespace reference {

/// Column-at-a-time Kirchhoff sum, no blocking, no threads.
std::vector<double> tile_mvm(const CrossbarTile& tile, std::span<const double> v);

Matrix mapped_mvm_batch(const MappedLayer& layer, const Matrix& inputs);

Matrix digital_mvm_batch(const WeightMatrix& w, const Matrix& inputs);

}  // namespace reference

int max_threads();
void set_threads(int n);

}  // namespace xbarsim
