#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "xbarsim/dataset.hpp"
#include "xbarsim/network.hpp"

namespace xbarsim {

namespace fs = std::filesystem;

/// Raw little-endian float32, row-major, no header.
std::vector<double> read_raw_f32(const fs::path& path, std::size_t expected_count);
void write_raw_f32(const fs::path& path, std::span<const double> values);

/// Weight container: `manifest` (JSON layer list, shapes, hyperparameters,
/// metadata) plus one raw tensor per parameter named `<layer>_<param>`.
/// Parameters are stored as float32; a network read from a container
/// writes back byte-identically.
void write_network(const fs::path& dir, const NetworkSpec& net);
NetworkSpec read_network(const fs::path& dir);

/// Dataset container: `manifest`, `images` (float32) and `labels` (uint8).
void write_dataset(const fs::path& dir, const Dataset& data);
Dataset read_dataset(const fs::path& dir);

/// Round every parameter through float32 so the in-memory network equals
/// what a container stores.
void round_to_f32(NetworkSpec& net);

}  // namespace xbarsim
