#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xbarsim/network.hpp"

namespace xbarsim {

struct Dataset {
    std::string name;
    Shape sample_shape;
    std::size_t num_classes = 0;
    std::vector<Tensor> images;
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return images.size(); }

    /// First `n` items (or all, when n exceeds the size).
    Dataset head(std::size_t n) const;
};

}  // namespace xbarsim
