#pragma once

#include <cstddef>
#include <string>

#include "fct/core/tensor.hpp"

namespace fct {

// Views a tensor as [outer, len, inner] around one axis so that element
// (o, k, i) of the fiber sits at (o * len + k) * inner + i.
struct AxisLayout {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;

  AxisLayout(const Shape& shape, std::size_t axis) {
    if (axis >= shape.size()) {
      throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape));
    }
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    len = shape[axis];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  }

  std::size_t at(std::size_t o, std::size_t k, std::size_t i) const { return (o * len + k) * inner + i; }
  std::size_t fibers() const { return outer * inner; }
};

}  // namespace fct
