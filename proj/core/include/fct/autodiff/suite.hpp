#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fct/autodiff/gradcheck.hpp"

namespace fct::ad {

struct SuiteEntry {
  std::string op;  // "primitive[input]"
  FdReport report;
};

// Central finite-difference checks of every differentiable primitive, of
// complex self-attention (2 channels, length 8) and of a spatial and a
// channel FCT block on a 4 x 4 x 4 map, each against the gradient of a
// random linear probe of the output. Inputs are drawn from `seed`.
std::vector<SuiteEntry> gradient_suite(std::uint64_t seed, double rel_tol = 1e-5);

}  // namespace fct::ad
