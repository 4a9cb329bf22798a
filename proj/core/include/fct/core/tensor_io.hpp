#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fct/core/tensor.hpp"

namespace fct {

// FCTT layout: "FCTT", u8 dtype tag, u8 rank, rank x u64 dims, payload.
// All integers and scalars are little-endian. A rank-0 tensor has no dims.
enum class DType : std::uint8_t { f64 = 0, f32 = 1 };

std::vector<std::uint8_t> encode_fctt(const RealTensor& t, DType dtype = DType::f64);
// f32 payloads are widened to double.
RealTensor decode_fctt(const std::vector<std::uint8_t>& bytes);

void write_fctt(const std::filesystem::path& path, const RealTensor& t, DType dtype = DType::f64);
RealTensor read_fctt(const std::filesystem::path& path);

}  // namespace fct
