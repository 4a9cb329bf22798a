#include "fct/core/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fct {

namespace {

constexpr char kMagic[4] = {'F', 'C', 'T', 'T'};

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename U>
U get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw FormatError("FCTT: truncated stream");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in[pos + i]) << (8 * i);
  pos += sizeof(U);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_fctt(const RealTensor& t, DType dtype) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(dtype));
  if (t.rank() > 255) throw FormatError("FCTT: rank exceeds 255");
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) put_le<std::uint64_t>(out, d);
  const std::size_t width = dtype == DType::f64 ? 8 : 4;
  out.reserve(out.size() + t.size() * width);
  for (double v : t.data()) {
    if (dtype == DType::f64) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    } else {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

RealTensor decode_fctt(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("FCTT: bad magic");
  std::size_t pos = 4;
  const auto tag = bytes[pos++];
  if (tag > 1) throw FormatError("FCTT: unknown dtype tag " + std::to_string(tag));
  const auto dtype = static_cast<DType>(tag);
  const std::size_t rank = bytes[pos++];
  Shape shape(rank);
  for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(bytes, pos));
  const std::size_t n = shape_product(shape);
  const std::size_t width = dtype == DType::f64 ? 8 : 4;
  if (bytes.size() - pos != n * width) {
    throw FormatError("FCTT: payload holds " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                      std::to_string(n * width));
  }
  std::vector<double> data(n);
  for (auto& v : data) {
    if (dtype == DType::f64) {
      v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
    } else {
      v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos)));
    }
  }
  return RealTensor(std::move(shape), std::move(data));
}

void write_fctt(const std::filesystem::path& path, const RealTensor& t, DType dtype) {
  const auto bytes = encode_fctt(t, dtype);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("FCTT: cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("FCTT: write failed for " + path.string());
}

RealTensor read_fctt(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("FCTT: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_fctt(bytes);
}

}  // namespace fct
