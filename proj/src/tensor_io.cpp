#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "pseudorgbd/data_io.hpp"

namespace pseudorgbd {

namespace {

constexpr std::uint8_t kDtypeFloat32 = 0;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::size_t product(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

// Reads exactly `n` bytes or reports how many arrived.
std::size_t read_exact(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace

std::size_t Tensor::element_count() const { return product(dims); }

bool Tensor::operator==(const Tensor& other) const {
  if (dims != other.dims || values.size() != other.values.size()) return false;
  return values.empty() || std::memcmp(values.data(), other.values.data(), values.size() * sizeof(float)) == 0;
}

std::size_t tensor_file_size(const Tensor& tensor) { return 6 + 4 * tensor.dims.size() + 4 * tensor.element_count(); }

void write_tensor(std::ostream& out, const Tensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > kMaxTensorRank) {
    throw ContractError("write_tensor: rank must be in [1, 4], got " + std::to_string(tensor.dims.size()));
  }
  if (tensor.values.size() != tensor.element_count()) {
    throw ContractError("write_tensor: " + std::to_string(tensor.values.size()) + " values for a tensor of " +
                        std::to_string(tensor.element_count()) + " elements");
  }
  std::string buf;
  buf.reserve(tensor_file_size(tensor));
  buf.append(kTensorMagic, 4);
  buf.push_back(static_cast<char>(kDtypeFloat32));
  buf.push_back(static_cast<char>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(buf, d);
  for (float f : tensor.values) put_u32(buf, std::bit_cast<std::uint32_t>(f));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write_tensor: stream write failed");
}

Tensor read_tensor(std::istream& in) {
  unsigned char header[6];
  const std::size_t got = read_exact(in, header, 6);
  if (got < 4 || std::memcmp(header, kTensorMagic, 4) != 0) {
    throw FormatError("TEN: bad magic, expected \"PFT1\"", 0);
  }
  if (got < 6) throw FormatError("TEN: truncated header", got);
  if (header[4] != kDtypeFloat32) {
    throw FormatError("TEN: unsupported dtype " + std::to_string(header[4]) + " (only 0 = float32)", 4);
  }
  const std::size_t ndim = header[5];
  if (ndim < 1 || ndim > kMaxTensorRank)
    throw FormatError("TEN: ndim must be in [1, 4], got " + std::to_string(ndim), 5);

  Tensor t;
  std::vector<unsigned char> raw(4 * ndim);
  const std::size_t got_dims = read_exact(in, raw.data(), raw.size());
  if (got_dims < raw.size()) throw FormatError("TEN: truncated dims", 6 + got_dims);
  for (std::size_t i = 0; i < ndim; ++i) t.dims.push_back(get_u32(raw.data() + 4 * i));

  const std::size_t count = t.element_count();
  const std::size_t payload_offset = 6 + 4 * ndim;
  raw.resize(4 * count);
  const std::size_t got_payload = read_exact(in, raw.data(), raw.size());
  if (got_payload < raw.size()) {
    throw FormatError("TEN: truncated payload, expected " + std::to_string(raw.size()) + " bytes",
                      payload_offset + got_payload);
  }
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) t.values[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("TEN: trailing bytes after payload", payload_offset + raw.size());
  }
  return t;
}

void write_tensor(const fs::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_tensor(out, tensor);
}

Tensor read_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return read_tensor(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

Tensor tensor_from_vector(const Eigen::Ref<const Eigen::VectorXf>& v) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.values.assign(v.data(), v.data() + v.size());
  return t;
}

DepthImage<double> read_depth(const fs::path& path, DepthConvention ten_convention) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return depth_from_millimeters(read_pgm16(path));
  if (ext != ".ten") throw DataError("unrecognised depth file extension: '" + path.string() + "'");
  const Tensor t = read_tensor(path);
  if (t.dims.size() != 2) {
    throw DataError("depth tensor '" + path.string() + "' must have rank 2, got " + std::to_string(t.dims.size()));
  }
  DepthImage<double> depth;
  depth.convention = ten_convention;
  depth.values.resize(t.dims[0], t.dims[1]);
  for (std::size_t i = 0; i < t.values.size(); ++i) depth.values.data()[i] = static_cast<double>(t.values[i]);
  return depth;
}

void write_depth_tensor(const fs::path& path, const DepthImage<double>& depth) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(depth.height()), static_cast<std::uint32_t>(depth.width())};
  t.values.resize(static_cast<std::size_t>(depth.values.size()));
  for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = static_cast<float>(depth.values.data()[i]);
  write_tensor(path, t);
}

}  // namespace pseudorgbd
