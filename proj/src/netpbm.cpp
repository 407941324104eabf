#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "pseudorgbd/data_io.hpp"

namespace pseudorgbd {

namespace {

struct NetpbmHeader {
  int width{0};
  int height{0};
  int maxval{0};
};

class HeaderReader {
 public:
  explicit HeaderReader(std::istream& in) : in_(in) {}

  void expect_magic(const char* magic) {
    char m[2] = {0, 0};
    in_.read(m, 2);
    if (in_.gcount() != 2 || m[0] != magic[0] || m[1] != magic[1]) {
      throw FormatError(std::string("Netpbm: expected magic ") + magic, 0);
    }
    offset_ = 2;
  }

  int next_int() {
    skip_space_and_comments();
    long long value = 0;
    int digits = 0;
    while (std::isdigit(in_.peek())) {
      value = value * 10 + (in_.get() - '0');
      ++offset_;
      if (++digits > 9) throw FormatError("Netpbm: header number too large", offset_);
    }
    if (digits == 0) throw FormatError("Netpbm: expected a decimal number", offset_);
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void end_header() {
    const int c = in_.get();
    if (c == EOF || !std::isspace(c)) throw FormatError("Netpbm: missing whitespace before raster", offset_);
    ++offset_;
  }

  std::size_t offset() const { return offset_; }

 private:
  void skip_space_and_comments() {
    for (;;) {
      const int c = in_.peek();
      if (c == '#') {
        while (in_.peek() != '\n' && in_.peek() != EOF) {
          in_.get();
          ++offset_;
        }
      } else if (c != EOF && std::isspace(c)) {
        in_.get();
        ++offset_;
      } else {
        return;
      }
    }
  }

  std::istream& in_;
  std::size_t offset_{0};
};

NetpbmHeader read_header(const char* magic, HeaderReader& reader) {
  reader.expect_magic(magic);
  NetpbmHeader h;
  h.width = reader.next_int();
  h.height = reader.next_int();
  h.maxval = reader.next_int();
  if (h.width < 1 || h.height < 1) throw FormatError("Netpbm: image dimensions must be positive", reader.offset());
  if (h.maxval < 1 || h.maxval > 65535) throw FormatError("Netpbm: maxval must be in [1, 65535]", reader.offset());
  reader.end_header();
  return h;
}

std::string read_raster(std::istream& in, std::size_t bytes, std::size_t offset) {
  std::string raster(bytes, '\0');
  in.read(raster.data(), static_cast<std::streamsize>(bytes));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got < bytes) throw FormatError("Netpbm: truncated raster", offset + got);
  return raster;
}

}  // namespace

void write_ppm(std::ostream& out, const HhaImage& image) {
  const Eigen::Index w = image.width();
  const Eigen::Index h = image.height();
  out << "P6\n" << w << ' ' << h << "\n255\n";
  std::string raster(static_cast<std::size_t>(w * h * 3), '\0');
  for (Eigen::Index i = 0; i < w * h; ++i) {
    for (int c = 0; c < 3; ++c)
      raster[static_cast<std::size_t>(3 * i + c)] = static_cast<char>(image.channels[c].data()[i]);
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw Error("write_ppm: stream write failed");
}

HhaImage read_ppm(std::istream& in) {
  HeaderReader reader(in);
  const NetpbmHeader h = read_header("P6", reader);
  if (h.maxval != 255) throw FormatError("PPM: only 8-bit images (maxval 255) are supported", reader.offset());
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  const std::string raster = read_raster(in, 3 * n, reader.offset());
  HhaImage image;
  for (auto& c : image.channels) c.resize(h.height, h.width);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) image.channels[c].data()[i] = static_cast<std::uint8_t>(raster[3 * i + c]);
  }
  return image;
}

void write_pgm16(std::ostream& out, const Gray16& image) {
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
  std::string raster(static_cast<std::size_t>(image.size() * 2), '\0');
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const std::uint16_t v = image.data()[i];
    raster[static_cast<std::size_t>(2 * i)] = static_cast<char>(v >> 8);
    raster[static_cast<std::size_t>(2 * i + 1)] = static_cast<char>(v & 0xFF);
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw Error("write_pgm16: stream write failed");
}

Gray16 read_pgm16(std::istream& in) {
  HeaderReader reader(in);
  const NetpbmHeader h = read_header("P5", reader);
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  const std::size_t bytes_per_sample = h.maxval > 255 ? 2 : 1;
  const std::string raster = read_raster(in, n * bytes_per_sample, reader.offset());
  Gray16 image(h.height, h.width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = static_cast<unsigned char>(raster[bytes_per_sample * i]);
    image.data()[i] = bytes_per_sample == 2
                          ? static_cast<std::uint16_t>((hi << 8) | static_cast<unsigned char>(raster[2 * i + 1]))
                          : static_cast<std::uint16_t>(hi);
  }
  return image;
}

void write_ppm(const fs::path& path, const HhaImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_ppm(out, image);
}

HhaImage read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_ppm(in);
}

void write_pgm16(const fs::path& path, const Gray16& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_pgm16(out, image);
}

Gray16 read_pgm16(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_pgm16(in);
}

Gray16 depth_to_millimeters(const DepthImage<double>& depth) {
  if (depth.convention != DepthConvention::kMetricDepth) {
    throw ContractError("depth_to_millimeters: only metric depth can be stored as millimeters");
  }
  Gray16 mm = Gray16::Zero(depth.height(), depth.width());
  for (Eigen::Index i = 0; i < depth.values.size(); ++i) {
    const double d = depth.values.data()[i];
    if (!is_valid_depth(d)) continue;
    mm.data()[i] = static_cast<std::uint16_t>(std::clamp(std::floor(d * 1000.0 + 0.5), 1.0, 65535.0));
  }
  return mm;
}

DepthImage<double> depth_from_millimeters(const Gray16& mm) {
  DepthImage<double> depth;
  depth.convention = DepthConvention::kMetricDepth;
  depth.values = mm.cast<double>() / 1000.0;
  return depth;
}

}  // namespace pseudorgbd
