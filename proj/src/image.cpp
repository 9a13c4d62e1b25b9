// Copyright 2026 The gridtarget Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gridtarget/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "gridtarget/error.hpp"

namespace gridtarget {

static_assert(std::endian::native == std::endian::little,
              "byte-level codecs assume a little-endian host");

GrayImage::GrayImage(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
  if (w < 0 || h < 0) throw ArgumentError("negative image dimensions");
}

ProbabilityMap::ProbabilityMap(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
  if (w < 0 || h < 0) throw ArgumentError("negative map dimensions");
}

void ProbabilityMap::validate() const {
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw CorruptionError("probability map size does not match its shape");
  }
  for (double v : data) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw CorruptionError("probability map value outside [0, 1]");
    }
  }
}

PixelMask::PixelMask(int w, int h, bool fill)
    : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

// ---------------------------------------------------------------------------
// Byte helpers

namespace {

template <typename T>
T read_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void write_le(std::vector<std::uint8_t>& out, std::size_t offset, T v) {
  std::memcpy(out.data() + offset, &v, sizeof(T));
}

template <typename T>
T byteswap(T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  std::reverse(raw, raw + sizeof(T));
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

constexpr std::size_t kMrcHeader = 1024;
constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool is_integral_in(double v, double lo, double hi) {
  return std::isfinite(v) && v >= lo && v <= hi && std::floor(v) == v;
}

double checked_sample(double v, ImageMeta& meta) {
  if (!std::isfinite(v)) throw CorruptionError("non-finite intensity in image payload");
  if (v < 0.0) {
    ++meta.clamped_negatives;
    return 0.0;
  }
  return v;
}

// --- MRC -------------------------------------------------------------------

GrayImage decode_mrc(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMrcHeader) throw CorruptionError("MRC header truncated");
  bool swap = bytes[212] == 0x11;
  auto i32 = [&](std::size_t off) {
    auto v = read_le<std::int32_t>(bytes, off);
    return swap ? byteswap(v) : v;
  };
  auto f32 = [&](std::size_t off) {
    auto v = read_le<float>(bytes, off);
    return swap ? byteswap(v) : v;
  };
  const std::int32_t nx = i32(0), ny = i32(4), nz = i32(8), mode = i32(12);
  if (nx <= 0 || ny <= 0) throw CorruptionError("MRC header has non-positive dimensions");
  if (nz != 1) throw FormatError("MRC stacks and volumes are not supported (nz != 1)");
  std::size_t sample_bytes = 0;
  switch (mode) {
    case 0: sample_bytes = 1; break;
    case 1: case 6: sample_bytes = 2; break;
    case 2: sample_bytes = 4; break;
    default: throw FormatError("unsupported MRC mode " + std::to_string(mode));
  }
  const std::int32_t nsymbt = i32(92);
  if (nsymbt < 0) throw CorruptionError("negative MRC extended header size");
  const std::size_t offset = kMrcHeader + static_cast<std::size_t>(nsymbt);
  const std::size_t count = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  if (bytes.size() < offset + count * sample_bytes) {
    throw CorruptionError("MRC payload truncated");
  }

  GrayImage img(nx, ny);
  const std::int32_t mx = i32(28);
  const float cella = f32(40);
  if (mx > 0 && cella > 0.0f) img.meta.pixel_size = static_cast<double>(cella) / mx;

  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = offset + i * sample_bytes;
    double v = 0.0;
    switch (mode) {
      case 0: v = static_cast<std::int8_t>(bytes[at]); break;
      case 1: {
        auto s = read_le<std::int16_t>(bytes, at);
        v = swap ? byteswap(s) : s;
        break;
      }
      case 6: {
        auto s = read_le<std::uint16_t>(bytes, at);
        v = swap ? byteswap(s) : s;
        break;
      }
      case 2: {
        auto s = read_le<float>(bytes, at);
        v = swap ? byteswap(s) : s;
        break;
      }
    }
    img.data[i] = checked_sample(v, img.meta);
  }
  return img;
}

// --- PGM -------------------------------------------------------------------

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw CorruptionError("malformed PGM header");
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1L << 30)) throw CorruptionError("PGM header value too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size()) throw CorruptionError("PGM raster missing");
    return pos_ + 1;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  PgmHeaderReader reader(bytes);
  reader.skip(2);
  const long w = reader.next_int();
  const long h = reader.next_int();
  const long maxval = reader.next_int();
  if (w <= 0 || h <= 0) throw CorruptionError("PGM has non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) throw CorruptionError("PGM maxval out of range");
  const std::size_t offset = reader.raster_offset();
  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < offset + count * sample_bytes) throw CorruptionError("PGM payload truncated");

  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = offset + i * sample_bytes;
    img.data[i] = sample_bytes == 1 ? bytes[at] : (bytes[at] << 8) | bytes[at + 1];
  }
  return img;
}

}  // namespace

// Implemented in png_codec.cpp.
GrayImage decode_png(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Format detection and loading

ImageFormat detect_format(std::span<const std::uint8_t> head) {
  if (head.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), head.begin())) {
    return ImageFormat::kPng;
  }
  if (head.size() >= 2 && head[0] == 'P' && head[1] == '5') return ImageFormat::kPgm;
  if (head.size() >= 212 && std::memcmp(head.data() + 208, "MAP ", 4) == 0) return ImageFormat::kMrc;
  throw FormatError("unrecognized image format (unknown magic bytes)");
}

GrayImage decode_image(std::span<const std::uint8_t> bytes, const std::string& id) {
  GrayImage img;
  switch (detect_format(bytes)) {
    case ImageFormat::kMrc: img = decode_mrc(bytes); break;
    case ImageFormat::kPgm: img = decode_pgm(bytes); break;
    case ImageFormat::kPng: img = decode_png(bytes); break;
  }
  img.id = id;
  return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_image(bytes, path.stem().string());
}

// ---------------------------------------------------------------------------
// Encoding

std::vector<std::uint8_t> encode_mrc(const GrayImage& img, MrcMode mode) {
  std::size_t sample_bytes = 0;
  double lo = 0.0, hi = 0.0;
  switch (mode) {
    case MrcMode::kInt8: sample_bytes = 1; hi = 127; break;
    case MrcMode::kInt16: sample_bytes = 2; hi = 32767; break;
    case MrcMode::kUint16: sample_bytes = 2; hi = 65535; break;
    case MrcMode::kFloat32: sample_bytes = 4; break;
  }
  const std::size_t count = img.data.size();
  std::vector<std::uint8_t> out(kMrcHeader + count * sample_bytes, 0);

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -dmin, sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = img.data[i];
    if (mode != MrcMode::kFloat32 && !is_integral_in(v, lo, hi)) {
      throw ArgumentError("intensity not representable in the requested MRC mode");
    }
    if (!std::isfinite(v)) throw ArgumentError("non-finite intensity");
    dmin = std::min(dmin, v);
    dmax = std::max(dmax, v);
    sum += v;
    sumsq += v * v;
    const std::size_t at = kMrcHeader + i * sample_bytes;
    switch (mode) {
      case MrcMode::kInt8: out[at] = static_cast<std::uint8_t>(static_cast<std::int8_t>(v)); break;
      case MrcMode::kInt16: write_le(out, at, static_cast<std::int16_t>(v)); break;
      case MrcMode::kUint16: write_le(out, at, static_cast<std::uint16_t>(v)); break;
      case MrcMode::kFloat32: write_le(out, at, static_cast<float>(v)); break;
    }
  }
  const double n = count > 0 ? static_cast<double>(count) : 1.0;
  const double mean = sum / n;
  const double rms = std::sqrt(std::max(0.0, sumsq / n - mean * mean));

  write_le<std::int32_t>(out, 0, img.width);
  write_le<std::int32_t>(out, 4, img.height);
  write_le<std::int32_t>(out, 8, 1);
  write_le<std::int32_t>(out, 12, static_cast<std::int32_t>(mode));
  write_le<std::int32_t>(out, 28, img.width);
  write_le<std::int32_t>(out, 32, img.height);
  write_le<std::int32_t>(out, 36, 1);
  const double ps = img.meta.pixel_size;
  write_le<float>(out, 40, static_cast<float>(ps * img.width));
  write_le<float>(out, 44, static_cast<float>(ps * img.height));
  write_le<float>(out, 48, static_cast<float>(ps));
  write_le<float>(out, 52, 90.0f);
  write_le<float>(out, 56, 90.0f);
  write_le<float>(out, 60, 90.0f);
  write_le<std::int32_t>(out, 64, 1);
  write_le<std::int32_t>(out, 68, 2);
  write_le<std::int32_t>(out, 72, 3);
  write_le<float>(out, 76, count ? static_cast<float>(dmin) : 0.0f);
  write_le<float>(out, 80, count ? static_cast<float>(dmax) : 0.0f);
  write_le<float>(out, 84, static_cast<float>(mean));
  write_le<std::int32_t>(out, 108, 20140);
  std::memcpy(out.data() + 208, "MAP ", 4);
  out[212] = 0x44;
  out[213] = 0x44;
  write_le<float>(out, 216, static_cast<float>(rms));
  return out;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  double maxv = 0.0;
  for (double v : img.data) {
    if (!is_integral_in(v, 0, 65535)) throw ArgumentError("PGM needs integral intensities in [0, 65535]");
    maxv = std::max(maxv, v);
  }
  const int maxval = maxv <= 255 ? 255 : 65535;
  std::ostringstream header;
  header << "P5\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + img.data.size() * (maxval == 255 ? 1 : 2));
  for (double v : img.data) {
    const auto s = static_cast<std::uint16_t>(v);
    if (maxval == 255) {
      out.push_back(static_cast<std::uint8_t>(s));
    } else {
      out.push_back(static_cast<std::uint8_t>(s >> 8));
      out.push_back(static_cast<std::uint8_t>(s & 0xff));
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ArgumentError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void save_mrc(const GrayImage& img, const std::filesystem::path& path, MrcMode mode) {
  write_file_atomic(path, encode_mrc(img, mode));
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(img));
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(img));
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".mrc") {
    save_mrc(img, path);
  } else if (ext == ".pgm") {
    save_pgm(img, path);
  } else if (ext == ".png") {
    save_png(img, path);
  } else {
    throw ArgumentError("unknown image extension '" + ext + "'");
  }
}

// ---------------------------------------------------------------------------
// PMAP

std::vector<std::uint8_t> encode_pmap(const ProbabilityMap& map) {
  map.validate();
  std::vector<std::uint8_t> out(14 + map.data.size() * 4);
  std::memcpy(out.data(), "PMAP", 4);
  write_le<std::uint16_t>(out, 4, 1);
  write_le<std::uint32_t>(out, 6, static_cast<std::uint32_t>(map.width));
  write_le<std::uint32_t>(out, 10, static_cast<std::uint32_t>(map.height));
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    write_le<float>(out, 14 + 4 * i, static_cast<float>(map.data[i]));
  }
  return out;
}

ProbabilityMap decode_pmap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "PMAP", 4) != 0) {
    throw FormatError("not a PMAP file (bad magic)");
  }
  if (bytes.size() < 14) throw CorruptionError("PMAP header truncated");
  const auto version = read_le<std::uint16_t>(bytes, 4);
  if (version != 1) throw FormatError("unsupported PMAP version " + std::to_string(version));
  const auto w = read_le<std::uint32_t>(bytes, 6);
  const auto h = read_le<std::uint32_t>(bytes, 10);
  if (w > (1u << 20) || h > (1u << 20)) throw CorruptionError("PMAP dimensions implausible");
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if (bytes.size() < 14 + count * 4) throw CorruptionError("PMAP payload truncated");
  ProbabilityMap map(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < count; ++i) map.data[i] = read_le<float>(bytes, 14 + 4 * i);
  map.validate();
  return map;
}

void save_pmap(const ProbabilityMap& map, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pmap(map));
}

ProbabilityMap load_pmap(const std::filesystem::path& path) {
  return decode_pmap(read_file(path));
}

// ---------------------------------------------------------------------------
// Normalization

GrayImage normalize(const GrayImage& img, const PixelMask* mask) {
  if (mask != nullptr && (mask->width != img.width || mask->height != img.height)) {
    throw ArgumentError("normalization mask shape differs from image");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (mask == nullptr || mask->bits[i]) {
      sum += img.data[i];
      ++n;
    }
  }
  if (n == 0) throw ArgumentError("normalization mask is empty");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (mask == nullptr || mask->bits[i]) {
      const double d = img.data[i] - mean;
      ss += d * d;
    }
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));

  GrayImage out = img;
  if (sd < 1e-12) {
    std::fill(out.data.begin(), out.data.end(), 0.0);
  } else {
    for (double& v : out.data) v = (v - mean) / sd;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("blur sigma must be finite and > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  // Half kernel: weights[k] for offset k >= 0.
  std::vector<double> weights(static_cast<std::size_t>(radius) + 1);
  double total = 0.0;
  for (int k = 0; k <= radius; ++k) {
    weights[k] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    total += k == 0 ? weights[k] : 2.0 * weights[k];
  }
  for (double& w : weights) w /= total;
  return weights;
}

namespace {

int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Symmetric-pair accumulation makes the pass invariant under index reversal,
// which is what lets the 2D blur commute exactly with rot90.
void blur_pass(std::span<const double> src, std::span<double> dst, int w, int h,
               const std::vector<double>& kernel, bool horizontal) {
  const int radius = static_cast<int>(kernel.size()) - 1;
  const int n = horizontal ? w : h;
  const int lines = horizontal ? h : w;
  std::vector<double> line(static_cast<std::size_t>(n));
  for (int l = 0; l < lines; ++l) {
    for (int i = 0; i < n; ++i) {
      line[i] = horizontal ? src[static_cast<std::size_t>(l) * w + i]
                           : src[static_cast<std::size_t>(i) * w + l];
    }
    for (int i = 0; i < n; ++i) {
      double acc = kernel[0] * line[i];
      for (int k = 1; k <= radius; ++k) {
        acc += kernel[k] * (line[reflect_index(i - k, n)] + line[reflect_index(i + k, n)]);
      }
      if (horizontal) {
        dst[static_cast<std::size_t>(l) * w + i] = acc;
      } else {
        dst[static_cast<std::size_t>(i) * w + l] = acc;
      }
    }
  }
}

std::vector<double> blur_plane(const std::vector<double>& src, int w, int h, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (src.empty()) return src;
  std::vector<double> tmp(src.size()), hv(src.size()), vh(src.size());
  blur_pass(src, tmp, w, h, kernel, true);
  blur_pass(tmp, hv, w, h, kernel, false);
  blur_pass(src, tmp, w, h, kernel, false);
  blur_pass(tmp, vh, w, h, kernel, true);
  for (std::size_t i = 0; i < src.size(); ++i) hv[i] = 0.5 * (hv[i] + vh[i]);
  return hv;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, SmoothingParam s) {
  GrayImage out = img;
  out.data = blur_plane(img.data, img.width, img.height, s.sigma);
  return out;
}

ProbabilityMap gaussian_blur(const ProbabilityMap& map, SmoothingParam s) {
  ProbabilityMap out = map;
  out.data = blur_plane(map.data, map.width, map.height, s.sigma);
  // Convex combination of [0,1] values; clamp away rounding excursions.
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace gridtarget
