#pragma once

// Image container: `<name>.json` sidecar + `<name>.raw` payload of
// width*height IEEE-754 binary32 little-endian values, row-major, no header.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctnoise/error.hpp"
#include "ctnoise/image.hpp"

namespace ctnoise {

namespace io_detail {

inline std::filesystem::path base_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".json" || ext == ".raw") {
    auto stripped = path;
    stripped.replace_extension();
    return stripped;
  }
  return path;
}

inline std::filesystem::path with_suffix(const std::filesystem::path& base,
                                         const char* suffix) {
  return std::filesystem::path(base.string() + suffix);
}

inline std::uint32_t to_little_endian(std::uint32_t v) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
           (v >> 24);
  }
}

inline std::vector<char> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw error(errc::missing_file, p.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

}  // namespace io_detail

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return io_detail::with_suffix(io_detail::base_path(path), ".json");
}

inline std::filesystem::path payload_path(const std::filesystem::path& path) {
  return io_detail::with_suffix(io_detail::base_path(path), ".raw");
}

inline void save_image(const Image& img, const std::filesystem::path& path) {
  std::vector<std::uint32_t> words(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const float f = static_cast<float>(px[i]);
    if (!std::isfinite(f))
      throw error(errc::non_finite_pixel,
                  "pixel not representable as binary32");
    words[i] = io_detail::to_little_endian(std::bit_cast<std::uint32_t>(f));
  }

  nlohmann::ordered_json side;
  side["width"] = img.width();
  side["height"] = img.height();
  side["dtype"] = "f32le";
  side["order"] = "row-major";
  side["units"] = "HU";
  if (img.meta().mas)
    side["mas"] = *img.meta().mas;
  else
    side["mas"] = nullptr;
  if (img.meta().slice_id)
    side["slice_id"] = *img.meta().slice_id;
  else
    side["slice_id"] = nullptr;

  const auto raw = payload_path(path);
  {
    std::ofstream out(raw, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io_failure, "cannot open " + raw.string());
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
    if (!out) throw error(errc::io_failure, "short write to " + raw.string());
  }
  const auto json = sidecar_path(path);
  std::ofstream out(json, std::ios::trunc);
  if (!out) throw error(errc::io_failure, "cannot open " + json.string());
  out << side.dump(2) << '\n';
  if (!out) throw error(errc::io_failure, "short write to " + json.string());
}

inline Image load_image(const std::filesystem::path& path) {
  const auto json_path = sidecar_path(path);
  const auto raw_path = payload_path(path);
  if (!std::filesystem::exists(json_path))
    throw error(errc::missing_file, json_path.string());
  if (!std::filesystem::exists(raw_path))
    throw error(errc::missing_file, raw_path.string());

  const auto text = io_detail::read_all(json_path);
  const auto side = nlohmann::json::parse(text.begin(), text.end(), nullptr,
                                          /*allow_exceptions=*/false);
  if (side.is_discarded() || !side.is_object())
    throw error(errc::sidecar_mismatch, "malformed sidecar " + json_path.string());

  auto require = [&](bool ok, const char* what) {
    if (!ok) throw error(errc::sidecar_mismatch, json_path.string() + ": " + what);
  };
  require(side.contains("width") && side["width"].is_number_unsigned(), "width");
  require(side.contains("height") && side["height"].is_number_unsigned(), "height");
  require(side.value("dtype", "") == "f32le", "dtype must be f32le");
  require(side.value("order", "") == "row-major", "order must be row-major");
  require(side.value("units", "") == "HU", "units must be HU");

  const auto width = side["width"].get<std::size_t>();
  const auto height = side["height"].get<std::size_t>();
  require(width >= 1 && height >= 1, "dimensions must be >= 1");

  ImageMeta meta;
  if (side.contains("mas") && !side["mas"].is_null()) {
    require(side["mas"].is_number(), "mas must be a number");
    meta.mas = side["mas"].get<double>();
    require(*meta.mas >= 0.0 && std::isfinite(*meta.mas), "mas must be >= 0");
  }
  if (side.contains("slice_id") && !side["slice_id"].is_null()) {
    require(side["slice_id"].is_string(), "slice_id must be a string");
    meta.slice_id = side["slice_id"].get<std::string>();
  }

  const auto bytes = io_detail::read_all(raw_path);
  if (bytes.size() != width * height * sizeof(std::uint32_t))
    throw error(errc::sidecar_mismatch,
                "sidecar declares " + std::to_string(width) + "x" +
                    std::to_string(height) + " but payload holds " +
                    std::to_string(bytes.size()) + " bytes");

  std::vector<double> pixels(width * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    std::array<unsigned char, 4> b{};
    for (std::size_t k = 0; k < 4; ++k)
      b[k] = static_cast<unsigned char>(bytes[4 * i + k]);
    const std::uint32_t word = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                               (std::uint32_t{b[2]} << 16) |
                               (std::uint32_t{b[3]} << 24);
    const float f = std::bit_cast<float>(word);
    if (!std::isfinite(f))
      throw error(errc::non_finite_pixel,
                  raw_path.string() + " pixel " + std::to_string(i));
    pixels[i] = f;
  }
  return Image(width, height, std::move(pixels), std::move(meta));
}

// Stored value 0 maps to -1024 HU (CT DICOM convention).
inline constexpr double pgm_hu_offset = 1024.0;

// Binary P5 PGM with maxval 65535, big-endian 16-bit samples.
inline Image import_pgm(const std::filesystem::path& path) {
  const auto bytes = io_detail::read_all(path);
  std::size_t pos = 0;

  auto skip_space = [&] {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      ++pos;
      ++digits;
    }
    if (digits == 0)
      throw error(errc::parse_error, path.string() + ": bad PGM " + what);
    return value;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw error(errc::bad_magic, path.string());
  pos = 2;
  const auto width = read_uint("width");
  const auto height = read_uint("height");
  const auto maxval = read_uint("maxval");
  if (maxval != 65535)
    throw error(errc::unsupported_maxval,
                path.string() + ": maxval " + std::to_string(maxval));
  if (width == 0 || height == 0)
    throw error(errc::parse_error, path.string() + ": empty image");
  ++pos;  // single whitespace byte ends the header

  const std::size_t need = width * height * 2;
  if (pos > bytes.size() || bytes.size() - pos < need)
    throw error(errc::parse_error, path.string() + ": truncated PGM payload");

  std::vector<double> pixels(width * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
    pixels[i] = static_cast<double>((hi << 8) | lo) - pgm_hu_offset;
  }
  return Image(width, height, std::move(pixels));
}

}  // namespace ctnoise
