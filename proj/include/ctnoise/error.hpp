#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctnoise {

enum class errc {
  missing_file,
  sidecar_mismatch,
  non_finite_pixel,
  io_failure,
  bad_magic,
  unsupported_maxval,
  roi_out_of_bounds,
  dimension_mismatch,
  image_too_small,
  malformed_pyramid,
  missing_dose,
  degenerate_high_variance,
  invalid_params,
  empty_axis,
  all_degenerate,
  missing_baseline,
  mismatch,
  parse_error,
};

constexpr std::string_view to_string(errc code) noexcept {
  switch (code) {
    case errc::missing_file: return "MissingFile";
    case errc::sidecar_mismatch: return "SidecarMismatch";
    case errc::non_finite_pixel: return "NonFinitePixel";
    case errc::io_failure: return "IoFailure";
    case errc::bad_magic: return "BadMagic";
    case errc::unsupported_maxval: return "UnsupportedMaxval";
    case errc::roi_out_of_bounds: return "RoiOutOfBounds";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::image_too_small: return "ImageTooSmall";
    case errc::malformed_pyramid: return "MalformedPyramid";
    case errc::missing_dose: return "MissingDose";
    case errc::degenerate_high_variance: return "DegenerateHighVariance";
    case errc::invalid_params: return "InvalidParams";
    case errc::empty_axis: return "EmptyAxis";
    case errc::all_degenerate: return "AllDegenerate";
    case errc::missing_baseline: return "MissingBaseline";
    case errc::mismatch: return "Mismatch";
    case errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it to an exit status.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace ctnoise
