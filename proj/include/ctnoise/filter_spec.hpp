#pragma once

// A filter kind plus its parameter tuple, with the flat text form used on the
// command line and in CSV output, e.g.
//   ad:iterations=20,delta=0.2,kappa=54,conduction=exp
//   cdwt:threshold=150
//   pwnlm

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "ctnoise/error.hpp"
#include "ctnoise/image.hpp"
#include "ctnoise/spatial_filters.hpp"
#include "ctnoise/spectral_filters.hpp"

namespace ctnoise {

// Declaration order is the canonical ordering of kinds in sweeps and tables.
enum class FilterKind { mf, bf, ad, cdwt, fde, pwnlm, none };

inline constexpr std::array<FilterKind, 7> all_filter_kinds = {
    FilterKind::mf,   FilterKind::bf,    FilterKind::ad,  FilterKind::cdwt,
    FilterKind::fde,  FilterKind::pwnlm, FilterKind::none};

constexpr std::string_view to_string(FilterKind k) noexcept {
  switch (k) {
    case FilterKind::mf: return "mf";
    case FilterKind::bf: return "bf";
    case FilterKind::ad: return "ad";
    case FilterKind::cdwt: return "cdwt";
    case FilterKind::fde: return "fde";
    case FilterKind::pwnlm: return "pwnlm";
    case FilterKind::none: return "none";
  }
  return "?";
}

inline std::optional<FilterKind> parse_filter_kind(std::string_view s) {
  for (auto k : all_filter_kinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct PwnlmParams {
  friend bool operator==(const PwnlmParams&, const PwnlmParams&) = default;
};
struct NoFilter {
  friend bool operator==(const NoFilter&, const NoFilter&) = default;
};

// Alternative order mirrors FilterKind.
using FilterParams = std::variant<MatchedFilterParams, BilateralParams, AdParams,
                                  CdwtParams, FdeParams, PwnlmParams, NoFilter>;

struct FilterSpec {
  FilterParams params = NoFilter{};

  FilterKind kind() const noexcept { return static_cast<FilterKind>(params.index()); }

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

inline FilterSpec default_spec(FilterKind kind) {
  switch (kind) {
    case FilterKind::mf: return {MatchedFilterParams{}};
    case FilterKind::bf: return {BilateralParams{}};
    case FilterKind::ad: return {AdParams{}};
    case FilterKind::cdwt: return {CdwtParams{}};
    case FilterKind::fde: return {FdeParams{}};
    case FilterKind::pwnlm: return {PwnlmParams{}};
    case FilterKind::none: return {NoFilter{}};
  }
  return {};
}

// Shortest round-trip decimal form, with a compact exponent ("1e-9").
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), end);
  if (auto e = s.find('e'); e != std::string::npos) {
    std::string mant = s.substr(0, e);
    std::string exp = s.substr(e + 1);
    std::string sign;
    if (!exp.empty() && (exp[0] == '-' || exp[0] == '+')) {
      if (exp[0] == '-') sign = "-";
      exp.erase(0, 1);
    }
    exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
    s = mant + "e" + sign + exp;
  }
  return s;
}

inline std::string format_count(std::size_t v) { return std::to_string(v); }

inline std::string_view to_string(Conduction c) noexcept {
  return c == Conduction::exponential ? "exp" : "recip";
}

inline std::string params_string(const FilterSpec& spec) {
  struct Visitor {
    std::string operator()(const MatchedFilterParams& p) const {
      return "half_width=" + format_count(p.half_width) +
             ",sigma_t=" + format_number(p.sigma_t);
    }
    std::string operator()(const BilateralParams& p) const {
      return "half_width=" + format_count(p.half_width) +
             ",sigma_sx=" + format_number(p.sigma_sx) +
             ",sigma_sy=" + format_number(p.sigma_sy) +
             ",sigma_r=" + format_number(p.sigma_r);
    }
    std::string operator()(const AdParams& p) const {
      return "iterations=" + format_count(p.iterations) +
             ",delta=" + format_number(p.delta) +
             ",kappa=" + format_number(p.kappa) + ",conduction=" +
             std::string(to_string(p.conduction));
    }
    std::string operator()(const CdwtParams& p) const {
      std::string s = "threshold=" + format_number(p.threshold);
      if (p.shrinkage == Shrinkage::soft) s += ",shrinkage=soft";
      return s;
    }
    std::string operator()(const FdeParams& p) const {
      return "noise_variance=" + format_number(p.noise_variance);
    }
    std::string operator()(const PwnlmParams&) const { return ""; }
    std::string operator()(const NoFilter&) const { return ""; }
  };
  return std::visit(Visitor{}, spec.params);
}

inline std::string to_string(const FilterSpec& spec) {
  std::string s(to_string(spec.kind()));
  const auto params = params_string(spec);
  if (!params.empty()) s += ":" + params;
  return s;
}

namespace spec_detail {

[[noreturn]] inline void bad(const std::string& what) {
  throw error(errc::invalid_params, what);
}

inline double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    bad("bad number for " + std::string(key) + ": '" + std::string(text) + "'");
  return v;
}

inline std::size_t parse_count(std::string_view key, std::string_view text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    // Accept integral floating forms such as "20.0" from JSON configs.
    const double d = parse_double(key, text);
    if (d < 0.0 || d != std::floor(d) || d > 1e9)
      bad("bad count for " + std::string(key) + ": '" + std::string(text) + "'");
    return static_cast<std::size_t>(d);
  }
  return v;
}

inline std::map<std::string, std::string, std::less<>> split_params(
    std::string_view text) {
  std::map<std::string, std::string, std::less<>> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0)
      bad("expected key=value, got '" + std::string(item) + "'");
    const std::string key(item.substr(0, eq));
    if (out.contains(key)) bad("duplicate parameter " + key);
    out.emplace(key, std::string(item.substr(eq + 1)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) bad("trailing comma in parameter list");
  }
  return out;
}

}  // namespace spec_detail

inline void validate(const FilterSpec& spec) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (!std::is_same_v<T, PwnlmParams> && !std::is_same_v<T, NoFilter>)
          validate(p);
      },
      spec.params);
}

// Builds a spec of `kind` from "k=v,k=v"; unspecified keys keep their defaults.
inline FilterSpec make_spec(FilterKind kind, std::string_view params) {
  using namespace spec_detail;
  auto kv = split_params(params);
  FilterSpec spec = default_spec(kind);

  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MatchedFilterParams>) {
          if (auto v = take("half_width")) p.half_width = parse_count("half_width", *v);
          if (auto v = take("sigma_t")) p.sigma_t = parse_double("sigma_t", *v);
        } else if constexpr (std::is_same_v<T, BilateralParams>) {
          if (auto v = take("half_width")) p.half_width = parse_count("half_width", *v);
          if (auto v = take("sigma_sx")) p.sigma_sx = parse_double("sigma_sx", *v);
          if (auto v = take("sigma_sy")) p.sigma_sy = parse_double("sigma_sy", *v);
          if (auto v = take("sigma_r")) p.sigma_r = parse_double("sigma_r", *v);
        } else if constexpr (std::is_same_v<T, AdParams>) {
          if (auto v = take("iterations")) p.iterations = parse_count("iterations", *v);
          if (auto v = take("delta")) p.delta = parse_double("delta", *v);
          if (auto v = take("kappa")) p.kappa = parse_double("kappa", *v);
          if (auto v = take("conduction")) {
            if (*v == "exp" || *v == "exponential")
              p.conduction = Conduction::exponential;
            else if (*v == "recip" || *v == "reciprocal")
              p.conduction = Conduction::reciprocal;
            else
              bad("conduction must be exp or recip");
          }
        } else if constexpr (std::is_same_v<T, CdwtParams>) {
          if (auto v = take("threshold")) p.threshold = parse_double("threshold", *v);
          if (auto v = take("shrinkage")) {
            if (*v == "hard")
              p.shrinkage = Shrinkage::hard;
            else if (*v == "soft")
              p.shrinkage = Shrinkage::soft;
            else
              bad("shrinkage must be hard or soft");
          }
        } else if constexpr (std::is_same_v<T, FdeParams>) {
          if (auto v = take("noise_variance"))
            p.noise_variance = parse_double("noise_variance", *v);
        }
      },
      spec.params);

  if (!kv.empty())
    bad("unknown parameter '" + kv.begin()->first + "' for " +
        std::string(to_string(kind)));
  validate(spec);
  return spec;
}

// Parses "kind" or "kind:k=v,...".
inline FilterSpec parse_filter_spec(std::string_view text) {
  const auto colon = text.find(':');
  const auto kind_text = text.substr(0, colon);
  const auto kind = parse_filter_kind(kind_text);
  if (!kind) spec_detail::bad("unknown filter kind '" + std::string(kind_text) + "'");
  return make_spec(*kind, colon == std::string_view::npos ? std::string_view{}
                                                          : text.substr(colon + 1));
}

inline Image apply_filter(const Image& img, const FilterSpec& spec) {
  struct Visitor {
    const Image& img;
    Image operator()(const MatchedFilterParams& p) const { return matched_filter(img, p); }
    Image operator()(const BilateralParams& p) const { return bilateral(img, p); }
    Image operator()(const AdParams& p) const { return anisotropic_diffusion(img, p); }
    Image operator()(const CdwtParams& p) const { return cdwt_denoise(img, p); }
    Image operator()(const FdeParams& p) const { return fde_wiener(img, p); }
    Image operator()(const PwnlmParams&) const { return pwnlm(img); }
    Image operator()(const NoFilter&) const { return img; }
  };
  Image out = std::visit(Visitor{img}, spec.params);
  require_finite(out);
  return out;
}

}  // namespace ctnoise
