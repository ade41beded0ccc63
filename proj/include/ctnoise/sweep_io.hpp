#pragma once

// Text formats around a sweep: the grid config and pair manifest (JSON), the
// records and optimal tables (CSV), the summary (JSON) and the plot-data
// tables emitted by `ctnoise report`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctnoise/error.hpp"
#include "ctnoise/filter_spec.hpp"
#include "ctnoise/image_io.hpp"
#include "ctnoise/noise_metrics.hpp"
#include "ctnoise/sweep.hpp"

namespace ctnoise {

// 9 significant digits, the precision of every float in machine output.
inline std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline double round_sig9(double v) { return std::strtod(format_sig9(v).c_str(), nullptr); }

// ---- sweep config ---------------------------------------------------------

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void bad(const std::string& what) {
  throw error(errc::parse_error, "sweep config: " + what);
}

inline const json& array_at(const json& obj, const std::string& kind, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_array()) bad(kind + "." + key + " must be an array");
  return v;
}

inline std::vector<double> numbers(const json& obj, const std::string& kind,
                                   const char* key, std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  std::vector<double> out;
  for (const auto& v : array_at(obj, kind, key)) {
    if (!v.is_number()) bad(kind + "." + key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::vector<std::size_t> counts(const json& obj, const std::string& kind,
                                       const char* key, std::vector<std::size_t> fallback) {
  if (!obj.contains(key)) return fallback;
  std::vector<std::size_t> out;
  for (const auto& v : array_at(obj, kind, key)) {
    if (!v.is_number()) bad(kind + "." + key + " must hold integers");
    const double d = v.get<double>();
    if (d < 0.0 || d != std::floor(d) || d > 1e9)
      bad(kind + "." + key + " must hold non-negative integers");
    out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

inline std::vector<std::string> words(const json& obj, const std::string& kind,
                                      const char* key) {
  std::vector<std::string> out;
  if (!obj.contains(key)) return out;
  for (const auto& v : array_at(obj, kind, key)) {
    if (!v.is_string()) bad(kind + "." + key + " must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline void only_keys(const json& obj, const std::string& kind,
                      std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) bad(kind + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (auto allowed : keys) known = known || k == allowed;
    if (!known) bad("unknown key " + kind + "." + k);
  }
}

}  // namespace config_detail

// Missing axes keep the parameter's default as a single point; kinds absent from
// "filters" are not swept. Without "filters" the default grid is used.
inline FilterGrid parse_sweep_config(const nlohmann::json& doc) {
  using namespace config_detail;
  if (!doc.is_object()) bad("top level must be an object");
  only_keys(doc, "config", {"filters", "betas"});
  FilterGrid grid = default_grid();
  if (doc.contains("betas")) grid.betas = numbers(doc, "config", "betas", {});

  if (!doc.contains("filters")) return grid;
  const json& filters = doc.at("filters");
  if (!filters.is_object()) bad("filters must be an object");
  grid = FilterGrid{};
  if (doc.contains("betas")) grid.betas = numbers(doc, "config", "betas", {});

  for (const auto& [name, axes] : filters.items()) {
    const auto kind = parse_filter_kind(name);
    if (!kind || *kind == FilterKind::none) bad("unknown filter kind '" + name + "'");
    switch (*kind) {
      case FilterKind::mf: {
        only_keys(axes, name, {"half_width", "sigma_t"});
        const MatchedFilterParams d;
        grid.mf = MfAxes{counts(axes, name, "half_width", {d.half_width}),
                         numbers(axes, name, "sigma_t", {d.sigma_t})};
        break;
      }
      case FilterKind::bf: {
        only_keys(axes, name, {"half_width", "sigma_sx", "sigma_sy", "sigma_r"});
        const BilateralParams d;
        grid.bf = BfAxes{counts(axes, name, "half_width", {d.half_width}),
                         numbers(axes, name, "sigma_sx", {d.sigma_sx}),
                         numbers(axes, name, "sigma_sy", {d.sigma_sy}),
                         numbers(axes, name, "sigma_r", {d.sigma_r})};
        break;
      }
      case FilterKind::ad: {
        only_keys(axes, name, {"iterations", "delta", "kappa", "conduction"});
        const AdParams d;
        AdAxes a{counts(axes, name, "iterations", {d.iterations}),
                 numbers(axes, name, "delta", {d.delta}),
                 numbers(axes, name, "kappa", {d.kappa}),
                 {}};
        if (!axes.contains("conduction")) a.conduction = {d.conduction};
        for (const auto& w : words(axes, name, "conduction")) {
          if (w == "exp" || w == "exponential")
            a.conduction.push_back(Conduction::exponential);
          else if (w == "recip" || w == "reciprocal")
            a.conduction.push_back(Conduction::reciprocal);
          else
            bad("ad.conduction must be exp or recip");
        }
        grid.ad = std::move(a);
        break;
      }
      case FilterKind::cdwt: {
        only_keys(axes, name, {"threshold", "shrinkage"});
        const CdwtParams d;
        CdwtAxes a{numbers(axes, name, "threshold", {d.threshold}), {}};
        if (!axes.contains("shrinkage")) a.shrinkage = {d.shrinkage};
        for (const auto& w : words(axes, name, "shrinkage")) {
          if (w == "hard")
            a.shrinkage.push_back(Shrinkage::hard);
          else if (w == "soft")
            a.shrinkage.push_back(Shrinkage::soft);
          else
            bad("cdwt.shrinkage must be hard or soft");
        }
        grid.cdwt = std::move(a);
        break;
      }
      case FilterKind::fde: {
        only_keys(axes, name, {"noise_variance"});
        const FdeParams d;
        grid.fde = FdeAxes{numbers(axes, name, "noise_variance", {d.noise_variance})};
        break;
      }
      case FilterKind::pwnlm:
        only_keys(axes, name, {});
        grid.pwnlm = true;
        break;
      case FilterKind::none:
        break;
    }
  }
  return grid;
}

inline FilterGrid load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::missing_file, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::parse_error, path.string() + ": " + e.what());
  }
  return parse_sweep_config(doc);
}

// ---- pair manifest --------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::filesystem::path high;
  std::filesystem::path low;
  Roi roi;
  std::optional<double> rthe_override;
};

inline nlohmann::ordered_json to_json(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["high"] = e.high.generic_string();
  j["low"] = e.low.generic_string();
  j["roi"] = {e.roi.x, e.roi.y, e.roi.w, e.roi.h};
  j["rthe_override"] = e.rthe_override ? nlohmann::ordered_json(*e.rthe_override)
                                       : nlohmann::ordered_json(nullptr);
  return j;
}

// Relative image paths are resolved against `base` (the manifest's directory).
inline std::vector<ManifestEntry> parse_manifest(const nlohmann::json& doc,
                                                 const std::filesystem::path& base) {
  auto bad = [](const std::string& what) {
    throw error(errc::parse_error, "manifest: " + what);
  };
  if (!doc.is_array() || doc.empty()) bad("expected a non-empty array of pairs");
  std::vector<ManifestEntry> out;
  for (const auto& item : doc) {
    if (!item.is_object()) bad("each pair must be an object");
    for (const char* key : {"id", "high", "low"})
      if (!item.contains(key) || !item.at(key).is_string())
        bad(std::string("pair needs a string '") + key + "'");
    ManifestEntry e;
    e.id = item.at("id").get<std::string>();
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base / path;
    };
    e.high = resolve(item.at("high").get<std::string>());
    e.low = resolve(item.at("low").get<std::string>());
    if (!item.contains("roi") || !item.at("roi").is_array() || item.at("roi").size() != 4)
      bad("pair '" + e.id + "' needs roi [x,y,w,h]");
    std::size_t v[4];
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& n = item.at("roi")[i];
      if (!n.is_number_integer() || n.get<long long>() < 0)
        bad("pair '" + e.id + "' roi must hold non-negative integers");
      v[i] = n.get<std::size_t>();
    }
    e.roi = {v[0], v[1], v[2], v[3]};
    if (item.contains("rthe_override") && !item.at("rthe_override").is_null()) {
      if (!item.at("rthe_override").is_number())
        bad("pair '" + e.id + "' rthe_override must be a number or null");
      e.rthe_override = item.at("rthe_override").get<double>();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::missing_file, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::parse_error, path.string() + ": " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

inline ScanPair load_pair(const ManifestEntry& e) {
  ScanPair pair{e.id, load_image(e.high), load_image(e.low), e.roi, e.rthe_override};
  validate(pair);
  return pair;
}

// ---- CSV ------------------------------------------------------------------

namespace csv {

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << quote(fields[i]);
  }
  os << '\n';
}

// Splits one line; quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw error(errc::parse_error, "unterminated quote in CSV row");
  out.push_back(std::move(field));
  return out;
}

}  // namespace csv

inline constexpr std::string_view records_header =
    "pair_id,filter,params,sigma2_high,sigma2_low,r_blind,r_the,ratio_of_ratios,m,beta,"
    "theta,status";

// One row per record and β. Degenerate rows leave the ratio and θ columns empty;
// failed rows carry only r_the and β.
inline void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records,
                              const std::vector<double>& betas) {
  os << records_header << '\n';
  for (const auto& r : records) {
    const bool have_stats = r.status != RecordStatus::failed;
    for (double beta : betas) {
      std::vector<std::string> row{r.pair_id, std::string(to_string(r.spec.kind())),
                                   params_string(r.spec)};
      auto opt = [&](bool present, double v) { return present ? format_sig9(v) : ""; };
      const auto* e = r.estimate ? &*r.estimate : nullptr;
      row.push_back(opt(have_stats, r.stats.sigma2_high));
      row.push_back(opt(have_stats, r.stats.sigma2_low));
      row.push_back(opt(e, e ? e->r_blind : 0.0));
      row.push_back(format_sig9(r.r_the));
      row.push_back(opt(e, e ? e->ratio_of_ratios : 0.0));
      row.push_back(opt(have_stats, r.stats.m));
      row.push_back(format_sig9(beta));
      row.push_back(opt(e, e ? sweep_detail::theta_of(*e, beta) : 0.0));
      row.emplace_back(to_string(r.status));
      csv::write_row(os, row);
    }
  }
}

// Inverse of write_records_csv, at the printed precision. Consecutive rows of
// one (pair, spec) fold into one record.
inline std::vector<SweepRecord> read_records_csv(std::istream& is) {
  auto bad = [](const std::string& what) {
    throw error(errc::parse_error, "records.csv: " + what);
  };
  std::string line;
  if (!std::getline(is, line) || line != records_header) bad("missing or unexpected header");
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) bad("bad number '" + s + "'");
    return v;
  };

  std::vector<SweepRecord> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split_row(line);
    if (f.size() != 12) bad("line " + std::to_string(line_no) + " has " +
                            std::to_string(f.size()) + " fields");
    const std::string spec_text = f[2].empty() ? f[1] : f[1] + ":" + f[2];
    FilterSpec spec = parse_filter_spec(spec_text);

    RecordStatus status;
    if (f[11] == "ok")
      status = RecordStatus::ok;
    else if (f[11] == "degenerate")
      status = RecordStatus::degenerate;
    else if (f[11] == "failed")
      status = RecordStatus::failed;
    else
      bad("unknown status '" + f[11] + "'");

    if (out.empty() || out.back().pair_id != f[0] || !(out.back().spec == spec)) {
      SweepRecord r;
      r.pair_id = f[0];
      r.spec = spec;
      r.status = status;
      r.r_the = number(f[6]);
      if (status != RecordStatus::failed)
        r.stats = {number(f[3]), number(f[4]), number(f[8])};
      if (status == RecordStatus::ok) {
        NoiseEstimate e;
        e.sigma2_high = r.stats.sigma2_high;
        e.sigma2_low = r.stats.sigma2_low;
        e.m = r.stats.m;
        e.r_the = r.r_the;
        e.r_blind = number(f[5]);
        e.ratio_of_ratios = number(f[7]);
        r.estimate = std::move(e);
      }
      out.push_back(std::move(r));
    }
    if (out.back().estimate)
      out.back().estimate->theta_by_beta.push_back({number(f[9]), number(f[10])});
  }
  return out;
}

inline void write_optimal_csv(std::ostream& os, const std::vector<SweepRecord>& records,
                              const std::vector<double>& betas) {
  os << "filter,params,beta,mean_theta,mean_ratio\n";
  for (double beta : betas) {
    for (const auto& e : select_optimal(records, beta)) {
      csv::write_row(os, {std::string(to_string(e.kind)), params_string(e.best_spec),
                          format_sig9(beta), format_sig9(e.mean_theta),
                          format_sig9(e.mean_ratio)});
    }
  }
}

// ---- summary --------------------------------------------------------------

inline nlohmann::ordered_json summary_json(const std::vector<SweepRecord>& records,
                                           const std::vector<double>& betas) {
  using nlohmann::ordered_json;
  std::vector<std::string> pairs;
  std::vector<FilterSpec> specs;
  std::size_t degenerate = 0;
  std::size_t failed = 0;
  for (const auto& r : records) {
    if (std::find(pairs.begin(), pairs.end(), r.pair_id) == pairs.end())
      pairs.push_back(r.pair_id);
    if (std::find(specs.begin(), specs.end(), r.spec) == specs.end()) specs.push_back(r.spec);
    degenerate += r.status == RecordStatus::degenerate;
    failed += r.status == RecordStatus::failed;
  }

  ordered_json doc;
  doc["pairs"] = pairs.size();
  doc["specs"] = specs.size();
  doc["records"] = records.size();
  doc["degenerate_records"] = degenerate;
  doc["failed_records"] = failed;
  ordered_json by_beta = ordered_json::array();
  for (double beta : betas) {
    const SweepSummary s = aggregate_summary(records, beta);
    ordered_json item;
    item["beta"] = round_sig9(beta);
    item["baseline"] = {{"mean_theta", round_sig9(s.baseline.mean_theta)},
                        {"mean_ratio", round_sig9(s.baseline.mean_ratio)},
                        {"pairs", s.baseline.pairs}};
    ordered_json filters = ordered_json::array();
    for (const auto& e : s.filters) {
      filters.push_back({{"filter", std::string(to_string(e.kind))},
                         {"params", params_string(e.best_spec)},
                         {"mean_theta", round_sig9(e.mean_theta)},
                         {"mean_ratio", round_sig9(e.mean_ratio)},
                         {"pairs", e.pairs}});
    }
    item["filters"] = std::move(filters);
    by_beta.push_back(std::move(item));
  }
  doc["by_beta"] = std::move(by_beta);
  return doc;
}

// ---- report tables ----------------------------------------------------------

namespace report_detail {

// "a=1,b=2" -> {{"a","1"},{"b","2"}}
inline std::vector<std::pair<std::string, std::string>> split_params(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const auto item = text.substr(start, comma - start);
    const auto eq = item.find('=');
    out.emplace_back(item.substr(0, eq), eq == std::string::npos ? "" : item.substr(eq + 1));
    start = comma + 1;
  }
  return out;
}

}  // namespace report_detail

inline bool has_beta(const std::vector<SweepRecord>& records, double beta) {
  for (const auto& r : records)
    if (r.estimate && r.estimate->theta_at(beta)) return true;
  return false;
}

// Mean θ (or mean R_blind/R_the when `ratio` is set) per spec of one kind, in
// spec order, with each parameter in its own column. Means use ok records only.
inline void write_param_curve(std::ostream& os, const std::vector<SweepRecord>& records,
                              FilterKind kind, double beta, bool ratio) {
  std::vector<sweep_detail::SpecMeans> rows;
  std::vector<std::size_t> totals;
  for (const auto& r : records) {
    if (r.spec.kind() != kind) continue;
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const auto& m) { return m.spec == r.spec; });
    if (it == rows.end()) {
      rows.push_back({r.spec});
      totals.push_back(0);
      it = std::prev(rows.end());
    }
    ++totals[static_cast<std::size_t>(it - rows.begin())];
    if (r.status != RecordStatus::ok || !r.estimate) continue;
    it->sum_theta += sweep_detail::theta_of(*r.estimate, beta);
    it->sum_ratio += r.estimate->ratio_of_ratios;
    ++it->count;
  }

  std::vector<std::string> header{"params"};
  if (!rows.empty())
    for (const auto& [k, v] : report_detail::split_params(params_string(rows.front().spec)))
      header.push_back(k);
  header.push_back(ratio ? "mean_ratio" : "mean_theta");
  header.push_back("n_ok");
  header.push_back("n_pairs");
  csv::write_row(os, header);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& m = rows[i];
    const auto text = params_string(m.spec);
    std::vector<std::string> row{text};
    for (const auto& [k, v] : report_detail::split_params(text)) row.push_back(v);
    const double sum = ratio ? m.sum_ratio : m.sum_theta;
    row.push_back(m.count ? format_sig9(sum / static_cast<double>(m.count)) : "");
    row.push_back(std::to_string(m.count));
    row.push_back(std::to_string(totals[i]));
    csv::write_row(os, row);
  }
}

// Per-pair unfiltered estimates at one β.
inline void write_baseline_table(std::ostream& os, const std::vector<SweepRecord>& records,
                                 double beta) {
  os << "pair_id,sigma2_high,sigma2_low,r_blind,r_the,ratio_of_ratios,theta,status\n";
  std::size_t rows = 0;
  for (const auto& r : records) {
    if (r.spec.kind() != FilterKind::none) continue;
    ++rows;
    const auto* e = r.estimate ? &*r.estimate : nullptr;
    auto opt = [&](double v) { return e ? format_sig9(v) : std::string(); };
    csv::write_row(os, {r.pair_id, format_sig9(r.stats.sigma2_high),
                        format_sig9(r.stats.sigma2_low), opt(e ? e->r_blind : 0.0),
                        format_sig9(r.r_the), opt(e ? e->ratio_of_ratios : 0.0),
                        opt(e ? sweep_detail::theta_of(*e, beta) : 0.0),
                        std::string(to_string(r.status))});
  }
  if (rows == 0) throw error(errc::missing_baseline, "records hold no baseline (none) rows");
}

// Baseline means followed by each kind's optimum at one β.
inline void write_optimal_table(std::ostream& os, const std::vector<SweepRecord>& records,
                                double beta) {
  const SweepSummary s = aggregate_summary(records, beta);
  os << "filter,params,beta,mean_theta,mean_ratio,pairs\n";
  csv::write_row(os, {"none", "", format_sig9(beta), format_sig9(s.baseline.mean_theta),
                      format_sig9(s.baseline.mean_ratio), std::to_string(s.baseline.pairs)});
  for (const auto& e : s.filters)
    csv::write_row(os, {std::string(to_string(e.kind)), params_string(e.best_spec),
                        format_sig9(beta), format_sig9(e.mean_theta),
                        format_sig9(e.mean_ratio), std::to_string(e.pairs)});
}

}  // namespace ctnoise
