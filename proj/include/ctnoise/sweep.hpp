#pragma once

// Parameter-grid enumeration, batch evaluation over scan pairs and selection of
// the θ-minimizing setting per filter kind.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ctnoise/error.hpp"
#include "ctnoise/filter_spec.hpp"
#include "ctnoise/noise_metrics.hpp"

namespace ctnoise {

// Candidate values per parameter; the grid of a kind is their Cartesian product.
struct MfAxes {
  std::vector<std::size_t> half_width;
  std::vector<double> sigma_t;
};

struct BfAxes {
  std::vector<std::size_t> half_width;
  std::vector<double> sigma_sx;
  std::vector<double> sigma_sy;
  std::vector<double> sigma_r;
};

struct AdAxes {
  std::vector<std::size_t> iterations;
  std::vector<double> delta;
  std::vector<double> kappa;
  std::vector<Conduction> conduction;
};

struct CdwtAxes {
  std::vector<double> threshold;
  std::vector<Shrinkage> shrinkage;
};

struct FdeAxes {
  std::vector<double> noise_variance;
};

struct FilterGrid {
  std::optional<MfAxes> mf;
  std::optional<BfAxes> bf;
  std::optional<AdAxes> ad;
  std::optional<CdwtAxes> cdwt;
  std::optional<FdeAxes> fde;
  bool pwnlm = false;
  std::vector<double> betas{default_betas.begin(), default_betas.end()};
};

inline FilterGrid default_grid() {
  FilterGrid g;
  g.mf = MfAxes{{1, 2, 3}, {0.5, 1.0, 2.0}};
  g.bf = BfAxes{{1, 2, 3, 4}, {0.3, 1.0, 2.0, 3.0}, {0.3, 1.0, 2.0, 3.0}, {25.0, 50.0, 100.0}};
  g.ad = AdAxes{{5, 10, 20, 40}, {0.05, 0.1, 0.2, 0.25}, {10.0, 30.0, 54.0, 80.0},
                {Conduction::exponential}};
  g.cdwt = CdwtAxes{{50.0, 100.0, 150.0, 200.0, 300.0}, {Shrinkage::hard}};
  g.fde = FdeAxes{{1e-10, 1e-9, 1e-8, 1e-7, 1e-6}};
  g.pwnlm = true;
  return g;
}

namespace sweep_detail {

template <class T>
std::vector<T> axis(const std::vector<T>& values, const char* kind, const char* name) {
  if (values.empty())
    throw error(errc::empty_axis, std::string(kind) + "." + name + " has no values");
  std::vector<T> v = values;
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline void add(std::vector<FilterSpec>& out, FilterSpec spec) {
  validate(spec);
  out.push_back(std::move(spec));
}

}  // namespace sweep_detail

// All grid points ordered by kind, then lexicographically by parameter tuple in
// declared axis order; the unfiltered baseline is always appended last.
inline std::vector<FilterSpec> enumerate_grid(const FilterGrid& grid) {
  using sweep_detail::add;
  using sweep_detail::axis;
  std::vector<FilterSpec> out;
  if (grid.mf) {
    for (auto hw : axis(grid.mf->half_width, "mf", "half_width"))
      for (auto st : axis(grid.mf->sigma_t, "mf", "sigma_t"))
        add(out, {MatchedFilterParams{hw, st}});
  }
  if (grid.bf) {
    const auto sx = axis(grid.bf->sigma_sx, "bf", "sigma_sx");
    const auto sy = axis(grid.bf->sigma_sy, "bf", "sigma_sy");
    const auto sr = axis(grid.bf->sigma_r, "bf", "sigma_r");
    for (auto hw : axis(grid.bf->half_width, "bf", "half_width"))
      for (auto x : sx)
        for (auto y : sy)
          for (auto r : sr) add(out, {BilateralParams{hw, x, y, r}});
  }
  if (grid.ad) {
    const auto dt = axis(grid.ad->delta, "ad", "delta");
    const auto ka = axis(grid.ad->kappa, "ad", "kappa");
    const auto co = axis(grid.ad->conduction, "ad", "conduction");
    for (auto it : axis(grid.ad->iterations, "ad", "iterations"))
      for (auto d : dt)
        for (auto k : ka)
          for (auto c : co) add(out, {AdParams{it, d, k, c}});
  }
  if (grid.cdwt) {
    const auto sh = axis(grid.cdwt->shrinkage, "cdwt", "shrinkage");
    for (auto t : axis(grid.cdwt->threshold, "cdwt", "threshold"))
      for (auto s : sh) add(out, {CdwtParams{t, s}});
  }
  if (grid.fde) {
    for (auto v : axis(grid.fde->noise_variance, "fde", "noise_variance"))
      add(out, {FdeParams{v}});
  }
  if (grid.pwnlm) add(out, {PwnlmParams{}});
  add(out, {NoFilter{}});
  return out;
}

enum class RecordStatus { ok, degenerate, failed };

constexpr std::string_view to_string(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::degenerate: return "degenerate";
    case RecordStatus::failed: return "failed";
  }
  return "?";
}

// One (pair, spec) evaluation. `estimate` is present only for status ok;
// degenerate records keep their residual statistics for reporting.
struct SweepRecord {
  std::string pair_id;
  FilterSpec spec;
  RecordStatus status = RecordStatus::ok;
  ResidualStats stats;
  double r_the = 0.0;
  std::optional<NoiseEstimate> estimate;
  std::string message;
};

struct SweepOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
};

inline SweepRecord evaluate(const ScanPair& pair, double r_the, const FilterSpec& spec,
                            std::span<const double> betas) {
  SweepRecord rec{pair.id, spec, RecordStatus::ok, {}, r_the, std::nullopt, {}};
  try {
    rec.stats = residual_stats(pair, spec);
    if (!(rec.stats.sigma2_high > degenerate_variance)) {
      rec.status = RecordStatus::degenerate;
      rec.message = "high-technique residual variance is degenerate";
      return rec;
    }
    rec.estimate = finish_estimate(rec.stats, r_the, betas);
  } catch (const std::exception& e) {
    rec.status = RecordStatus::failed;
    rec.message = e.what();
  }
  return rec;
}

// One record per (pair, spec), ordered by (pair_id, spec order). Work is spread
// over a fixed pool; each result lands in its own slot so the output does not
// depend on the thread count or completion order.
inline std::vector<SweepRecord> run_sweep(const std::vector<ScanPair>& pairs,
                                          const FilterGrid& grid,
                                          SweepOptions options = {}) {
  if (pairs.empty()) throw error(errc::invalid_params, "sweep needs at least one pair");
  if (grid.betas.empty()) throw error(errc::empty_axis, "betas has no values");
  validate_betas(grid.betas);
  const auto specs = enumerate_grid(grid);

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].id < pairs[b].id;
  });
  std::vector<double> r_the(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    validate(pairs[i]);
    r_the[i] = compute_r_the(pairs[i]);
  }

  const std::size_t total = pairs.size() * specs.size();
  std::vector<SweepRecord> records(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t p = order[k / specs.size()];
      records[k] = evaluate(pairs[p], r_the[p], specs[k % specs.size()], grid.betas);
    }
  };

  std::size_t threads = options.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, total);
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return records;
}

struct OptimalEntry {
  FilterKind kind = FilterKind::none;
  FilterSpec best_spec;
  double beta = 0.0;
  double mean_theta = 0.0;
  double mean_ratio = 0.0;
  std::size_t pairs = 0;
};

namespace sweep_detail {

inline double theta_of(const NoiseEstimate& e, double beta) {
  if (auto t = e.theta_at(beta)) return *t;
  return theta(e.ratio_of_ratios, e.m, beta);
}

struct SpecMeans {
  FilterSpec spec;
  bool eligible = true;
  double sum_theta = 0.0;
  double sum_ratio = 0.0;
  std::size_t count = 0;
};

// Groups records by spec in order of first appearance.
inline std::vector<SpecMeans> spec_means(const std::vector<SweepRecord>& records,
                                         double beta) {
  std::vector<SpecMeans> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SpecMeans& m) { return m.spec == r.spec; });
    if (it == out.end()) {
      out.push_back({r.spec});
      it = std::prev(out.end());
    }
    if (r.status != RecordStatus::ok || !r.estimate) {
      it->eligible = false;
      continue;
    }
    it->sum_theta += theta_of(*r.estimate, beta);
    it->sum_ratio += r.estimate->ratio_of_ratios;
    ++it->count;
  }
  return out;
}

}  // namespace sweep_detail

// Per filter kind (baseline excluded), the setting with the least mean θ over
// pairs at `beta`. Specs with any non-ok record are ineligible; ties keep the
// earlier spec.
inline std::vector<OptimalEntry> select_optimal(const std::vector<SweepRecord>& records,
                                                double beta) {
  if (records.empty()) throw error(errc::invalid_params, "no records to select from");
  const auto means = sweep_detail::spec_means(records, beta);
  std::vector<OptimalEntry> out;
  bool any_candidate = false;
  for (auto kind : all_filter_kinds) {
    if (kind == FilterKind::none) continue;
    std::optional<OptimalEntry> best;
    for (const auto& m : means) {
      if (m.spec.kind() != kind) continue;
      any_candidate = true;
      if (!m.eligible || m.count == 0) continue;
      const double n = static_cast<double>(m.count);
      const double mean_theta = m.sum_theta / n;
      if (!best || mean_theta < best->mean_theta)
        best = OptimalEntry{kind, m.spec, beta, mean_theta, m.sum_ratio / n, m.count};
    }
    if (best) out.push_back(*best);
  }
  if (any_candidate && out.empty())
    throw error(errc::all_degenerate, "every filter setting produced a degenerate record");
  return out;
}

struct BaselineSummary {
  double mean_theta = 0.0;
  double mean_ratio = 0.0;
  std::size_t pairs = 0;
};

// Pre- versus post-filter means at one β.
struct SweepSummary {
  double beta = 0.0;
  BaselineSummary baseline;
  std::vector<OptimalEntry> filters;
};

inline SweepSummary aggregate_summary(const std::vector<SweepRecord>& records, double beta) {
  SweepSummary s;
  s.beta = beta;
  for (const auto& r : records) {
    if (r.spec.kind() != FilterKind::none || r.status != RecordStatus::ok || !r.estimate)
      continue;
    s.baseline.mean_theta += sweep_detail::theta_of(*r.estimate, beta);
    s.baseline.mean_ratio += r.estimate->ratio_of_ratios;
    ++s.baseline.pairs;
  }
  if (s.baseline.pairs == 0)
    throw error(errc::missing_baseline, "records hold no usable baseline (none) entries");
  s.baseline.mean_theta /= static_cast<double>(s.baseline.pairs);
  s.baseline.mean_ratio /= static_cast<double>(s.baseline.pairs);
  s.filters = select_optimal(records, beta);
  return s;
}

}  // namespace ctnoise
