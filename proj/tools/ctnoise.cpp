// ctnoise: phantom generation, single-pair estimation, parameter sweeps and
// report tables.
//
// Exit status: 0 success, 1 usage or invalid parameters, 2 input/format/IO
// error, 3 degenerate computation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctnoise/ctnoise.hpp"

namespace fs = std::filesystem;
using namespace ctnoise;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_input = 2;
constexpr int exit_degenerate = 3;

int exit_code(errc code) {
  switch (code) {
    case errc::invalid_params:
      return exit_usage;
    case errc::degenerate_high_variance:
    case errc::all_degenerate:
      return exit_degenerate;
    default:
      return exit_input;
  }
}

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Roi parse_roi(const std::string& text) {
  std::vector<std::size_t> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long long n = -1;
    try {
      n = std::stoll(item, &pos);
    } catch (const std::exception&) {
    }
    if (n < 0 || pos != item.size()) throw usage_error("bad roi '" + text + "'");
    v.push_back(static_cast<std::size_t>(n));
  }
  if (v.size() != 4) throw usage_error("roi must be x,y,w,h");
  return {v[0], v[1], v[2], v[3]};
}

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double b = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size())
      throw usage_error("bad beta '" + item + "'");
    out.push_back(b);
  }
  validate_betas(out);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io_failure, "cannot open " + path.string());
  out << text;
  if (!out) throw error(errc::io_failure, "short write to " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw error(errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());
}

// CTNOISE_THREADS bounds sweep parallelism; unset means all cores.
std::size_t thread_budget() {
  const char* env = std::getenv("CTNOISE_THREADS");
  if (!env) return 0;
  const std::string text(env);
  std::size_t pos = 0;
  long long n = 0;
  try {
    n = std::stoll(text, &pos);
  } catch (const std::exception&) {
  }
  if (n <= 0 || pos != text.size())
    throw usage_error("CTNOISE_THREADS must be a positive integer");
  return static_cast<std::size_t>(n);
}

// ---- phantom ----------------------------------------------------------------

struct PhantomArgs {
  std::string out;
  std::string size = "512x512";
  double sigma_high = 10.0;
  double ratio = 9.6;
  std::uint64_t seed = 42;
  std::string signal = "uniform";
  std::string roi;
  std::string texture = "white";
};

PhantomParams phantom_params(const PhantomArgs& a) {
  PhantomParams p;
  const auto x = a.size.find('x');
  try {
    std::size_t pw = 0, ph = 0;
    if (x == std::string::npos) throw usage_error("");
    p.width = std::stoul(a.size.substr(0, x), &pw);
    p.height = std::stoul(a.size.substr(x + 1), &ph);
    if (pw != x || ph != a.size.size() - x - 1) throw usage_error("");
  } catch (const std::exception&) {
    throw usage_error("size must be WxH, got '" + a.size + "'");
  }
  p.sigma_high = a.sigma_high;
  p.ratio = a.ratio;
  p.seed = a.seed;

  const auto colon = a.signal.find(':');
  const std::string kind = a.signal.substr(0, colon);
  if (kind == "uniform" && colon == std::string::npos)
    p.signal.kind = SignalKind::uniform;
  else if (kind == "ramp")
    p.signal.kind = SignalKind::ramp;
  else if (kind == "chest")
    p.signal.kind = SignalKind::chest;
  else
    throw usage_error("signal must be uniform, ramp:A or chest[:A]");
  if (colon != std::string::npos) {
    const std::string amp = a.signal.substr(colon + 1);
    char* end = nullptr;
    p.signal.ramp_amplitude = std::strtod(amp.c_str(), &end);
    if (amp.empty() || end != amp.c_str() + amp.size())
      throw usage_error("bad ramp amplitude '" + amp + "'");
  } else if (p.signal.kind == SignalKind::ramp) {
    throw usage_error("ramp needs an amplitude, e.g. ramp:50");
  }

  if (a.texture == "k3")
    p.texture = NoiseTexture::k3;
  else if (a.texture != "white")
    throw usage_error("texture must be white or k3");
  if (!a.roi.empty()) p.roi = parse_roi(a.roi);
  return p;
}

int cmd_phantom(const PhantomArgs& a) {
  const PhantomParams p = phantom_params(a);
  const PhantomPair ph = generate_pair(p);
  const fs::path out(a.out);
  make_dirs(out / "groundtruth");
  save_image(ph.pair.high, out / "high");
  save_image(ph.pair.low, out / "low");
  save_image(ph.truth.clean, out / "groundtruth" / "clean");
  save_image(ph.truth.noise_high, out / "groundtruth" / "noise_high");
  save_image(ph.truth.noise_low, out / "groundtruth" / "noise_low");

  const Roi roi = ph.pair.roi;
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  manifest.push_back(to_json(ManifestEntry{"seed" + std::to_string(p.seed), "high", "low",
                                           roi, std::nullopt}));
  write_text(out / "manifest.json", manifest.dump(2) + "\n");

  nlohmann::ordered_json echo;
  echo["width"] = p.width;
  echo["height"] = p.height;
  echo["sigma_high"] = p.sigma_high;
  echo["ratio"] = p.ratio;
  echo["seed"] = p.seed;
  echo["signal"] = {{"kind", p.signal.kind == SignalKind::uniform ? "uniform"
                             : p.signal.kind == SignalKind::ramp  ? "ramp"
                                                                  : "chest"},
                    {"ramp_amplitude", p.signal.ramp_amplitude}};
  echo["texture"] = p.texture == NoiseTexture::k3 ? "k3" : "white";
  echo["roi"] = {roi.x, roi.y, roi.w, roi.h};
  write_text(out / "phantom.json", echo.dump(2) + "\n");
  return exit_ok;
}

// ---- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string high;
  std::string low;
  std::string roi;
  std::string filter = "none";
  std::string params;
  std::optional<double> rthe;
  std::string betas;
};

int cmd_estimate(const EstimateArgs& a) {
  const auto kind = parse_filter_kind(a.filter);
  if (!kind) throw usage_error("unknown filter '" + a.filter + "'");
  const FilterSpec spec = make_spec(*kind, a.params);
  const Roi roi = parse_roi(a.roi);
  std::vector<double> betas(default_betas.begin(), default_betas.end());
  if (!a.betas.empty()) betas = parse_betas(a.betas);
  if (a.rthe && !(*a.rthe > 0.0)) throw usage_error("rthe must be > 0");

  ScanPair pair{"cli", load_image(a.high), load_image(a.low), roi, a.rthe};
  const NoiseEstimate e = estimate(pair, spec, betas);

  nlohmann::ordered_json doc;
  doc["filter"] = std::string(to_string(spec.kind()));
  doc["params"] = params_string(spec);
  doc["sigma2_high"] = round_sig9(e.sigma2_high);
  doc["sigma2_low"] = round_sig9(e.sigma2_low);
  doc["r_blind"] = round_sig9(e.r_blind);
  doc["r_the"] = round_sig9(e.r_the);
  doc["ratio_of_ratios"] = round_sig9(e.ratio_of_ratios);
  doc["m"] = round_sig9(e.m);
  auto& thetas = doc["theta_by_beta"] = nlohmann::ordered_json::array();
  for (const auto& bt : e.theta_by_beta)
    thetas.push_back({{"beta", round_sig9(bt.beta)}, {"theta", round_sig9(bt.theta)}});
  std::cout << doc.dump(2) << '\n';
  return exit_ok;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string pairs;
  std::string config;
  std::string out;
};

int cmd_sweep(const SweepArgs& a) {
  const std::size_t threads = thread_budget();
  FilterGrid grid;
  std::vector<ScanPair> pairs;
  try {
    grid = a.config.empty() ? default_grid() : load_sweep_config(a.config);
    validate_betas(grid.betas);
    (void)enumerate_grid(grid);
    for (const auto& entry : read_manifest(a.pairs)) pairs.push_back(load_pair(entry));
  } catch (const error& e) {
    std::cerr << "ctnoise sweep: " << e.what() << '\n';
    return exit_input;
  }

  const auto records = run_sweep(pairs, grid, {threads});
  std::size_t flagged = 0;
  for (const auto& r : records) {
    if (r.status == RecordStatus::ok) continue;
    ++flagged;
    std::cerr << "ctnoise sweep: " << r.pair_id << " " << to_string(r.spec) << ": "
              << to_string(r.status) << " (" << r.message << ")\n";
  }

  const fs::path out(a.out);
  make_dirs(out);
  std::ostringstream rec;
  write_records_csv(rec, records, grid.betas);
  write_text(out / "records.csv", rec.str());
  std::ostringstream opt;
  write_optimal_csv(opt, records, grid.betas);
  write_text(out / "optimal.csv", opt.str());
  write_text(out / "summary.json", summary_json(records, grid.betas).dump(2) + "\n");
  std::cerr << "ctnoise sweep: " << records.size() << " records, " << flagged
            << " flagged\n";
  return exit_ok;
}

// ---- report -----------------------------------------------------------------

struct ReportArgs {
  std::string in;
  double beta = 10.0;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  const fs::path src = fs::path(a.in) / "records.csv";
  std::ifstream in(src);
  if (!in) throw error(errc::missing_file, "cannot open " + src.string());
  const auto records = read_records_csv(in);
  if (records.empty()) throw error(errc::parse_error, src.string() + " holds no records");
  if (!has_beta(records, a.beta))
    throw error(errc::mismatch, "beta " + format_sig9(a.beta) + " was not swept");

  const fs::path out(a.out);
  make_dirs(out);
  for (auto kind : all_filter_kinds) {
    if (kind == FilterKind::none) continue;
    const bool present = std::any_of(records.begin(), records.end(),
                                     [&](const auto& r) { return r.spec.kind() == kind; });
    if (!present) continue;
    const std::string name(to_string(kind));
    std::ostringstream theta_csv, ratio_csv;
    write_param_curve(theta_csv, records, kind, a.beta, /*ratio=*/false);
    write_param_curve(ratio_csv, records, kind, a.beta, /*ratio=*/true);
    write_text(out / (name + "_theta_vs_param.csv"), theta_csv.str());
    write_text(out / (name + "_ratio_vs_param.csv"), ratio_csv.str());
  }
  std::ostringstream baseline, optimal;
  write_baseline_table(baseline, records, a.beta);
  write_optimal_table(optimal, records, a.beta);
  write_text(out / "fig4_baseline.csv", baseline.str());
  write_text(out / "fig6_optimal.csv", optimal.str());
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind CT noise-ratio estimation from residual images"};
  app.require_subcommand(1);

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic high/low pair");
  phantom->add_option("--out", pa.out, "Output directory")->required();
  phantom->add_option("--size", pa.size, "Image size WxH")->capture_default_str();
  phantom->add_option("--sigma-high", pa.sigma_high, "High-technique noise std (HU)")
      ->capture_default_str();
  phantom->add_option("--ratio", pa.ratio, "Low/high noise variance ratio")
      ->capture_default_str();
  phantom->add_option("--seed", pa.seed, "PRNG seed")->capture_default_str();
  phantom->add_option("--signal", pa.signal, "uniform | ramp:A | chest[:A]")
      ->capture_default_str();
  phantom->add_option("--roi", pa.roi, "ROI x,y,w,h");
  phantom->add_option("--texture", pa.texture, "white | k3")->capture_default_str();

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate the noise ratio of one pair");
  est->add_option("--high", ea.high, "High-technique image")->required();
  est->add_option("--low", ea.low, "Low-technique image")->required();
  est->add_option("--roi", ea.roi, "ROI x,y,w,h")->required();
  est->add_option("--filter", ea.filter, "mf | bf | ad | cdwt | fde | pwnlm | none")
      ->capture_default_str();
  est->add_option("--params", ea.params, "Filter parameters k=v,...");
  est->add_option("--rthe", ea.rthe, "Override mAs_high / mAs_low");
  est->add_option("--betas", ea.betas, "Comma-separated beta values");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Evaluate a filter grid over a pair manifest");
  sweep->add_option("--pairs", sa.pairs, "Pair manifest JSON")->required();
  sweep->add_option("--config", sa.config, "Sweep config JSON (default grid if omitted)");
  sweep->add_option("--out", sa.out, "Output directory")->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Emit plot-data tables from a sweep");
  report->add_option("--in", ra.in, "Sweep output directory")->required();
  report->add_option("--beta", ra.beta, "Beta slice")->required();
  report->add_option("--out", ra.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*phantom) return cmd_phantom(pa);
    if (*est) return cmd_estimate(ea);
    if (*sweep) return cmd_sweep(sa);
    if (*report) return cmd_report(ra);
  } catch (const usage_error& e) {
    std::cerr << "ctnoise: " << e.what() << '\n';
    return exit_usage;
  } catch (const error& e) {
    std::cerr << "ctnoise: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ctnoise: " << e.what() << '\n';
    return exit_input;
  }
  return exit_usage;
}
