#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "wsnlab/calibration.hpp"
#include "wsnlab/dataset.hpp"
#include "wsnlab/hash.hpp"
#include "wsnlab/io.hpp"
#include "wsnlab/param_catalog.hpp"
#include "wsnlab/regression.hpp"
#include "wsnlab/simulator.hpp"
#include "wsnlab/stats.hpp"

namespace wsnlab {

inline constexpr const char* kVersion = "1.0.0";

// Seeds used only to estimate the detected-event band; far away from any
// seed range the commands use by default.
inline constexpr std::uint64_t kCalibrationSeed0 = 0xCA1B000000000000ull;
inline constexpr std::size_t kCalibrationSeeds = 1000;

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t count = 0;

  std::uint64_t end() const { return first + count; }
  bool overlaps(const SeedRange& o) const {
    if (count == 0 || o.count == 0) return false;
    return first < o.end() && o.first < end();
  }
  friend bool operator==(const SeedRange&, const SeedRange&) = default;
};

inline void check_range(const SeedRange& r) {
  if (r.count > 0 && r.first > UINT64_MAX - r.count) throw DataError("seed range wraps around 2^64");
}

inline PerformanceBand default_band(const WorldConfig& world, double sigma_mult = 1.0) {
  std::vector<std::uint64_t> seeds(kCalibrationSeeds);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = kCalibrationSeed0 + i;
  return calibrate_performance(world, seeds).band(sigma_mult);
}

// Runs fn(i) for i in [0, n) on `jobs` threads. The first exception thrown by
// any worker is rethrown after all workers have finished.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

struct ProfileOptions {
  SeedRange seeds{0, 800};
  unsigned jobs = 0;
  double sigma_mult = 1.0;
  std::ostream* log = nullptr;
};

// One freshly sampled config per seed; rows come back in seed order whatever
// the number of workers.
inline Dataset profile(const ConfigSpace& space, const ProfileOptions& opt) {
  if (opt.seeds.count < 1) throw DataError("profile needs at least one run");
  check_range(opt.seeds);
  RunOptions run_opt{default_band(space.world(), opt.sigma_mult), nullptr};
  std::vector<ExperimentResult> results(opt.seeds.count);
  std::mutex log_mutex;
  std::atomic<std::size_t> done{0};
  const std::size_t batch = std::max<std::size_t>(1, opt.seeds.count / 10);
  parallel_for(opt.seeds.count, opt.jobs, [&](std::size_t i) {
    auto cfg = sample_config(space, opt.seeds.first + i);
    auto bad = validate(cfg, space);
    if (!bad.empty())
      throw std::logic_error("sampled config violates " + bad.front().parameter + ": " + bad.front().bound);
    results[i] = run_experiment(cfg, space, run_opt);
    std::size_t k = done.fetch_add(1) + 1;
    if (opt.log && (k % batch == 0 || k == opt.seeds.count)) {
      std::lock_guard<std::mutex> lock(log_mutex);
      *opt.log << "profile: " << k << "/" << opt.seeds.count << " runs\n";
    }
  });
  Dataset d = Dataset::empty_for(space);
  for (const auto& r : results) d.append(r);
  return d;
}

inline std::string dataset_hash(const Dataset& d) {
  std::ostringstream os;
  write_dataset_csv(os, d);
  return hex64(fnv1a64(os.str()));
}

inline Dataset performance_rows(const Dataset& d) {
  return d.filter([&](std::size_t r) { return d.performance_ok[r] != 0; });
}

struct RunManifest {
  std::string space_hash;
  WorldConfig world;
  SeedRange train;
  SeedRange holdout;
  std::size_t train_rows = 0;
  std::size_t holdout_rows = 0;
  std::size_t fit_rows = 0;
  double alpha = 0.05;
  std::optional<double> corr_threshold;
  bool performance_filter = false;
  double sigma_mult = 1.0;
  std::vector<std::string> selected;
  std::string model_provenance;
  std::string version = kVersion;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

inline json to_json(const RunManifest& m) {
  json j;
  j["space_hash"] = m.space_hash;
  j["world"] = json(nlohmann::json(m.world));
  j["train_seeds"] = {{"first", m.train.first}, {"count", m.train.count}};
  j["holdout_seeds"] = {{"first", m.holdout.first}, {"count", m.holdout.count}};
  j["train_rows"] = m.train_rows;
  j["holdout_rows"] = m.holdout_rows;
  j["fit_rows"] = m.fit_rows;
  j["alpha"] = m.alpha;
  j["corr_threshold"] = m.corr_threshold ? json(*m.corr_threshold) : json(nullptr);
  j["performance_filter"] = m.performance_filter;
  j["sigma_mult"] = m.sigma_mult;
  j["selected"] = m.selected;
  j["model_provenance"] = m.model_provenance;
  j["version"] = m.version;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.space_hash = detail::field<std::string>(j, "space_hash");
  m.world = detail::field<WorldConfig>(j, "world");
  auto range = [&](const char* key) {
    auto r = detail::field<nlohmann::json>(j, key);
    return SeedRange{detail::field<std::uint64_t>(r, "first"), detail::field<std::uint64_t>(r, "count")};
  };
  m.train = range("train_seeds");
  m.holdout = range("holdout_seeds");
  m.train_rows = detail::field<std::size_t>(j, "train_rows");
  m.holdout_rows = detail::field<std::size_t>(j, "holdout_rows");
  m.fit_rows = detail::field<std::size_t>(j, "fit_rows");
  m.alpha = detail::field<double>(j, "alpha");
  if (j.contains("corr_threshold") && !j["corr_threshold"].is_null())
    m.corr_threshold = j["corr_threshold"].get<double>();
  m.performance_filter = detail::field<bool>(j, "performance_filter");
  m.sigma_mult = detail::field<double>(j, "sigma_mult");
  m.selected = detail::field<std::vector<std::string>>(j, "selected");
  m.model_provenance = detail::field<std::string>(j, "model_provenance");
  m.version = detail::field<std::string>(j, "version");
  return m;
}

struct PipelineOptions {
  std::uint64_t seed = 0;
  std::size_t train_runs = 800;
  std::size_t holdout_runs = 200;
  std::optional<std::uint64_t> holdout_seed;  // defaults to seed + train_runs
  double alpha = 0.05;
  std::optional<double> corr_threshold;
  bool performance_filter = false;
  double sigma_mult = 1.0;
  unsigned jobs = 0;
  std::ostream* log = nullptr;
};

struct PipelineResult {
  Dataset train;
  Dataset holdout;
  CorrelationReport report;
  ReductionResult reduction;
  LinearModel model;
  EvaluationReport evaluation;
  RunManifest manifest;
};

inline LinearModel fit_selection(const Dataset& data, const ReductionResult& sel) {
  auto model = fit(design_matrix(data, sel.selected));
  model.provenance = data.space_hash + ":" + dataset_hash(data);
  return model;
}

// profile -> reduce -> fit -> profile holdout -> evaluate.
inline PipelineResult run_pipeline(const ConfigSpace& space, const PipelineOptions& opt) {
  SeedRange train{opt.seed, opt.train_runs};
  check_range(train);
  SeedRange hold{opt.holdout_seed.value_or(train.end()), opt.holdout_runs};
  check_range(hold);
  if (train.overlaps(hold)) throw DataError("training and holdout seed ranges overlap");

  PipelineResult out;
  out.train = profile(space, {train, opt.jobs, opt.sigma_mult, opt.log});
  Dataset fit_set = opt.performance_filter ? performance_rows(out.train) : out.train;
  out.report = analyze(fit_set);
  out.reduction = reduce(out.report, opt.alpha, opt.corr_threshold);
  if (opt.log) {
    *opt.log << "reduce: selected";
    for (const auto& s : out.reduction.selected) *opt.log << ' ' << s;
    *opt.log << '\n';
  }
  out.model = fit_selection(fit_set, out.reduction);
  out.holdout = profile(space, {hold, opt.jobs, opt.sigma_mult, opt.log});
  out.evaluation = evaluate(out.model, out.holdout);

  RunManifest& m = out.manifest;
  m.space_hash = space_hash(space);
  m.world = space.world();
  m.train = train;
  m.holdout = hold;
  m.train_rows = out.train.rows();
  m.holdout_rows = out.holdout.rows();
  m.fit_rows = fit_set.rows();
  m.alpha = opt.alpha;
  m.corr_threshold = opt.corr_threshold;
  m.performance_filter = opt.performance_filter;
  m.sigma_mult = opt.sigma_mult;
  m.selected = out.reduction.selected;
  m.model_provenance = out.model.provenance;
  return out;
}

// Mean and standard error of residual energy and received packets as one
// parameter moves, everything else at its default. Every point uses the
// same seeds.
struct SweepPoint {
  double x = 0.0;
  double residual_mean = 0.0;
  double residual_stderr = 0.0;
  double received_mean = 0.0;
  double received_stderr = 0.0;
  std::size_t seeds = 0;
};

inline std::vector<SweepPoint> sweep(const ConfigSpace& space, std::string_view parameter,
                                     const std::vector<double>& xs, SeedRange seeds, unsigned jobs = 0) {
  if (seeds.count < 2) throw DataError("a sweep needs at least two seeds per point");
  check_range(seeds);
  const std::size_t col = space.index_of(parameter);
  const std::size_t n = seeds.count;
  std::vector<ExperimentResult> runs(xs.size() * n);
  parallel_for(runs.size(), jobs, [&](std::size_t k) {
    auto cfg = default_config(space, seeds.first + k % n);
    cfg.values[col] = xs[k / n];
    runs[k] = run_experiment(cfg, space);
  });
  auto mean_se = [n](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
  };
  std::vector<SweepPoint> out;
  for (std::size_t p = 0; p < xs.size(); ++p) {
    std::vector<double> e(n), rec(n);
    for (std::size_t s = 0; s < n; ++s) {
      e[s] = runs[p * n + s].avg_residual_energy;
      rec[s] = static_cast<double>(runs[p * n + s].received_data_packets);
    }
    SweepPoint pt;
    pt.x = xs[p];
    std::tie(pt.residual_mean, pt.residual_stderr) = mean_se(e);
    std::tie(pt.received_mean, pt.received_stderr) = mean_se(rec);
    pt.seeds = n;
    out.push_back(pt);
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& pts) {
  os << "x,residual_mean,residual_stderr,received_mean,received_stderr,seeds\n";
  for (const auto& p : pts) {
    os << csv::format_double(p.x) << ',' << csv::format_double(p.residual_mean) << ','
       << csv::format_double(p.residual_stderr) << ',' << csv::format_double(p.received_mean) << ','
       << csv::format_double(p.received_stderr) << ',' << p.seeds << '\n';
  }
}

inline std::vector<SweepPoint> read_sweep_csv(std::istream& is) {
  std::string line;
  auto header = detail::header_of(is, line);
  if (header.size() != 6 || csv::trim(header[0]) != "x") throw ParseError("not a sweep table", 1);
  std::vector<SweepPoint> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    auto t = csv::trim(line);
    if (t.empty()) continue;
    auto f = csv::split(t);
    if (f.size() != 6) throw ParseError("expected 6 fields", lineno);
    SweepPoint p;
    p.x = csv::parse_double(f[0], lineno);
    p.residual_mean = csv::parse_double(f[1], lineno);
    p.residual_stderr = csv::parse_double(f[2], lineno);
    p.received_mean = csv::parse_double(f[3], lineno);
    p.received_stderr = csv::parse_double(f[4], lineno);
    p.seeds = csv::parse_uint(f[5], lineno);
    out.push_back(p);
  }
  return out;
}

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> xs;
  for (int k = 0;; ++k) {
    double x = lo + k * step;
    if (x > hi + 1e-9) break;
    xs.push_back(x);
  }
  return xs;
}

// ---- file helpers ----

namespace files {

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot write " + p.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DataError("cannot read " + p.string());
  return is;
}

inline void write_json(const std::filesystem::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
  if (!os) throw DataError("write failed for " + p.string());
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  auto is = open_in(p);
  return detail::parse_json(is);
}

template <typename Writer>
void write_with(const std::filesystem::path& p, Writer w) {
  auto os = open_out(p);
  w(os);
  if (!os) throw DataError("write failed for " + p.string());
}

inline Dataset read_dataset(const std::filesystem::path& p, const ConfigSpace* space) {
  auto is = open_in(p);
  return read_dataset_csv(is, space);
}

}  // namespace files

// Writes every pipeline artifact under dir.
inline void write_pipeline_artifacts(const std::filesystem::path& dir, const PipelineResult& r) {
  files::write_with(dir / "train.csv", [&](std::ostream& os) { write_dataset_csv(os, r.train); });
  files::write_with(dir / "holdout.csv", [&](std::ostream& os) { write_dataset_csv(os, r.holdout); });
  files::write_with(dir / "correlation.csv", [&](std::ostream& os) { write_correlation_csv(os, r.report); });
  files::write_json(dir / "correlation.json", to_json(r.report));
  files::write_json(dir / "selection.json", to_json(r.reduction));
  files::write_json(dir / "model.json", to_json(r.model));
  files::write_json(dir / "evaluation.json", to_json(r.evaluation));
  files::write_with(dir / "evaluation.csv", [&](std::ostream& os) { write_evaluation_csv(os, r.evaluation); });
  files::write_json(dir / "manifest.json", to_json(r.manifest));
}

}  // namespace wsnlab
