#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wsnlab/pipeline.hpp"

namespace fs = std::filesystem;
using namespace wsnlab;

namespace {

struct Common {
  std::string world_path;
  std::string space_path;
  unsigned jobs = 0;
};

ConfigSpace load_space(const Common& c) {
  std::optional<WorldConfig> world;
  if (!c.world_path.empty()) {
    try {
      world = files::read_json(c.world_path).get<WorldConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad world config " + c.world_path + ": " + e.what());
    }
    require_valid(*world);
  }
  if (!c.space_path.empty()) {
    ConfigSpace s = space_from_json(files::read_json(c.space_path));
    if (!world) return s;
    return ConfigSpace(s.descriptors(), *world);
  }
  return default_space(world.value_or(WorldConfig{}));
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--world", c.world_path, "world config JSON");
  app->add_option("--space", c.space_path, "config space JSON");
  app->add_option("--jobs", c.jobs, "worker threads (0: all cores)");
}

std::optional<double> optional_threshold(const CLI::Option* opt, double value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wsnlab: energy profiling, parameter screening and regression for sensor networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // profile
  Common prof_c;
  std::size_t prof_runs = 800;
  std::uint64_t prof_seed = 0;
  std::string prof_out;
  std::string prof_log_dir;
  double prof_sigma = 1.0;
  auto* prof = app.add_subcommand("profile", "run randomized simulations and write a dataset CSV");
  add_common(prof, prof_c);
  prof->add_option("--runs", prof_runs)->check(CLI::PositiveNumber);
  prof->add_option("--seed", prof_seed);
  prof->add_option("--out", prof_out, "dataset CSV path")->required();
  prof->add_option("--sigma-mult", prof_sigma)->check(CLI::PositiveNumber);
  prof->add_option("--event-log", prof_log_dir, "debug: write one energy event log per run into this directory");

  // reduce
  Common red_c;
  std::string red_data, red_out;
  double red_alpha = 0.05, red_thr = 0.0;
  bool red_filter = false;
  auto* red = app.add_subcommand("reduce", "correlation analysis and parameter selection");
  add_common(red, red_c);
  red->add_option("--dataset", red_data)->required();
  red->add_option("--alpha", red_alpha);
  auto* red_thr_opt = red->add_option("--corr-threshold", red_thr);
  red->add_flag("--performance-filter", red_filter);
  red->add_option("--out", red_out, "output directory")->required();

  // fit
  Common fit_c;
  std::string fit_data, fit_sel, fit_out;
  bool fit_filter = false;
  auto* fitc = app.add_subcommand("fit", "least-squares model on the selected parameters");
  add_common(fitc, fit_c);
  fitc->add_option("--dataset", fit_data)->required();
  fitc->add_option("--selection", fit_sel)->required();
  fitc->add_flag("--performance-filter", fit_filter);
  fitc->add_option("--out", fit_out, "model JSON path")->required();

  // evaluate
  Common ev_c;
  std::string ev_model, ev_hold, ev_out;
  auto* ev = app.add_subcommand("evaluate", "prediction error of a model on a holdout dataset");
  add_common(ev, ev_c);
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--holdout", ev_hold)->required();
  ev->add_option("--out", ev_out, "output directory")->required();

  // pipeline
  Common pipe_c;
  PipelineOptions pipe_o;
  std::string pipe_out;
  double pipe_thr = 0.0;
  std::uint64_t pipe_hseed = 0;
  auto* pipe = app.add_subcommand("pipeline", "profile, reduce, fit, profile holdout, evaluate");
  add_common(pipe, pipe_c);
  pipe->add_option("--runs", pipe_o.train_runs)->check(CLI::PositiveNumber);
  pipe->add_option("--holdout-runs", pipe_o.holdout_runs)->check(CLI::PositiveNumber);
  pipe->add_option("--seed", pipe_o.seed);
  auto* pipe_hseed_opt = pipe->add_option("--holdout-seed", pipe_hseed);
  pipe->add_option("--alpha", pipe_o.alpha);
  auto* pipe_thr_opt = pipe->add_option("--corr-threshold", pipe_thr);
  pipe->add_flag("--performance-filter", pipe_o.performance_filter);
  pipe->add_option("--sigma-mult", pipe_o.sigma_mult)->check(CLI::PositiveNumber);
  pipe->add_option("--out", pipe_out, "output directory")->required();

  // figures
  Common fig_c;
  std::string fig_out, fig_model, fig_hold;
  std::size_t fig_seeds = 30;
  std::uint64_t fig_seed = 500000;
  auto* fig = app.add_subcommand("figures", "sweep tables and the prediction error table");
  add_common(fig, fig_c);
  fig->add_option("--seeds", fig_seeds, "seeds per sweep point")->check(CLI::Range(2, 100000));
  fig->add_option("--seed", fig_seed, "first sweep seed");
  fig->add_option("--model", fig_model);
  fig->add_option("--holdout", fig_hold);
  fig->add_option("--out", fig_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*prof) {
      ConfigSpace space = load_space(prof_c);
      ProfileOptions o{{prof_seed, prof_runs}, prof_c.jobs, prof_sigma, &std::cerr};
      Dataset d = profile(space, o);
      files::write_with(prof_out, [&](std::ostream& os) { write_dataset_csv(os, d); });
      if (!prof_log_dir.empty()) {
        RunOptions ro{default_band(space.world(), prof_sigma), nullptr};
        for (std::size_t i = 0; i < prof_runs; ++i) {
          std::uint64_t s = prof_seed + i;
          auto os = files::open_out(fs::path(prof_log_dir) / ("events_" + std::to_string(s) + ".log"));
          EventLogger logger = stream_logger(os);
          ro.logger = &logger;
          run_experiment(sample_config(space, s), space, ro);
        }
      }
      std::cerr << "wrote " << d.rows() << " rows to " << prof_out << '\n';
    } else if (*red) {
      ConfigSpace space = load_space(red_c);
      Dataset d = files::read_dataset(red_data, &space);
      if (red_filter) d = performance_rows(d);
      auto report = analyze(d);
      auto sel = reduce(report, red_alpha, optional_threshold(red_thr_opt, red_thr));
      fs::path dir(red_out);
      files::write_with(dir / "correlation.csv", [&](std::ostream& os) { write_correlation_csv(os, report); });
      files::write_json(dir / "correlation.json", to_json(report));
      files::write_json(dir / "selection.json", to_json(sel));
      std::cerr << "selected " << sel.selected.size() << " of " << report.rows.size() << " parameters\n";
    } else if (*fitc) {
      ConfigSpace space = load_space(fit_c);
      Dataset d = files::read_dataset(fit_data, &space);
      if (fit_filter) d = performance_rows(d);
      auto sel = reduction_from_json(files::read_json(fit_sel));
      auto model = fit_selection(d, sel);
      files::write_json(fit_out, to_json(model));
      std::cerr << "fitted " << model.coefficients.size() << " coefficients, LSE " << model.lse << '\n';
    } else if (*ev) {
      ConfigSpace space = load_space(ev_c);
      auto model = model_from_json(files::read_json(ev_model));
      Dataset h = files::read_dataset(ev_hold, &space);
      auto rep = evaluate(model, h);
      fs::path dir(ev_out);
      files::write_json(dir / "evaluation.json", to_json(rep));
      files::write_with(dir / "evaluation.csv", [&](std::ostream& os) { write_evaluation_csv(os, rep); });
      std::cerr << "mean relative error " << rep.mean_rel_error << " over " << h.rows() - rep.excluded
                << " rows\n";
    } else if (*pipe) {
      ConfigSpace space = load_space(pipe_c);
      pipe_o.jobs = pipe_c.jobs;
      pipe_o.corr_threshold = optional_threshold(pipe_thr_opt, pipe_thr);
      if (pipe_hseed_opt->count()) pipe_o.holdout_seed = pipe_hseed;
      pipe_o.log = &std::cerr;
      auto r = run_pipeline(space, pipe_o);
      write_pipeline_artifacts(pipe_out, r);
      std::cerr << "mean relative error " << r.evaluation.mean_rel_error << '\n';
    } else if (*fig) {
      ConfigSpace space = load_space(fig_c);
      fs::path dir(fig_out);
      SeedRange seeds{fig_seed, fig_seeds};
      auto g = sweep(space, sym::kTxInterval, grid(1.0, 15.0, 0.5), seeds, fig_c.jobs);
      files::write_with(dir / "sweep_transmission_interval.csv", [&](std::ostream& os) { write_sweep_csv(os, g); });
      auto h = sweep(space, sym::kHops, grid(0.0, 8.0, 1.0), seeds, fig_c.jobs);
      files::write_with(dir / "sweep_num_hop.csv", [&](std::ostream& os) { write_sweep_csv(os, h); });
      if (!fig_model.empty() || !fig_hold.empty()) {
        if (fig_model.empty() || fig_hold.empty()) throw DataError("--model and --holdout go together");
        auto model = model_from_json(files::read_json(fig_model));
        auto rep = evaluate(model, files::read_dataset(fig_hold, &space));
        files::write_with(dir / "prediction_error.csv", [&](std::ostream& os) { write_evaluation_csv(os, rep); });
      }
      std::cerr << "wrote figure tables to " << dir.string() << '\n';
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
