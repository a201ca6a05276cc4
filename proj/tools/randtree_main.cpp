// randtree: command-line front end for the random tree toolkit.
//
// Exit codes: 0 success, 1 configuration error, 2 numeric failure,
// 3 statistical check failed.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "randtree/errors.hpp"
#include "randtree/harness.hpp"
#include "randtree/io.hpp"

namespace {

using randtree::ExperimentConfig;
using randtree::ExperimentKind;

struct GridOpts {
  std::optional<double> step;
  std::optional<double> horizon;
};

void add_model(CLI::App* app, ExperimentConfig& cfg) {
  app->add_option("--lambda", cfg.params.lambda, "birth rate per vertex")->required();
  app->add_option("--mu", cfg.params.mu, "death rate per leaf")->required();
}

void add_run(CLI::App* app, ExperimentConfig& cfg, std::string& out) {
  app->add_option("--replicas", cfg.replicas, "independent replicas");
  app->add_option("--seed", cfg.seed, "base seed; replica i uses stream i");
  app->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
  app->add_option("--t-max", cfg.t_max, "simulated time horizon");
  app->add_option("--max-vertices", cfg.max_vertices, "vertex cap per replica");
  app->add_option("--samples", cfg.sample_points, "number of observation times in [0, t-max]");
  app->add_option("--out", out, "output prefix for <prefix>.json and <prefix>_<table>.csv");
  app->add_flag("--timing", cfg.record_timing, "include wall time in the summary");
}

void add_grid(CLI::App* app, GridOpts& g) {
  app->add_option("--grid-step", g.step, "quadrature step h");
  app->add_option("--grid-horizon", g.horizon, "quadrature horizon T");
}

int emit(const randtree::ExperimentResult& res, const std::string& out, bool statistical) {
  if (!out.empty()) randtree::write_result(res, out);
  std::cout << randtree::result_to_json(res).dump(2) << '\n';
  return statistical && !res.statistical_pass ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birth-death random trees: simulation and analytic laws"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string out;
  GridOpts grid;
  std::string rates_path;
  std::string check_kind;
  std::string scheme_name;

  auto* classify = app.add_subcommand("classify", "regime, roots and lifetime bounds");
  add_model(classify, cfg);

  auto* simulate = app.add_subcommand("simulate", "replicated trajectories of N, H and the root degree");
  add_model(simulate, cfg);
  add_run(simulate, cfg, out);

  auto* check = app.add_subcommand("check", "theory versus simulation");
  check->add_option("kind", check_kind, "stationary | height | lifetime | growth | pure-birth")
      ->required()
      ->check(CLI::IsMember({"stationary", "height", "lifetime", "growth", "pure-birth"}));
  add_model(check, cfg);
  add_run(check, cfg, out);
  add_grid(check, grid);
  check->add_option("--burn-in", cfg.burn_in_fraction, "burn-in as a fraction of t-max");
  check->add_option("--tail-mass", cfg.tail_mass, "truncation mass of the compared pmfs");
  check->add_option("--t-cap", cfg.t_cap, "lifetime censoring time");
  check->add_option("--lifetime-cap", cfg.lifetime_vertex_cap, "subtree size treated as survival");
  check->add_option("--window", cfg.slope_window, "trailing fraction of time used for the slope");
  check->add_option("--rel-tol", cfg.slope_rel_tol, "accepted relative error of the growth rate");
  check->add_option("--t-obs", cfg.t_obs, "pure birth: time of the mean checks");
  check->add_option("--t-ks", cfg.t_ks, "pure birth: time of the KS check");
  check->add_option("--ks-replicas", cfg.ks_replicas, "pure birth: draws for the KS check");
  check->add_option("--max-level", cfg.max_level, "pure birth: deepest level checked");
  check->add_option("--z", cfg.z_threshold, "z-score threshold");
  check->add_option("--tv", cfg.tv_threshold, "total variation threshold");

  auto* multiclass = app.add_subcommand("multiclass", "multiclass ergodicity and stationary means");
  multiclass->add_option("--rates", rates_path, "JSON rate matrices")->required()->check(CLI::ExistingFile);
  multiclass->add_option("--root-class", cfg.root_class, "class of the root");
  add_run(multiclass, cfg, out);
  multiclass->add_option("--burn-in", cfg.burn_in_fraction, "burn-in as a fraction of t-max");

  auto* schemes = app.add_subcommand("schemes", "iterates of the lifetime schemes and bound recursions");
  schemes->add_option("scheme", scheme_name, "ite | ite1 | rec | ld")
      ->required()
      ->check(CLI::IsMember({"ite", "ite1", "rec", "ld"}));
  add_model(schemes, cfg);
  add_grid(schemes, grid);
  schemes->add_option("--out", out, "output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    bool statistical = false;
    if (*classify) {
      cfg.kind = ExperimentKind::Classify;
    } else if (*simulate) {
      cfg.kind = ExperimentKind::Simulate;
    } else if (*check) {
      statistical = true;
      if (check_kind == "stationary") cfg.kind = ExperimentKind::StationaryCheck;
      if (check_kind == "height") cfg.kind = ExperimentKind::HeightCheck;
      if (check_kind == "lifetime") cfg.kind = ExperimentKind::LifetimeCheck;
      if (check_kind == "growth") cfg.kind = ExperimentKind::GrowthCheck;
      if (check_kind == "pure-birth") cfg.kind = ExperimentKind::PureBirthCheck;
    } else if (*multiclass) {
      statistical = true;
      cfg.kind = ExperimentKind::MulticlassCheck;
      cfg.rates = randtree::load_rates(rates_path);
    } else if (*schemes) {
      cfg.kind = ExperimentKind::SchemesDump;
      if (scheme_name == "ite") cfg.scheme = randtree::SchemeKind::Ite;
      if (scheme_name == "ite1") cfg.scheme = randtree::SchemeKind::Ite1;
      if (scheme_name == "rec") cfg.scheme = randtree::SchemeKind::Rec;
      if (scheme_name == "ld") cfg.scheme = randtree::SchemeKind::Ld;
    }
    if (grid.step || grid.horizon) {
      randtree::GridSpec g = cfg.params.pure_birth() || cfg.params.mu <= 0.0
                                 ? randtree::GridSpec{}
                                 : randtree::GridSpec::defaults_for(cfg.params);
      if (grid.step) g.step = *grid.step;
      if (grid.horizon) g.horizon = *grid.horizon;
      cfg.grid = g;
    }
    return emit(randtree::run(cfg), out, statistical);
  } catch (const randtree::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const randtree::CapExceeded& e) {
    std::cerr << "vertex cap: " << e.what() << '\n';
    return 2;
  } catch (const randtree::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
