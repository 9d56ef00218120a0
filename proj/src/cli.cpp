#include "spinlab/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "spinlab/anneal.hpp"
#include "spinlab/census.hpp"
#include "spinlab/dataset.hpp"
#include "spinlab/descent.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/hamiltonian.hpp"
#include "spinlab/io.hpp"
#include "spinlab/mlp.hpp"
#include "spinlab/regimes.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/trainer.hpp"

namespace spinlab {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// regimes

struct RegimesOptions {
  double J = 1.0;
  int p = 3;
  double n = 1000.0;
  std::vector<double> nu_grid;
  std::vector<double> tau_grid;  // converted to nu via the edge scaling
  double band_constant = 1.0;
};

json regimes_config(const RegimesOptions& o) {
  return {{"J", o.J},           {"p", o.p},
          {"n", o.n},           {"nu_grid", o.nu_grid},
          {"tau_grid", o.tau_grid}, {"band_constant", o.band_constant}};
}

RegimesOptions regimes_from_config(const json& c) {
  RegimesOptions o;
  o.J = c.at("J").get<double>();
  o.p = c.at("p").get<int>();
  o.n = c.at("n").get<double>();
  o.nu_grid = c.at("nu_grid").get<std::vector<double>>();
  o.tau_grid = c.at("tau_grid").get<std::vector<double>>();
  o.band_constant = c.at("band_constant").get<double>();
  return o;
}

int cmd_regimes(const RegimesOptions& opt, const std::string& out_dir) {
  if (opt.p < 2) throw std::invalid_argument("p must be at least 2");
  if (opt.J < 0) throw std::invalid_argument("J must be nonnegative");
  if (opt.n < 2) throw std::invalid_argument("n must be at least 2");
  if (opt.nu_grid.empty() && opt.tau_grid.empty())
    throw std::invalid_argument("provide a field grid via --nu or --tau");

  const std::string started = now_utc_iso();
  const double nu_c = critical_field(opt.J, opt.p);
  std::vector<double> nus = opt.nu_grid;
  for (const double tau : opt.tau_grid)
    nus.push_back(nu_for_tau(nu_c, tau, opt.n));

  const std::string csv_path = out_dir + "/regimes.csv";
  CsvWriter csv(csv_path, {"nu", "B", "label", "expected_count"});
  for (const double nu : nus) {
    const double B = order_parameter(opt.J, opt.p, nu);
    const RegimeLabel label = classify_regime(B, opt.n, opt.band_constant);
    double count = 0.0;
    switch (label) {
      case RegimeLabel::Trivial:
        count = expected_critical_points(CountBranch::TrivializedField, B,
                                         opt.n, 0.0);
        break;
      case RegimeLabel::Exponential:
        count = expected_critical_points(CountBranch::ExponentialBulk, B,
                                         opt.n, 0.0);
        break;
      case RegimeLabel::Polynomial: {
        // Inside the band the count is polynomial in n. The tau-branch
        // formula needs tau = -B n > 0 and degenerates as tau -> 0, so tau
        // is clamped to 1: rows at or above the critical field report the
        // count at the band edge rather than a spurious divergence.
        const double tau = std::max(-B * opt.n, 1.0);
        count =
            expected_critical_points(CountBranch::PolynomialBand, B, opt.n, tau);
        break;
      }
    }
    csv.row({nu, B, to_string(label), count});
  }
  std::cout << "wrote " << csv_path << "\n";
  write_run_manifest(out_dir, "regimes", regimes_config(opt), {"regimes.csv"},
                     started, now_utc_iso());
  return exit_ok;
}

// ---------------------------------------------------------------------------
// landscape

struct LandscapeOptions {
  int n = 100;
  int p = 3;
  double J = 1.0;
  int trials = 2000;
  std::uint64_t seed = 0;
  double eta = 0.1;
  double tol = 1e-4;
  std::uint64_t max_iters = 50000;
  double cluster_eps = 0.05;
  bool no_indices = false;
  std::vector<std::string> regimes;  // labels, or label=nu for a custom field
  std::uint64_t budget = kDefaultTensorBudget;
};

json landscape_config(const LandscapeOptions& o) {
  return {{"n", o.n},
          {"p", o.p},
          {"J", o.J},
          {"trials", o.trials},
          {"seed", o.seed},
          {"eta", o.eta},
          {"tol", o.tol},
          {"max_iters", o.max_iters},
          {"cluster_eps", o.cluster_eps},
          {"no_indices", o.no_indices},
          {"regimes", o.regimes},
          {"budget", o.budget}};
}

LandscapeOptions landscape_from_config(const json& c) {
  LandscapeOptions o;
  o.n = c.at("n").get<int>();
  o.p = c.at("p").get<int>();
  o.J = c.at("J").get<double>();
  o.trials = c.at("trials").get<int>();
  o.seed = c.at("seed").get<std::uint64_t>();
  o.eta = c.at("eta").get<double>();
  o.tol = c.at("tol").get<double>();
  o.max_iters = c.at("max_iters").get<std::uint64_t>();
  o.cluster_eps = c.at("cluster_eps").get<double>();
  o.no_indices = c.at("no_indices").get<bool>();
  o.regimes = c.at("regimes").get<std::vector<std::string>>();
  o.budget = c.at("budget").get<std::uint64_t>();
  return o;
}

// "exponential", "polynomial", and "trivial" map to the standard field
// strengths 1/n, nu_c (1-1/n)^{1/2}, and sqrt(3) nu_c; "label=value" sets an
// explicit strength. Anything else is a usage error.
RegimeSpec resolve_regime(const std::string& token, int n, int p, double J) {
  const std::size_t eq = token.find('=');
  if (eq != std::string::npos) {
    const std::string label = token.substr(0, eq);
    if (label.empty()) throw std::invalid_argument("empty regime label");
    std::size_t used = 0;
    double nu = 0.0;
    try {
      nu = std::stod(token.substr(eq + 1), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad field strength in regime '" + token +
                                  "'");
    }
    if (used != token.size() - eq - 1 || !(nu >= 0))
      throw std::invalid_argument("bad field strength in regime '" + token +
                                  "'");
    return {label, nu};
  }
  const double nu_c = critical_field(J, p);
  if (token == "exponential") return {token, 1.0 / n};
  if (token == "polynomial") return {token, nu_c * std::sqrt(1.0 - 1.0 / n)};
  if (token == "trivial") return {token, std::sqrt(3.0) * nu_c};
  throw std::invalid_argument(
      "unknown regime label '" + token +
      "' (expected exponential, polynomial, trivial, or label=nu)");
}

int cmd_landscape(const LandscapeOptions& opt, const std::string& out_dir) {
  const std::string started = now_utc_iso();
  std::vector<std::string> tokens = opt.regimes;
  if (tokens.empty()) tokens = {"exponential", "polynomial", "trivial"};

  CensusConfig cfg;
  cfg.trials = opt.trials;
  for (const std::string& t : tokens)
    cfg.regimes.push_back(resolve_regime(t, opt.n, opt.p, opt.J));
  cfg.descent = {opt.eta, opt.tol, opt.max_iters};
  cfg.cluster_threshold = opt.cluster_eps;
  cfg.master_seed = opt.seed;
  cfg.compute_indices = !opt.no_indices;

  const std::uint64_t disorder_seed =
      derive_seed(opt.seed, Stream::Disorder, 0);
  const Disorder d =
      Disorder::sample(opt.n, opt.p, opt.J, disorder_seed, opt.budget);
  const CensusResult res = run_census(d, cfg);

  const std::string csv_path = out_dir + "/landscape.csv";
  CsvWriter csv(csv_path, {"regime", "trial", "seed", "normalized_energy",
                           "index", "converged", "cluster"});
  for (const RegimeCensus& rc : res.regimes) {
    for (int t = 0; t < opt.trials; ++t) {
      csv.row({rc.label, std::int64_t{t}, std::to_string(rc.init_seeds[t]),
               rc.normalized_energy(t), std::int64_t{rc.critical_indices[t]},
               std::int64_t{rc.converged[t] ? 1 : 0},
               std::int64_t{rc.cluster_labels[t]}});
    }
  }

  json summary;
  summary["n"] = res.n;
  summary["p"] = res.p;
  summary["J"] = res.J;
  summary["master_seed"] = res.master_seed;
  summary["disorder_seed"] = disorder_seed;
  summary["indices_computed"] = cfg.compute_indices;
  summary["regimes"] = json::array();
  for (const RegimeCensus& rc : res.regimes) {
    int converged = 0;
    int index_zero = 0;
    for (int t = 0; t < opt.trials; ++t) {
      if (!rc.converged[t]) continue;
      ++converged;
      if (rc.critical_indices[t] == 0) ++index_zero;
    }
    json jr;
    jr["label"] = rc.label;
    jr["nu"] = rc.nu;
    jr["field_seed"] = rc.field_seed;
    jr["trials"] = opt.trials;
    jr["convergence_rate"] = rc.convergence_rate;
    jr["cluster_count"] = rc.cluster_count;
    jr["mean_cosine_distance"] = rc.mean_cosine_distance;
    jr["min_cosine_distance"] = rc.min_cosine_distance;
    jr["max_cosine_distance"] = rc.max_cosine_distance;
    jr["distance_defined"] = rc.distance_defined;
    jr["index_zero_fraction"] =
        (cfg.compute_indices && converged > 0)
            ? static_cast<double>(index_zero) / converged
            : 0.0;
    summary["regimes"].push_back(jr);
    std::cout << rc.label << ": nu=" << rc.nu
              << " clusters=" << rc.cluster_count
              << " mean_cos=" << rc.mean_cosine_distance
              << " converged=" << rc.convergence_rate << "\n";
  }
  const std::string json_path = out_dir + "/landscape_summary.json";
  write_json(json_path, summary);
  std::cout << "wrote " << csv_path << "\nwrote " << json_path << "\n";
  write_run_manifest(out_dir, "landscape", landscape_config(opt),
                     {"landscape.csv", "landscape_summary.json"}, started,
                     now_utc_iso());
  return exit_ok;
}

// ---------------------------------------------------------------------------
// perturb-check

struct PerturbOptions {
  std::vector<int> n_grid{50, 100, 200};
  int p = 3;
  double J = 1.0;
  double nu = 0.5;
  int trials = 100;
  std::uint64_t seed = 0;
  double eta = 0.1;
  double tol = 1e-4;
  std::uint64_t max_iters = 50000;
  std::uint64_t budget = kDefaultTensorBudget;
};

json perturb_config(const PerturbOptions& o) {
  return {{"n_grid", o.n_grid}, {"p", o.p},
          {"J", o.J},           {"nu", o.nu},
          {"trials", o.trials}, {"seed", o.seed},
          {"eta", o.eta},       {"tol", o.tol},
          {"max_iters", o.max_iters}, {"budget", o.budget}};
}

PerturbOptions perturb_from_config(const json& c) {
  PerturbOptions o;
  o.n_grid = c.at("n_grid").get<std::vector<int>>();
  o.p = c.at("p").get<int>();
  o.J = c.at("J").get<double>();
  o.nu = c.at("nu").get<double>();
  o.trials = c.at("trials").get<int>();
  o.seed = c.at("seed").get<std::uint64_t>();
  o.eta = c.at("eta").get<double>();
  o.tol = c.at("tol").get<double>();
  o.max_iters = c.at("max_iters").get<std::uint64_t>();
  o.budget = c.at("budget").get<std::uint64_t>();
  return o;
}

int cmd_perturb_check(const PerturbOptions& opt, const std::string& out_dir) {
  if (opt.n_grid.empty()) throw std::invalid_argument("empty size grid");
  const std::string started = now_utc_iso();

  ShiftConfig cfg;
  cfg.n_grid = opt.n_grid;
  cfg.p = opt.p;
  cfg.J = opt.J;
  cfg.nu = opt.nu;
  cfg.trials = opt.trials;
  cfg.seed = opt.seed;
  cfg.descent = {opt.eta, opt.tol, opt.max_iters};
  cfg.tensor_budget = opt.budget;
  const ShiftReport rep = perturbation_shift_experiment(cfg);

  json doc;
  doc["n_grid"] = rep.n_grid;
  doc["nu"] = rep.nu;
  doc["converged_count"] = rep.converged_count;
  doc["median_distance"] = rep.median_distance;
  doc["median_energy_diff"] = rep.median_energy_diff;
  doc["fraction_energy_within"] = rep.fraction_energy_within;
  doc["alpha"] = rep.alpha;
  doc["alpha_defined"] = rep.alpha_defined;
  doc["rows"] = json::array();
  for (const ShiftTrial& r : rep.rows) {
    doc["rows"].push_back({{"n", r.n},
                           {"trial", r.trial},
                           {"both_converged", r.both_converged},
                           {"distance", r.distance},
                           {"energy_diff", r.energy_diff}});
  }
  const std::string json_path = out_dir + "/perturb_check.json";
  write_json(json_path, doc);
  std::cout << "alpha=" << rep.alpha << " (defined=" << rep.alpha_defined
            << ") fraction_energy_within=" << rep.fraction_energy_within
            << "\nwrote " << json_path << "\n";
  write_run_manifest(out_dir, "perturb-check", perturb_config(opt),
                     {"perturb_check.json"}, started, now_utc_iso());
  return exit_ok;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string images;
  std::string labels;
  int blob_classes = 4;
  int blob_dim = 8;
  int blob_per_class = 250;
  double blob_spread = 0.25;
  std::uint64_t blob_seed = 5000;
  std::vector<int> hidden{32, 32};
  double init_gain = 2.0;
  std::uint64_t init_seed = 0;
  double weight_decay = 0.0;
  std::string optimizer = "sgd_momentum";
  double lr = 0.01;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 10;
  int batch = 32;
  std::uint64_t seed = 0;
  double val_fraction = 0.12;
  bool anneal = false;
  double anneal_J = 0.0;
  double anneal_tau0 = 500.0;
  std::string anneal_schedule = "tau_exp";
  std::uint64_t anneal_seed = 0;
  double anneal_linear_horizon = 0.0;
  int anneal_p_est = 0;
  int anneal_n_est = 0;
  bool resampled_baseline = false;
};

json train_config(const TrainOptions& o) {
  return {{"images", o.images},
          {"labels", o.labels},
          {"blob_classes", o.blob_classes},
          {"blob_dim", o.blob_dim},
          {"blob_per_class", o.blob_per_class},
          {"blob_spread", o.blob_spread},
          {"blob_seed", o.blob_seed},
          {"hidden", o.hidden},
          {"init_gain", o.init_gain},
          {"init_seed", o.init_seed},
          {"weight_decay", o.weight_decay},
          {"optimizer", o.optimizer},
          {"lr", o.lr},
          {"momentum", o.momentum},
          {"adam_beta1", o.adam_beta1},
          {"adam_beta2", o.adam_beta2},
          {"adam_eps", o.adam_eps},
          {"epochs", o.epochs},
          {"batch", o.batch},
          {"seed", o.seed},
          {"val_fraction", o.val_fraction},
          {"anneal", o.anneal},
          {"anneal_J", o.anneal_J},
          {"anneal_tau0", o.anneal_tau0},
          {"anneal_schedule", o.anneal_schedule},
          {"anneal_seed", o.anneal_seed},
          {"anneal_linear_horizon", o.anneal_linear_horizon},
          {"anneal_p_est", o.anneal_p_est},
          {"anneal_n_est", o.anneal_n_est},
          {"resampled_baseline", o.resampled_baseline}};
}

TrainOptions train_from_config(const json& c) {
  TrainOptions o;
  o.images = c.at("images").get<std::string>();
  o.labels = c.at("labels").get<std::string>();
  o.blob_classes = c.at("blob_classes").get<int>();
  o.blob_dim = c.at("blob_dim").get<int>();
  o.blob_per_class = c.at("blob_per_class").get<int>();
  o.blob_spread = c.at("blob_spread").get<double>();
  o.blob_seed = c.at("blob_seed").get<std::uint64_t>();
  o.hidden = c.at("hidden").get<std::vector<int>>();
  o.init_gain = c.at("init_gain").get<double>();
  o.init_seed = c.at("init_seed").get<std::uint64_t>();
  o.weight_decay = c.at("weight_decay").get<double>();
  o.optimizer = c.at("optimizer").get<std::string>();
  o.lr = c.at("lr").get<double>();
  o.momentum = c.at("momentum").get<double>();
  o.adam_beta1 = c.at("adam_beta1").get<double>();
  o.adam_beta2 = c.at("adam_beta2").get<double>();
  o.adam_eps = c.at("adam_eps").get<double>();
  o.epochs = c.at("epochs").get<int>();
  o.batch = c.at("batch").get<int>();
  o.seed = c.at("seed").get<std::uint64_t>();
  o.val_fraction = c.at("val_fraction").get<double>();
  o.anneal = c.at("anneal").get<bool>();
  o.anneal_J = c.at("anneal_J").get<double>();
  o.anneal_tau0 = c.at("anneal_tau0").get<double>();
  o.anneal_schedule = c.at("anneal_schedule").get<std::string>();
  o.anneal_seed = c.at("anneal_seed").get<std::uint64_t>();
  o.anneal_linear_horizon = c.at("anneal_linear_horizon").get<double>();
  o.anneal_p_est = c.at("anneal_p_est").get<int>();
  o.anneal_n_est = c.at("anneal_n_est").get<int>();
  o.resampled_baseline = c.at("resampled_baseline").get<bool>();
  return o;
}

ScheduleKind parse_schedule(const std::string& s) {
  if (s == "tau_exp") return ScheduleKind::TauExponential;
  if (s == "kappa") return ScheduleKind::Kappa;
  if (s == "linear") return ScheduleKind::Linear;
  throw std::invalid_argument("unknown schedule '" + s +
                              "' (expected tau_exp, kappa, or linear)");
}

int cmd_train(const TrainOptions& opt, const std::string& out_dir) {
  if (opt.images.empty() != opt.labels.empty())
    throw std::invalid_argument("--images and --labels go together");
  const std::string started = now_utc_iso();

  const Dataset data =
      opt.images.empty()
          ? synth_blobs(opt.blob_classes, opt.blob_dim, opt.blob_per_class,
                        opt.blob_spread, opt.blob_seed)
          : load_idx(opt.images, opt.labels);

  MLPSpec spec;
  spec.widths.push_back(static_cast<int>(data.dim()));
  for (const int w : opt.hidden) spec.widths.push_back(w);
  spec.widths.push_back(data.classes);
  spec.init_gain = opt.init_gain;
  spec.init_seed = opt.init_seed;
  spec.weight_decay = opt.weight_decay;

  TrainConfig cfg;
  if (opt.optimizer == "sgd_momentum") {
    cfg.optimizer = OptimizerKind::SgdMomentum;
  } else if (opt.optimizer == "adam") {
    cfg.optimizer = OptimizerKind::Adaptive;
  } else {
    throw std::invalid_argument("unknown optimizer '" + opt.optimizer +
                                "' (expected sgd_momentum or adam)");
  }
  cfg.lr = opt.lr;
  cfg.momentum = opt.momentum;
  cfg.adam_beta1 = opt.adam_beta1;
  cfg.adam_beta2 = opt.adam_beta2;
  cfg.adam_eps = opt.adam_eps;
  cfg.epochs = opt.epochs;
  cfg.batch_size = opt.batch;
  cfg.seed = opt.seed;
  cfg.validation_fraction = opt.val_fraction;
  cfg.has_anneal = opt.anneal;
  if (opt.anneal) {
    cfg.anneal.J = opt.anneal_J;
    cfg.anneal.tau0 = opt.anneal_tau0;
    cfg.anneal.schedule = parse_schedule(opt.anneal_schedule);
    cfg.anneal.seed = opt.anneal_seed;
    cfg.anneal.linear_horizon = opt.anneal_linear_horizon;
    cfg.anneal.p_est = opt.anneal_p_est;
    cfg.anneal.n_est = opt.anneal_n_est;
  }
  if (opt.resampled_baseline)
    cfg.noise_baseline = NoiseBaseline::ResampledAnnealed;

  const TrainMetrics m = train(spec, data, cfg);

  const std::string csv_path = out_dir + "/train_metrics.csv";
  CsvWriter csv(csv_path,
                {"epoch", "loss", "val_error", "min_abs_grad", "alignment"});
  for (std::size_t e = 0; e < m.loss.size(); ++e) {
    csv.row({std::int64_t(e + 1), m.loss[e], m.val_error[e], m.min_abs_grad[e],
             m.alignment[e]});
  }
  std::cout << "final: loss=" << m.loss.back()
            << " val_error=" << m.val_error.back() << "% steps=" << m.steps
            << "\nwrote " << csv_path << "\n";
  write_run_manifest(out_dir, "train", train_config(opt),
                     {"train_metrics.csv"}, started, now_utc_iso());
  return exit_ok;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOptions {
  int n = 20;
  int p = 3;
  double nu = 1.0;
  int count = 10;
  std::uint64_t seed = 0;
  std::uint64_t budget = kDefaultTensorBudget;
  bool sign_flip = false;  // test fixture: sabotage the analytic gradient
};

json gradcheck_config(const GradcheckOptions& o) {
  return {{"n", o.n},       {"p", o.p},         {"nu", o.nu},
          {"count", o.count}, {"seed", o.seed}, {"budget", o.budget},
          {"sign_flip", o.sign_flip}};
}

GradcheckOptions gradcheck_from_config(const json& c) {
  GradcheckOptions o;
  o.n = c.at("n").get<int>();
  o.p = c.at("p").get<int>();
  o.nu = c.at("nu").get<double>();
  o.count = c.at("count").get<int>();
  o.seed = c.at("seed").get<std::uint64_t>();
  o.budget = c.at("budget").get<std::uint64_t>();
  o.sign_flip = c.at("sign_flip").get<bool>();
  return o;
}

int cmd_gradcheck(const GradcheckOptions& opt, const std::string& out_dir) {
  if (opt.count < 1) throw std::invalid_argument("count must be positive");
  const std::string started = now_utc_iso();
  constexpr double kGradTol = 1e-6;
  constexpr double kHessTol = 1e-5;
  constexpr double kMlpTol = 1e-6;

  json doc;
  doc["grad_tol"] = kGradTol;
  doc["hess_tol"] = kHessTol;
  doc["mlp_tol"] = kMlpTol;
  doc["sign_flip_injected"] = opt.sign_flip;
  doc["instances"] = json::array();
  bool pass = true;

  for (int i = 0; i < opt.count; ++i) {
    const Disorder d =
        Disorder::sample(opt.n, opt.p, 1.0,
                         derive_seed(opt.seed, Stream::Disorder, i), opt.budget);
    const ExternalField f = ExternalField::sample(
        opt.n, opt.nu, derive_seed(opt.seed, Stream::Field, i));
    const SpinConfiguration sigma = random_configuration(
        opt.n, derive_seed(opt.seed, Stream::DescentInit, i));

    Eigen::VectorXd g = gradient(d, sigma, f);
    if (opt.sign_flip) g = -g;
    const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
    double grad_rel = 0.0;
    {
      const double h = 1e-6;
      SpinConfiguration probe = sigma;
      for (int j = 0; j < opt.n; ++j) {
        const double save = probe.values(j);
        probe.values(j) = save + h;
        const double ep = energy(d, probe, f);
        probe.values(j) = save - h;
        const double em = energy(d, probe, f);
        probe.values(j) = save;
        grad_rel =
            std::max(grad_rel, std::abs((ep - em) / (2 * h) - g(j)) / gscale);
      }
    }

    const Eigen::MatrixXd H = hessian(d, sigma, f);
    const double hscale = std::max(1.0, H.cwiseAbs().maxCoeff());
    double hess_rel = 0.0;
    {
      const double h = 1e-5;
      SpinConfiguration probe = sigma;
      for (int j = 0; j < opt.n; ++j) {
        const double save = probe.values(j);
        probe.values(j) = save + h;
        const Eigen::VectorXd gp = gradient(d, probe, f);
        probe.values(j) = save - h;
        const Eigen::VectorXd gm = gradient(d, probe, f);
        probe.values(j) = save;
        hess_rel = std::max(
            hess_rel,
            ((gp - gm) / (2 * h) - H.col(j)).cwiseAbs().maxCoeff() / hscale);
      }
    }

    const bool ok = grad_rel < kGradTol && hess_rel < kHessTol;
    pass = pass && ok;
    doc["instances"].push_back({{"instance", i},
                                {"grad_rel", grad_rel},
                                {"hess_rel", hess_rel},
                                {"pass", ok}});
    std::cout << "instance " << i << ": grad_rel=" << grad_rel
              << " hess_rel=" << hess_rel << (ok ? "" : "  FAIL") << "\n";
  }

  // Backprop spot check on a small rectifier network over a random batch.
  double mlp_rel = 0.0;
  {
    const Dataset batch =
        synth_blobs(3, 4, 4, 0.5, derive_seed(opt.seed, Stream::Blobs));
    MLPSpec spec;
    spec.widths = {4, 8, 5, 3};
    spec.init_seed = derive_seed(opt.seed, Stream::NetInit);
    MLP net(spec);
    const Eigen::MatrixXd x = batch.features.transpose();
    Eigen::VectorXd grad;
    net.loss_and_gradient(x, batch.labels, grad);
    const double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < net.num_params(); ++j) {
      const double save = net.params()(j);
      net.params()(j) = save + h;
      const double lp = net.loss(x, batch.labels);
      net.params()(j) = save - h;
      const double lm = net.loss(x, batch.labels);
      net.params()(j) = save;
      mlp_rel =
          std::max(mlp_rel, std::abs((lp - lm) / (2 * h) - grad(j)) / scale);
    }
    pass = pass && mlp_rel < kMlpTol;
    std::cout << "network backprop: grad_rel=" << mlp_rel
              << (mlp_rel < kMlpTol ? "" : "  FAIL") << "\n";
  }
  doc["mlp_grad_rel"] = mlp_rel;
  doc["pass"] = pass;

  const std::string json_path = out_dir + "/gradcheck.json";
  write_json(json_path, doc);
  std::cout << (pass ? "PASS" : "FAIL") << "\nwrote " << json_path << "\n";
  write_run_manifest(out_dir, "gradcheck", gradcheck_config(opt),
                     {"gradcheck.json"}, started, now_utc_iso());
  return pass ? exit_ok : 1;
}

// ---------------------------------------------------------------------------
// replay

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  const json man = load_json(manifest_path);
  std::string sub;
  try {
    sub = man.at("subcommand").get<std::string>();
    const json& config = man.at("config");
    if (sub == "regimes") return cmd_regimes(regimes_from_config(config), out_dir);
    if (sub == "landscape")
      return cmd_landscape(landscape_from_config(config), out_dir);
    if (sub == "perturb-check")
      return cmd_perturb_check(perturb_from_config(config), out_dir);
    if (sub == "train") return cmd_train(train_from_config(config), out_dir);
    if (sub == "gradcheck")
      return cmd_gradcheck(gradcheck_from_config(config), out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw io_error("manifest " + manifest_path + ": " + e.what());
  }
  throw io_error("manifest " + manifest_path + " names unknown subcommand '" +
                 sub + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Spherical spin-glass landscape laboratory", "spinlab"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI config file; command-line flags override its values");
  std::string out_flag;
  app.add_option("--out", out_flag,
                 "output directory (overrides $SPINLAB_OUT; default '.')");

  RegimesOptions ropt;
  CLI::App* reg = app.add_subcommand(
      "regimes", "closed-form regime table over a field-strength grid");
  reg->fallthrough();
  reg->add_option("--J", ropt.J, "coupling strength");
  reg->add_option("--p", ropt.p, "interaction order");
  reg->add_option("--n", ropt.n, "system size the counts refer to");
  reg->add_option("--nu", ropt.nu_grid, "explicit field strengths");
  reg->add_option("--tau", ropt.tau_grid,
                  "field strengths given via the edge parametrization");
  reg->add_option("--band-constant", ropt.band_constant,
                  "half-width c of the polynomial band |B| <= c/n");

  LandscapeOptions lopt;
  CLI::App* land = app.add_subcommand(
      "landscape", "minima census: many descents per field regime");
  land->fallthrough();
  land->add_option("--n", lopt.n, "system size");
  land->add_option("--p", lopt.p, "interaction order");
  land->add_option("--J", lopt.J, "coupling strength");
  land->add_option("--trials", lopt.trials, "descents per regime");
  land->add_option("--seed", lopt.seed, "master seed");
  land->add_option("--eta", lopt.eta, "descent step size");
  land->add_option("--tol", lopt.tol, "projected-gradient tolerance");
  land->add_option("--max-iters", lopt.max_iters, "iteration cap per descent");
  land->add_option("--cluster-eps", lopt.cluster_eps,
                   "single-linkage cosine-distance threshold");
  land->add_flag("--no-indices", lopt.no_indices,
                 "skip Hessian index classification");
  land->add_option("--regime", lopt.regimes,
                   "regime label or label=nu (default: all three standard)");
  land->add_option("--budget", lopt.budget, "coupling-tensor entry budget");

  PerturbOptions popt;
  CLI::App* pert = app.add_subcommand(
      "perturb-check", "how far a weak field moves existing minima");
  pert->fallthrough();
  pert->add_option("--n", popt.n_grid, "system sizes for the decay fit");
  pert->add_option("--p", popt.p, "interaction order");
  pert->add_option("--J", popt.J, "coupling strength");
  pert->add_option("--nu", popt.nu, "perturbing field strength");
  pert->add_option("--trials", popt.trials, "minima per size");
  pert->add_option("--seed", popt.seed, "master seed");
  pert->add_option("--eta", popt.eta, "descent step size");
  pert->add_option("--tol", popt.tol, "projected-gradient tolerance");
  pert->add_option("--max-iters", popt.max_iters, "iteration cap per descent");
  pert->add_option("--budget", popt.budget, "coupling-tensor entry budget");

  TrainOptions topt;
  CLI::App* tr = app.add_subcommand(
      "train", "train a rectifier network, optionally with the annealed field");
  tr->fallthrough();
  tr->add_option("--images", topt.images, "IDX image file");
  tr->add_option("--labels", topt.labels, "IDX label file");
  tr->add_option("--blob-classes", topt.blob_classes,
                 "synthetic data: class count");
  tr->add_option("--blob-dim", topt.blob_dim, "synthetic data: dimension");
  tr->add_option("--blob-per-class", topt.blob_per_class,
                 "synthetic data: samples per class");
  tr->add_option("--blob-spread", topt.blob_spread,
                 "synthetic data: in-class standard deviation");
  tr->add_option("--blob-seed", topt.blob_seed, "synthetic data: seed");
  tr->add_option("--hidden", topt.hidden, "hidden layer widths");
  tr->add_option("--init-gain", topt.init_gain,
                 "weight init variance gain (2 = He)");
  tr->add_option("--init-seed", topt.init_seed, "weight init seed");
  tr->add_option("--weight-decay", topt.weight_decay, "L2 coefficient");
  tr->add_option("--optimizer", topt.optimizer, "sgd_momentum or adam");
  tr->add_option("--lr", topt.lr, "learning rate");
  tr->add_option("--momentum", topt.momentum, "momentum coefficient");
  tr->add_option("--adam-beta1", topt.adam_beta1, "adam first-moment decay");
  tr->add_option("--adam-beta2", topt.adam_beta2, "adam second-moment decay");
  tr->add_option("--adam-eps", topt.adam_eps, "adam denominator floor");
  tr->add_option("--epochs", topt.epochs, "training epochs");
  tr->add_option("--batch", topt.batch, "batch size");
  tr->add_option("--seed", topt.seed, "training seed");
  tr->add_option("--val-fraction", topt.val_fraction,
                 "held-out validation fraction");
  tr->add_option("--anneal.J", topt.anneal_J, "perturbation coupling strength");
  tr->add_option("--anneal.tau0", topt.anneal_tau0,
                 "perturbation decay time constant");
  tr->add_option("--anneal.schedule", topt.anneal_schedule,
                 "tau_exp, kappa, or linear");
  tr->add_option("--anneal.seed", topt.anneal_seed,
                 "perturbation direction seed");
  tr->add_option("--anneal.linear-horizon", topt.anneal_linear_horizon,
                 "steps to zero for the linear schedule");
  tr->add_option("--anneal.p-est", topt.anneal_p_est,
                 "layer-count estimate (0 = derive from the net)");
  tr->add_option("--anneal.n-est", topt.anneal_n_est,
                 "neuron-count estimate (0 = derive from the net)");
  tr->add_flag("--resampled-baseline", topt.resampled_baseline,
               "resample the perturbation direction each step");

  GradcheckOptions gopt;
  CLI::App* gc = app.add_subcommand(
      "gradcheck", "finite-difference audit of all analytic derivatives");
  gc->fallthrough();
  gc->add_option("--n", gopt.n, "system size");
  gc->add_option("--p", gopt.p, "interaction order");
  gc->add_option("--nu", gopt.nu, "field strength");
  gc->add_option("--count", gopt.count, "random instances");
  gc->add_option("--seed", gopt.seed, "master seed");
  gc->add_option("--budget", gopt.budget, "coupling-tensor entry budget");
  gc->add_flag("--inject-sign-flip", gopt.sign_flip,
               "negate the analytic gradient so the check must fail");

  std::string manifest_path;
  CLI::App* rep = app.add_subcommand(
      "replay", "re-run a recorded invocation from its manifest");
  rep->fallthrough();
  rep->add_option("manifest", manifest_path, "path to a run manifest")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    const std::string out_dir = resolve_output_dir(out_flag);
    if (*reg) return cmd_regimes(ropt, out_dir);
    if (*land) return cmd_landscape(lopt, out_dir);
    if (*pert) return cmd_perturb_check(popt, out_dir);
    if (*tr) {
      topt.anneal = tr->count("--anneal.J") > 0;
      return cmd_train(topt, out_dir);
    }
    if (*gc) return cmd_gradcheck(gopt, out_dir);
    if (*rep) return cmd_replay(manifest_path, out_dir);
  } catch (const capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return exit_capacity;
  } catch (const io_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const divergence_error& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return exit_divergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_usage;
}

}  // namespace spinlab
