// Acceptance gate: every release criterion checked at its stated tolerance,
// one pass/fail line per criterion, nonzero exit if any fails.
//
// Usage: acceptance --cli <path-to-spinlab-binary> --scratch <dir>
//
// The CLI binary is exercised by the byte-for-byte replay criterion; all
// other criteria drive the library directly.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "spinlab/anneal.hpp"
#include "spinlab/census.hpp"
#include "spinlab/dataset.hpp"
#include "spinlab/descent.hpp"
#include "spinlab/hamiltonian.hpp"
#include "spinlab/io.hpp"
#include "spinlab/mlp.hpp"
#include "spinlab/regimes.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/trainer.hpp"

using namespace spinlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// -------------------------------------------------------------------------
// A1: analytic derivatives vs central finite differences on random
// instances. n <= 30, p in 2..5, field strength 0 or 1; gradient relative
// error < 1e-6, second derivative < 1e-5; under one minute.

Verdict a1_derivative_audit() {
  const auto t0 = std::chrono::steady_clock::now();
  Xoshiro256 rng(20260822);
  double worst_g = 0.0, worst_h = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int p = 2 + static_cast<int>(rng.uniform() * 4);
    const int cap = (p == 5) ? 15 : 30;  // keep the tensor at or below 1e6
    const int n = 5 + static_cast<int>(rng.uniform() * (cap - 4));
    const double nu = (i % 2 == 0) ? 0.0 : 1.0;
    const Disorder d =
        Disorder::sample(n, p, 1.0, derive_seed(99, Stream::Disorder, i));
    const ExternalField f =
        ExternalField::sample(n, nu, derive_seed(99, Stream::Field, i));
    const SpinConfiguration sigma =
        random_configuration(n, derive_seed(99, Stream::DescentInit, i));

    const Eigen::VectorXd g = gradient(d, sigma, f);
    const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
    SpinConfiguration probe = sigma;
    {
      const double h = 1e-6;
      for (int j = 0; j < n; ++j) {
        const double save = probe.values(j);
        probe.values(j) = save + h;
        const double ep = energy(d, probe, f);
        probe.values(j) = save - h;
        const double em = energy(d, probe, f);
        probe.values(j) = save;
        worst_g = std::max(
            worst_g, std::abs((ep - em) / (2 * h) - g(j)) / gscale);
      }
    }
    const Eigen::MatrixXd H = hessian(d, sigma, f);
    const double hscale = std::max(1.0, H.cwiseAbs().maxCoeff());
    {
      const double h = 1e-5;
      for (int j = 0; j < n; ++j) {
        const double save = probe.values(j);
        probe.values(j) = save + h;
        const Eigen::VectorXd gp = gradient(d, probe, f);
        probe.values(j) = save - h;
        const Eigen::VectorXd gm = gradient(d, probe, f);
        probe.values(j) = save;
        worst_h = std::max(worst_h, ((gp - gm) / (2 * h) - H.col(j))
                                        .cwiseAbs()
                                        .maxCoeff() /
                               hscale);
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Verdict v;
  v.pass = worst_g < 1e-6 && worst_h < 1e-5 && secs < 60.0;
  v.detail = fmt("grad rel %.2e < 1e-6, hess rel %.2e < 1e-5, %.1fs < 60s",
                 worst_g, worst_h, secs);
  return v;
}

// -------------------------------------------------------------------------
// A2: three-regime census at n=100, p=3, J=1: 2000 descents per regime at
// field strengths 1/n, sqrt(3)(1-1/n)^{1/2}, and 3. The weak field must
// scatter endpoints (mean cosine distance > 0.8, > 50 clusters), the strong
// field must collapse them (1 cluster, mean < 0.1), and the near-critical
// field must sit strictly between. At least 4 of 5 master seeds.

Verdict a2_three_regime_census() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 100;
  int ok_seeds = 0;
  std::string per_seed;
  for (std::uint64_t master = 0; master < 5; ++master) {
    CensusConfig cfg;
    cfg.trials = 2000;
    cfg.regimes = {{"exponential", 1.0 / n},
                   {"polynomial", std::sqrt(3.0) * std::sqrt(1.0 - 1.0 / n)},
                   {"trivial", 3.0}};
    cfg.descent = {0.1, 1e-4, 50000};
    cfg.cluster_threshold = 0.05;
    cfg.master_seed = master;
    cfg.compute_indices = false;
    const Disorder d = Disorder::sample(
        n, 3, 1.0, derive_seed(master, Stream::Disorder, 0));
    const CensusResult res = run_census(d, cfg);
    const RegimeCensus& ex = res.regimes[0];
    const RegimeCensus& po = res.regimes[1];
    const RegimeCensus& tr = res.regimes[2];
    const bool ok = tr.cluster_count == 1 && tr.mean_cosine_distance < 0.1 &&
                    ex.mean_cosine_distance > 0.8 && ex.cluster_count > 50 &&
                    po.cluster_count > tr.cluster_count &&
                    po.cluster_count < ex.cluster_count;
    ok_seeds += ok ? 1 : 0;
    per_seed += fmt("%s%llu:%s", master ? "," : "",
                    static_cast<unsigned long long>(master),
                    ok ? "ok" : "BAD");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Verdict v;
  v.pass = ok_seeds >= 4 && secs <= 900.0;
  v.detail = fmt("%d/5 seeds (%s) >= 4, %.0fs <= 900s", ok_seeds,
                 per_seed.c_str(), secs);
  return v;
}

// -------------------------------------------------------------------------
// A3: closed-form identities of the regime calculus and the annealing
// schedule, at 1e-12 or exactly.

Verdict a3_regime_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string what = "all identities hold";
  auto fail = [&](const std::string& s) {
    pass = false;
    what = s;
  };

  const double pairs[][2] = {{1.0, 3}, {1.0, 4}, {2.0, 3}, {0.5, 5}};
  for (const auto& jp : pairs) {
    const double J = jp[0];
    const int p = static_cast<int>(jp[1]);
    if (std::abs(order_parameter(J, p, critical_field(J, p))) > 1e-12)
      fail("order parameter does not vanish at the critical field");
    if (std::abs(order_parameter(J, p, 0.0) - (1.0 - 2.0 / p)) > 1e-12)
      fail("zero-field order parameter is not 1 - 2/p");
    if (std::abs(order_parameter(J, p, 1e8) - (-1.0)) > 1e-12)
      fail("strong-field order parameter does not approach -1");
  }
  for (int tau = 1; tau <= 10; ++tau) {
    for (const double n : {100.0, 1000.0}) {
      const double band = expected_critical_points(
          CountBranch::PolynomialBand, -tau / n, n, tau);
      const double edge = expected_critical_points_edge(tau, n);
      if (std::abs(band - edge) > 1e-12 * std::abs(edge))
        fail("polynomial-band and edge counts disagree");
    }
  }
  for (const int n_est : {10, 500, 1000}) {
    const double tau0 = tau_schedule(0, 500.0, n_est);
    if (tau0 != n_est / 2.0) fail("schedule start is not n/2 exactly");
    if (scale_factor(tau0, n_est) != std::sqrt(2.0))
      fail("initial scale is not sqrt(2) exactly");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Verdict v;
  v.pass = pass && secs < 60.0;
  v.detail = fmt("%s, %.2fs", what.c_str(), secs);
  return v;
}

// -------------------------------------------------------------------------
// A4: perturbed-minimum shift at n in {50,100,200}, p=3, J=1, nu=0.5, 100
// trials per size: normalized energy difference <= 2 nu in >= 95% of
// converged trials, and distance decay exponent alpha in (0.1, 0.7).

Verdict a4_perturbation_shift() {
  const auto t0 = std::chrono::steady_clock::now();
  ShiftConfig cfg;  // the defaults are exactly the stated settings
  const ShiftReport rep = perturbation_shift_experiment(cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const bool energy_ok = rep.fraction_energy_within >= 0.95;
  const bool alpha_ok =
      rep.alpha_defined && rep.alpha > 0.1 && rep.alpha < 0.7;
  Verdict v;
  v.pass = energy_ok && alpha_ok && secs <= 600.0;
  v.detail =
      fmt("energy within 2nu: %.1f%% (need >= 95); alpha = %.3f (need "
          "(0.1,0.7)); %.0fs <= 600s",
          100.0 * rep.fraction_energy_within, rep.alpha, secs);
  if (!alpha_ok)
    v.detail +=
        " -- at fixed nu the displacement grows like nu sqrt(n)/lambda "
        "(measured exponent matches the local-response value -1/2); the "
        "n^{-1/3} decay requires the field normalized as nu/sqrt(n) and "
        "unit-sphere distances";
  return v;
}

// -------------------------------------------------------------------------
// A5: annealed-gradient training against baselines on synthetic blobs with
// a deep thin rectifier net in the vanishing-gradient regime.

double tail_mean(const std::vector<double>& v) {
  const std::size_t k = std::max<std::size_t>(1, v.size() / 10);
  double s = 0;
  for (std::size_t i = v.size() - k; i < v.size(); ++i) s += v[i];
  return s / k;
}

Verdict a5_annealed_training() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = synth_blobs(4, 8, 250, 0.25, 5000);

  auto make_spec = [&](int s) {
    MLPSpec spec;
    spec.widths.push_back(8);
    for (int l = 0; l < 16; ++l) spec.widths.push_back(32);
    spec.widths.push_back(4);
    spec.init_gain = 0.5;  // vanishing-gradient initialization
    spec.init_seed = 1000 + s;
    return spec;
  };
  auto make_base = [&](int s) {
    TrainConfig cfg;
    cfg.lr = 0.025;
    cfg.momentum = 0.5;
    cfg.epochs = 6;
    cfg.batch_size = 32;
    cfg.seed = 2000 + s;
    return cfg;
  };

  int loss_wins = 0, ming_wins = 0, align_wins = 0, diverged = 0;
  for (int s = 0; s < 10; ++s) {
    const MLPSpec spec = make_spec(s);
    const TrainConfig base = make_base(s);
    TrainConfig ann = base;
    ann.has_anneal = true;
    ann.anneal.J = 5e-3;
    ann.anneal.tau0 = 30.0;
    TrainConfig rs = ann;
    rs.noise_baseline = NoiseBaseline::ResampledAnnealed;
    try {
      const TrainMetrics mb = train(spec, data, base);
      const TrainMetrics ma = train(spec, data, ann);
      const TrainMetrics mr = train(spec, data, rs);
      if (ma.loss[2] < mb.loss[2]) ++loss_wins;
      bool ge = true;
      for (int e = 0; e < 3; ++e) ge = ge && ma.min_abs_grad[e] >= mb.min_abs_grad[e];
      if (ge) ++ming_wins;
      if (tail_mean(ma.step_alignment) > tail_mean(mr.step_alignment))
        ++align_wins;
    } catch (const std::exception&) {
      ++diverged;
    }
  }

  // Zero coupling must be bit-identical to the unperturbed baseline.
  bool degenerate_ok = false;
  {
    const MLPSpec spec = make_spec(0);
    const TrainConfig base = make_base(0);
    TrainConfig j0 = base;
    j0.has_anneal = true;
    j0.anneal.J = 0.0;
    j0.anneal.tau0 = 30.0;
    const TrainMetrics mb = train(spec, data, base);
    const TrainMetrics m0 = train(spec, data, j0);
    degenerate_ok =
        mb.loss == m0.loss && mb.val_error == m0.val_error &&
        mb.min_abs_grad == m0.min_abs_grad &&
        mb.step_alignment == m0.step_alignment &&
        mb.final_params.size() == m0.final_params.size() &&
        (mb.final_params.array() == m0.final_params.array()).all();
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Verdict v;
  v.pass = loss_wins >= 8 && ming_wins >= 8 && align_wins >= 8 &&
           degenerate_ok && secs <= 600.0;
  v.detail = fmt(
      "epoch-3 loss wins %d/10, min-grad wins %d/10, alignment wins %d/10 "
      "(all need >= 8), zero-coupling bit-identity %s, %d diverged, %.0fs "
      "<= 600s",
      loss_wins, ming_wins, align_wins, degenerate_ok ? "ok" : "BROKEN",
      diverged, secs);
  return v;
}

// -------------------------------------------------------------------------
// A6: replaying any CLI run from its manifest reproduces every output file
// byte for byte.

std::string g_cli;
std::string g_scratch;

int run_cli_process(const std::string& args, const std::string& log) {
  const std::string cmd = g_cli + " " + args + " >> " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path + ">";
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

Verdict a6_manifest_replay() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string log = g_scratch + "/cli.log";
  const struct {
    const char* name;
    std::string args;
  } cases[] = {
      {"regimes", "regimes --n 500 --nu 0.3 --nu 1.0 --nu 2.0 --tau 2"},
      {"landscape", "landscape --n 20 --trials 10 --seed 9"},
      {"perturb-check",
       "perturb-check --n 12 --n 16 --n 20 --trials 8 --nu 0.4 --seed 3"},
      {"train",
       "train --blob-classes 3 --blob-dim 6 --blob-per-class 50 --hidden 12 "
       "--hidden 8 --epochs 3 --batch 16 --seed 21 --anneal.J 0.004 "
       "--anneal.tau0 40"},
      {"gradcheck", "gradcheck --n 10 --count 2 --seed 6"},
  };
  bool pass = true;
  std::string what;
  for (const auto& c : cases) {
    const std::string dir_a = g_scratch + "/" + c.name + "_a";
    const std::string dir_b = g_scratch + "/" + c.name + "_b";
    fs::create_directories(dir_a);
    fs::create_directories(dir_b);
    if (run_cli_process("--out " + dir_a + " " + c.args, log) != 0) {
      pass = false;
      what += fmt("%s: run failed; ", c.name);
      continue;
    }
    const std::string manifest =
        dir_a + "/manifest_" + std::string(c.name) + ".json";
    if (run_cli_process("--out " + dir_b + " replay " + manifest, log) != 0) {
      pass = false;
      what += fmt("%s: replay failed; ", c.name);
      continue;
    }
    int files = 0;
    bool identical = true;
    try {
      const nlohmann::json man = load_json(manifest);
      for (const auto& out : man.at("outputs")) {
        const std::string rel = out.get<std::string>();
        identical =
            identical && slurp(dir_a + "/" + rel) == slurp(dir_b + "/" + rel);
        ++files;
      }
    } catch (const std::exception&) {
      identical = false;
    }
    pass = pass && identical && files > 0;
    what += fmt("%s:%s(%d) ", c.name, identical ? "ok" : "DIFF", files);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Verdict v;
  v.pass = pass;
  v.detail = what + fmt("%.0fs", secs);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") g_cli = argv[i + 1];
    if (flag == "--scratch") g_scratch = argv[i + 1];
  }
  if (g_cli.empty() || g_scratch.empty()) {
    std::fprintf(stderr, "usage: acceptance --cli <binary> --scratch <dir>\n");
    return 2;
  }
  fs::remove_all(g_scratch);
  fs::create_directories(g_scratch);

  const struct {
    const char* name;
    std::function<Verdict()> check;
  } criteria[] = {
      {"A1 derivative-audit", a1_derivative_audit},
      {"A2 three-regime-census", a2_three_regime_census},
      {"A3 closed-form-identities", a3_regime_identities},
      {"A4 perturbation-shift", a4_perturbation_shift},
      {"A5 annealed-training", a5_annealed_training},
      {"A6 manifest-replay", a6_manifest_replay},
  };

  int passed = 0;
  int total = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    ++total;
    passed += v.pass ? 1 : 0;
    std::printf("%s: %s (%s)\n", c.name, v.pass ? "PASS" : "FAIL",
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d criteria passed\n", passed, total);
  return passed == total ? 0 : 1;
}
