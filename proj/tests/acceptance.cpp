// Acceptance checks. Prints one PASS/FAIL/SKIPPED line per criterion,
// followed by indented detail lines. Exit status is nonzero iff any
// selected criterion fails.
//
//   acceptance                 all default criteria (9 and 10 are skipped)
//   acceptance --criterion 7   a single criterion
//   acceptance --long          also run the extended criteria 9 and 10

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lvt/lvt.hpp"

#ifndef LVT_CLI_PATH
#define LVT_CLI_PATH "lvt"
#endif

namespace {

struct CheckResult {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(double x, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. Analytic threshold and positivity flip. Limit 1 s.
CheckResult analytic_threshold() {
  CheckResult out;
  const double v = lvt::analytic_threshold().value();
  const double flip = lvt::positivity_flip(0.0, 1.0, 1e-13);
  const bool boundary_valid = lvt::model_for_visibility(lvt::analytic_threshold()).is_valid();
  out.pass = v == 1.0 / 3.0 && std::abs(flip - 1.0 / 3.0) < 1e-10 && boundary_valid;
  out.summary = "analytic threshold " + fmt(v, 17) + ", positivity flip at " + fmt(flip, 15);
  return out;
}

// 2. Reconstruction identity for v in {0, 0.1, 1/3}. Limit 5 s.
CheckResult reconstruction_identity() {
  CheckResult out;
  auto rng = lvt::make_rng(2002);
  std::uniform_int_distribution<int> coin(0, 1);
  double closed_err = 0.0, quad_err = 0.0;
  for (double v : {0.0, 0.1, 1.0 / 3.0}) {
    const auto model = lvt::model_for_visibility(lvt::Visibility(v));
    for (int i = 0; i < 50; ++i) {
      const auto a = lvt::Direction::random(rng), b = lvt::Direction::random(rng);
      const auto m = coin(rng) ? lvt::Outcome::up() : lvt::Outcome::down();
      const auto m2 = coin(rng) ? lvt::Outcome::up() : lvt::Outcome::down();
      const double closed = lvt::reconstruct_joint(model, m, m2, a, b);
      closed_err = std::max(closed_err, std::abs(closed - lvt::quantum_joint(m, m2, a, b, lvt::Visibility(v))));
      quad_err = std::max(quad_err, std::abs(closed - lvt::reconstruct_joint_quadrature(model, m, m2, a, b)));
    }
  }
  out.pass = closed_err < 1e-12 && quad_err < 1e-10;
  out.summary = "max |closed - quantum| = " + fmt(closed_err, 3) + " (< 1e-12), max |closed - quadrature| = " +
                fmt(quad_err, 3) + " (< 1e-10)";
  return out;
}

// 3. Orthogonality identity for j, k <= 4. Limit 5 s.
CheckResult orthogonality_identity() {
  CheckResult out;
  auto rng = lvt::make_rng(3003);
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const auto a = lvt::Direction::random(rng), b = lvt::Direction::random(rng);
    for (int j = 0; j <= 4; ++j)
      for (int k = 0; k <= 4; ++k) {
        const double quad = lvt::sphere_quadrature(
            [&](const lvt::Direction& l) { return lvt::legendre(j, a.dot(l)) * lvt::legendre(k, b.dot(l)); }, 8);
        const double exact = j == k ? lvt::legendre(j, a.dot(b)) / (2 * j + 1) : 0.0;
        worst = std::max(worst, std::abs(quad - exact));
      }
  }
  out.pass = worst < 1e-10;
  out.summary = "max quadrature residual " + fmt(worst, 3) + " over 20 pairs, j,k <= 4 (< 1e-10)";
  return out;
}

// 4. Constructive soundness on 200 random instances. Limit 10 s.
CheckResult constructive_soundness() {
  CheckResult out;
  auto rng = lvt::make_rng(4004);
  std::uniform_int_distribution<int> n_dist(1, 10), m_dist(4, 16);
  std::uniform_real_distribution<double> weight(0.02, 1.0);
  lvt::ValidationReport worst;
  int passed = 0;
  for (int i = 0; i < 200; ++i) {
    const auto settings = lvt::SettingsEnsemble::random(n_dist(rng), rng);
    Eigen::VectorXd rho(m_dist(rng));
    for (auto& r : rho) r = weight(rng);
    rho /= rho.sum();
    const auto model = lvt::assemble_model(settings, lvt::make_frame(rho, rng()));
    const auto report = lvt::validate_model(model, settings, 1e-9);
    passed += report.passes;
    worst.correlation = std::max(worst.correlation, report.correlation);
    worst.bounds = std::max(worst.bounds, report.bounds);
    worst.marginals = std::max(worst.marginals, report.marginals);
    worst.probability = std::max(worst.probability, report.probability);
  }
  out.pass = passed == 200;
  out.summary = std::to_string(passed) + "/200 assembled models pass validation at 1e-9";
  out.details.push_back("worst correlation residual " + fmt(worst.correlation, 3) + ", bound excess " +
                        fmt(worst.bounds, 3) + ", marginal " + fmt(worst.marginals, 3) + ", probability " +
                        fmt(worst.probability, 3));
  return out;
}

// 5. Bell threshold. Limit 10 s.
CheckResult bell_threshold() {
  CheckResult out;
  const auto r = lvt::bell_threshold_numeric();
  const double residual = (r.best.a.vector() + r.best.c.vector() - r.best.b.vector()).norm();
  out.pass = std::abs(r.estimate.value - 2.0 / 3.0) < 1e-3 && residual < 0.05;
  out.summary = "Bell threshold " + fmt(r.estimate.value, 8) + " (2/3 within 1e-3), |a+c-b| = " + fmt(residual, 3) +
                " (< 0.05)";
  return out;
}

// 6. CHSH threshold. Limit 10 s.
CheckResult chsh_threshold() {
  CheckResult out;
  const auto r = lvt::chsh_threshold_numeric();
  const double phi = r.best.phi();
  out.pass = std::abs(r.estimate.value - 1.0 / std::sqrt(2.0)) < 1e-3 && std::abs(phi - std::numbers::pi / 2) < 0.02;
  out.summary = "CHSH threshold " + fmt(r.estimate.value, 8) + " (1/sqrt2 within 1e-3), phi = " + fmt(phi, 8) +
                " (pi/2 within 0.02)";
  return out;
}

// 7. Search versus oracle for N in {2, 3, 4}, 20 random settings each.
// Limit 2 min.
CheckResult oracle_agreement() {
  CheckResult out;
  lvt::SearchConfig config;
  config.m_states = 8;
  config.inner_iters = 40000;
  config.restarts = 6;
  config.threads = lvt::default_thread_count();
  bool upper_ok = true, lower_ok = true;
  for (int n : {2, 3, 4}) {
    auto rng = lvt::make_rng(7007, static_cast<std::uint64_t>(n));
    double worst_over = -1.0, worst_under = -1.0;
    int under_count = 0;
    for (int i = 0; i < 20; ++i) {
      const auto settings = lvt::SettingsEnsemble::random(n, rng);
      config.n_settings = n;
      config.seed = lvt::derive_seed(7007, static_cast<std::uint64_t>(100 * n + i));
      const double inner = lvt::inner_maximize(settings, config).estimate.value;
      const double oracle = lvt::max_visibility_lp(settings).value;
      worst_over = std::max(worst_over, inner - oracle);
      worst_under = std::max(worst_under, oracle - inner);
      under_count += oracle - inner > 0.02;
    }
    upper_ok &= worst_over <= 5e-3;
    lower_ok &= worst_under <= 0.02;
    out.details.push_back("N=" + std::to_string(n) + ": max(search - oracle) = " + fmt(worst_over, 3) +
                          ", max(oracle - search) = " + fmt(worst_under, 3) + ", instances more than 0.02 below oracle: " +
                          std::to_string(under_count) + "/20");
  }
  out.pass = upper_ok && lower_ok;
  out.summary = std::string("search <= oracle + 5e-3: ") + (upper_ok ? "yes" : "no") +
                ", search >= oracle - 0.02: " + (lower_ok ? "yes" : "no");
  return out;
}

// 8. Sweep trend over N in {3, 10, 30, 100}. Limit 10 min.
CheckResult sweep_trend() {
  CheckResult out;
  lvt::SearchConfig config;
  config.outer_iters = 30;
  config.seed = 8008;
  config.threads = lvt::default_thread_count();
  const auto sweep = lvt::n_sweep({3, 10, 30, 100}, config);
  bool ok = sweep.failures.empty() && sweep.estimates.size() == 4;
  for (std::size_t i = 0; i < sweep.estimates.size(); ++i) {
    const auto& e = sweep.estimates[i];
    const bool floor_ok = e.value >= 1.0 / 3.0 - 2.0 * e.std_error;
    bool step_ok = true;
    if (i > 0) {
      const auto& prev = sweep.estimates[i - 1];
      step_ok = e.value <= prev.value + 2.0 * (e.std_error + prev.std_error);
    }
    ok &= floor_ok && step_ok;
    out.details.push_back("N=" + std::to_string(e.n_settings) + ": V = " + fmt(e.value, 6) + " +- " +
                          fmt(e.std_error, 3) + (floor_ok ? "" : "  below 1/3 - 2 sigma") +
                          (step_ok ? "" : "  increase beyond 2 sigma"));
  }
  out.pass = ok;
  out.summary = "sweep estimates weakly decreasing within 2 sigma and >= 1/3 - 2 sigma";
  return out;
}

// 9. Extended: N = 1000 outer minimum in [0.36, 0.38].
CheckResult large_scale_minimum() {
  CheckResult out;
  lvt::SearchConfig config;
  config.n_settings = 1000;
  config.outer_iters = 40;
  config.seed = 9009;
  config.threads = lvt::default_thread_count();
  const auto e = lvt::outer_minimize(config);
  out.pass = e.value >= 0.36 && e.value <= 0.38;
  out.summary = "N=1000 outer minimum " + fmt(e.value, 6) + " +- " + fmt(e.std_error, 3) + " (target [0.36, 0.38])";
  return out;
}

// 10. Extended: extrapolated V_inf in [0.30, 0.36].
CheckResult extrapolated_limit() {
  CheckResult out;
  lvt::SearchConfig config;
  config.outer_iters = 30;
  config.seed = 10010;
  config.threads = lvt::default_thread_count();
  const auto sweep = lvt::n_sweep({3, 10, 30, 100, 300, 1000}, config);
  for (const auto& e : sweep.estimates)
    out.details.push_back("N=" + std::to_string(e.n_settings) + ": V = " + fmt(e.value, 6) + " +- " + fmt(e.std_error, 3));
  if (sweep.estimates.size() < 3) {
    out.summary = "too few successful sweep points";
    return out;
  }
  const auto fit = lvt::extrapolate(sweep.estimates);
  out.pass = fit.estimate.value >= 0.30 && fit.estimate.value <= 0.36;
  out.summary = "V_inf = " + fmt(fit.estimate.value, 6) + " +- " + fmt(fit.estimate.std_error, 3) + " (alpha " +
                fmt(fit.alpha, 3) + ", target [0.30, 0.36])";
  return out;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 11. Byte-identical CLI output for repeated invocations. Limit 1 min.
CheckResult determinism() {
  CheckResult out;
  const std::string cli = LVT_CLI_PATH;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"analytic", "analytic --scan 0.30:0.36:0.01 --json --no-timing"},
      {"search-json", "search --n 3,5 --outer-iters 3 --inner-iters 3000 --seed 11 --threads 2 --json --no-timing"},
      {"search-csv", "search --n 3,5 --outer-iters 3 --inner-iters 3000 --seed 11 --threads 2 --no-timing --out @"},
      {"oracle", "oracle --random 3 --seed 12 --json --no-timing"},
      {"bell", "bell --seed 13 --threads 2 --json --no-timing"},
      {"chsh", "chsh --seed 14 --threads 2 --json --no-timing"},
      {"construct", "construct --random 4 --seed 15 --json --no-timing"},
  };
  bool ok = true;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    bool ran = true;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string file = "determinism_" + name + "_" + std::to_string(rep) + ".out";
      std::string cmd_args = args;
      if (const auto at = cmd_args.find('@'); at != std::string::npos) {
        cmd_args.replace(at, 1, file);
        ran &= std::system(("\"" + cli + "\" " + cmd_args + " > /dev/null 2>&1").c_str()) == 0;
      } else {
        ran &= std::system(("\"" + cli + "\" " + cmd_args + " > " + file + " 2>/dev/null").c_str()) == 0;
      }
      outputs[rep] = read_file(file).value_or("");
      std::remove(file.c_str());
    }
    const bool same = ran && !outputs[0].empty() && outputs[0] == outputs[1];
    ok &= same;
    out.details.push_back(name + ": " + (same ? "identical" : (ran ? "DIFFERENT" : "command failed")) + " (" +
                          std::to_string(outputs[0].size()) + " bytes)");
  }
  out.pass = ok;
  out.summary = "repeated CLI runs produce byte-identical machine-readable output";
  return out;
}

struct Criterion {
  int id;
  const char* title;
  double limit_s;  // 0 = no limit
  bool extended;
  std::function<CheckResult()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  bool run_long = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg == "--long") {
      run_long = true;
    } else {
      std::cerr << "usage: acceptance [--criterion K] [--long]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "analytic threshold", 1.0, false, analytic_threshold},
      {2, "reconstruction identity", 5.0, false, reconstruction_identity},
      {3, "orthogonality identity", 5.0, false, orthogonality_identity},
      {4, "constructive soundness", 10.0, false, constructive_soundness},
      {5, "Bell threshold", 10.0, false, bell_threshold},
      {6, "CHSH threshold", 10.0, false, chsh_threshold},
      {7, "oracle agreement", 120.0, false, oracle_agreement},
      {8, "small-N sweep trend", 600.0, false, sweep_trend},
      {9, "N=1000 minimum (extended)", 0.0, true, large_scale_minimum},
      {10, "extrapolated limit (extended)", 0.0, true, extrapolated_limit},
      {11, "determinism", 60.0, false, determinism},
  };

  bool all_ok = true;
  bool matched = false;
  for (const auto& c : criteria) {
    if (only && *only != c.id) continue;
    matched = true;
    if (c.extended && !run_long) {
      std::cout << "SKIPPED criterion " << c.id << " (" << c.title << "): extended runtime, rerun with --long\n";
      continue;
    }
    const auto t0 = Clock::now();
    CheckResult o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    const double elapsed = seconds_since(t0);
    const bool in_time = c.limit_s <= 0.0 || elapsed < c.limit_s;
    const bool pass = o.pass && in_time;
    all_ok &= pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << o.summary << " ["
              << fmt(elapsed, 3) << " s";
    if (c.limit_s > 0.0) std::cout << ", limit " << fmt(c.limit_s, 4) << " s";
    std::cout << "]\n";
    for (const auto& d : o.details) std::cout << "    " << d << '\n';
    std::cout.flush();
  }
  if (!matched) {
    std::cerr << "no criterion " << *only << '\n';
    return 2;
  }
  return all_ok ? 0 : 1;
}
