// lvt: threshold visibility for local hidden-variable models of the singlet.
//
// Commands: analytic, search, oracle, bell, chsh, construct.
// Exit codes: 0 success, 2 usage, 3 resource limit, 4 partial failure.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lvt/lvt.hpp"

namespace {

using lvt::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;
constexpr int kExitPartial = 4;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("LVT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw lvt::InvalidInput(std::string("LVT_SEED is not an unsigned integer: ") + env);
    }
  }
  return 1;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw lvt::InvalidInput("bad integer in list: " + item);
    out.push_back(v);
  }
  return out;
}

struct Scan {
  double lo, hi, step;
};

Scan parse_scan(const std::string& text) {
  Scan s{};
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  if (!(is >> s.lo >> c1 >> s.hi >> c2 >> s.step) || c1 != ':' || c2 != ':') {
    throw lvt::InvalidInput("--scan expects lo:hi:step, got " + text);
  }
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lvt::InvalidInput("cannot write " + path);
  out << content;
}

std::string fixed(double x, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

struct CommonOptions {
  bool json_output = false;
  bool no_timing = false;
  std::uint64_t seed = 0;
  int threads = lvt::default_thread_count();
  std::string out;
};

void emit(const lvt::RunRecord& record, const CommonOptions& common) {
  if (common.json_output) std::cout << json(record).dump(2) << '\n';
}

double timing(const Stopwatch& clock, const CommonOptions& common) { return common.no_timing ? 0.0 : clock.seconds(); }

int run_analytic(const CommonOptions& common, const std::optional<std::string>& scan_text) {
  Stopwatch clock;
  const double v = lvt::analytic_threshold().value();
  const auto boundary = lvt::model_for_visibility(lvt::analytic_threshold());
  const double flip = lvt::positivity_flip(0.0, 1.0, 1e-13);

  lvt::RunRecord record;
  record.command = "analytic";
  record.seed = common.seed;
  record.estimates.push_back({v, 0.0, 0, lvt::Provenance::analytic, common.seed, 0});
  record.details["coefficients"] = boundary.coefficients();
  record.details["boundary_min_response"] = boundary.min_response();
  record.details["positivity_flip"] = flip;

  std::vector<lvt::PositivityScanRow> rows;
  if (scan_text) {
    const auto scan = parse_scan(*scan_text);
    record.config = {{"scan", {scan.lo, scan.hi, scan.step}}};
    rows = lvt::positivity_scan(scan.lo, scan.hi, scan.step);
    json arr = json::array();
    for (const auto& r : rows) arr.push_back({{"v", r.visibility}, {"c1", r.c1}, {"min_f", r.min_response}, {"valid", r.valid}});
    record.details["scan"] = arr;
  }
  record.wall_time_s = timing(clock, common);

  if (!common.out.empty()) write_file(common.out, json(record).dump(2) + "\n");
  if (common.json_output) {
    emit(record, common);
    return kExitOk;
  }
  std::cout << "threshold visibility (analytic): " << std::setprecision(17) << v << '\n';
  std::cout << "boundary model: c0 = " << boundary.coefficients()[0] << ", c1 = " << boundary.coefficients()[1]
            << ", min f = " << boundary.min_response() << '\n';
  std::cout << "positivity flip by bisection: " << flip << '\n';
  if (!rows.empty()) {
    std::cout << "       v        c1     min f  valid\n";
    for (const auto& r : rows) {
      std::cout << std::setw(8) << fixed(r.visibility, 4) << std::setw(10) << fixed(r.c1) << std::setw(10)
                << fixed(r.min_response) << "  " << (r.valid ? "yes" : "no") << '\n';
    }
  }
  return kExitOk;
}

int run_search(const CommonOptions& common, lvt::SearchConfig config, const std::string& n_list, bool extrapolate,
               bool allow_long) {
  const auto n_values = parse_int_list(n_list);
  if (n_values.empty()) throw lvt::InvalidInput("--n needs at least one value");
  config.seed = common.seed;
  config.threads = common.threads;
  for (int n : n_values) {
    config.n_settings = n;
    config.validate();
  }

  double projected = 0.0;
  for (int n : n_values) {
    auto c = config;
    c.n_settings = n;
    projected += lvt::projected_seconds(c);
  }
  if (projected > 60.0 && !allow_long) {
    std::cerr << "projected wall time " << fixed(projected, 0) << " s exceeds 60 s; rerun with --long\n";
    return kExitResource;
  }

  Stopwatch clock;
  std::vector<double> wall_times;
  double last = 0.0;
  auto progress = [&](const lvt::VisibilityEstimate& e) {
    const double now = timing(clock, common);
    wall_times.push_back(now - last);
    last = now;
    std::cerr << "N=" << e.n_settings << " V=" << fixed(e.value) << " +- " << fixed(e.std_error) << " seed=" << e.seed
              << '\n';
  };
  const auto sweep = lvt::n_sweep(n_values, config, progress);
  for (const auto& f : sweep.failures) std::cerr << "N=" << f.n_settings << " failed: " << f.message << '\n';

  lvt::RunRecord record;
  record.command = "search";
  record.config = config;
  record.config["n_values"] = n_values;
  record.seed = common.seed;
  record.estimates = sweep.estimates;
  json failures = json::array();
  for (const auto& f : sweep.failures) failures.push_back({{"n", f.n_settings}, {"error", f.message}});
  record.details["failures"] = failures;

  std::optional<lvt::ExtrapolationFit> fit;
  if (extrapolate) {
    if (sweep.estimates.size() >= 3) {
      fit = lvt::extrapolate(sweep.estimates);
      record.details["extrapolation"] = {{"v_inf", fit->estimate.value},
                                         {"std_error", fit->estimate.std_error},
                                         {"coefficient", fit->coefficient},
                                         {"alpha", fit->alpha},
                                         {"residual", fit->residual}};
    } else {
      record.details["extrapolation"] = {{"error", "needs at least 3 successful N values"}};
    }
  }
  record.wall_time_s = timing(clock, common);

  if (!common.out.empty()) write_file(common.out, lvt::to_csv(sweep.estimates, wall_times));
  if (common.json_output) {
    emit(record, common);
  } else {
    std::cout << "     N  visibility   std_error\n";
    for (const auto& e : sweep.estimates) {
      std::cout << std::setw(6) << e.n_settings << std::setw(12) << fixed(e.value) << std::setw(12) << fixed(e.std_error)
                << '\n';
    }
    if (fit) {
      std::cout << "V_inf = " << fixed(fit->estimate.value) << " +- " << fixed(fit->estimate.std_error)
                << " (alpha = " << fit->alpha << ")\n";
    }
  }
  return sweep.failures.empty() ? kExitOk : kExitPartial;
}

lvt::SettingsEnsemble settings_from_options(const std::optional<std::string>& file, const std::optional<int>& random_n,
                                            std::uint64_t seed) {
  if (file && random_n) throw lvt::InvalidInput("use either --settings or --random, not both");
  if (file) return lvt::load_settings_file(*file);
  if (!random_n) throw lvt::InvalidInput("need --settings FILE or --random N");
  if (*random_n < 1) throw lvt::InvalidInput("--random needs N >= 1");
  lvt::Rng rng = lvt::make_rng(seed, 0x5e7ULL);
  return lvt::SettingsEnsemble::random(*random_n, rng);
}

int run_oracle(const CommonOptions& common, const std::optional<std::string>& file, const std::optional<int>& random_n) {
  Stopwatch clock;
  const auto settings = settings_from_options(file, random_n, common.seed);
  lvt::strategy_count(settings.size());  // raises ResourceLimit before any work
  auto estimate = lvt::max_visibility_lp(settings);
  estimate.seed = common.seed;

  lvt::RunRecord record;
  record.command = "oracle";
  record.seed = common.seed;
  record.config = {{"settings", lvt::settings_to_json(settings)}};
  record.estimates.push_back(estimate);
  record.wall_time_s = timing(clock, common);
  if (!common.out.empty()) write_file(common.out, lvt::to_csv(record.estimates, {record.wall_time_s}));
  if (common.json_output) {
    emit(record, common);
  } else {
    std::cout << "oracle max visibility (N=" << settings.size() << "): " << std::setprecision(12) << estimate.value << '\n';
  }
  return kExitOk;
}

int run_construct(const CommonOptions& common, const std::optional<std::string>& file, const std::optional<int>& random_n,
                  int m_states) {
  Stopwatch clock;
  const auto settings = settings_from_options(file, random_n, common.seed);
  lvt::Rng rng = lvt::make_rng(common.seed, 0xc0ULL);
  std::uniform_real_distribution<double> uniform(0.1, 1.0);
  Eigen::VectorXd rho(m_states);
  for (int n = 0; n < m_states; ++n) rho(n) = uniform(rng);
  rho /= rho.sum();
  const auto frame = lvt::make_frame(rho, rng());
  const auto svd = lvt::gram_svd(settings);
  const auto model = lvt::assemble_model(svd, frame);
  const auto report = lvt::validate_model(model, settings, 1e-9);

  lvt::RunRecord record;
  record.command = "construct";
  record.seed = common.seed;
  record.config = {{"settings", lvt::settings_to_json(settings)}, {"m_states", m_states}};
  record.estimates.push_back(
      {model.visibility.value(), 0.0, settings.size(), lvt::Provenance::mc_search, common.seed, 1});
  record.details["singular_values"] = {svd.p(0), svd.p(1), svd.p(2)};
  record.details["validation"] = {{"correlation", report.correlation}, {"bounds", report.bounds},
                                  {"marginals", report.marginals},     {"probability", report.probability},
                                  {"weights", report.weights},         {"passes", report.passes}};
  record.wall_time_s = timing(clock, common);
  if (!common.out.empty()) write_file(common.out, json(record).dump(2) + "\n");
  if (common.json_output) {
    emit(record, common);
  } else {
    std::cout << "singular values: " << svd.p.transpose() << '\n';
    std::cout << "visibility of this frame: " << std::setprecision(12) << model.visibility.value() << '\n';
    std::cout << "validation (tol 1e-9): " << (report.passes ? "pass" : "FAIL") << "  worst violation "
              << report.worst() << '\n';
  }
  return report.passes ? kExitOk : kExitPartial;
}

template <class Threshold>
int report_threshold(const std::string& name, const Threshold& result, const CommonOptions& common, const Stopwatch& clock,
                     json details, double exact) {
  lvt::RunRecord record;
  record.command = name;
  record.seed = common.seed;
  record.config = {{"threads", common.threads}};
  record.estimates.push_back(result.estimate);
  record.details = std::move(details);
  record.details["max_lhs"] = result.max_lhs;
  record.details["closed_form"] = exact;
  record.wall_time_s = timing(clock, common);
  if (!common.out.empty()) write_file(common.out, json(record).dump(2) + "\n");
  if (common.json_output) {
    emit(record, common);
  } else {
    std::cout << name << " threshold visibility: " << fixed(result.estimate.value) << "  (closed form " << fixed(exact)
              << ")\n";
  }
  return kExitOk;
}

json direction_json(const lvt::Direction& d) { return {d.x(), d.y(), d.z()}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold visibility for local hidden-variable models of the singlet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lvt::kVersion);

  CommonOptions common;
  std::optional<std::uint64_t> seed_flag;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_flag("--json", common.json_output, "Print the run record as JSON");
    cmd->add_option("--seed", seed_flag, "Random seed (default: $LVT_SEED or 1)");
    cmd->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", common.out, "Write machine-readable output to this file");
    cmd->add_flag("--no-timing", common.no_timing, "Record wall_time_s as 0 for byte-reproducible output");
  };

  auto* analytic = app.add_subcommand("analytic", "Legendre-series threshold and positivity scan");
  std::optional<std::string> scan;
  analytic->add_option("--scan", scan, "lo:hi:step visibility scan");
  add_common(analytic);

  lvt::SearchConfig config;
  std::string n_list = "3,10,30";
  bool extrapolate = false;
  bool allow_long = false;
  auto* search = app.add_subcommand("search", "Monte-Carlo max-min search over settings");
  search->add_option("--n", n_list, "Comma-separated settings counts, ascending");
  search->add_option("--m", config.m_states, "Hidden states M")->capture_default_str();
  search->add_option("--inner-iters", config.inner_iters)->capture_default_str();
  search->add_option("--outer-iters", config.outer_iters)->capture_default_str();
  search->add_option("--restarts", config.restarts)->capture_default_str();
  search->add_option("--step", config.step_scale)->capture_default_str();
  search->add_option("--patience", config.patience)->capture_default_str();
  search->add_option("--rho-min", config.rho_min)->capture_default_str();
  search->add_flag("--extrapolate", extrapolate, "Fit V(N) = V_inf + c N^-alpha");
  search->add_flag("--long", allow_long, "Allow runs projected to take more than 60 s");
  add_common(search);

  std::optional<std::string> settings_file;
  std::optional<int> random_n;
  auto* oracle = app.add_subcommand("oracle", "Exact LP maximum visibility for small N");
  oracle->add_option("--settings", settings_file, "JSON settings file");
  oracle->add_option("--random", random_n, "Random settings with N per side");
  add_common(oracle);

  int construct_m = 4;
  auto* construct = app.add_subcommand("construct", "Assemble one model from a random frame and validate it");
  construct->add_option("--settings", settings_file, "JSON settings file");
  construct->add_option("--random", random_n, "Random settings with N per side");
  construct->add_option("--m", construct_m, "Hidden states M")->capture_default_str();
  add_common(construct);

  lvt::OptimizerBudget budget;
  auto* bell = app.add_subcommand("bell", "Bell-inequality threshold by optimization");
  auto* chsh = app.add_subcommand("chsh", "CHSH threshold by optimization");
  for (auto* cmd : {bell, chsh}) {
    cmd->add_option("--starts", budget.starts)->capture_default_str();
    add_common(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    common.seed = seed_flag ? *seed_flag : default_seed();
    if (*analytic) return run_analytic(common, scan);
    if (*search) return run_search(common, config, n_list, extrapolate, allow_long);
    if (*oracle) return run_oracle(common, settings_file, random_n);
    if (*construct) return run_construct(common, settings_file, random_n, construct_m);
    budget.seed = common.seed;
    budget.threads = common.threads;
    Stopwatch clock;
    if (*bell) {
      const auto result = lvt::bell_threshold_numeric(budget);
      const auto& c = result.best;
      const double residual = (c.a.vector() + c.c.vector() - c.b.vector()).norm();
      json details = {{"a", direction_json(c.a)}, {"b", direction_json(c.b)}, {"c", direction_json(c.c)},
                      {"a_plus_c_minus_b", residual}};
      return report_threshold("bell", result, common, clock, details, lvt::kBellThreshold);
    }
    const auto result = lvt::chsh_threshold_numeric(budget);
    const auto& c = result.best;
    json details = {{"a", direction_json(c.a)}, {"a2", direction_json(c.a2)}, {"b", direction_json(c.b)},
                    {"b2", direction_json(c.b2)}, {"phi", c.phi()}};
    return report_threshold("chsh", result, common, clock, details, lvt::kChshThreshold);
  } catch (const lvt::ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const lvt::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
