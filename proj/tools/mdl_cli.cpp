// Command-line front end: estimation, loss curves, bounds and the scenario
// runners. Exit status 0 on success, 1 when a verification fails, 2 on a
// configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdl/class_io.hpp"
#include "mdl/estimator.hpp"
#include "mdl/experiments.hpp"
#include "mdl/intervals.hpp"
#include "mdl/loss_engine.hpp"

namespace fs = std::filesystem;
using namespace mdl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string out;
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--out", common.out, "Output directory (or file, where noted)");
  sub->add_option("--threads", common.threads, "Worker threads; 0 uses every core")->capture_default_str();
  sub->add_option("--seed", common.seed, "Seed for random draws")->capture_default_str();
}

// Writes to stdout when no output location was given.
void emit(const fs::path& path, const std::function<void(std::ostream&)>& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write(file);
  std::cerr << "wrote " << path.string() << '\n';
}

fs::path in_dir(const std::string& dir, const std::string& name) {
  return dir.empty() ? fs::path() : fs::path(dir) / name;
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  if (path.empty()) return;
  emit(path, [&](std::ostream& os) { os << manifest.to_json().dump(2) << '\n'; });
}

std::vector<Parameter> parse_parameter_list(const std::string& text) {
  std::vector<Parameter> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(Parameter::parse(item));
  }
  if (out.empty()) throw std::invalid_argument("empty parameter list '" + text + "'");
  return out;
}

void print_warning(const std::optional<std::string>& w) {
  if (w) std::cerr << "warning: " << *w << '\n';
}

// Precision of a generated grid, when the class file names one.
std::optional<unsigned> file_precision(const std::string& class_file) {
  std::ifstream in(class_file);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("generator")) return std::nullopt;
  const auto& g = j["generator"];
  if (g.contains("precision") && g["precision"].is_number_unsigned()) return g["precision"].get<unsigned>();
  return std::nullopt;
}

int cmd_estimate(const std::string& class_file, std::uint64_t n, std::uint64_t k, const std::string& rule_text) {
  const auto cls = load_class_file(class_file);
  const Rule rule = parse_rule(rule_text);
  const ObservationSummary obs{n, k};
  if (rule == Rule::bayes) {
    std::printf("rule        bayes\nprediction  %s\n", format_number(bayes_predictive(cls, obs)).c_str());
    return kExitOk;
  }
  const std::size_t best = rule == Rule::mdl ? mdl_select(cls, obs) : ml_select(cls, obs);
  auto score = [&](std::size_t i) {
    const double s = mdl_score(cls, i, obs);
    return rule == Rule::mdl ? s : s - cls.kw(i) * std::numbers::ln2;
  };
  double runner_up = INFINITY;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (i != best) runner_up = std::min(runner_up, score(i));
  }
  std::printf("rule        %s\n", std::string(rule_name(rule)).c_str());
  std::printf("selected    %s (%s)\n", cls[best].param.to_string().c_str(), format_number(cls.value(best)).c_str());
  std::printf("kw          %s\n", format_number(cls.kw(best)).c_str());
  std::printf("score       %s\n", format_number(score(best)).c_str());
  std::printf("margin      %s\n", format_number(runner_up - score(best)).c_str());
  return kExitOk;
}

int cmd_loss_curve(const std::string& class_file, std::uint64_t horizon, const std::string& rule_text,
                   std::uint64_t mc_paths, const Common& common) {
  const auto cls = load_class_file(class_file);
  const std::size_t idx = cls.require_true_index();
  const Rule rule = parse_rule(rule_text);
  EngineOptions options;
  options.threads = common.threads;

  auto manifest = make_manifest(mc_paths ? "loss-curve-mc" : "loss-curve", cls, horizon, options);
  manifest.rules = {std::string(rule_name(rule))};
  if (const auto p = file_precision(class_file)) {
    manifest.truncation_precision = *p;
    if (auto w = consistency_warning(*p, horizon)) manifest.warnings.push_back(*w);
  }
  for (const auto& w : manifest.warnings) print_warning(w);

  fs::path csv;
  if (!common.out.empty()) {
    csv = fs::path(common.out);
    if (csv.extension() != ".csv") csv /= "loss_curve.csv";
  }

  std::vector<double> per_n;
  if (mc_paths > 0) {
    if (rule != Rule::mdl) throw std::invalid_argument("--mc simulates the mdl rule only");
    const auto mc = monte_carlo_loss(cls, idx, horizon, mc_paths, common.seed, common.threads, true);
    manifest.seed = common.seed;
    manifest.paths = mc_paths;
    per_n = mc.per_n;
    std::fprintf(stderr, "monte carlo: %s +- %s (%llu paths)\n", format_number(mc.estimate).c_str(),
                 format_number(mc.std_error).c_str(), static_cast<unsigned long long>(mc.paths));
  } else {
    const auto curve = cumulative_loss(cls, idx, horizon, rule, options);
    per_n = curve.per_n;
    std::fprintf(stderr, "cumulative loss %s; tail estimate %s (%s)\n", format_number(curve.total()).c_str(),
                 format_number(curve.tail_estimate).c_str(), curve.tail_method.c_str());
  }
  emit(csv, [&](std::ostream& os) { write_loss_curve_csv(os, per_n); });
  if (!csv.empty()) write_manifest(fs::path(csv.string() + ".manifest.json"), manifest);
  return kExitOk;
}

int cmd_bounds(const std::string& class_file, double a, double b, unsigned k_max, bool conjectured) {
  const auto cls = load_class_file(class_file);
  const std::size_t idx = cls.require_true_index();
  const double kw0 = cls.kw(idx);
  const auto mb = main_bound(cls, idx, default_interval_steps(cls));
  std::printf("kw0                    %s\n", format_number(kw0).c_str());
  std::printf("exponential scale      %s  (2^Kw0, up to a constant)\n", format_number(previous_bound(kw0)).c_str());
  std::printf("interval bound         %s  (up to a constant%s)\n", format_number(mb.value).c_str(),
              mb.truncated ? ", series truncated" : "");
  if (conjectured) {
    std::printf("conjectured sharper    %s  (unproven)\n", format_number(mb.conjectured).c_str());
  }
  std::printf("finite-class bound     %s  (up to a constant)\n", format_number(finite_class_bound(cls, idx)).c_str());
  std::printf("bayes mixture bound    %s  (ln 1/w0, exact)\n", format_number(kw0 * std::numbers::ln2).c_str());
  const unsigned limit = k_max ? k_max : cls.resolution_bits();
  const auto uc = check_uniform_condition(cls, idx, a, b, limit);
  std::printf("uniform condition      a=%s b=%s k<=%u: %s", format_number(a).c_str(), format_number(b).c_str(),
              uc.k_max, uc.holds ? "holds" : "fails");
  if (uc.first_violation) std::printf(" (first violation at k=%u)", *uc.first_violation);
  std::printf("\n");
  return kExitOk;
}

std::string join_intervals(const std::vector<DyadicInterval>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : " u ") + p.to_string();
  return s.empty() ? "-" : s;
}

int cmd_intervals(const std::string& theta_text, unsigned steps, const std::string& class_file, bool conjectured) {
  const Parameter theta0 = Parameter::parse(theta_text);
  if (class_file.empty()) {
    std::printf("k  kind  J_k  I_k\n");
    for (const auto& s : build_intervals(theta0, steps)) {
      std::printf("%u  %c  %s  %s\n", s.k, static_cast<char>(s.kind), s.J.to_string().c_str(),
                  join_intervals(s.I).c_str());
    }
    return kExitOk;
  }
  const auto cls = load_class_file(class_file).with_truth(theta0);
  const std::size_t idx = cls.require_true_index();
  const auto profile = delta_profile(cls, idx, steps);
  std::printf("k  kind  J_k  I_k  theta_I  theta_J  delta\n");
  for (std::size_t i = 0; i < profile.steps.size(); ++i) {
    const auto& s = profile.steps[i];
    const auto& e = profile.entries[i];
    std::printf("%u  %c  %s  %s  %s  %s  %s\n", s.k, static_cast<char>(s.kind), s.J.to_string().c_str(),
                join_intervals(s.I).c_str(), e.theta_I ? cls[*e.theta_I].param.to_string().c_str() : "-",
                cls[e.theta_J].param.to_string().c_str(), format_number(e.delta).c_str());
  }
  const auto mb = main_bound(cls, idx, steps);
  std::printf("interval bound %s (up to a constant%s)\n", format_number(mb.value).c_str(),
              mb.truncated ? ", series truncated" : "");
  if (conjectured) std::printf("conjectured sharper %s (unproven)\n", format_number(mb.conjectured).c_str());
  return kExitOk;
}

int cmd_counterexample(const std::vector<unsigned>& n_list, std::uint64_t horizon, const Common& common) {
  EngineOptions options;
  options.threads = common.threads;
  const auto rows = run_counterexample(n_list, horizon, options);
  emit(in_dir(common.out, "counterexample.csv"), [&](std::ostream& os) { write_counterexample_csv(os, rows); });
  RunManifest m;
  m.scenario = "counterexample";
  m.horizon = horizon;
  m.rules = {"mdl"};
  m.enumeration_threshold = options.enumeration_threshold;
  for (unsigned n : n_list) {
    const auto cls = counterexample_class(n);
    m.class_hash += (m.class_hash.empty() ? "" : ",") + ("N=" + std::to_string(n) + ":" + cls.hash());
    m.truncation_precision = std::max(m.truncation_precision, cls.resolution_bits());
  }
  for (const auto& r : rows) {
    if (r.truncated) m.warnings.push_back("N=" + std::to_string(r.n_bits) + " truncated at this horizon");
  }
  write_manifest(in_dir(common.out, "counterexample.manifest.json"), m);
  return kExitOk;
}

int cmd_half_kw(const std::string& theta_list, unsigned precision, std::uint64_t horizon, const Common& common) {
  EngineOptions options;
  options.threads = common.threads;
  const auto result = run_half_kw_check(parse_parameter_list(theta_list), precision, horizon, options);
  print_warning(result.warning);
  emit(in_dir(common.out, "half_kw.csv"), [&](std::ostream& os) { write_half_kw_csv(os, result); });
  auto m = make_manifest("half-kw", dyadic_grid_class(precision), horizon, options);
  m.rules = {"mdl"};
  m.truncation_precision = precision;
  if (result.warning) m.warnings.push_back(*result.warning);
  write_manifest(in_dir(common.out, "half_kw.manifest.json"), m);
  std::fprintf(stderr, "max loss/Kw %s; tail: %s\n", format_number(result.max_ratio).c_str(),
               result.tail_method.c_str());
  return result.all_pass ? kExitOk : kExitVerification;
}

int cmd_race(const std::string& class_file, std::uint64_t horizon, const Common& common) {
  const auto cls = load_class_file(class_file);
  EngineOptions options;
  options.threads = common.threads;
  const auto result = run_bound_race(cls, horizon, options);
  emit(in_dir(common.out, "race.csv"), [&](std::ostream& os) { write_race_csv(os, result); });
  auto m = make_manifest("race", cls, horizon, options);
  m.rules = {"mdl", "ml", "bayes"};
  if (const auto p = file_precision(class_file)) {
    m.truncation_precision = *p;
    if (auto w = consistency_warning(*p, horizon)) m.warnings.push_back(*w);
  }
  for (const auto& w : m.warnings) print_warning(w);
  write_manifest(in_dir(common.out, "race.manifest.json"), m);
  return kExitOk;
}

int cmd_verify(const VerificationOptions& options, const Common& common) {
  const auto result = run_verification_suite(options);
  emit(in_dir(common.out, "verification.json"),
       [&](std::ostream& os) { os << result.report.dump(2) << '\n'; });
  for (const auto& r : result.reports) {
    std::fprintf(stderr, "%-22s %s  max_violation=%s\n", r.id.c_str(), r.satisfied() ? "pass" : "FAIL",
                 format_number(r.max_violation).c_str());
  }
  std::fprintf(stderr, "mutation self-test %s\n", result.self_test_passed ? "detected" : "NOT detected");
  return result.all_satisfied ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MDL estimation and loss experiments for Bernoulli model classes"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  Common common;

  std::string class_file;
  std::string rule = "mdl";
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  std::uint64_t horizon = 10000;
  std::uint64_t mc_paths = 0;

  auto* estimate = app.add_subcommand("estimate", "Select a parameter for n draws with k ones");
  estimate->add_option("--class", class_file, "Class definition (JSON)")->required()->check(CLI::ExistingFile);
  estimate->add_option("--n", n)->required();
  estimate->add_option("--k", k)->required();
  estimate->add_option("--rule", rule)->check(CLI::IsMember({"mdl", "ml", "bayes"}))->capture_default_str();
  add_common(estimate, common);

  auto* curve = app.add_subcommand("loss-curve", "Expected square loss per n and cumulative");
  curve->add_option("--class", class_file)->required()->check(CLI::ExistingFile);
  curve->add_option("--horizon", horizon)->capture_default_str();
  curve->add_option("--rule", rule)->check(CLI::IsMember({"mdl", "ml", "bayes"}))->capture_default_str();
  curve->add_option("--mc", mc_paths, "Estimate by simulating this many paths instead");
  add_common(curve, common);

  double a = 1.0;
  double b = 0.0;
  unsigned k_max = 0;
  bool conjectured = false;
  auto* bounds = app.add_subcommand("bounds", "Bound values for the class's true parameter");
  bounds->add_option("--class", class_file)->required()->check(CLI::ExistingFile);
  bounds->add_option("--a", a, "Uniform-condition slope constant (>= 1)")->capture_default_str();
  bounds->add_option("--b", b, "Uniform-condition offset (>= 0)")->capture_default_str();
  bounds->add_option("--k-max", k_max, "Largest k checked; default is the class resolution");
  bounds->add_flag("--conjectured", conjectured, "Also print the unproven sharper bound");
  add_common(bounds, common);

  std::string theta0 = "3/16";
  unsigned steps = 12;
  auto* intervals = app.add_subcommand("intervals", "Nested interval construction around theta0");
  intervals->add_option("--theta0", theta0)->capture_default_str();
  intervals->add_option("--steps", steps)->capture_default_str();
  intervals->add_option("--class", class_file)->check(CLI::ExistingFile);
  intervals->add_flag("--conjectured", conjectured, "Also print the unproven sharper bound");
  add_common(intervals, common);

  std::vector<unsigned> n_list{1, 2, 3};
  auto* counter = app.add_subcommand("counterexample", "Fair-coin class with 2^N - 1 competitors");
  counter->add_option("--N-list", n_list)->delimiter(',')->capture_default_str();
  counter->add_option("--horizon", horizon)->capture_default_str();
  add_common(counter, common);

  unsigned precision = 12;
  std::string theta_list = "1/2,1/4,3/16,5/8";
  auto* half = app.add_subcommand("half-kw", "MDL loss on the dyadic grid against Kw/2");
  half->add_option("--precision", precision)->capture_default_str();
  half->add_option("--horizon", horizon)->capture_default_str();
  half->add_option("--theta0-list", theta_list)->capture_default_str();
  add_common(half, common);

  auto* race = app.add_subcommand("race", "MDL, ML and Bayes losses against every bound");
  race->add_option("--class", class_file)->required()->check(CLI::ExistingFile);
  race->add_option("--horizon", horizon)->capture_default_str();
  add_common(race, common);

  VerificationOptions vopts;
  auto* verify = app.add_subcommand("verify", "Run every inequality and interval check");
  verify->add_option("--grid-density", vopts.grid_density)->capture_default_str();
  verify->add_option("--sandwich-n-max", vopts.sandwich_n_max)->capture_default_str();
  verify->add_option("--z-points", vopts.z_points)->capture_default_str();
  verify->add_option("--random-theta0", vopts.random_theta0)->capture_default_str();
  verify->add_option("--k-max", vopts.k_max)->capture_default_str();
  add_common(verify, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*estimate) return cmd_estimate(class_file, n, k, rule);
    if (*curve) return cmd_loss_curve(class_file, horizon, rule, mc_paths, common);
    if (*bounds) return cmd_bounds(class_file, a, b, k_max, conjectured);
    if (*intervals) return cmd_intervals(theta0, steps, class_file, conjectured);
    if (*counter) return cmd_counterexample(n_list, horizon, common);
    if (*half) return cmd_half_kw(theta_list, precision, horizon, common);
    if (*race) return cmd_race(class_file, horizon, common);
    if (*verify) {
      vopts.seed = common.seed;
      vopts.threads = common.threads;
      return cmd_verify(vopts, common);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
