#include "invlab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "invlab/errors.hpp"
#include "invlab/experiments.hpp"
#include "invlab/filters.hpp"
#include "invlab/properties.hpp"
#include "invlab/rates.hpp"
#include "invlab/spectral_model.hpp"

namespace invlab {

namespace {

using nlohmann::json;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

StudyConfig parse_config(const json& j, const std::string& source) {
  try {
    StudyConfig c = j.get<StudyConfig>();
    c.validate();
    return c;
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

struct RunArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

int do_run(const RunArgs& a, std::ostream& out) {
  json raw = load_config(a.config);
  StudyConfig config = parse_config(raw, a.config);
  json normalized = config;
  if (a.seed) normalized["seed"] = *a.seed;
  for (const auto& s : a.sets) apply_override(normalized, s);
  config = parse_config(normalized, a.config);

  if (!std::filesystem::is_directory(a.out)) throw IoError("output directory '" + a.out + "' does not exist");
  const StudyReport report = run_study(config);
  const std::string kind = to_string(report.kind);
  const std::filesystem::path base = std::filesystem::path(a.out) / kind;
  write_report(report, ReportFormat::json, base.string() + ".json");
  write_report(report, ReportFormat::csv, base.string() + ".csv");

  for (const auto& v : report.verdicts) {
    out << "  " << (v.pass ? "ok   " : "FAIL ") << v.criterion << ": " << v.value << ' ' << v.relation << ' '
        << v.threshold << '\n';
  }
  out << "STUDY " << kind << ' ' << (report.passed() ? "pass" : "fail") << '\n';
  return report.passed() ? kExitPass : kExitFail;
}

int do_verify(std::uint64_t seed, const std::vector<std::string>& only, std::ostream& out) {
  PropertyOptions opts;
  opts.seed = seed;
  opts.only = only;
  const auto results = run_property_suite(opts);
  bool all = !results.empty();
  for (const auto& r : results) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.module << '/' << r.name << "  value=" << r.value
        << " threshold=" << r.threshold << "  " << std::fixed << std::setprecision(2) << r.seconds << "s"
        << std::defaultfloat << std::setprecision(6);
    if (!r.detail.empty()) out << "  " << r.detail;
    out << '\n';
  }
  out << "VERIFY " << (all ? "pass" : "fail") << " (" << results.size() << " properties)\n";
  return all ? kExitPass : kExitFail;
}

struct RatesArgs {
  double r = 1.0;
  double b = 2.0;
  std::string variant = "general";
  std::optional<double> gamma;
};

int do_rates(const RatesArgs& a, std::ostream& out) {
  if (!(a.r > 0.0)) throw ParameterError("--r must be > 0");
  if (!(a.b > 1.0)) throw ParameterError("--b must be > 1");
  const TauVariant variant = tau_variant_from_string(a.variant);
  RateExponents up;
  up.alpha = statistical_rate_exponent(a.r, a.b);
  up.p = statistical_lambda_exponent(a.r, a.b);
  up.gamma = a.gamma.value_or(a.r + 0.5);
  up.r = a.r;
  up.b = a.b;
  RateExponents low;
  low.alpha = classical_rate_exponent(a.r);
  low.p_star = classical_lambda_exponent(a.r);
  low.gamma = up.gamma;
  low.r = a.r;
  low.b = a.b;
  const json doc{{"tau", loss_factor_tau(a.r, a.b, variant)},
                 {"variant", a.variant},
                 {"upper", upper_report(up)},
                 {"lower", lower_report(low)}};
  out << doc.dump(2) << '\n';
  return kExitPass;
}

struct InfoArgs {
  std::string config;
  int J = 100;
  double b = 2.0;
  double d = 1.0;
  int points = 13;
};

int do_info(const InfoArgs& a, std::ostream& out) {
  ProblemDescriptor desc;
  if (!a.config.empty()) {
    desc = parse_config(load_config(a.config), a.config).problem;
  } else {
    desc.J = a.J;
    desc.b = a.b;
    desc.d = a.d;
  }
  if (a.points < 2) throw ParameterError("--points must be >= 2");
  const SpectralProblem problem = desc.problem();
  json doc{{"J", problem.size()},
           {"b", problem.decay_b()},
           {"d", problem.decay_d()},
           {"basis", SpectralProblem::basis()},
           {"mu_max", problem.mu_max()},
           {"mu_min", problem.mu_min()},
           {"kernel_bound_squared", problem.kernel_bound_squared()},
           {"mu", std::vector<double>(problem.mu().data(), problem.mu().data() + problem.size())}};
  const double lo = std::log(10.0 * problem.mu_min());
  const double hi = std::log(problem.mu_max());
  json grid = json::array();
  for (int k = 0; k < a.points; ++k) {
    const double lambda = std::exp(lo + (hi - lo) * k / (a.points - 1));
    json row{{"lambda", lambda}};
    for (const FilterKind kind : {FilterKind::tikhonov, FilterKind::cutoff, FilterKind::landweber}) {
      if (kind == FilterKind::landweber && problem.mu_max() > 1.0) continue;
      const FilterSpec f = make_filter(kind, lambda);
      row[to_string(kind)] = {{"hs_norm", hs_norm(problem, f)}, {"operator_norm", operator_norm(problem, f)}};
    }
    grid.push_back(row);
  }
  doc["lambda_grid"] = grid;
  out << doc.dump(2) << '\n';
  return kExitPass;
}

}  // namespace

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' must have the form KEY=VALUE");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ValidationError("override key '" + key + "' does not name an existing config key");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = value;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"invlab: regularized inverse problems in reproducing kernel Hilbert spaces"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the study in a config file and write reports");
  run->add_option("--config", run_args.config, "Study config (JSON)")->required();
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--seed", run_args.seed, "Seed override");
  run->add_option("--set", run_args.sets, "Dotted-path override KEY=VALUE (repeatable)");

  std::uint64_t verify_seed = 1;
  std::vector<std::string> verify_only;
  auto* verify = app.add_subcommand("verify", "Run the built-in property suite");
  verify->add_option("--seed", verify_seed, "Seed for randomized checks");
  verify->add_option("--only", verify_only, "Restrict to modules or property names (repeatable)");

  RatesArgs rates_args;
  auto* rates = app.add_subcommand("rates", "Rate conversion calculator");
  rates->add_option("--r", rates_args.r, "Source-condition exponent r");
  rates->add_option("--b", rates_args.b, "Eigenvalue decay exponent b");
  rates->add_option("--variant", rates_args.variant, "Loss factor variant")
      ->check(CLI::IsMember({"general", "tikhonov"}));
  rates->add_option("--gamma", rates_args.gamma, "gamma in eps(lambda) ~ lambda^gamma (default r + 1/2)");

  InfoArgs info_args;
  auto* info = app.add_subcommand("info", "Problem diagnostics");
  info->add_option("--config", info_args.config, "Take the problem from a study config");
  info->add_option("--J", info_args.J, "Number of modes");
  info->add_option("--b", info_args.b, "Eigenvalue decay exponent");
  info->add_option("--d", info_args.d, "Eigenvalue scale");
  info->add_option("--points", info_args.points, "Number of lambda grid points");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "invlab: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*run) return do_run(run_args, out);
    if (*verify) return do_verify(verify_seed, verify_only, out);
    if (*rates) return do_rates(rates_args, out);
    if (*info) return do_info(info_args, out);
  } catch (const ConvergenceError& e) {
    err << "invlab: " << e.what() << '\n';
    return kExitFail;
  } catch (const Error& e) {
    err << "invlab: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "invlab: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, out, err);
}

}  // namespace invlab
