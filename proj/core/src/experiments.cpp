#include "invlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "invlab/erm.hpp"
#include "invlab/errors.hpp"
#include "invlab/estimators.hpp"
#include "invlab/parallel.hpp"
#include "invlab/rkhs.hpp"
#include "invlab/rng.hpp"

namespace invlab {

namespace {

using nlohmann::json;

constexpr const char* kKindNames[] = {"stat-rate", "det-rate", "lemma-check", "gamma-study", "equivalence-check"};

std::uint64_t replicate_id(std::size_t point, std::size_t replicate) {
  return (static_cast<std::uint64_t>(point) << 32) | static_cast<std::uint64_t>(replicate);
}

double squared_distance(const Coeffs& a, const Coeffs& b) { return (a - b).squaredNorm(); }

double relative(double num, double den) { return den > 0.0 ? num / den : num; }

// Non-finite doubles are not representable in JSON; they travel as strings.
json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

json map_to_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = number_to_json(v);
  return j;
}

std::map<std::string, double> map_from_json(const json& j) {
  std::map<std::string, double> m;
  for (const auto& [k, v] : j.items()) m[k] = number_from_json(v);
  return m;
}

template <typename T>
T field(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("invalid value at '" + path + "': " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& prefix) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* name) { return k == name; })) {
      throw ValidationError("unknown config key '" + prefix + k + "'");
    }
  }
}

FilterSpec study_filter(const StudyConfig& c, double lambda) { return make_filter(c.filter, lambda); }

SpectralProblem study_problem(const StudyConfig& c) {
  SpectralProblem problem = c.problem.problem();
  if (c.filter == FilterKind::landweber && problem.mu_max() > 1.0) problem = rescaled_for_unit_norm(problem);
  return problem;
}

Estimate run_estimator(const StudyConfig& c, const SpectralProblem& problem, const FilterSpec& filter,
                       const SampleSet& samples) {
  return c.estimator == EstimatorChoice::paper ? estimator_paper(problem, filter, samples)
                                               : estimator_learn(problem, filter, samples);
}

// Rethrows a replicate failure with its location; the message keeps the original text.
template <typename F>
void with_context(const std::string& where, F&& body) {
  try {
    body();
  } catch (const ConvergenceError&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(where + ": " + e.what());
  }
}

void monte_carlo(std::size_t replicates, const std::string& where,
                 const std::function<void(std::size_t)>& body) {
  parallel_for(replicates, [&](std::size_t rep) {
    with_context(where + ", replicate " + std::to_string(rep), [&] { body(rep); });
  });
}

std::vector<double> record_column(const StudyReport& r, double PointRecord::*member) {
  std::vector<double> out;
  out.reserve(r.records.size());
  for (const auto& rec : r.records) out.push_back(rec.*member);
  return out;
}

double stat(const StudyReport& r, const std::string& key) {
  const auto it = r.stats.find(key);
  if (it == r.stats.end()) throw ValidationError("report is missing statistic '" + key + "'");
  return it->second;
}

double theory(const StudyReport& r, const std::string& key) {
  const auto it = r.theory.find(key);
  if (it == r.theory.end()) throw ValidationError("report is missing theory value '" + key + "'");
  return it->second;
}

Verdict at_most(std::string name, double value, double threshold) {
  return {std::move(name), value <= threshold, value, threshold, "<="};
}

Verdict at_least(std::string name, double value, double threshold) {
  return {std::move(name), value >= threshold, value, threshold, ">="};
}

Verdict slope_verdict(const StudyReport& r, double target, double tol) {
  const double slope = r.fit ? r.fit->slope : std::numeric_limits<double>::quiet_NaN();
  return {"slope", std::abs(slope - target) <= tol, slope, tol, "|.-" + std::to_string(target) + "|<="};
}

// ---------------------------------------------------------------------------

void run_stat_rate(const StudyConfig& c, StudyReport& report) {
  const SpectralProblem problem = study_problem(c);
  const GroundTruth truth = c.problem.truth(problem);
  const NoiseModel noise = NoiseModel::gaussian(c.sigma);
  const double p = c.schedule.exponent.value_or(statistical_lambda_exponent(c.problem.r, c.problem.b));
  const double alpha = statistical_rate_exponent(c.problem.r, c.problem.b);

  std::vector<std::pair<double, double>> fit_points;
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    const int n = c.n_grid[k];
    const double lambda = lambda_schedule(ScheduleKind::by_n, c.schedule.c, p, n);
    const FilterSpec filter = study_filter(c, lambda);
    std::vector<double> errs(c.replicates);
    monte_carlo(errs.size(), "stat-rate n=" + std::to_string(n), [&](std::size_t rep) {
      const auto id = replicate_id(k, rep);
      const Design design = sample_design(c.design, n, c.seed, id);
      const SampleSet samples = sample_outputs(problem, truth, design, noise, c.seed, id);
      errs[rep] = squared_distance(run_estimator(c, problem, filter, samples).coeffs, truth.coeffs);
    });
    const MonteCarloSummary s = summarize(errs);
    report.records.push_back({static_cast<double>(n), filter.lambda, s.mean, s.se, s.median, {}});
    fit_points.emplace_back(1.0 / n, s.mean);
  }
  report.fit = fit_rate(fit_points);
  report.theory = {{"alpha", alpha}, {"lambda_exponent", p}};

  RateExponents exp;
  exp.alpha = alpha;
  exp.p = p;
  exp.gamma = c.nominal_gamma();
  exp.r = c.problem.r;
  exp.b = c.problem.b;
  RateReport rate = upper_report(exp);
  rate.fitted_slope = report.fit->slope;
  rate.stderr_slope = report.fit->stderr_slope;
  report.rate = rate;
}

void run_det_rate(const StudyConfig& c, StudyReport& report) {
  const SpectralProblem problem = study_problem(c);
  const GroundTruth truth = c.problem.truth(problem);
  const DataFunction y = forward_data(problem, truth.coeffs);

  double lambda_exp = 0.0;
  double target = 0.0;
  if (c.theory == "classical") {
    lambda_exp = classical_lambda_exponent(c.problem.r);
    target = classical_rate_exponent(c.problem.r);
    report.theory = {{"exponent", target}, {"lambda_exponent", lambda_exp}};
  } else {
    RateExponents exp;
    exp.alpha = statistical_rate_exponent(c.problem.r, c.problem.b);
    exp.p = statistical_lambda_exponent(c.problem.r, c.problem.b);
    exp.gamma = c.nominal_gamma();
    exp.r = c.problem.r;
    exp.b = c.problem.b;
    const ConvertedRate conv = convert_upper(exp);
    lambda_exp = conv.lambda_exponent;
    target = conv.error_exponent;
    report.theory = {{"exponent", target}, {"lambda_exponent", lambda_exp}, {"gamma", exp.gamma}};
    report.rate = upper_report(exp);
  }
  if (c.schedule.exponent) {
    lambda_exp = *c.schedule.exponent;
    report.theory["lambda_exponent"] = lambda_exp;
  }

  const std::size_t reps =
      c.perturbation == PerturbationMode::random_unit ? static_cast<std::size_t>(c.replicates) : 1;
  std::vector<std::pair<double, double>> fit_points;
  for (std::size_t k = 0; k < c.delta_grid.size(); ++k) {
    const double delta = c.delta_grid[k];
    const double lambda = lambda_schedule(ScheduleKind::by_delta, c.schedule.c, lambda_exp, delta);
    const FilterSpec filter = study_filter(c, lambda);
    PerturbationSpec spec;
    switch (c.perturbation) {
      case PerturbationMode::random_unit: spec = PerturbationSpec::random_unit(delta); break;
      case PerturbationMode::fixed_mode: spec = PerturbationSpec::fixed_mode(delta, c.perturbation_mode_index); break;
      case PerturbationMode::filter_adversarial: spec = PerturbationSpec::filter_adversarial(delta, filter); break;
    }
    std::vector<double> errs(reps);
    monte_carlo(reps, "det-rate delta=" + std::to_string(delta), [&](std::size_t rep) {
      const DataFunction yd = perturb_data(problem, y, spec, c.seed, replicate_id(k, rep));
      errs[rep] = squared_distance(solve_continuous(problem, filter, yd).coeffs, truth.coeffs);
    });
    const MonteCarloSummary s = summarize(errs);
    PointRecord rec{delta, filter.lambda, s.mean, s.se, s.median, {}};
    if (c.perturbation == PerturbationMode::filter_adversarial) {
      rec.extra["mode"] = adversarial_mode(problem, filter);
    }
    report.records.push_back(rec);
    fit_points.emplace_back(delta, s.mean);
  }
  report.fit = fit_rate(fit_points);
  if (report.rate) {
    report.rate->fitted_slope = report.fit->slope;
    report.rate->stderr_slope = report.fit->stderr_slope;
  }
}

void run_lemma_check(const StudyConfig& c, StudyReport& report) {
  const SpectralProblem problem = study_problem(c);
  const GroundTruth truth = c.problem.truth(problem);
  const NoiseModel noise = NoiseModel::gaussian(c.sigma);
  const FilterSpec filter = study_filter(c, c.lambda);
  const int J = problem.size();
  const auto R = static_cast<std::size_t>(c.replicates);

  Eigen::MatrixXd estimates(J, R);
  std::vector<double> errs(R);
  monte_carlo(R, "lemma-check", [&](std::size_t rep) {
    const Design design = sample_design(c.design, c.n, c.seed, rep);
    const SampleSet samples = sample_outputs(problem, truth, design, noise, c.seed, rep);
    const Coeffs f = run_estimator(c, problem, filter, samples).coeffs;
    estimates.col(static_cast<Eigen::Index>(rep)) = f;
    errs[rep] = squared_distance(f, truth.coeffs);
  });

  const MonteCarloSummary mse = summarize(errs);
  const DataFunction y = forward_data(problem, truth.coeffs);
  const Coeffs f_lambda = solve_continuous(problem, filter, y).coeffs;
  const double hs = hs_norm(problem, filter);
  const double bias_sq = squared_distance(f_lambda, truth.coeffs);
  const double variance_bound = c.sigma * c.sigma / c.n * hs * hs;

  // Componentwise mean vs f^lambda, in standard errors.
  const Coeffs mean = estimates.rowwise().mean();
  const double rd = static_cast<double>(R);
  Coeffs se(J);
  double max_z = 0.0;
  for (int j = 0; j < J; ++j) {
    const double var = R > 1 ? (estimates.row(j).array() - mean[j]).square().sum() / (rd - 1.0) : 0.0;
    se[j] = std::sqrt(var / rd);
    const double diff = std::abs(mean[j] - f_lambda[j]);
    double z = 0.0;
    if (se[j] > 0.0) {
      z = diff / se[j];
    } else if (diff > 1e-12 * std::max(1.0, std::abs(f_lambda[j]))) {
      z = std::numeric_limits<double>::infinity();
    }
    max_z = std::max(max_z, z);
  }

  // MSE against bias^2 (of f^lambda) plus the Monte-Carlo variance around the sample mean.
  double mc_variance = 0.0;
  for (std::size_t rep = 0; rep < R; ++rep) {
    mc_variance += squared_distance(estimates.col(static_cast<Eigen::Index>(rep)), mean);
  }
  mc_variance /= rd;
  const Coeffs b = f_lambda - truth.coeffs;
  const double gap = mse.mean - (bias_sq + mc_variance);
  const double gap_se = 2.0 * std::sqrt((b.array().square() * se.array().square()).sum()) + se.squaredNorm();

  report.stats = {{"n", static_cast<double>(c.n)},
                  {"lambda", filter.lambda},
                  {"mc_mean", mse.mean},
                  {"mc_se", mse.se},
                  {"bias_sq", bias_sq},
                  {"variance_bound", variance_bound},
                  {"rhs", variance_bound + bias_sq},
                  {"max_component_z", max_z},
                  {"mc_variance", mc_variance},
                  {"decomposition_gap", gap},
                  {"decomposition_se", gap_se}};

  // Deterministic side at the matched noise level delta = Delta(n, lambda).
  double delta = 0.0;
  if (c.sigma > 0.0) delta = delta_of(c.n, RateLink::from_problem(problem, filter, truth, c.sigma));
  report.stats["delta"] = delta;
  const PerturbationSpec specs[] = {PerturbationSpec::random_unit(delta),
                                    PerturbationSpec::fixed_mode(delta, std::min(c.perturbation_mode_index, J)),
                                    PerturbationSpec::filter_adversarial(delta, filter)};
  for (const auto& spec : specs) {
    const DataFunction yd = perturb_data(problem, y, spec, c.seed);
    report.stats["key_err_" + to_string(spec.mode)] =
        squared_distance(solve_continuous(problem, filter, yd).coeffs, truth.coeffs);
  }

  report.records.push_back({static_cast<double>(c.n), filter.lambda, mse.mean, mse.se, mse.median, {}});
  report.theory = {{"rhs", variance_bound + bias_sq}, {"bias_sq", bias_sq}, {"hs_norm", hs}};
}

void run_gamma_study(const StudyConfig& c, StudyReport& report) {
  const SpectralProblem problem = c.problem.problem();
  const GroundTruth truth = c.problem.truth(problem);
  const DataFunction y = forward_data(problem, truth.coeffs);
  const Coeffs g_continuous = continuous_kernel_tikhonov(problem, y, c.lambda);
  const Coeffs f_continuous = correspondence_pullback(problem, g_continuous);

  double max_gap = 0.0;
  for (const int n : c.n_grid) {
    with_context("gamma-study n=" + std::to_string(n), [&] {
      const Design design = sample_design(c.design, n, c.seed);
      const SampleSet samples = sample_outputs(problem, truth, design, NoiseModel::none(), c.seed);
      const KernelSolution ks = kernel_tikhonov(problem, samples, c.lambda);
      const double hk = rkhs_norm(problem, ks.g_coeffs - g_continuous);
      const double h1 = (correspondence_pullback(problem, ks.g_coeffs) - f_continuous).norm();
      max_gap = std::max(max_gap, std::abs(hk - h1) / std::max(1.0, hk));
      report.records.push_back({static_cast<double>(n), c.lambda, hk, 0.0, hk, {{"h1_error", h1}}});
    });
  }
  report.stats = {{"max_norm_gap", max_gap}};
}

void run_equivalence_check(const StudyConfig& c, StudyReport& report) {
  const SpectralProblem problem = c.problem.problem();
  const GroundTruth truth = c.problem.truth(problem);
  const NoiseModel noise = NoiseModel::gaussian(c.sigma);
  const auto R = static_cast<std::size_t>(c.replicates);
  std::vector<EquivalenceDeviations> devs(R);
  monte_carlo(R, "equivalence-check", [&](std::size_t rep) {
    const Design design = sample_design(c.design, c.n, c.seed, rep);
    const SampleSet samples = sample_outputs(problem, truth, design, noise, c.seed, rep);
    const CounterRng rng(c.seed, Stream::source, rep + 1);
    Coeffs probe(problem.size());
    for (int j = 0; j < problem.size(); ++j) probe[j] = rng.normal(static_cast<std::uint64_t>(j));
    devs[rep] = equivalence_deviations(problem, samples, c.lambda, probe);
  });
  EquivalenceDeviations worst;
  for (const auto& d : devs) {
    worst.isometry = std::max(worst.isometry, d.isometry);
    worst.pullback = std::max(worst.pullback, d.pullback);
    worst.methods = std::max(worst.methods, d.methods);
    worst.norm_equality = std::max(worst.norm_equality, d.norm_equality);
    worst.representer = std::max(worst.representer, d.representer);
  }
  report.stats = {{"isometry", worst.isometry},
                  {"pullback", worst.pullback},
                  {"methods", worst.methods},
                  {"norm_equality", worst.norm_equality},
                  {"representer", worst.representer}};
}

}  // namespace

std::string to_string(StudyKind kind) { return kKindNames[static_cast<int>(kind)]; }

StudyKind study_kind_from_string(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kKindNames[i]) return static_cast<StudyKind>(i);
  }
  throw ValidationError("unknown study kind '" + name + "'");
}

void StudyConfig::validate() const {
  std::vector<std::string> bad;
  auto check_grid = [&](const auto& grid, const char* name, bool required) {
    if (grid.empty()) {
      if (required) bad.push_back(std::string(name) + ": must not be empty");
      return;
    }
    if (required && grid.size() < 2) bad.push_back(std::string(name) + ": needs at least two points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] > 0)) bad.push_back(std::string(name) + ": entries must be positive");
      if (i > 0 && !(grid[i] > grid[i - 1])) bad.push_back(std::string(name) + ": must be strictly increasing");
    }
  };
  check_grid(n_grid, "n_grid", kind == StudyKind::stat_rate || kind == StudyKind::gamma_study);
  check_grid(delta_grid, "delta_grid", kind == StudyKind::det_rate);

  if (problem.J < 1) bad.push_back("problem.J: must be >= 1");
  if (!(problem.b > 1.0)) bad.push_back("problem.b: must be > 1");
  if (!(problem.d > 0.0)) bad.push_back("problem.d: must be > 0");
  if (!(problem.r > 0.0)) bad.push_back("problem.r: must be > 0");
  if (!(problem.R > 0.0)) bad.push_back("problem.R: must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) bad.push_back("sigma: must be finite and >= 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) bad.push_back("lambda: must be finite and > 0");
  if (n < 1) bad.push_back("n: must be >= 1");
  if (replicates < 1) bad.push_back("replicates: must be >= 1");
  if (!(schedule.c > 0.0)) bad.push_back("schedule.c: must be > 0");
  if (schedule.exponent && !(*schedule.exponent > 0.0)) bad.push_back("schedule.exponent: must be > 0");
  if (theory != "classical" && theory != "converted") bad.push_back("theory: must be classical or converted");
  if (gamma && !(*gamma > 0.0)) bad.push_back("gamma: must be > 0");
  if (perturbation_mode_index < 1 || perturbation_mode_index > problem.J) {
    bad.push_back("perturbation.index: must lie in [1, J]");
  }
  const std::pair<const char*, double> tols[] = {
      {"tolerances.slope", tolerances.slope},
      {"tolerances.rank_correlation", tolerances.rank_correlation},
      {"tolerances.final_ratio", tolerances.final_ratio},
      {"tolerances.se_multiplier", tolerances.se_multiplier},
      {"tolerances.equality", tolerances.equality},
      {"tolerances.representer", tolerances.representer}};
  for (const auto& [name, v] : tols) {
    if (!(v > 0.0)) bad.push_back(std::string(name) + ": must be > 0");
  }
  if (const auto* w = std::get_if<std::vector<double>>(&problem.w_spec); w && w->size() > static_cast<std::size_t>(problem.J)) {
    bad.push_back("problem.w_spec: longer than J");
  }
  if (!bad.empty()) {
    std::string msg = "invalid study config:";
    for (const auto& b : bad) msg += " " + b + ";";
    msg.pop_back();
    throw ValidationError(msg);
  }
}

void to_json(json& j, const StudyConfig& c) {
  j = json{{"kind", to_string(c.kind)},
           {"problem", c.problem},
           {"filter", to_string(c.filter)},
           {"design", to_string(c.design)},
           {"estimator", c.estimator == EstimatorChoice::paper ? "paper" : "learn"},
           {"sigma", c.sigma},
           {"n_grid", c.n_grid},
           {"delta_grid", c.delta_grid},
           {"perturbation", {{"mode", to_string(c.perturbation)}, {"index", c.perturbation_mode_index}}},
           {"schedule", {{"c", c.schedule.c}, {"exponent", c.schedule.exponent ? json(*c.schedule.exponent) : json()}}},
           {"lambda", c.lambda},
           {"n", c.n},
           {"theory", c.theory},
           {"gamma", c.gamma ? json(*c.gamma) : json()},
           {"replicates", c.replicates},
           {"seed", c.seed},
           {"tolerances",
            {{"slope", c.tolerances.slope},
             {"rank_correlation", c.tolerances.rank_correlation},
             {"final_ratio", c.tolerances.final_ratio},
             {"se_multiplier", c.tolerances.se_multiplier},
             {"equality", c.tolerances.equality},
             {"representer", c.tolerances.representer}}}};
}

void from_json(const json& j, StudyConfig& c) {
  if (!j.is_object()) throw ValidationError("study config must be a JSON object");
  reject_unknown(j,
                 {"kind", "problem", "filter", "design", "estimator", "sigma", "n_grid", "delta_grid", "perturbation",
                  "schedule", "lambda", "n", "theory", "gamma", "replicates", "seed", "tolerances"},
                 "");
  c = StudyConfig{};
  if (!j.contains("kind")) throw ValidationError("missing config key 'kind'");
  c.kind = study_kind_from_string(field<std::string>(j, "kind", "kind"));
  try {
    if (j.contains("problem")) {
      reject_unknown(j.at("problem"), {"J", "b", "d", "r", "R", "seed", "w_spec"}, "problem.");
      c.problem = j.at("problem").get<ProblemDescriptor>();
    }
    if (j.contains("filter")) c.filter = filter_kind_from_string(field<std::string>(j, "filter", "filter"));
    if (j.contains("design")) c.design = scheme_from_string(field<std::string>(j, "design", "design"));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("invalid problem/filter/design: ") + e.what());
  }
  if (j.contains("estimator")) {
    const auto e = field<std::string>(j, "estimator", "estimator");
    if (e != "paper" && e != "learn") throw ValidationError("estimator: must be paper or learn");
    c.estimator = e == "paper" ? EstimatorChoice::paper : EstimatorChoice::learn;
  }
  if (j.contains("sigma")) c.sigma = field<double>(j, "sigma", "sigma");
  if (j.contains("n_grid")) c.n_grid = field<std::vector<int>>(j, "n_grid", "n_grid");
  if (j.contains("delta_grid")) c.delta_grid = field<std::vector<double>>(j, "delta_grid", "delta_grid");
  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    reject_unknown(p, {"mode", "index"}, "perturbation.");
    if (p.contains("mode")) {
      try {
        c.perturbation = perturbation_mode_from_string(field<std::string>(p, "mode", "perturbation.mode"));
      } catch (const ParameterError& e) {
        throw ValidationError(std::string("perturbation.mode: ") + e.what());
      }
    }
    if (p.contains("index")) c.perturbation_mode_index = field<int>(p, "index", "perturbation.index");
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    reject_unknown(s, {"c", "exponent"}, "schedule.");
    if (s.contains("c")) c.schedule.c = field<double>(s, "c", "schedule.c");
    if (s.contains("exponent") && !s.at("exponent").is_null()) {
      c.schedule.exponent = field<double>(s, "exponent", "schedule.exponent");
    }
  }
  if (j.contains("lambda")) c.lambda = field<double>(j, "lambda", "lambda");
  if (j.contains("n")) c.n = field<int>(j, "n", "n");
  if (j.contains("theory")) c.theory = field<std::string>(j, "theory", "theory");
  if (j.contains("gamma") && !j.at("gamma").is_null()) c.gamma = field<double>(j, "gamma", "gamma");
  if (j.contains("replicates")) c.replicates = field<int>(j, "replicates", "replicates");
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", "seed");
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    reject_unknown(t, {"slope", "rank_correlation", "final_ratio", "se_multiplier", "equality", "representer"},
                   "tolerances.");
    if (t.contains("slope")) c.tolerances.slope = field<double>(t, "slope", "tolerances.slope");
    if (t.contains("rank_correlation")) {
      c.tolerances.rank_correlation = field<double>(t, "rank_correlation", "tolerances.rank_correlation");
    }
    if (t.contains("final_ratio")) c.tolerances.final_ratio = field<double>(t, "final_ratio", "tolerances.final_ratio");
    if (t.contains("se_multiplier")) {
      c.tolerances.se_multiplier = field<double>(t, "se_multiplier", "tolerances.se_multiplier");
    }
    if (t.contains("equality")) c.tolerances.equality = field<double>(t, "equality", "tolerances.equality");
    if (t.contains("representer")) c.tolerances.representer = field<double>(t, "representer", "tolerances.representer");
  }
}

bool StudyReport::passed() const {
  return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

void to_json(json& j, const StudyReport& r) {
  json records = json::array();
  for (const auto& rec : r.records) {
    records.push_back({{"x", rec.x},
                       {"lambda", rec.lambda},
                       {"err_mean", number_to_json(rec.err_mean)},
                       {"err_se", number_to_json(rec.err_se)},
                       {"err_median", number_to_json(rec.err_median)},
                       {"extra", map_to_json(rec.extra)}});
  }
  json verdicts = json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"criterion", v.criterion},
                        {"pass", v.pass},
                        {"value", number_to_json(v.value)},
                        {"threshold", number_to_json(v.threshold)},
                        {"relation", v.relation}});
  }
  j = json{{"kind", to_string(r.kind)},
           {"config", r.config},
           {"records", records},
           {"theory", map_to_json(r.theory)},
           {"stats", map_to_json(r.stats)},
           {"verdicts", verdicts},
           {"passed", r.passed()},
           {"runtime_seconds", r.runtime_seconds}};
  if (r.fit) {
    json pts = json::array();
    for (const auto& [lx, ly] : r.fit->points) pts.push_back({lx, ly});
    j["fit"] = {{"slope", r.fit->slope},
                {"intercept", r.fit->intercept},
                {"stderr", number_to_json(r.fit->stderr_slope)},
                {"points", pts}};
  } else {
    j["fit"] = nullptr;
  }
  j["rate"] = r.rate ? json(*r.rate) : json();
}

void from_json(const json& j, StudyReport& r) {
  r = StudyReport{};
  r.kind = study_kind_from_string(j.at("kind").get<std::string>());
  r.config = j.at("config").get<StudyConfig>();
  for (const auto& rec : j.at("records")) {
    r.records.push_back({rec.at("x").get<double>(), rec.at("lambda").get<double>(), number_from_json(rec.at("err_mean")),
                         number_from_json(rec.at("err_se")), number_from_json(rec.at("err_median")),
                         map_from_json(rec.at("extra"))});
  }
  r.theory = map_from_json(j.at("theory"));
  r.stats = map_from_json(j.at("stats"));
  for (const auto& v : j.at("verdicts")) {
    r.verdicts.push_back({v.at("criterion").get<std::string>(), v.at("pass").get<bool>(), number_from_json(v.at("value")),
                          number_from_json(v.at("threshold")), v.at("relation").get<std::string>()});
  }
  if (!j.at("fit").is_null()) {
    const auto& f = j.at("fit");
    RateFit fit;
    fit.slope = f.at("slope").get<double>();
    fit.intercept = f.at("intercept").get<double>();
    fit.stderr_slope = number_from_json(f.at("stderr"));
    for (const auto& p : f.at("points")) fit.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    r.fit = fit;
  }
  if (j.contains("rate") && !j.at("rate").is_null()) r.rate = j.at("rate").get<RateReport>();
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("spearman: sequences differ in length");
  if (a.size() < 2) throw ShapeError("spearman: need at least two points");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t k) { return v[i] < v[k]; });
    std::vector<double> rk(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t e = i;
      while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[i]]) ++e;
      const double avg = 0.5 * static_cast<double>(i + e) + 1.0;
      for (std::size_t k = i; k <= e; ++k) rk[idx[k]] = avg;
      i = e + 1;
    }
    return rk;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double m = 0.5 * static_cast<double>(a.size() + 1);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - m) * (rb[i] - m);
    saa += (ra[i] - m) * (ra[i] - m);
    sbb += (rb[i] - m) * (rb[i] - m);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

MonteCarloSummary summarize(const std::vector<double>& values) {
  if (values.empty()) throw ShapeError("summarize: no values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  return {mean, se, median};
}

EquivalenceDeviations equivalence_deviations(const SpectralProblem& problem, const SampleSet& samples, double lambda,
                                             const Coeffs& probe) {
  EquivalenceDeviations d;
  const Coeffs g_probe = forward_data(problem, probe).coeffs;
  d.isometry = relative(std::abs(rkhs_norm(problem, g_probe) - probe.norm()), probe.norm());
  d.pullback = relative((correspondence_pullback(problem, g_probe) - probe).norm(), probe.norm());

  const Estimate learn = estimator_learn(problem, make_tikhonov(lambda), samples);
  const KernelSolution ks = kernel_tikhonov(problem, samples, lambda);
  const Coeffs a_learn = forward_data(problem, learn.coeffs).coeffs;
  d.methods = relative((a_learn - ks.g_coeffs).norm(), ks.g_coeffs.norm());
  d.norm_equality = relative(std::abs(rkhs_norm(problem, ks.g_coeffs) - learn.coeffs.norm()), learn.coeffs.norm());

  const ErmSolution erm = erm_representer_solve(problem, samples, LossSpec::square(), PenaltySpec{}, lambda);
  d.representer = std::max(relative((erm.beta - ks.beta).norm(), ks.beta.norm()),
                           relative((erm.g_coeffs - ks.g_coeffs).norm(), ks.g_coeffs.norm()));
  return d;
}

std::vector<Verdict> evaluate_verdicts(const StudyReport& r) {
  const Tolerances& tol = r.config.tolerances;
  std::vector<Verdict> out;
  switch (r.kind) {
    case StudyKind::stat_rate: {
      out.push_back(slope_verdict(r, theory(r, "alpha"), tol.slope));
      auto xs = record_column(r, &PointRecord::x);
      auto med = record_column(r, &PointRecord::err_median);
      const std::size_t skip = xs.size() > 3 ? 2 : 0;
      xs.erase(xs.begin(), xs.begin() + static_cast<long>(skip));
      med.erase(med.begin(), med.begin() + static_cast<long>(skip));
      out.push_back({"median-rank-correlation", spearman(xs, med) < -tol.rank_correlation, spearman(xs, med),
                     -tol.rank_correlation, "<"});
      const auto& all = r.records;
      out.push_back(at_most("final-median-ratio", all.back().err_median / all.front().err_median, tol.final_ratio));
      break;
    }
    case StudyKind::det_rate:
      out.push_back(slope_verdict(r, theory(r, "exponent"), tol.slope));
      break;
    case StudyKind::lemma_check: {
      const double k = tol.se_multiplier;
      if (r.stats.count("mc_mean")) {
        const double mean = stat(r, "mc_mean");
        const double se = stat(r, "mc_se");
        const double rhs = stat(r, "rhs");
        const double rounding = 1e-12 * std::max(mean, rhs);
        out.push_back(at_least("lemma-inequality", mean + k * se + rounding, rhs));
        out.push_back(at_most("mean-matches-f-lambda", stat(r, "max_component_z"), k));
        out.push_back(at_most("bias-variance-decomposition", std::abs(stat(r, "decomposition_gap")),
                              k * stat(r, "decomposition_se") + rounding));
        for (const char* mode : {"random-unit", "fixed-mode", "filter-adversarial"}) {
          out.push_back(at_most(std::string("key-inequality-") + mode, stat(r, std::string("key_err_") + mode),
                                mean + k * se + rounding));
        }
      }
      if (r.fit) {
        const double bound = stat(r, "variance_slope_bound") - tol.slope;
        out.push_back(at_least("variance-slope", r.fit->slope, bound));
      }
      break;
    }
    case StudyKind::gamma_study: {
      const auto xs = record_column(r, &PointRecord::x);
      const auto errs = record_column(r, &PointRecord::err_mean);
      const double rho = spearman(xs, errs);
      out.push_back({"rank-correlation", rho < -tol.rank_correlation, rho, -tol.rank_correlation, "<"});
      out.push_back(at_most("final-error-ratio", errs.back() / errs.front(), tol.final_ratio));
      out.push_back(at_most("norm-equality", stat(r, "max_norm_gap"), tol.equality));
      break;
    }
    case StudyKind::equivalence_check:
      out.push_back(at_most("isometry", stat(r, "isometry"), tol.equality));
      out.push_back(at_most("pullback-round-trip", stat(r, "pullback"), tol.equality));
      out.push_back(at_most("methods-equivalence", stat(r, "methods"), tol.equality));
      out.push_back(at_most("norm-equality", stat(r, "norm_equality"), tol.equality));
      out.push_back(at_most("representer-oracle", stat(r, "representer"), tol.representer));
      break;
  }
  return out;
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;
  report.kind = config.kind;
  report.config = config;
  switch (config.kind) {
    case StudyKind::stat_rate: run_stat_rate(config, report); break;
    case StudyKind::det_rate: run_det_rate(config, report); break;
    case StudyKind::lemma_check: run_lemma_check(config, report); break;
    case StudyKind::gamma_study: run_gamma_study(config, report); break;
    case StudyKind::equivalence_check: run_equivalence_check(config, report); break;
  }
  report.verdicts = evaluate_verdicts(report);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<std::string> reference_config_names() {
  return {"stat-rate",   "det-rate-classical", "det-rate-converted", "lemma-check",
          "gamma-study", "equivalence-check",  "variance-sweep"};
}

StudyConfig reference_config(const std::string& name) {
  StudyConfig c;
  c.problem = ProblemDescriptor{};
  c.seed = 1;
  if (name == "stat-rate") {
    c.kind = StudyKind::stat_rate;
    c.problem.w_spec = std::vector<double>{1.0};
    c.design = Scheme::iid_uniform;
    c.sigma = 0.1;
    for (int n = 32; n <= 4096; n *= 2) c.n_grid.push_back(n);
    c.replicates = 100;
    c.tolerances.slope = 0.12;
  } else if (name == "det-rate-classical" || name == "det-rate-converted") {
    c.kind = StudyKind::det_rate;
    c.problem.w_spec = std::vector<double>{1.0};
    for (int k = 10; k >= 3; --k) c.delta_grid.push_back(std::ldexp(1.0, -k));
    c.perturbation = PerturbationMode::filter_adversarial;
    c.schedule.c = 0.5;
    c.replicates = 1;
    c.tolerances.slope = 0.15;
    if (name == "det-rate-converted") {
      c.theory = "converted";
      c.gamma = 1.5;
    }
  } else if (name == "lemma-check") {
    c.kind = StudyKind::lemma_check;
    c.design = Scheme::iid_uniform;
    c.sigma = 0.1;
    c.n = 200;
    c.lambda = 0.05;
    c.replicates = 2000;
  } else if (name == "gamma-study") {
    c.kind = StudyKind::gamma_study;
    c.problem.J = 1000;
    c.design = Scheme::grid;
    c.sigma = 0.0;
    c.lambda = 0.1;
    for (int n = 4; n <= 512; n *= 2) c.n_grid.push_back(n);
    c.replicates = 1;
    c.tolerances.final_ratio = 0.1;
  } else if (name == "equivalence-check") {
    c.kind = StudyKind::equivalence_check;
    c.problem.J = 50;
    c.design = Scheme::iid_uniform;
    c.sigma = 0.1;
    c.n = 30;
    c.lambda = 0.01;
    c.replicates = 20;
  } else if (name == "variance-sweep") {
    c.kind = StudyKind::lemma_check;
    c.design = Scheme::iid_uniform;
    c.sigma = 0.1;
    c.n = 500;
    c.replicates = 500;
    c.tolerances.slope = 0.15;
  } else {
    throw ValidationError("unknown reference config '" + name + "'");
  }
  return c;
}

StudyReport variance_sweep(const StudyConfig& config, int count) {
  config.validate();
  if (count < 2) throw ParameterError("variance_sweep: need at least two lambda values");
  const auto start = std::chrono::steady_clock::now();
  const SpectralProblem problem = study_problem(config);
  const GroundTruth truth = config.problem.truth(problem);
  const NoiseModel noise = NoiseModel::gaussian(config.sigma);
  const auto R = static_cast<std::size_t>(config.replicates);

  StudyReport report;
  report.kind = StudyKind::lemma_check;
  report.config = config;

  const double lo = std::log(10.0 * problem.mu_min());
  const double hi = std::log(problem.mu_max());
  if (!(hi > lo)) throw ParameterError("variance_sweep: [10 mu_J, mu_1] is empty; increase J");

  // The same design and noise draws are reused at every lambda.
  std::vector<SampleSet> samples(R);
  monte_carlo(R, "variance-sweep", [&](std::size_t rep) {
    const Design design = sample_design(config.design, config.n, config.seed, rep);
    samples[rep] = sample_outputs(problem, truth, design, noise, config.seed, rep);
  });

  std::vector<std::pair<double, double>> var_points, eps_points;
  for (int k = 0; k < count; ++k) {
    const double lambda = std::exp(lo + (hi - lo) * k / (count - 1));
    const FilterSpec filter = study_filter(config, lambda);
    Eigen::MatrixXd est(problem.size(), static_cast<Eigen::Index>(R));
    monte_carlo(R, "variance-sweep lambda=" + std::to_string(lambda), [&](std::size_t rep) {
      est.col(static_cast<Eigen::Index>(rep)) = run_estimator(config, problem, filter, samples[rep]).coeffs;
    });
    const Coeffs mean = est.rowwise().mean();
    std::vector<double> dev(R);
    for (std::size_t rep = 0; rep < R; ++rep) dev[rep] = squared_distance(est.col(static_cast<Eigen::Index>(rep)), mean);
    const MonteCarloSummary s = summarize(dev);
    const double rd = static_cast<double>(R);
    const double variance = R > 1 ? s.mean * rd / (rd - 1.0) : 0.0;
    const double eps = epsilon_lambda(problem, filter, truth);
    report.records.push_back({filter.lambda, filter.lambda, variance, s.se, s.median, {{"epsilon", eps}}});
    var_points.emplace_back(filter.lambda, variance);
    eps_points.emplace_back(filter.lambda, eps);
  }
  report.fit = fit_rate(var_points);
  const RateFit eps_fit = fit_rate(eps_points);
  const double b = config.problem.b;
  report.theory = {{"variance_exponent", -(1.0 + 1.0 / b)}, {"gamma_nominal", config.nominal_gamma()}};
  report.stats = {{"variance_slope_bound", -(1.0 + 1.0 / b)},
                  {"gamma_hat", eps_fit.slope},
                  {"gamma_hat_stderr", eps_fit.stderr_slope}};
  report.verdicts = evaluate_verdicts(report);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace invlab
