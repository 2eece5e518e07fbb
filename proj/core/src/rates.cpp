#include "invlab/rates.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "invlab/errors.hpp"
#include "invlab/estimators.hpp"

namespace invlab {

namespace {

// Branch boundaries are inclusive; products like (2/3) * 1.5 land an ulp away from
// the boundary, so compare with a relative allowance.
constexpr double kBoundaryRelTol = 1e-12;

bool at_least(double value, double threshold) { return value >= threshold * (1.0 - kBoundaryRelTol); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << name << " must be > 0 (got " << v << ")";
    throw ParameterError(msg.str());
  }
}

}  // namespace

double hs_norm(const SpectralProblem& problem, const FilterSpec& filter) {
  check_filter_on_problem(problem, filter);
  double sum = 0.0;
  for (int j = 0; j < problem.size(); ++j) {
    const double s = filter_value(filter, problem.mu()[j]);
    sum += s * s * problem.mu()[j];
  }
  return std::sqrt(sum);
}

double operator_norm(const SpectralProblem& problem, const FilterSpec& filter) {
  check_filter_on_problem(problem, filter);
  double best = 0.0;
  for (int j = 0; j < problem.size(); ++j) {
    best = std::max(best, filter_value(filter, problem.mu()[j]) * problem.singular_values()[j]);
  }
  return best;
}

double bias_norm(const SpectralProblem& problem, const FilterSpec& filter, const GroundTruth& truth) {
  const Estimate f_lambda = solve_continuous(problem, filter, forward_data(problem, truth.coeffs));
  return (f_lambda.coeffs - truth.coeffs).norm();
}

double epsilon_lambda(const SpectralProblem& problem, const FilterSpec& filter, const GroundTruth& truth) {
  const double hs = hs_norm(problem, filter);
  if (hs == 0.0) throw DegenerateFilterError("||L^lambda||_HS = 0: the filter removes every mode");
  return bias_norm(problem, filter, truth) / hs;
}

RateLink RateLink::from_problem(const SpectralProblem& problem, const FilterSpec& filter, const GroundTruth& truth,
                                double sigma) {
  return RateLink{sigma, epsilon_lambda(problem, filter, truth), filter.lambda};
}

double delta_of(long long n, const RateLink& link) {
  if (n < 1) throw DomainError("delta_of: n must be >= 1");
  require_positive(link.sigma, "sigma");
  if (!(link.epsilon >= 0.0)) throw ParameterError("epsilon must be >= 0");
  const double v = link.sigma * link.sigma / static_cast<double>(n);
  return v / (std::sqrt(v + link.epsilon * link.epsilon) + link.epsilon);
}

SampleCount n_of(double delta, const RateLink& link) {
  if (!(delta > 0.0)) throw DomainError("n_of: delta must be > 0");
  require_positive(link.sigma, "sigma");
  if (!(link.epsilon >= 0.0)) throw ParameterError("epsilon must be >= 0");
  const double value = link.sigma * link.sigma / (delta * delta + 2.0 * delta * link.epsilon);
  return {value, static_cast<long long>(std::floor(value))};
}

std::string to_string(RateBranch branch) { return branch == RateBranch::fast ? "fast" : "slow"; }

ConvertedRate convert_upper(const RateExponents& exp) {
  require_positive(exp.alpha, "alpha");
  require_positive(exp.gamma, "gamma");
  if (!exp.p) throw ParameterError("convert_upper needs p");
  require_positive(*exp.p, "p");
  const double pg = *exp.p * exp.gamma;
  if (at_least(pg, 0.5)) return {2.0 * exp.alpha, 2.0 * *exp.p, RateBranch::fast};
  return {exp.alpha / (1.0 - pg), *exp.p / (1.0 - pg), RateBranch::slow};
}

ConvertedRate convert_lower(const RateExponents& exp) {
  require_positive(exp.alpha, "alpha");
  require_positive(exp.gamma, "gamma");
  if (!exp.p_star) throw ParameterError("convert_lower needs p_star");
  require_positive(*exp.p_star, "p_star");
  const double pg = *exp.p_star * exp.gamma;
  if (at_least(pg, 1.0)) return {exp.alpha / 2.0, *exp.p_star / 2.0, RateBranch::fast};
  return {exp.alpha / (1.0 + pg), *exp.p_star / (1.0 + pg), RateBranch::slow};
}

TauVariant tau_variant_from_string(const std::string& name) {
  if (name == "general") return TauVariant::general;
  if (name == "tikhonov") return TauVariant::tikhonov;
  throw ParameterError("unknown tau variant '" + name + "' (expected general or tikhonov)");
}

double loss_factor_tau(double r, double b, TauVariant variant) {
  require_positive(r, "r");
  if (!(b > 1.0) || !std::isfinite(b)) throw ParameterError("b must be > 1");
  const double base = 2.0 * r + 1.0;
  const double extra = variant == TauVariant::general ? 1.0 / b : 2.0 / b;
  return (base + extra) / base;
}

double statistical_rate_exponent(double r, double b) { return 2.0 * r / (2.0 * r + 1.0 + 1.0 / b); }
double statistical_lambda_exponent(double r, double b) { return 1.0 / (2.0 * r + 1.0 + 1.0 / b); }
double classical_rate_exponent(double r) { return 4.0 * r / (2.0 * r + 1.0); }
double classical_lambda_exponent(double r) { return 2.0 / (2.0 * r + 1.0); }

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  std::set<double> distinct;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("fit_rate: points must be positive");
    distinct.insert(x);
  }
  if (distinct.size() < 2) throw ShapeError("fit_rate: need at least two distinct x values");

  RateFit fit;
  const auto m = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    fit.points.emplace_back(std::log(x), std::log(y));
    mean_x += fit.points.back().first;
    mean_y += fit.points.back().second;
  }
  mean_x /= m;
  mean_y /= m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [lx, ly] : fit.points) {
    sxx += (lx - mean_x) * (lx - mean_x);
    sxy += (lx - mean_x) * (ly - mean_y);
  }
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  if (points.size() > 2) {
    double ssr = 0.0;
    for (const auto& [lx, ly] : fit.points) {
      const double res = ly - (fit.intercept + fit.slope * lx);
      ssr += res * res;
    }
    fit.stderr_slope = std::sqrt(ssr / (m - 2.0) / sxx);
  }
  return fit;
}

double lambda_schedule(ScheduleKind kind, double c, double exponent, double value) {
  require_positive(c, "schedule constant c");
  require_positive(exponent, "schedule exponent");
  require_positive(value, "schedule argument");
  return kind == ScheduleKind::by_n ? c * std::pow(value, -exponent) : c * std::pow(value, exponent);
}

void to_json(nlohmann::json& j, const RateReport& r) {
  j = nlohmann::json{{"inputs", r.inputs}, {"branch", r.branch}, {"exponents", r.exponents}};
  j["fitted_slope"] = r.fitted_slope ? nlohmann::json(*r.fitted_slope) : nlohmann::json(nullptr);
  j["stderr"] = r.stderr_slope ? nlohmann::json(*r.stderr_slope) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, RateReport& r) {
  r.inputs = j.at("inputs");
  r.branch = j.at("branch").get<std::string>();
  r.exponents = j.at("exponents");
  r.fitted_slope = j.at("fitted_slope").is_null() ? std::nullopt : std::optional(j.at("fitted_slope").get<double>());
  r.stderr_slope = j.at("stderr").is_null() ? std::nullopt : std::optional(j.at("stderr").get<double>());
}

namespace {

nlohmann::json exponent_inputs(const RateExponents& exp) {
  nlohmann::json in{{"alpha", exp.alpha}, {"gamma", exp.gamma}};
  if (exp.p) in["p"] = *exp.p;
  if (exp.p_star) in["p_star"] = *exp.p_star;
  if (exp.r) in["r"] = *exp.r;
  if (exp.b) in["b"] = *exp.b;
  return in;
}

}  // namespace

RateReport upper_report(const RateExponents& exp) {
  const ConvertedRate c = convert_upper(exp);
  return RateReport{exponent_inputs(exp), to_string(c.branch),
                    nlohmann::json{{"delta", c.error_exponent}, {"lambda_delta", c.lambda_exponent}}, std::nullopt,
                    std::nullopt};
}

RateReport lower_report(const RateExponents& exp) {
  const ConvertedRate c = convert_lower(exp);
  return RateReport{exponent_inputs(exp), to_string(c.branch),
                    nlohmann::json{{"n", c.error_exponent}, {"lambda_n", c.lambda_exponent}}, std::nullopt,
                    std::nullopt};
}

}  // namespace invlab
