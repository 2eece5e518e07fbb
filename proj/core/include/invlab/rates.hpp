#pragma once

// Error functionals and rate conversions between the sample count n and the noise
// level delta:
//   Delta(n, lambda) = sigma^2/n / (sqrt(sigma^2/n + eps^2) + eps)
//   N(delta, lambda) = sigma^2 / (delta^2 + 2 delta eps)
// with eps(lambda) = ||f^lambda - f|| / ||L^lambda||_HS.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "invlab/filters.hpp"
#include "invlab/spectral_model.hpp"

namespace invlab {

/// ||L^lambda||_HS = sqrt(sum_j s(mu_j)^2 mu_j).
double hs_norm(const SpectralProblem& problem, const FilterSpec& filter);

/// ||L^lambda|| = max_j s(mu_j) sqrt(mu_j).
double operator_norm(const SpectralProblem& problem, const FilterSpec& filter);

/// ||f^lambda - f|| for clean data.
double bias_norm(const SpectralProblem& problem, const FilterSpec& filter, const GroundTruth& truth);

/// Throws DegenerateFilterError when ||L^lambda||_HS = 0.
double epsilon_lambda(const SpectralProblem& problem, const FilterSpec& filter, const GroundTruth& truth);

struct RateLink {
  double sigma = 1.0;
  double epsilon = 0.0;
  double lambda = 1.0;

  static RateLink from_problem(const SpectralProblem& problem, const FilterSpec& filter, const GroundTruth& truth,
                               double sigma);
};

double delta_of(long long n, const RateLink& link);

struct SampleCount {
  double value;
  long long floor;
};

SampleCount n_of(double delta, const RateLink& link);

/// Exponents feeding the rate conversions. alpha and gamma are always required; p is
/// required by convert_upper, p_star by convert_lower.
struct RateExponents {
  double alpha = 0.0;
  double gamma = 0.0;
  std::optional<double> p;
  std::optional<double> p_star;
  std::optional<double> r;
  std::optional<double> b;
};

enum class RateBranch { fast, slow };
std::string to_string(RateBranch branch);

struct ConvertedRate {
  double error_exponent;   // delta-exponent (upper) or n-exponent (lower)
  double lambda_exponent;  // lambda_delta ~ delta^e (upper) or lambda_n ~ n^{-e} (lower)
  RateBranch branch;
};

/// p gamma >= 1/2 -> (2 alpha, 2p, fast), else (alpha/(1-p gamma), p/(1-p gamma), slow).
ConvertedRate convert_upper(const RateExponents& exp);

/// p* gamma >= 1 -> (alpha/2, p*/2, fast), else (alpha/(1+p* gamma), p*/(1+p* gamma), slow).
ConvertedRate convert_lower(const RateExponents& exp);

enum class TauVariant { general, tikhonov };
TauVariant tau_variant_from_string(const std::string& name);

/// general: (2r+1+1/b)/(2r+1); tikhonov: (2r+1+2/b)/(2r+1).
double loss_factor_tau(double r, double b, TauVariant variant);

/// Statistical upper-rate exponent 2r/(2r+1+1/b) and its lambda_n exponent 1/(2r+1+1/b).
double statistical_rate_exponent(double r, double b);
double statistical_lambda_exponent(double r, double b);

/// Classical deterministic squared-error exponent 4r/(2r+1) and lambda_delta exponent 2/(2r+1).
double classical_rate_exponent(double r);
double classical_lambda_exponent(double r);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::vector<std::pair<double, double>> points;  // (log x, log y)
};

/// OLS of log y on log x. Throws ShapeError with fewer than two distinct x and
/// DomainError for nonpositive values.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

enum class ScheduleKind { by_n, by_delta };

/// by-n: c * value^{-exponent}; by-delta: c * value^{exponent}.
double lambda_schedule(ScheduleKind kind, double c, double exponent, double value);

/// {inputs, branch, exponents, fitted_slope, stderr}
struct RateReport {
  nlohmann::json inputs;
  std::string branch;
  nlohmann::json exponents;
  std::optional<double> fitted_slope;
  std::optional<double> stderr_slope;
};

void to_json(nlohmann::json& j, const RateReport& r);
void from_json(const nlohmann::json& j, RateReport& r);
RateReport upper_report(const RateExponents& exp);
RateReport lower_report(const RateExponents& exp);

}  // namespace invlab
