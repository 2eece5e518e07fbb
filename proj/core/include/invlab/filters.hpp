#pragma once

// Spectral regularization filters s_lambda(t) and their defining constants:
//   sup_t |t s(t)| <= D,  sup_t |lambda s(t)| <= E,
//   sup_t t^nu |1 - t s(t)| <= C_nu lambda^nu  for 0 <= nu <= q.

#include <string>
#include <vector>

#include "invlab/spectral_model.hpp"

namespace invlab {

enum class FilterKind { tikhonov, cutoff, landweber };

std::string to_string(FilterKind kind);
FilterKind filter_kind_from_string(const std::string& name);

/// Qualification used for tables when the true qualification is infinite.
inline constexpr double kQualificationCap = 8.0;

struct QualificationConstant {
  double nu;
  double c_nu;
};

struct FilterSpec {
  FilterKind kind = FilterKind::tikhonov;
  double lambda = 1.0;
  int iterations = 0;  // landweber only: m, with lambda == 1/m
  double D = 1.0;
  double E = 1.0;
  double q = 1.0;
  std::vector<QualificationConstant> c_nu;

  /// Declared C_nu for a tabulated nu; throws ParameterError for nu outside the table.
  double qualification_constant(double nu) const;
};

FilterSpec make_tikhonov(double lambda);
FilterSpec make_cutoff(double lambda);
/// m >= 1 iterations, lambda = 1/m.
FilterSpec make_landweber(int iterations);
/// Landweber is built from round(1/lambda) iterations and lambda snapped to 1/m.
FilterSpec make_filter(FilterKind kind, double lambda);

/// s_lambda(t). Throws DomainError for t <= 0 and ModelError for Landweber with t > 1
/// (the spectrum must be rescaled so that ||B|| <= 1).
double filter_value(const FilterSpec& filter, double t);

/// Continuous extension to t = 0 (limit value), used on empirical spectra where
/// eigenvalues can round to zero or slightly below.
double filter_value_closure(const FilterSpec& filter, double t);

/// Throws ModelError when the filter cannot be applied on the problem's spectrum.
void check_filter_on_problem(const SpectralProblem& problem, const FilterSpec& filter);

struct FilterCertificate {
  FilterKind kind;
  int lambdas_checked = 0;
  int grid_points = 0;
  /// min over lambda and properties of (declared bound - observed sup); >= 0 certifies.
  double worst_margin = 0.0;
  std::string worst_property;
  double worst_lambda = 0.0;
};

/// Evaluates the three suprema on a log grid of `grid_points` t-values in [t_min, t_max]
/// for `lambda_count` log-spaced lambda values in [lambda_min, lambda_max]. For
/// Landweber the lambdas are snapped to 1/m.
FilterCertificate certify_filter(FilterKind kind, double t_min, double t_max, double lambda_min,
                                 double lambda_max, int lambda_count = 50, int grid_points = 10000);

}  // namespace invlab
