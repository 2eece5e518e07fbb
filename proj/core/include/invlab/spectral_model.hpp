#pragma once

// Diagonal test model for y = A f. Both spaces are L^2([0,1]) with Lebesgue measure and
// the sine basis u_j(x) = v_j(x) = sqrt(2) sin(j pi x); A maps v_j to sigma_j u_j, so
// B = A*A has eigenvalues mu_j = sigma_j^2 = d j^{-b}.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace invlab {

using Coeffs = Eigen::VectorXd;

class SpectralProblem {
public:
  /// Throws ParameterError unless J >= 1, b > 1, d > 0.
  SpectralProblem(int J, double b, double d);

  int size() const noexcept { return static_cast<int>(mu_.size()); }
  const Coeffs& mu() const noexcept { return mu_; }
  const Coeffs& singular_values() const noexcept { return sigma_; }
  double decay_b() const noexcept { return b_; }
  double decay_d() const noexcept { return d_; }
  double mu_max() const noexcept { return mu_[0]; }
  double mu_min() const noexcept { return mu_[mu_.size() - 1]; }

  /// sup_x K(x,x) = 2 sum_j mu_j, the squared kernel bound.
  double kernel_bound_squared() const noexcept;

  /// Factor applied to d by rescaled_for_unit_norm(); 1 when no rescaling happened.
  double scale() const noexcept { return scale_; }

  static constexpr const char* basis() noexcept { return "sine"; }

private:
  friend SpectralProblem rescaled_for_unit_norm(const SpectralProblem&);

  Coeffs mu_;
  Coeffs sigma_;
  double b_;
  double d_;
  double scale_ = 1.0;
};

/// mu_j = d j^{-b}, j = 1..J.
SpectralProblem build_power_law_problem(int J, double b, double d);

/// Copy with d reduced so that mu_1 <= 1 (needed by Landweber); records the factor.
SpectralProblem rescaled_for_unit_norm(const SpectralProblem& problem);

/// Source-condition solution f = B^r w in the v-basis.
struct GroundTruth {
  Coeffs coeffs;
  Coeffs w;
  double r = 0.0;
  double R = 0.0;
};

GroundTruth make_source_solution(const SpectralProblem& problem, double r, const Coeffs& w);

enum class DataKind { clean, perturbed };

/// Data y in the u-basis.
struct DataFunction {
  Coeffs coeffs;
  DataKind kind = DataKind::clean;
  double delta = 0.0;
};

/// y_j = sigma_j f_j.
DataFunction forward_data(const SpectralProblem& problem, const Coeffs& f);

enum class Space { input, output };

/// sqrt(2) sin(j pi x), 1-based j. No domain check.
inline double basis_value(int j, double x);

/// Values u_1(x)..u_J(x).
Coeffs basis_values(int J, double x);

/// sum_j c_j sqrt(2) sin(j pi x). Throws DomainError if x is outside [0,1].
double eval_function(const SpectralProblem& problem, const Coeffs& coeffs, Space space, double x);

/// Throws DomainError when x is not in [0,1].
void check_unit_interval(double x, const char* what);

// ---------------------------------------------------------------------------
// Problem descriptors: {J, b, d, r, w_spec, seed} (+ optional R for unit-random).

struct WSpecOnes {};
struct WSpecUnitRandom {};
using WSpec = std::variant<WSpecOnes, WSpecUnitRandom, std::vector<double>>;

struct ProblemDescriptor {
  int J = 100;
  double b = 2.0;
  double d = 1.0;
  double r = 1.0;
  WSpec w_spec = WSpecOnes{};
  double R = 1.0;
  std::uint64_t seed = 0;

  SpectralProblem problem() const;
  /// Resolves w_spec. Explicit arrays shorter than J are zero-padded; longer is an error.
  GroundTruth truth(const SpectralProblem& problem) const;
};

void to_json(nlohmann::json& j, const ProblemDescriptor& p);
void from_json(const nlohmann::json& j, ProblemDescriptor& p);

}  // namespace invlab

#include <cmath>
#include <numbers>

namespace invlab {

inline double basis_value(int j, double x) {
  return std::numbers::sqrt2 * std::sin(j * std::numbers::pi * x);
}

}  // namespace invlab
