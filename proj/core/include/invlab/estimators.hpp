#pragma once

// Regularized solutions in the v-basis:
//   continuous  f^lambda       = s(B) A* y
//   noisy       f^lambda_delta = s(B) A* y^delta
//   paper       f^lambda_n     = s(B) A_x* y,        A_x* y = (1/n) sum_i Y_i phi_{X_i}
//   learn       f^lambda_n,learn = s(A_x* A_x) A_x* y = A_x* s(A_x A_x*) y
// and the kernel-side Tikhonov solve beta = (K + lambda n I)^{-1} y.

#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "invlab/filters.hpp"
#include "invlab/sampling.hpp"
#include "invlab/spectral_model.hpp"

namespace invlab {

enum class Provenance { continuous, noisy_delta, paper_n, learn_n, kernel_tikhonov, erm };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& name);

struct Estimate {
  Coeffs coeffs;
  Provenance provenance = Provenance::continuous;
  double lambda = 0.0;
  std::optional<int> n;
  std::optional<double> delta;
};

/// {provenance, lambda, n_or_delta, coeffs}
void to_json(nlohmann::json& j, const Estimate& e);
void from_json(const nlohmann::json& j, Estimate& e);

/// coeffs_j = s(mu_j) sigma_j y_j.
Estimate solve_continuous(const SpectralProblem& problem, const FilterSpec& filter, const DataFunction& y);

/// (1/n) sum_i Y_i u_j(X_i) for every j: the u-basis coordinates of the empirical adjoint.
Coeffs empirical_projection(const SpectralProblem& problem, const SampleSet& samples);

Estimate estimator_paper(const SpectralProblem& problem, const FilterSpec& filter, const SampleSet& samples);

/// Tikhonov goes through the n x n system; other filters through the eigendecomposition
/// of (1/n) K. Throws NumericalError when the Tikhonov system cannot be factored and
/// ModelError when a Landweber filter meets an empirical eigenvalue above 1.
Estimate estimator_learn(const SpectralProblem& problem, const FilterSpec& filter, const SampleSet& samples);

struct KernelSolution {
  Eigen::VectorXd beta;
  Coeffs g_coeffs;  // u-basis
};

/// g_j = mu_j sum_i beta_i u_j(x_i).
Coeffs representer_to_coeffs(const SpectralProblem& problem, std::span<const double> points,
                             const Eigen::VectorXd& beta);

KernelSolution kernel_tikhonov(const SpectralProblem& problem, const SampleSet& samples, double lambda);

/// Spectral minimizer of ||y - g||^2 + lambda ||g||_K^2: g_j = mu_j / (mu_j + lambda) y_j.
Coeffs continuous_kernel_tikhonov(const SpectralProblem& problem, const DataFunction& y, double lambda);

}  // namespace invlab
