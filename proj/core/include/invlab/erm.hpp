#pragma once

// Regularized empirical risk minimization over span{K_{x_i}}:
//   min_beta (1/n) sum_i V(Y_i, (K beta)_i) + lambda psi(||g||_K),  psi(t) = t^2,
// solved by descent along the functional gradient with Barzilai-Borwein steps and an
// Armijo backtracking safeguard. No randomness: identical inputs give identical output.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "invlab/errors.hpp"
#include "invlab/sampling.hpp"
#include "invlab/spectral_model.hpp"

namespace invlab {

enum class LossKind { square, absolute, gaussian_nll };

std::string to_string(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::square;
  /// Lipschitz constant of V(y, .) on the bounded data range given to the factory.
  double lipschitz = 0.0;
  /// Noise level of the Gaussian likelihood; unused by the other losses.
  double noise_sigma = 1.0;

  /// `range` bounds |y| and |g(x)| on the data; it only feeds the Lipschitz constant.
  static LossSpec square(double range = 1.0);
  static LossSpec absolute();
  static LossSpec gaussian_nll(double noise_sigma, double range = 1.0);

  /// V(y, g) >= 0 with V(y, y) = 0.
  double value(double y, double g) const;
  bool strictly_convex() const noexcept { return kind != LossKind::absolute; }
};

/// psi(t) = t^2 is the only supported penalty.
struct PenaltySpec {
  std::string psi = "square";
  double value(double t) const { return t * t; }
};

struct ErmOptions {
  double tol = 1e-10;
  int max_iter = 100000;
  /// Absolute loss is minimized through a Huber smoothing of width eps, shrunk
  /// geometrically from eps_start to eps_final.
  double smoothing_start = 1e-2;
  double smoothing_final = 1e-9;
  double smoothing_factor = 0.1;
};

struct ErmDiagnostics {
  int iterations = 0;
  double objective = 0.0;
  double optimality = 0.0;
  bool converged = false;
  double final_smoothing = 0.0;
  std::vector<IterationRecord> trace;
};

struct ErmSolution {
  Eigen::VectorXd beta;
  Coeffs g_coeffs;
  ErmDiagnostics diagnostics;
};

/// Objective value at beta (exact loss, no smoothing).
double erm_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                     const LossSpec& loss, double lambda);

/// Throws ParameterError for lambda < 0 and ConvergenceError (with a thinned trace) when
/// the optimality measure does not reach tol within max_iter. For lambda = 0 the returned
/// beta is the minimum-norm representative, which gives the minimum-norm g in the span.
ErmSolution erm_representer_solve(const SpectralProblem& problem, const SampleSet& samples, const LossSpec& loss,
                                  const PenaltySpec& penalty, double lambda, const ErmOptions& options = {});

/// Same solver on an explicit Gram matrix.
ErmSolution erm_solve_gram(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const LossSpec& loss,
                           const PenaltySpec& penalty, double lambda, const ErmOptions& options = {});

}  // namespace invlab
