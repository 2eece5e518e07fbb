#pragma once

// RKHS structure of Im(A): kernel K(x,x') = sum_j mu_j u_j(x) u_j(x'), the
// minimal-preimage norm, and the pullback g -> A~^{-1} g.

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "invlab/spectral_model.hpp"

namespace invlab {

double kernel_eval(const SpectralProblem& problem, double x, double x2);

struct GramMatrix {
  std::vector<double> points;
  Eigen::MatrixXd entries;
};

/// entries(i,j) = K(x_i, x_j); exactly symmetric.
GramMatrix gram_matrix(const SpectralProblem& problem, std::span<const double> points);

/// Row i holds phi_{x_i} in v-basis coordinates: (phi_x)_j = sigma_j u_j(x).
Eigen::MatrixXd feature_matrix(const SpectralProblem& problem, std::span<const double> points);

/// sqrt(sum_j g_j^2 / mu_j).
double rkhs_norm(const SpectralProblem& problem, const Coeffs& g);

/// f_j = g_j / sigma_j.
Coeffs correspondence_pullback(const SpectralProblem& problem, const Coeffs& g);

/// Row-major CSV; the header row lists the points.
void write_gram_csv(const GramMatrix& gram, std::ostream& out);

}  // namespace invlab
