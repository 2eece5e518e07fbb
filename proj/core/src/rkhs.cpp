#include "invlab/rkhs.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "invlab/errors.hpp"

namespace invlab {

double kernel_eval(const SpectralProblem& problem, double x, double x2) {
  check_unit_interval(x, "kernel argument x");
  check_unit_interval(x2, "kernel argument x'");
  const Coeffs& mu = problem.mu();
  double sum = 0.0;
  for (int j = 0; j < problem.size(); ++j) sum += mu[j] * basis_value(j + 1, x) * basis_value(j + 1, x2);
  return sum;
}

Eigen::MatrixXd feature_matrix(const SpectralProblem& problem, std::span<const double> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  const int J = problem.size();
  Eigen::MatrixXd phi(n, J);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = points[static_cast<std::size_t>(i)];
    check_unit_interval(x, "design point");
    for (int j = 0; j < J; ++j) phi(i, j) = problem.singular_values()[j] * basis_value(j + 1, x);
  }
  return phi;
}

GramMatrix gram_matrix(const SpectralProblem& problem, std::span<const double> points) {
  if (points.empty()) throw ShapeError("gram_matrix: empty point set");
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::MatrixXd phi = feature_matrix(problem, points);
  GramMatrix gram{std::vector<double>(points.begin(), points.end()), Eigen::MatrixXd::Zero(n, n)};
  gram.entries.selfadjointView<Eigen::Lower>().rankUpdate(phi);
  gram.entries.triangularView<Eigen::StrictlyUpper>() = gram.entries.transpose();
  return gram;
}

double rkhs_norm(const SpectralProblem& problem, const Coeffs& g) {
  if (g.size() != problem.size()) throw ShapeError("rkhs_norm: coefficient length differs from J");
  return (g.array() / problem.singular_values().array()).matrix().norm();
}

Coeffs correspondence_pullback(const SpectralProblem& problem, const Coeffs& g) {
  if (g.size() != problem.size()) throw ShapeError("correspondence_pullback: coefficient length differs from J");
  return g.cwiseQuotient(problem.singular_values());
}

void write_gram_csv(const GramMatrix& gram, std::ostream& out) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < gram.points.size(); ++i) out << (i ? "," : "") << gram.points[i];
  out << '\n';
  for (Eigen::Index i = 0; i < gram.entries.rows(); ++i) {
    for (Eigen::Index k = 0; k < gram.entries.cols(); ++k) out << (k ? "," : "") << gram.entries(i, k);
    out << '\n';
  }
}

}  // namespace invlab
