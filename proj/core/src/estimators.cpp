#include "invlab/estimators.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "invlab/errors.hpp"
#include "invlab/rkhs.hpp"

namespace invlab {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::continuous: return "continuous";
    case Provenance::noisy_delta: return "noisy-delta";
    case Provenance::paper_n: return "paper-n";
    case Provenance::learn_n: return "learn-n";
    case Provenance::kernel_tikhonov: return "kernel-tikhonov";
    case Provenance::erm: return "erm";
  }
  return "unknown";
}

Provenance provenance_from_string(const std::string& name) {
  for (auto p : {Provenance::continuous, Provenance::noisy_delta, Provenance::paper_n, Provenance::learn_n,
                 Provenance::kernel_tikhonov, Provenance::erm}) {
    if (to_string(p) == name) return p;
  }
  throw ValidationError("unknown provenance '" + name + "'");
}

void to_json(nlohmann::json& j, const Estimate& e) {
  j = nlohmann::json{{"provenance", to_string(e.provenance)},
                     {"lambda", e.lambda},
                     {"coeffs", std::vector<double>(e.coeffs.data(), e.coeffs.data() + e.coeffs.size())}};
  if (e.n) {
    j["n_or_delta"] = *e.n;
  } else if (e.delta) {
    j["n_or_delta"] = *e.delta;
  } else {
    j["n_or_delta"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, Estimate& e) {
  e = Estimate{};
  e.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  e.lambda = j.at("lambda").get<double>();
  const auto coeffs = j.at("coeffs").get<std::vector<double>>();
  e.coeffs = Eigen::Map<const Coeffs>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  const auto& nd = j.at("n_or_delta");
  if (!nd.is_null()) {
    switch (e.provenance) {
      case Provenance::paper_n:
      case Provenance::learn_n:
      case Provenance::kernel_tikhonov:
      case Provenance::erm: e.n = nd.get<int>(); break;
      default: e.delta = nd.get<double>(); break;
    }
  }
}

namespace {

Coeffs filter_on_spectrum(const SpectralProblem& problem, const FilterSpec& filter) {
  check_filter_on_problem(problem, filter);
  Coeffs s(problem.size());
  for (int j = 0; j < problem.size(); ++j) s[j] = filter_value(filter, problem.mu()[j]);
  return s;
}

void check_samples(const SampleSet& samples) {
  if (samples.design.empty()) throw ShapeError("sample set is empty");
  if (samples.design.size() != samples.outputs.size()) throw ShapeError("design and outputs differ in length");
}

Eigen::VectorXd outputs_vector(const SampleSet& samples) {
  return Eigen::Map<const Eigen::VectorXd>(samples.outputs.data(), static_cast<Eigen::Index>(samples.outputs.size()));
}

}  // namespace

Estimate solve_continuous(const SpectralProblem& problem, const FilterSpec& filter, const DataFunction& y) {
  if (y.coeffs.size() != problem.size()) throw ShapeError("solve_continuous: data length differs from J");
  const Coeffs s = filter_on_spectrum(problem, filter);
  Estimate est;
  est.coeffs = s.cwiseProduct(problem.singular_values()).cwiseProduct(y.coeffs);
  est.lambda = filter.lambda;
  if (y.kind == DataKind::perturbed) {
    est.provenance = Provenance::noisy_delta;
    est.delta = y.delta;
  } else {
    est.provenance = Provenance::continuous;
  }
  return est;
}

Coeffs empirical_projection(const SpectralProblem& problem, const SampleSet& samples) {
  check_samples(samples);
  const int J = problem.size();
  Coeffs acc = Coeffs::Zero(J);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples.design[i];
    check_unit_interval(x, "design point");
    const double y = samples.outputs[i];
    // (cos jt, sin jt) by repeated rotation; rounding error grows like j * eps.
    const double t = std::numbers::pi * x;
    const double c1 = std::cos(t);
    const double s1 = std::sin(t);
    double c = c1;
    double s = s1;
    for (int j = 0; j < J; ++j) {
      acc[j] += y * s;
      const double c_next = c * c1 - s * s1;
      s = s * c1 + c * s1;
      c = c_next;
    }
  }
  return acc * (std::numbers::sqrt2 / static_cast<double>(samples.size()));
}

Estimate estimator_paper(const SpectralProblem& problem, const FilterSpec& filter, const SampleSet& samples) {
  const Coeffs s = filter_on_spectrum(problem, filter);
  const Coeffs proj = empirical_projection(problem, samples);
  Estimate est;
  est.coeffs = s.cwiseProduct(problem.singular_values()).cwiseProduct(proj);
  est.provenance = Provenance::paper_n;
  est.lambda = filter.lambda;
  est.n = static_cast<int>(samples.size());
  return est;
}

Estimate estimator_learn(const SpectralProblem& problem, const FilterSpec& filter, const SampleSet& samples) {
  check_samples(samples);
  check_filter_on_problem(problem, filter);
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::MatrixXd phi = feature_matrix(problem, samples.design);
  const Eigen::MatrixXd K = gram_matrix(problem, samples.design).entries;
  const Eigen::VectorXd y = outputs_vector(samples);

  Eigen::VectorXd weights;
  if (filter.kind == FilterKind::tikhonov) {
    Eigen::MatrixXd system = K;
    system.diagonal().array() += filter.lambda * static_cast<double>(n);
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) throw NumericalError("estimator_learn: (K + lambda n I) is not positive definite");
    weights = llt.solve(y);
  } else {
    const Eigen::MatrixXd scaled = K / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    if (eig.info() != Eigen::Success) throw NumericalError("estimator_learn: eigendecomposition of K/n failed");
    Eigen::VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t = eig.eigenvalues()[k];
      if (filter.kind == FilterKind::landweber && t > 1.0) {
        throw ModelError("Landweber on the empirical operator needs ||K/n|| <= 1; rescale the problem");
      }
      s[k] = filter_value_closure(filter, t);
    }
    // A_x* s(A_x A_x*) y with A_x A_x* = K/n and A_x* v = (1/n) Phi^T v
    weights = eig.eigenvectors() * s.cwiseProduct(eig.eigenvectors().transpose() * y) / static_cast<double>(n);
  }
  Estimate est;
  est.coeffs = phi.transpose() * weights;
  est.provenance = Provenance::learn_n;
  est.lambda = filter.lambda;
  est.n = static_cast<int>(n);
  return est;
}

Coeffs representer_to_coeffs(const SpectralProblem& problem, std::span<const double> points,
                             const Eigen::VectorXd& beta) {
  if (static_cast<Eigen::Index>(points.size()) != beta.size()) throw ShapeError("beta length differs from point count");
  const int J = problem.size();
  Coeffs g = Coeffs::Zero(J);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int j = 0; j < J; ++j) g[j] += beta[static_cast<Eigen::Index>(i)] * basis_value(j + 1, points[i]);
  }
  return g.cwiseProduct(problem.mu());
}

KernelSolution kernel_tikhonov(const SpectralProblem& problem, const SampleSet& samples, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("kernel_tikhonov: lambda must be > 0");
  check_samples(samples);
  const auto n = static_cast<double>(samples.size());
  Eigen::MatrixXd system = gram_matrix(problem, samples.design).entries;
  system.diagonal().array() += lambda * n;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw NumericalError("kernel_tikhonov: (K + lambda n I) is not positive definite");
  KernelSolution sol;
  sol.beta = llt.solve(outputs_vector(samples));
  sol.g_coeffs = representer_to_coeffs(problem, samples.design, sol.beta);
  return sol;
}

Coeffs continuous_kernel_tikhonov(const SpectralProblem& problem, const DataFunction& y, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be > 0");
  if (y.coeffs.size() != problem.size()) throw ShapeError("data length differs from J");
  const Coeffs& mu = problem.mu();
  return (mu.array() / (mu.array() + lambda) * y.coeffs.array()).matrix();
}

}  // namespace invlab
