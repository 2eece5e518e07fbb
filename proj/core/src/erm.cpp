#include "invlab/erm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "invlab/estimators.hpp"
#include "invlab/rkhs.hpp"

namespace invlab {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::square: return "square";
    case LossKind::absolute: return "absolute";
    case LossKind::gaussian_nll: return "gaussian-nll";
  }
  return "unknown";
}

LossSpec LossSpec::square(double range) { return {LossKind::square, 4.0 * range, 1.0}; }

LossSpec LossSpec::absolute() { return {LossKind::absolute, 1.0, 1.0}; }

LossSpec LossSpec::gaussian_nll(double noise_sigma, double range) {
  if (!(noise_sigma > 0.0)) throw ParameterError("gaussian-nll loss needs noise_sigma > 0");
  return {LossKind::gaussian_nll, 2.0 * range / (noise_sigma * noise_sigma), noise_sigma};
}

double LossSpec::value(double y, double g) const {
  const double r = g - y;
  switch (kind) {
    case LossKind::square: return r * r;
    case LossKind::absolute: return std::abs(r);
    // negative log-likelihood up to the additive normalizing constant
    case LossKind::gaussian_nll: return r * r / (2.0 * noise_sigma * noise_sigma);
  }
  return 0.0;
}

namespace {

// Loss actually minimized in a stage: exact for the smooth losses, Huber-smoothed
// (width eps) for the absolute loss.
struct StageLoss {
  LossSpec spec;
  double eps = 0.0;

  double value(double y, double g) const {
    if (spec.kind != LossKind::absolute) return spec.value(y, g);
    const double r = std::abs(g - y);
    return r <= eps ? r * r / (2.0 * eps) : r - 0.5 * eps;
  }

  double derivative(double y, double g) const {
    const double r = g - y;
    switch (spec.kind) {
      case LossKind::square: return 2.0 * r;
      case LossKind::gaussian_nll: return r / (spec.noise_sigma * spec.noise_sigma);
      case LossKind::absolute: return std::abs(r) <= eps ? r / eps : (r > 0.0 ? 1.0 : -1.0);
    }
    return 0.0;
  }

  double curvature_bound() const {
    switch (spec.kind) {
      case LossKind::square: return 2.0;
      case LossKind::gaussian_nll: return 1.0 / (spec.noise_sigma * spec.noise_sigma);
      case LossKind::absolute: return 1.0 / eps;
    }
    return 1.0;
  }
};

struct Workspace {
  const Eigen::MatrixXd& K;
  const Eigen::VectorXd& y;
  double lambda;
  Eigen::MatrixXd range_basis;  // orthonormal basis of range(K)

  double objective(const StageLoss& loss, const Eigen::VectorXd& beta, const Eigen::VectorXd& g) const {
    double data = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) data += loss.value(y[i], g[i]);
    return data / static_cast<double>(y.size()) + lambda * beta.dot(g);
  }

  // beta-coordinates of the H_K gradient: (1/n) V'(y, K beta) + 2 lambda beta
  Eigen::VectorXd functional_gradient(const StageLoss& loss, const Eigen::VectorXd& beta,
                                      const Eigen::VectorXd& g) const {
    Eigen::VectorXd d(y.size());
    const double inv_n = 1.0 / static_cast<double>(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) d[i] = inv_n * loss.derivative(y[i], g[i]) + 2.0 * lambda * beta[i];
    return d;
  }

  // The objective sees beta only through K beta, so components of d in ker(K) carry
  // no information; measure the part in range(K).
  double optimality(const Eigen::VectorXd& d) const { return (range_basis.transpose() * d).norm(); }
};

// Exact finish for the absolute loss: points with |residual| <= band are taken as
// interpolated (kinks), every other point carries the fixed subgradient sign(residual).
// Canonical coefficients beta_i = -v_i / (2 lambda n) on the free points, and a
// minimum-norm solve of g_S = y_S on the kinks. Returns false if the candidate violates
// the subgradient box or flips a sign.
bool absolute_kkt_polish(const Workspace& ws, const Eigen::VectorXd& g, double band, Eigen::VectorXd& beta_out) {
  const Eigen::Index n = ws.y.size();
  const double cap = 1.0 / (2.0 * ws.lambda * static_cast<double>(n));
  std::vector<Eigen::Index> kinks, free;
  for (Eigen::Index i = 0; i < n; ++i) (std::abs(g[i] - ws.y[i]) <= band ? kinks : free).push_back(i);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  for (const auto i : free) beta[i] = g[i] > ws.y[i] ? -cap : cap;
  if (!kinks.empty()) {
    const auto m = static_cast<Eigen::Index>(kinks.size());
    Eigen::MatrixXd Kss(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      rhs[a] = ws.y[kinks[a]];
      for (const auto i : free) rhs[a] -= ws.K(kinks[a], i) * beta[i];
      for (Eigen::Index c = 0; c < m; ++c) Kss(a, c) = ws.K(kinks[a], kinks[c]);
    }
    const Eigen::VectorXd bs = Kss.completeOrthogonalDecomposition().solve(rhs);
    for (Eigen::Index a = 0; a < m; ++a) {
      if (std::abs(bs[a]) > cap * (1.0 + 1e-9)) return false;
      beta[kinks[a]] = bs[a];
    }
  }
  const Eigen::VectorXd g_new = ws.K * beta;
  const double scale = std::max(1.0, ws.y.cwiseAbs().maxCoeff());
  for (const auto i : free) {
    if ((g_new[i] - ws.y[i]) * (g[i] - ws.y[i]) <= 0.0) return false;
  }
  for (const auto i : kinks) {
    if (std::abs(g_new[i] - ws.y[i]) > 1e-9 * scale) return false;
  }
  beta_out = beta;
  return true;
}

// Minimum-norm subgradient of the exact absolute-loss objective, in beta-coordinates and
// restricted to range(K) like the smooth measure.
double absolute_optimality(const Workspace& ws, const Eigen::VectorXd& beta, const Eigen::VectorXd& g) {
  const Eigen::Index n = ws.y.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double scale = std::max(1.0, ws.y.cwiseAbs().maxCoeff());
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = g[i] - ws.y[i];
    const double pen = 2.0 * ws.lambda * beta[i];
    if (std::abs(r) <= 1e-9 * scale) {
      // choose v in [-1, 1] closest to -pen * n
      const double v = std::clamp(-pen / inv_n, -1.0, 1.0);
      d[i] = inv_n * v + pen;
    } else {
      d[i] = inv_n * (r > 0.0 ? 1.0 : -1.0) + pen;
    }
  }
  return ws.optimality(d);
}

bool keep_in_trace(int iteration) {
  return iteration < 8 || (iteration & (iteration - 1)) == 0 || iteration % 1000 == 0;
}

}  // namespace

double erm_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                     const LossSpec& loss, double lambda) {
  const Eigen::VectorXd g = K * beta;
  double data = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) data += loss.value(y[i], g[i]);
  return data / static_cast<double>(y.size()) + lambda * beta.dot(g);
}

ErmSolution erm_solve_gram(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const LossSpec& loss,
                           const PenaltySpec& penalty, double lambda, const ErmOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("erm: lambda must be >= 0");
  if (penalty.psi != "square") throw ParameterError("erm: only psi(t) = t^2 is supported");
  if (K.rows() != K.cols() || K.rows() != y.size() || y.size() == 0) throw ShapeError("erm: Gram/output shape mismatch");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw ParameterError("erm: tol must be > 0 and max_iter >= 1");

  const Eigen::Index n = y.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  if (eig.info() != Eigen::Success) throw NumericalError("erm: eigendecomposition of the Gram matrix failed");
  const double k_max = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  const double rank_tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * std::max(k_max, 1.0);
  std::vector<Eigen::Index> range_cols;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (eig.eigenvalues()[k] > rank_tol) range_cols.push_back(k);
  }
  Workspace ws{K, y, lambda, Eigen::MatrixXd(n, static_cast<Eigen::Index>(range_cols.size()))};
  for (std::size_t c = 0; c < range_cols.size(); ++c) {
    ws.range_basis.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(range_cols[c]);
  }

  std::vector<double> schedule;
  if (loss.kind == LossKind::absolute) {
    for (double eps = options.smoothing_start; eps > options.smoothing_final * (1.0 + 1e-9);
         eps *= options.smoothing_factor) {
      schedule.push_back(eps);
    }
    schedule.push_back(options.smoothing_final);
  } else {
    schedule.push_back(0.0);
  }

  ErmSolution sol;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  auto& diag = sol.diagnostics;
  int iteration = 0;
  bool polished_done = false;
  constexpr double kArmijo = 1e-4;

  for (double eps : schedule) {
    const StageLoss stage{loss, eps};
    const double lipschitz = stage.curvature_bound() * k_max / static_cast<double>(n) + 2.0 * lambda;
    double step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

    // Smoothing stages only warm-start the exact finish, so they stop at eps.
    const double stage_tol = eps > options.smoothing_final ? std::max(options.tol, eps) : options.tol;
    double f = ws.objective(stage, beta, g);
    Eigen::VectorXd d = ws.functional_gradient(stage, beta, g);
    double measure = ws.optimality(d);
    bool stage_done = measure <= stage_tol;

    while (!stage_done && iteration < options.max_iter) {
      const Eigen::VectorXd Kd = K * d;
      const double slope = d.dot(Kd);  // -(directional derivative) along -d
      double alpha = step;
      Eigen::VectorXd beta_next, g_next;
      double f_next = f;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        beta_next = beta - alpha * d;
        g_next = g - alpha * Kd;
        f_next = ws.objective(stage, beta_next, g_next);
        const double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
        if (f_next <= f - kArmijo * alpha * slope + slack) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      ++iteration;
      if (!accepted) break;

      const Eigen::VectorXd d_next = ws.functional_gradient(stage, beta_next, g_next);
      // Barzilai-Borwein step measured in the K inner product.
      const Eigen::VectorXd s = beta_next - beta;
      const Eigen::VectorXd z = d_next - d;
      const Eigen::VectorXd Ks = g_next - g;
      const double sKs = s.dot(Ks);
      const double sKz = z.dot(Ks);
      step = (sKz > 0.0 && sKs > 0.0) ? sKs / sKz : std::min(2.0 * alpha, 1.0 / std::max(lipschitz, 1e-300));

      beta = beta_next;
      g = g_next;
      f = f_next;
      d = d_next;
      measure = ws.optimality(d);
      stage_done = measure <= stage_tol;
      if (keep_in_trace(iteration)) diag.trace.push_back({iteration, f, measure, alpha});
    }
    diag.final_smoothing = eps;
    diag.objective = f;
    diag.optimality = measure;
    if (loss.kind == LossKind::absolute && lambda > 0.0) {
      Eigen::VectorXd polished;
      if (absolute_kkt_polish(ws, g, 2.0 * eps, polished)) {
        const Eigen::VectorXd g_pol = K * polished;
        const double exact = absolute_optimality(ws, polished, g_pol);
        if (exact <= options.tol &&
            erm_objective(K, y, polished, loss, lambda) <= erm_objective(K, y, beta, loss, lambda) + 1e-12) {
          beta = polished;
          g = g_pol;
          diag.optimality = exact;
          polished_done = true;
          break;
        }
      }
    }
    if (!stage_done) {
      diag.trace.push_back({iteration, f, measure, step});
      std::ostringstream msg;
      msg << "erm: optimality " << measure << " > tol " << options.tol << " after " << iteration << " iterations";
      if (loss.kind == LossKind::absolute) msg << " (smoothing width " << eps << ")";
      throw ConvergenceError(msg.str(), diag.trace);
    }
  }

  if (lambda == 0.0) {
    // minimum-norm representative: drop the ker(K) component of beta
    beta = ws.range_basis * (ws.range_basis.transpose() * beta);
    g = K * beta;
  } else if (!polished_done) {
    // The objective does not see the ker(K) part of beta; fix it at the stationary value
    // beta = -V'(y, g) / (2 lambda n), which leaves g unchanged.
    const StageLoss last{loss, diag.final_smoothing};
    const Eigen::VectorXd d = ws.functional_gradient(last, beta, g);
    const Eigen::VectorXd d_null = d - ws.range_basis * (ws.range_basis.transpose() * d);
    beta -= d_null / (2.0 * lambda);
  }
  diag.iterations = iteration;
  diag.converged = true;
  diag.objective = erm_objective(K, y, beta, loss, lambda);
  sol.beta = beta;
  return sol;
}

ErmSolution erm_representer_solve(const SpectralProblem& problem, const SampleSet& samples, const LossSpec& loss,
                                  const PenaltySpec& penalty, double lambda, const ErmOptions& options) {
  if (samples.design.empty() || samples.design.size() != samples.outputs.size()) {
    throw ShapeError("erm: sample set is empty or ragged");
  }
  const Eigen::MatrixXd K = gram_matrix(problem, samples.design).entries;
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(samples.outputs.data(), static_cast<Eigen::Index>(samples.outputs.size()));
  ErmSolution sol = erm_solve_gram(K, y, loss, penalty, lambda, options);
  sol.g_coeffs = representer_to_coeffs(problem, samples.design, sol.beta);
  return sol;
}

}  // namespace invlab
