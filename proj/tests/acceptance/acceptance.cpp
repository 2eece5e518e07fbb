// Acceptance run: one line per criterion with its measured value and wall time.
// Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invlab/erm.hpp"
#include "invlab/estimators.hpp"
#include "invlab/experiments.hpp"
#include "invlab/filters.hpp"
#include "invlab/rates.hpp"
#include "invlab/rkhs.hpp"
#include "invlab/rng.hpp"

using namespace invlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string verdict_summary(const StudyReport& r) {
  std::ostringstream s;
  for (const auto& v : r.verdicts) {
    if (s.tellp() > 0) s << "; ";
    s << (v.pass ? "" : "FAIL ") << v.criterion << '=' << v.value << ' ' << v.relation << ' ' << v.threshold;
  }
  return s.str();
}

const Verdict* find_verdict(const StudyReport& r, const std::string& name) {
  for (const auto& v : r.verdicts) {
    if (v.criterion == name) return &v;
  }
  return nullptr;
}

Outcome algebraic_identities() {
  const CounterRng rng(2024, Stream::test, 1);
  double worst_conj = 0.0, worst_inv = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double sigma = std::pow(10.0, -3.0 + 4.0 * rng.uniform(2 * t));
    const double eps = std::pow(10.0, -4.0 + 5.0 * rng.uniform(2 * t + 1));
    const RateLink link{sigma, eps, 1.0};
    for (long long n = 1; n <= 10000; ++n) {
      const double d = delta_of(n, link);
      const double s2n = sigma * sigma / static_cast<double>(n);
      // Delta is the positive root of d^2 + 2 eps d = sigma^2 / n.
      worst_conj = std::max(worst_conj, std::abs(d * d + 2.0 * eps * d - s2n) / s2n);
      worst_inv = std::max(worst_inv, std::abs(n_of(d, link).value - static_cast<double>(n)) / static_cast<double>(n));
    }
  }
  return {worst_conj <= 1e-12 && worst_inv <= 1e-9,
          "conjugate " + fmt("%.3g", worst_conj) + " <= 1e-12, inversion " + fmt("%.3g", worst_inv) + " <= 1e-9"};
}

Outcome methods_equivalence() {
  double worst_fit = 0.0, worst_norm = 0.0;
  for (int t = 0; t < 20; ++t) {
    const CounterRng rng(7, Stream::test, 100 + t);
    const int J = 1 + static_cast<int>(rng.bits(0) % 50);
    const int n = 1 + static_cast<int>(rng.bits(1) % 30);
    const double b = 1.2 + 2.8 * rng.uniform(2);
    const double lambda = std::pow(10.0, -4.0 + 3.0 * rng.uniform(3));
    const auto p = build_power_law_problem(J, b, 1.0);
    const auto truth = make_source_solution(p, 0.5 + rng.uniform(4), Coeffs::Ones(J));
    const auto s = sample_outputs(p, truth, sample_design(Scheme::iid_uniform, n, 11 + t), NoiseModel::gaussian(0.1),
                                  11 + t);
    const Estimate f = estimator_learn(p, make_tikhonov(lambda), s);
    const KernelSolution g = kernel_tikhonov(p, s, lambda);
    const Coeffs af = forward_data(p, f.coeffs).coeffs;
    worst_fit = std::max(worst_fit, (af - g.g_coeffs).norm() / g.g_coeffs.norm());
    worst_norm = std::max(worst_norm, std::abs(rkhs_norm(p, g.g_coeffs) - f.coeffs.norm()) / f.coeffs.norm());
  }
  return {worst_fit <= 1e-10 && worst_norm <= 1e-10,
          "fit " + fmt("%.3g", worst_fit) + " <= 1e-10, norm " + fmt("%.3g", worst_norm) + " <= 1e-10"};
}

Outcome representer_oracle() {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const CounterRng rng(9, Stream::test, 200 + t);
    const int J = 2 + static_cast<int>(rng.bits(0) % 49);
    const int n = 2 + static_cast<int>(rng.bits(1) % 29);
    const double lambda = std::pow(10.0, -3.0 + 2.0 * rng.uniform(2));
    const auto p = build_power_law_problem(J, 2.0, 1.0);
    const auto truth = make_source_solution(p, 1.0, Coeffs::Ones(J));
    const auto s = sample_outputs(p, truth, sample_design(Scheme::iid_uniform, n, 31 + t), NoiseModel::gaussian(0.1),
                                  31 + t);
    const Eigen::MatrixXd K = gram_matrix(p, s.design).entries;
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.outputs.data(), n);
    const Eigen::MatrixXd A = K + lambda * n * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd beta = A.ldlt().solve(y);
    const auto sol = erm_representer_solve(p, s, LossSpec::square(), PenaltySpec{}, lambda);
    worst = std::max(worst, (sol.beta - beta).norm() / beta.norm());
  }
  const auto p2 = build_power_law_problem(2, 2.0, 1.0);
  Coeffs w(2);
  w << 1.0, 1.0;
  const auto t2 = make_source_solution(p2, 0.5, w);
  const auto s2 = sample_outputs(p2, t2, sample_design(Scheme::grid, 2, 0), NoiseModel::none(), 0);
  const auto sol2 = erm_representer_solve(p2, s2, LossSpec::square(), PenaltySpec{}, 0.5);
  const double e2 = std::max(std::abs(sol2.beta[0] - 0.510110), std::abs(sol2.beta[1] - 0.156557));
  return {worst <= 1e-6 && e2 <= 1e-5,
          "random " + fmt("%.3g", worst) + " <= 1e-6, 2x2 " + fmt("%.3g", e2) + " <= 1e-5 (beta = " +
              fmt("%.6f", sol2.beta[0]) + ", " + fmt("%.6f", sol2.beta[1]) + ")"};
}

Outcome lemma() {
  const auto r = run_study(reference_config("lemma-check"));
  const Verdict* ineq = find_verdict(r, "lemma-inequality");
  const Verdict* mean = find_verdict(r, "mean-matches-f-lambda");
  const bool ok = ineq && mean && ineq->pass && mean->pass;
  return {ok, verdict_summary(r)};
}

Outcome stat_rate() {
  const auto r = run_study(reference_config("stat-rate"));
  const Verdict* slope = find_verdict(r, "slope");
  return {slope && slope->pass, verdict_summary(r)};
}

Outcome det_rates() {
  const auto a = run_study(reference_config("det-rate-classical"));
  const auto b = run_study(reference_config("det-rate-converted"));
  const double ta = a.theory.at("exponent");
  const double tb = b.theory.at("exponent");
  const bool ok = a.fit && b.fit && std::abs(ta - 4.0 / 3.0) < 1e-12 && std::abs(tb - 1.0) < 1e-12 &&
                  std::abs(a.fit->slope - ta) <= 0.15 && std::abs(b.fit->slope - tb) <= 0.15;
  return {ok, "(a) classical slope " + fmt("%.4f", a.fit ? a.fit->slope : NAN) + " vs " + fmt("%.4f", ta) +
                  ", (b) converted slope " + fmt("%.4f", b.fit ? b.fit->slope : NAN) + " vs " + fmt("%.4f", tb) +
                  " (+-0.15)"};
}

Outcome conversions() {
  RateExponents up;
  up.alpha = 2.0 / 3.5;
  up.p = 1.0 / 3.5;
  up.gamma = 1.5;
  RateExponents low;
  low.alpha = 4.0 / 3.0;
  low.p_star = 2.0 / 3.0;
  low.gamma = 1.5;
  const double u = convert_upper(up).error_exponent;
  const double l = convert_lower(low).error_exponent;
  const double tg = loss_factor_tau(1.0, 2.0, TauVariant::general);
  const double tt = loss_factor_tau(1.0, 2.0, TauVariant::tikhonov);
  const bool ok = u == 1.0 && l == 2.0 / 3.0 && tg == 7.0 / 6.0 && tt == 4.0 / 3.0;
  return {ok, "upper " + fmt("%.17g", u) + ", lower " + fmt("%.17g", l) + ", tau " + fmt("%.17g", tg) + " / " +
                  fmt("%.17g", tt)};
}

Outcome gamma_study() {
  const auto r = run_study(reference_config("gamma-study"));
  return {r.passed(), verdict_summary(r)};
}

Outcome certificates() {
  const auto cert = certify_filter(FilterKind::tikhonov, 1e-8, 1.0, 1e-6, 1.0, 50, 10000);
  return {cert.worst_margin >= -1e-12 && cert.lambdas_checked == 50 && cert.grid_points == 10000,
          "worst margin " + fmt("%.3g", cert.worst_margin) + " >= -1e-12 (" + cert.worst_property + ")"};
}

Outcome variance_slope() {
  const auto r = variance_sweep(reference_config("variance-sweep"));
  const Verdict* v = find_verdict(r, "variance-slope");
  return {v && v->pass, verdict_summary(r) + ", gamma_hat " + fmt("%.4f", r.stats.at("gamma_hat"))};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "algebraic-identities", 1.0, algebraic_identities},
      {2, "methods-equivalence", 5.0, methods_equivalence},
      {3, "representer-oracle", 10.0, representer_oracle},
      {4, "lemma-inequality-and-decomposition", 60.0, lemma},
      {5, "statistical-upper-rate", 300.0, stat_rate},
      {6, "deterministic-rates", 30.0, det_rates},
      {7, "conversion-calculator", 1.0, conversions},
      {8, "gamma-convergence", 30.0, gamma_study},
      {9, "filter-certificates", 5.0, certificates},
      {10, "variance-bound-slope", 120.0, variance_slope},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] %2d %-36s %8.3fs (budget %gs%s)  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                c.budget_seconds, in_time ? "" : ", exceeded", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
