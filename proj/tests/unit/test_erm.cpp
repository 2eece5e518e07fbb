#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "invlab/erm.hpp"
#include "invlab/errors.hpp"
#include "invlab/estimators.hpp"
#include "invlab/rkhs.hpp"
#include "invlab/rng.hpp"

using namespace invlab;

namespace {

SampleSet two_point_clean() {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  Coeffs w(2);
  w << 1.0, 1.0;
  const auto t = make_source_solution(p, 0.5, w);
  return sample_outputs(p, t, sample_design(Scheme::grid, 2, 0), NoiseModel::none(), 0);
}

SampleSet random_instance(const SpectralProblem& p, int n, std::uint64_t seed) {
  const auto t = make_source_solution(p, 1.0, Coeffs::Ones(p.size()));
  return sample_outputs(p, t, sample_design(Scheme::iid_uniform, n, seed), NoiseModel::gaussian(0.1), seed);
}

}  // namespace

TEST(Loss, Values) {
  EXPECT_EQ(LossSpec::square().value(1.0, 3.0), 4.0);
  EXPECT_EQ(LossSpec::absolute().value(1.0, 3.0), 2.0);
  EXPECT_EQ(LossSpec::gaussian_nll(0.5).value(1.0, 2.0), 2.0);
  for (const auto& l : {LossSpec::square(), LossSpec::absolute(), LossSpec::gaussian_nll(0.3)}) {
    EXPECT_EQ(l.value(0.7, 0.7), 0.0);
    EXPECT_GE(l.value(-1.0, 2.0), 0.0);
  }
  EXPECT_TRUE(LossSpec::square().strictly_convex());
  EXPECT_FALSE(LossSpec::absolute().strictly_convex());
  EXPECT_THROW(LossSpec::gaussian_nll(0.0), ParameterError);
}

TEST(Erm, SquareLossTwoPointCase) {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  const auto sol = erm_representer_solve(p, two_point_clean(), LossSpec::square(), PenaltySpec{}, 0.5);
  EXPECT_NEAR(sol.beta[0], 0.510110, 1e-5);
  EXPECT_NEAR(sol.beta[1], 0.156557, 1e-5);
  EXPECT_TRUE(sol.diagnostics.converged);
}

TEST(Erm, SquareLossMatchesClosedForm) {
  for (int t = 0; t < 20; ++t) {
    const CounterRng rng(31, Stream::test, t);
    const int J = 5 + static_cast<int>(rng.bits(0) % 46);
    const int n = 2 + static_cast<int>(rng.bits(1) % 29);
    const double lambda = std::pow(10.0, -3.0 + 2.0 * rng.uniform(2));
    const auto p = build_power_law_problem(J, 2.0, 1.0);
    const auto s = random_instance(p, n, 100 + t);
    const auto ks = kernel_tikhonov(p, s, lambda);
    const auto sol = erm_representer_solve(p, s, LossSpec::square(), PenaltySpec{}, lambda);
    EXPECT_LE((sol.beta - ks.beta).norm(), 1e-6 * ks.beta.norm()) << "instance " << t;
    EXPECT_LE((sol.g_coeffs - ks.g_coeffs).norm(), 1e-6 * ks.g_coeffs.norm()) << "instance " << t;
  }
}

TEST(Erm, GaussianNllClosedForm) {
  const auto p = build_power_law_problem(20, 2.0, 1.0);
  const auto s = random_instance(p, 10, 5);
  const double sigma = 0.4, lambda = 0.01;
  const Eigen::MatrixXd K = gram_matrix(p, s.design).entries;
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.outputs.data(), 10);
  const Eigen::MatrixXd A = K + 2.0 * sigma * sigma * lambda * 10.0 * Eigen::MatrixXd::Identity(10, 10);
  const Eigen::VectorXd beta = A.ldlt().solve(y);
  const auto sol = erm_representer_solve(p, s, LossSpec::gaussian_nll(sigma), PenaltySpec{}, lambda);
  EXPECT_LE((sol.beta - beta).norm(), 1e-6 * beta.norm());
}

TEST(Erm, ZeroDataGivesZero) {
  const auto p = build_power_law_problem(10, 2.0, 1.0);
  SampleSet s = random_instance(p, 5, 2);
  std::fill(s.outputs.begin(), s.outputs.end(), 0.0);
  for (const auto& loss : {LossSpec::square(), LossSpec::absolute(), LossSpec::gaussian_nll(0.2)}) {
    const auto sol = erm_representer_solve(p, s, loss, PenaltySpec{}, 0.1);
    EXPECT_EQ(sol.beta.norm(), 0.0) << to_string(loss.kind);
  }
}

TEST(Erm, AbsoluteLossRepeatedPointGivesMedian) {
  const auto p = build_power_law_problem(10, 2.0, 1.0);
  SampleSet s;
  s.design = {0.4, 0.4, 0.4};
  s.outputs = {1.0, 1.0, 5.0};
  const double lambda = 1e-6;
  const auto sol = erm_representer_solve(p, s, LossSpec::absolute(), PenaltySpec{}, lambda);
  const double k = kernel_eval(p, 0.4, 0.4);
  const double fitted = k * sol.beta.sum();

  // Brute-force scan of t = g(x): (1/3) sum |Y_i - t| + lambda t^2 / k.
  double best_t = 0.0, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 600000; ++i) {
    const double t = -1.0 + 6.0 * i / 600000.0;
    const double obj = (std::abs(1.0 - t) * 2.0 + std::abs(5.0 - t)) / 3.0 + lambda * t * t / k;
    if (obj < best) {
      best = obj;
      best_t = t;
    }
  }
  EXPECT_NEAR(best_t, 1.0, 1e-4);
  EXPECT_NEAR(fitted, best_t, 1e-4);
  EXPECT_NEAR(erm_objective(gram_matrix(p, s.design).entries, Eigen::Vector3d(1.0, 1.0, 5.0), sol.beta,
                            LossSpec::absolute(), lambda),
              best, 1e-7);
}

TEST(Erm, AbsoluteLossDistinctPointsInterpolatesAsLambdaVanishes) {
  const auto p = build_power_law_problem(20, 2.0, 1.0);
  SampleSet s;
  s.design = {0.2, 0.5, 0.8};
  s.outputs = {1.0, 1.0, 5.0};
  const auto sol = erm_representer_solve(p, s, LossSpec::absolute(), PenaltySpec{}, 1e-9);
  const Eigen::VectorXd fitted = gram_matrix(p, s.design).entries * sol.beta;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(fitted[i], s.outputs[i], 1e-4);
}

TEST(Erm, ZeroLambdaGivesMinimumNorm) {
  const auto p = build_power_law_problem(10, 2.0, 1.0);
  SampleSet s;
  s.design = {0.3, 0.3, 0.7};
  s.outputs = {1.0, 2.0, 0.5};
  const auto sol = erm_representer_solve(p, s, LossSpec::square(), PenaltySpec{}, 0.0);
  const Eigen::MatrixXd K = gram_matrix(p, s.design).entries;
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.outputs.data(), 3);
  const Eigen::VectorXd pinv = K.completeOrthogonalDecomposition().pseudoInverse() * y;
  EXPECT_LE((sol.beta - pinv).norm(), 1e-6 * pinv.norm());
  // The duplicated point is fitted by the average of its two outputs.
  EXPECT_NEAR((K * sol.beta)[0], 1.5, 1e-6);
}

TEST(Erm, Deterministic) {
  const auto p = build_power_law_problem(30, 2.0, 1.0);
  const auto s = random_instance(p, 15, 9);
  const auto a = erm_representer_solve(p, s, LossSpec::absolute(), PenaltySpec{}, 1e-3);
  const auto b = erm_representer_solve(p, s, LossSpec::absolute(), PenaltySpec{}, 1e-3);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_EQ(a.diagnostics.iterations, b.diagnostics.iterations);
}

TEST(Erm, NonConvergenceCarriesTrace) {
  const auto p = build_power_law_problem(30, 2.0, 1.0);
  const auto s = random_instance(p, 15, 9);
  ErmOptions opts;
  opts.max_iter = 3;
  try {
    erm_representer_solve(p, s, LossSpec::square(), PenaltySpec{}, 1e-4, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_FALSE(e.trace().empty());
    EXPECT_LE(e.trace().back().iteration, 3);
  }
}

TEST(Erm, Errors) {
  const auto p = build_power_law_problem(5, 2.0, 1.0);
  const auto s = random_instance(p, 4, 1);
  EXPECT_THROW(erm_representer_solve(p, s, LossSpec::square(), PenaltySpec{}, -1.0), ParameterError);
  EXPECT_THROW(erm_representer_solve(p, s, LossSpec::square(), PenaltySpec{"abs"}, 0.1), ParameterError);
  SampleSet empty;
  EXPECT_THROW(erm_representer_solve(p, empty, LossSpec::square(), PenaltySpec{}, 0.1), ShapeError);
}
