#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "invlab/errors.hpp"
#include "invlab/sampling.hpp"

using namespace invlab;

namespace {

Coeffs vec(std::initializer_list<double> v) {
  Coeffs c(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) c[i++] = x;
  return c;
}

}  // namespace

TEST(Design, Grid) {
  EXPECT_EQ(sample_design(Scheme::grid, 2, 123).points, (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(sample_design(Scheme::grid, 1, 0).points, (std::vector<double>{0.5}));
  const auto d = sample_design(Scheme::grid, 7, 0);
  for (int i = 1; i <= 7; ++i) EXPECT_EQ(d.points[i - 1], (i - 0.5) / 7);
}

TEST(Design, UniformMean) {
  const auto d = sample_design(Scheme::iid_uniform, 1000, 7);
  double mean = 0.0;
  for (double x : d.points) {
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
    mean += x;
  }
  EXPECT_NEAR(mean / 1000, 0.5, 0.05);
}

TEST(Design, Errors) {
  EXPECT_THROW(sample_design(Scheme::grid, 0, 0), ShapeError);
  EXPECT_THROW(scheme_from_string("sobol"), ParameterError);
}

TEST(Outputs, NoiselessGrid) {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  const auto t = make_source_solution(p, 0.5, vec({1, 1}));
  const auto s = sample_outputs(p, t, sample_design(Scheme::grid, 2, 0), NoiseModel::none(), 0);
  // y = (1, 0.25) evaluated at 1/4 and 3/4
  EXPECT_NEAR(s.outputs[0], 1.0 + 0.25 * std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(s.outputs[1], 1.0 - 0.25 * std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(s.outputs[0], 1.353553, 1e-6);
  EXPECT_NEAR(s.outputs[1], 0.646447, 1e-6);
}

TEST(Outputs, NoiseMeanAtMidpoint) {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  const auto t = make_source_solution(p, 0.5, vec({1, 1}));
  const Design one{Scheme::grid, {0.5}};
  const double exact = std::numbers::sqrt2;  // y(1/2) = 1*sqrt2 + 0.25*0
  double sum = 0.0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) sum += sample_outputs(p, t, one, NoiseModel::gaussian(0.1), 5, r).outputs[0];
  EXPECT_NEAR(sum / reps, exact, 3.0 * 0.1 / 100.0);
}

TEST(Outputs, Reproducible) {
  const auto p = build_power_law_problem(30, 2.0, 1.0);
  const auto t = make_source_solution(p, 1.0, Coeffs::Ones(30));
  const auto a = sample_outputs(p, t, sample_design(Scheme::iid_uniform, 50, 4, 2), NoiseModel::gaussian(0.3), 4, 2);
  const auto b = sample_outputs(p, t, sample_design(Scheme::iid_uniform, 50, 4, 2), NoiseModel::gaussian(0.3), 4, 2);
  EXPECT_EQ(a.design, b.design);
  EXPECT_EQ(a.outputs, b.outputs);
  const auto c = sample_outputs(p, t, sample_design(Scheme::iid_uniform, 50, 4, 3), NoiseModel::gaussian(0.3), 4, 3);
  EXPECT_NE(a.outputs, c.outputs);
}

TEST(Outputs, CsvColumns) {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  const auto t = make_source_solution(p, 0.5, vec({1, 1}));
  const auto s = sample_outputs(p, t, sample_design(Scheme::grid, 2, 0), NoiseModel::none(), 0);
  std::ostringstream out;
  write_samples_csv(s, out);
  EXPECT_EQ(out.str().substr(0, 6), "i,x,y\n");
  EXPECT_NE(out.str().find("\n1,0.25,"), std::string::npos);
}

TEST(NoiseModel, ZeroSigmaIsDirac) {
  EXPECT_EQ(NoiseModel::gaussian(0.0).kind, NoiseKind::none);
  EXPECT_THROW(NoiseModel::gaussian(-1.0), ParameterError);
}

TEST(Perturb, ZeroDeltaUnchanged) {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  const DataFunction y = forward_data(p, vec({1, 0.5}));
  const auto yd = perturb_data(p, y, PerturbationSpec::random_unit(0.0), 1);
  EXPECT_EQ(yd.coeffs, y.coeffs);
}

TEST(Perturb, AdversarialModeTikhonov) {
  // s(1)*1 = 0.5 beats s(0.25)*0.5 = 0.4
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  EXPECT_EQ(adversarial_mode(p, make_tikhonov(1.0)), 1);
  const auto yd = perturb_data(p, forward_data(p, vec({1, 0.5})),
                               PerturbationSpec::filter_adversarial(0.1, make_tikhonov(1.0)), 0);
  EXPECT_NEAR(yd.coeffs[0], 1.1, 1e-15);
  EXPECT_EQ(yd.coeffs[1], 0.25);
}

TEST(Perturb, FixedMode) {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  DataFunction y;
  y.coeffs = vec({1, 0.25});
  const auto yd = perturb_data(p, y, PerturbationSpec::fixed_mode(0.3, 2), 0);
  EXPECT_EQ(yd.coeffs[0], 1.0);
  EXPECT_DOUBLE_EQ(yd.coeffs[1], 0.55);
  EXPECT_EQ(yd.kind, DataKind::perturbed);
  EXPECT_EQ(yd.delta, 0.3);
}

TEST(Perturb, Errors) {
  const auto p = build_power_law_problem(2, 2.0, 1.0);
  const DataFunction y = forward_data(p, vec({1, 0.5}));
  EXPECT_THROW(perturb_data(p, y, PerturbationSpec::fixed_mode(0.1, 3), 0), ShapeError);
  EXPECT_THROW(perturb_data(p, y, PerturbationSpec::random_unit(-0.1), 0), ParameterError);
}

TEST(Perturb, NormIsExactlyDelta) {
  const auto p = build_power_law_problem(100, 2.0, 1.0);
  const DataFunction y = forward_data(p, Coeffs::Ones(100));
  for (double delta : {1e-8, 1e-3, 0.7}) {
    for (const auto& spec : {PerturbationSpec::random_unit(delta), PerturbationSpec::fixed_mode(delta, 50),
                             PerturbationSpec::filter_adversarial(delta, make_cutoff(0.01))}) {
      const auto yd = perturb_data(p, y, spec, 17, 4);
      EXPECT_NEAR((yd.coeffs - y.coeffs).norm(), delta, 1e-14);
    }
  }
}

TEST(Perturb, RandomDirectionIsUnitAndSeeded) {
  const auto p = build_power_law_problem(20, 2.0, 1.0);
  const Coeffs e1 = perturbation_direction(p, PerturbationSpec::random_unit(1.0), 3, 0);
  const Coeffs e2 = perturbation_direction(p, PerturbationSpec::random_unit(1.0), 3, 0);
  const Coeffs e3 = perturbation_direction(p, PerturbationSpec::random_unit(1.0), 3, 1);
  EXPECT_NEAR(e1.norm(), 1.0, 1e-15);
  EXPECT_EQ(e1, e2);
  EXPECT_NE(e1, e3);
}
