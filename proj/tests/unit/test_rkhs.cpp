#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "invlab/errors.hpp"
#include "invlab/rkhs.hpp"
#include "invlab/rng.hpp"

using namespace invlab;

namespace {

const SpectralProblem kTwo = build_power_law_problem(2, 2.0, 1.0);

Coeffs vec(std::initializer_list<double> v) {
  Coeffs c(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) c[i++] = x;
  return c;
}

}  // namespace

TEST(Kernel, Examples) {
  // u_1(1/2) = sqrt2, u_2(1/2) = 0
  EXPECT_NEAR(kernel_eval(kTwo, 0.5, 0.5), 2.0, 1e-15);
  EXPECT_EQ(kernel_eval(build_power_law_problem(30, 2.0, 1.0), 0.0, 0.37), 0.0);
  // 1*1*1 + 0.25*sqrt2*(-sqrt2)
  EXPECT_NEAR(kernel_eval(kTwo, 0.25, 0.75), 0.5, 1e-15);
}

TEST(Kernel, DomainError) {
  EXPECT_THROW(kernel_eval(kTwo, 1.2, 0.5), DomainError);
  EXPECT_THROW(kernel_eval(kTwo, 0.5, -0.01), DomainError);
}

TEST(Gram, TwoPoints) {
  const std::vector<double> pts{0.25, 0.75};
  const auto g = gram_matrix(kTwo, pts);
  EXPECT_NEAR(g.entries(0, 0), 1.5, 1e-15);
  EXPECT_NEAR(g.entries(1, 1), 1.5, 1e-15);
  EXPECT_NEAR(g.entries(0, 1), 0.5, 1e-15);
  EXPECT_EQ(g.entries(0, 1), g.entries(1, 0));
}

TEST(Gram, SinglePointAtZero) {
  const std::vector<double> pts{0.0};
  const auto g = gram_matrix(build_power_law_problem(10, 2.0, 1.0), pts);
  ASSERT_EQ(g.entries.rows(), 1);
  EXPECT_EQ(g.entries(0, 0), 0.0);
}

TEST(Gram, RepeatedPointRankOne) {
  const std::vector<double> pts{0.5, 0.5};
  const auto g = gram_matrix(build_power_law_problem(1, 2.0, 1.0), pts);
  EXPECT_NEAR(g.entries(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(g.entries(0, 1), 2.0, 1e-15);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.entries);
  EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-14);
}

TEST(Gram, EmptyIsShapeError) {
  EXPECT_THROW(gram_matrix(kTwo, std::vector<double>{}), ShapeError);
}

TEST(Gram, MatchesKernelEvalAndFeatures) {
  const auto p = build_power_law_problem(40, 2.0, 1.0);
  const CounterRng rng(3, Stream::test);
  std::vector<double> pts(15);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = rng.uniform(i);
  const auto g = gram_matrix(p, pts);
  const Eigen::MatrixXd phi = feature_matrix(p, pts);
  const Eigen::MatrixXd viaphi = phi * phi.transpose();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < pts.size(); ++k) {
      EXPECT_NEAR(g.entries(i, k), kernel_eval(p, pts[i], pts[k]), 1e-14);
      EXPECT_EQ(g.entries(i, k), g.entries(k, i));
      EXPECT_NEAR(g.entries(i, k), viaphi(i, k), 1e-13);
    }
  }
}

TEST(Gram, CsvHeaderListsPoints) {
  const auto g = gram_matrix(kTwo, std::vector<double>{0.25, 0.75});
  std::ostringstream out;
  write_gram_csv(g, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "0.25,0.75");
  std::string row;
  std::getline(in, row);
  EXPECT_EQ(row.substr(0, 3), "1.5");
}

TEST(RkhsNorm, Examples) {
  EXPECT_NEAR(rkhs_norm(kTwo, vec({1, 0.5})), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(rkhs_norm(kTwo, Coeffs::Zero(2)), 0.0);
  EXPECT_DOUBLE_EQ(rkhs_norm(build_power_law_problem(1, 2.0, 4.0), vec({2})), 1.0);
}

TEST(Pullback, Examples) {
  const Coeffs f = correspondence_pullback(kTwo, vec({1, 0.25}));
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_DOUBLE_EQ(f[1], 0.5);
  EXPECT_EQ(correspondence_pullback(kTwo, Coeffs::Zero(2)).norm(), 0.0);
  EXPECT_EQ(correspondence_pullback(build_power_law_problem(1, 2.0, 1.0), vec({7}))[0], 7.0);
}

TEST(Pullback, RoundTrip) {
  const auto p = build_power_law_problem(100, 2.0, 1.0);
  const CounterRng rng(5, Stream::test);
  Coeffs g(100);
  for (int j = 0; j < 100; ++j) g[j] = rng.normal(j) * p.mu()[j];
  const Coeffs back = forward_data(p, correspondence_pullback(p, g)).coeffs;
  EXPECT_LE((back - g).norm(), 1e-12 * g.norm());
}

TEST(Isometry, RandomSources) {
  const auto p = build_power_law_problem(100, 2.5, 1.0);
  for (int t = 0; t < 100; ++t) {
    const CounterRng rng(9, Stream::test, t);
    Coeffs f(100);
    for (int j = 0; j < 100; ++j) f[j] = rng.normal(j);
    EXPECT_NEAR(rkhs_norm(p, forward_data(p, f).coeffs), f.norm(), 1e-10 * f.norm());
  }
}
