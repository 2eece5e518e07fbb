#include <gtest/gtest.h>

#include <cmath>

#include "invlab/errors.hpp"
#include "invlab/estimators.hpp"
#include "invlab/rates.hpp"

using namespace invlab;

namespace {

Coeffs vec(std::initializer_list<double> v) {
  Coeffs c(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) c[i++] = x;
  return c;
}

RateExponents upper(double alpha, double p, double gamma) {
  RateExponents e;
  e.alpha = alpha;
  e.p = p;
  e.gamma = gamma;
  return e;
}

RateExponents lower(double alpha, double p_star, double gamma) {
  RateExponents e;
  e.alpha = alpha;
  e.p_star = p_star;
  e.gamma = gamma;
  return e;
}

}  // namespace

TEST(HsNorm, Examples) {
  const auto p1 = build_power_law_problem(1, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(hs_norm(p1, make_tikhonov(1.0)), 0.5);
  const auto p2 = build_power_law_problem(2, 2.0, 1.0);
  // 0.25 + 0.64 * 0.25
  EXPECT_NEAR(hs_norm(p2, make_tikhonov(1.0)), std::sqrt(0.41), 1e-15);
  EXPECT_NEAR(hs_norm(p2, make_tikhonov(1.0)), 0.640312, 1e-6);
  EXPECT_EQ(hs_norm(p2, make_cutoff(1.5)), 0.0);
  EXPECT_DOUBLE_EQ(operator_norm(p2, make_tikhonov(1.0)), 0.5);
}

TEST(Epsilon, Examples) {
  const auto p1 = build_power_law_problem(1, 2.0, 1.0);
  const auto t1 = make_source_solution(p1, 1.0, vec({1}));
  EXPECT_DOUBLE_EQ(epsilon_lambda(p1, make_tikhonov(1.0), t1), 1.0);

  const auto p = build_power_law_problem(20, 2.0, 1.0);
  const auto t = make_source_solution(p, 1.0, Coeffs::Ones(20));
  EXPECT_EQ(epsilon_lambda(p, make_cutoff(p.mu_min()), t), 0.0);
  EXPECT_EQ(epsilon_lambda(p, make_tikhonov(0.1), make_source_solution(p, 1.0, Coeffs::Zero(20))), 0.0);
  EXPECT_THROW(epsilon_lambda(p, make_cutoff(2.0), t), DegenerateFilterError);
}

TEST(Epsilon, FromDefinition) {
  const auto p = build_power_law_problem(50, 2.0, 1.0);
  const auto t = make_source_solution(p, 1.0, Coeffs::Ones(50));
  const auto f = make_tikhonov(0.01);
  const Coeffs fl = solve_continuous(p, f, forward_data(p, t.coeffs)).coeffs;
  EXPECT_NEAR(epsilon_lambda(p, f, t), (fl - t.coeffs).norm() / hs_norm(p, f), 1e-15);
  EXPECT_NEAR(bias_norm(p, f, t), (fl - t.coeffs).norm(), 1e-15);
  const auto link = RateLink::from_problem(p, f, t, 0.2);
  EXPECT_EQ(link.sigma, 0.2);
  EXPECT_EQ(link.lambda, 0.01);
  EXPECT_EQ(link.epsilon, epsilon_lambda(p, f, t));
}

TEST(DeltaOf, Examples) {
  EXPECT_EQ(delta_of(1, {1.0, 0.0, 1.0}), 1.0);
  EXPECT_EQ(delta_of(4, {1.0, 0.0, 1.0}), 0.5);
  EXPECT_NEAR(delta_of(1, {1.0, 1.0, 1.0}), std::sqrt(2.0) - 1.0, 1e-15);
  EXPECT_THROW(delta_of(0, {1.0, 0.0, 1.0}), DomainError);
}

TEST(NOf, Examples) {
  const auto a = n_of(1.0, {1.0, 0.0, 1.0});
  EXPECT_EQ(a.value, 1.0);
  EXPECT_EQ(a.floor, 1);
  const auto b = n_of(0.1, {1.0, 1.0, 1.0});
  EXPECT_NEAR(b.value, 1.0 / 0.21, 1e-12);
  EXPECT_NEAR(b.value, 4.7619, 1e-4);
  EXPECT_EQ(b.floor, 4);
  const RateLink link{0.3, 0.05, 1.0};
  EXPECT_NEAR(n_of(delta_of(100, link), link).value, 100.0, 1e-9 * 100.0);
  EXPECT_THROW(n_of(0.0, link), DomainError);
}

TEST(NOf, ExactInversionOverRange) {
  for (const RateLink link : {RateLink{1.0, 0.0, 1.0}, RateLink{0.1, 0.3, 1.0}, RateLink{2.0, 1e-3, 1.0}}) {
    for (long long n = 1; n <= 10000; ++n) {
      ASSERT_NEAR(n_of(delta_of(n, link), link).value, static_cast<double>(n), 1e-9 * n) << n;
    }
  }
}

TEST(ConvertUpper, Examples) {
  const auto a = convert_upper(upper(1.0, 1.0, 1.0));
  EXPECT_EQ(a.error_exponent, 2.0);
  EXPECT_EQ(a.lambda_exponent, 2.0);
  EXPECT_EQ(a.branch, RateBranch::fast);

  const auto b = convert_upper(upper(2.0 / 3.5, 1.0 / 3.5, 1.5));
  EXPECT_EQ(b.error_exponent, 1.0);
  EXPECT_EQ(b.lambda_exponent, 0.5);
  EXPECT_EQ(b.branch, RateBranch::slow);

  // p * gamma == 1/2 exactly belongs to the fast branch.
  const auto c = convert_upper(upper(1.0, 0.25, 2.0));
  EXPECT_EQ(c.branch, RateBranch::fast);
  EXPECT_EQ(c.error_exponent, 2.0);
  EXPECT_EQ(c.lambda_exponent, 0.5);

  EXPECT_THROW(convert_upper(upper(0.0, 1.0, 1.0)), ParameterError);
  EXPECT_THROW(convert_upper(upper(1.0, 1.0, 0.0)), ParameterError);
  EXPECT_THROW(convert_upper(lower(1.0, 1.0, 1.0)), ParameterError);
}

TEST(ConvertLower, Examples) {
  const auto a = convert_lower(lower(4.0 / 3.0, 2.0 / 3.0, 1.5));
  EXPECT_EQ(a.error_exponent, 2.0 / 3.0);
  EXPECT_EQ(a.lambda_exponent, 1.0 / 3.0);
  EXPECT_EQ(a.branch, RateBranch::fast);

  const auto b = convert_lower(lower(1.0, 1.0, 0.5));
  EXPECT_DOUBLE_EQ(b.error_exponent, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.lambda_exponent, 2.0 / 3.0);
  EXPECT_EQ(b.branch, RateBranch::slow);

  EXPECT_EQ(convert_lower(lower(2.0, 2.0, 1.0)).error_exponent, 1.0);
  EXPECT_THROW(convert_lower(lower(1.0, -1.0, 1.0)), ParameterError);
}

TEST(Tau, Examples) {
  EXPECT_EQ(loss_factor_tau(1.0, 2.0, TauVariant::general), 3.5 / 3.0);
  EXPECT_EQ(loss_factor_tau(1.0, 2.0, TauVariant::general), 7.0 / 6.0);
  EXPECT_EQ(loss_factor_tau(1.0, 2.0, TauVariant::tikhonov), 4.0 / 3.0);
  EXPECT_NEAR(loss_factor_tau(1.0, 1e3, TauVariant::general), 1.0, 1e-3);
  for (double r : {0.1, 1.0, 5.0}) {
    for (double b : {1.01, 2.0, 50.0}) {
      EXPECT_GT(loss_factor_tau(r, b, TauVariant::general), 1.0);
      EXPECT_LT(loss_factor_tau(r, b, TauVariant::general), 2.0);
      EXPECT_LT(loss_factor_tau(r, b, TauVariant::tikhonov), 3.0);
    }
  }
  EXPECT_THROW(loss_factor_tau(0.0, 2.0, TauVariant::general), ParameterError);
  EXPECT_THROW(loss_factor_tau(1.0, 1.0, TauVariant::general), ParameterError);
  EXPECT_THROW(tau_variant_from_string("other"), ParameterError);
}

TEST(FitRate, Examples) {
  const auto fit = fit_rate({{1, 4}, {2, 1}, {4, 0.25}, {8, 0.0625}});
  EXPECT_NEAR(fit.slope, -2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, std::log(4.0), 1e-14);
  EXPECT_NEAR(fit.stderr_slope, 0.0, 1e-12);
  EXPECT_NEAR(fit_rate({{0.5, 1.5}, {3, 9}, {7, 21}}).slope, 1.0, 1e-14);
  EXPECT_THROW(fit_rate({{2, 1}, {2, 3}}), ShapeError);
  EXPECT_THROW(fit_rate({{2, 1}}), ShapeError);
  EXPECT_THROW(fit_rate({{2, 1}, {3, -1}}), DomainError);
}

TEST(FitRate, StandardErrorMatchesHandComputation) {
  // log-log points (0,0), (1,1), (2,3): slope 1.5, residuals (1/6,-1/3,1/6)
  const auto fit = fit_rate({{1.0, 1.0}, {std::exp(1.0), std::exp(1.0)}, {std::exp(2.0), std::exp(3.0)}});
  EXPECT_NEAR(fit.slope, 1.5, 1e-14);
  EXPECT_NEAR(fit.stderr_slope, std::sqrt((1.0 / 6.0) / 1.0 / 2.0), 1e-14);
}

TEST(Schedule, Examples) {
  EXPECT_NEAR(lambda_schedule(ScheduleKind::by_n, 1.0, 1.0 / 3.5, 128), 0.25, 1e-15);
  EXPECT_NEAR(lambda_schedule(ScheduleKind::by_delta, 1.0, 0.5, 0.04), 0.2, 1e-15);
  EXPECT_EQ(lambda_schedule(ScheduleKind::by_n, 3.0, 0.7, 1), 3.0);
  EXPECT_THROW(lambda_schedule(ScheduleKind::by_n, 0.0, 1.0, 4), ParameterError);
  EXPECT_THROW(lambda_schedule(ScheduleKind::by_n, 1.0, 1.0, 0), ParameterError);
}

TEST(Exponents, Helpers) {
  EXPECT_DOUBLE_EQ(statistical_rate_exponent(1.0, 2.0), 2.0 / 3.5);
  EXPECT_DOUBLE_EQ(statistical_lambda_exponent(1.0, 2.0), 1.0 / 3.5);
  EXPECT_DOUBLE_EQ(classical_rate_exponent(1.0), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(classical_lambda_exponent(1.0), 2.0 / 3.0);
}

TEST(RateReport, JsonShape) {
  auto exp = upper(2.0 / 3.5, 1.0 / 3.5, 1.5);
  RateReport r = upper_report(exp);
  r.fitted_slope = 0.98;
  const nlohmann::json j = r;
  for (const char* key : {"inputs", "branch", "exponents", "fitted_slope", "stderr"}) EXPECT_TRUE(j.contains(key));
  EXPECT_EQ(j.at("branch"), "slow");
  EXPECT_EQ(j.at("exponents").at("delta"), 1.0);
  EXPECT_TRUE(j.at("stderr").is_null());
  const auto back = j.get<RateReport>();
  EXPECT_EQ(back.fitted_slope, r.fitted_slope);
}
