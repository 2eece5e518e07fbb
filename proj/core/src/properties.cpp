#include "invlab/properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "invlab/erm.hpp"
#include "invlab/errors.hpp"
#include "invlab/estimators.hpp"
#include "invlab/experiments.hpp"
#include "invlab/filters.hpp"
#include "invlab/rates.hpp"
#include "invlab/rkhs.hpp"
#include "invlab/rng.hpp"
#include "invlab/sampling.hpp"
#include "invlab/spectral_model.hpp"

namespace invlab {

namespace {

struct Outcome {
  double value;
  double threshold;
  bool passed;
  std::string detail;
};

Outcome at_most(double value, double threshold, std::string detail = {}) {
  return {value, threshold, value <= threshold, std::move(detail)};
}

Outcome at_least(double value, double threshold, std::string detail = {}) {
  return {value, threshold, value >= threshold, std::move(detail)};
}

struct Property {
  const char* module;
  const char* name;
  std::function<Outcome(std::uint64_t)> check;
};

Coeffs normals(const CounterRng& rng, int count, std::uint64_t offset = 0) {
  Coeffs c(count);
  for (int j = 0; j < count; ++j) c[j] = rng.normal(offset + static_cast<std::uint64_t>(j));
  return c;
}

std::vector<double> uniforms(const CounterRng& rng, int count, std::uint64_t offset = 0) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[i] = rng.uniform(offset + static_cast<std::uint64_t>(i));
  return v;
}

Outcome verdict_outcome(const StudyReport& report, const std::string& only = {}) {
  std::ostringstream detail;
  bool pass = true;
  double worst = 0.0;
  for (const auto& v : report.verdicts) {
    if (!only.empty() && v.criterion != only) continue;
    detail << v.criterion << "=" << v.value << (v.pass ? " ok; " : " FAIL; ");
    if (!v.pass) {
      pass = false;
      worst = 1.0;
    }
  }
  return {worst, 0.0, pass, detail.str()};
}

// --- spectral_model ---------------------------------------------------------

Outcome parseval(std::uint64_t seed) {
  const SpectralProblem problem(20, 2.0, 1.0);
  const CounterRng rng(seed, Stream::test, 1);
  const Coeffs c = normals(rng, problem.size());
  const int m = 10000;
  double quad = 0.0;
  for (int i = 0; i < m; ++i) {
    const double v = eval_function(problem, c, Space::output, (i + 0.5) / m);
    quad += v * v;
  }
  quad /= m;
  return at_most(std::abs(quad - c.squaredNorm()) / c.squaredNorm(), 1e-3);
}

Outcome decay_certificate(std::uint64_t) {
  double worst = 0.0;
  for (const double b : {1.5, 2.0, 3.0}) {
    for (const double d : {0.5, 1.0, 4.0}) {
      const SpectralProblem problem(200, b, d);
      for (int j = 1; j <= problem.size(); ++j) {
        const double bound = d / std::pow(j, b);
        worst = std::max(worst, std::abs(problem.mu()[j - 1] - bound) / bound);
      }
    }
  }
  return at_most(worst, 1e-14);
}

Outcome forward_linearity(std::uint64_t seed) {
  const SpectralProblem problem(100, 2.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const CounterRng rng(seed, Stream::test, 100 + t);
    const Coeffs f = normals(rng, problem.size());
    const Coeffs g = normals(rng, problem.size(), 1000);
    const double a = rng.normal(5000);
    const Coeffs lhs = forward_data(problem, a * f + g).coeffs;
    const Coeffs rhs = a * forward_data(problem, f).coeffs + forward_data(problem, g).coeffs;
    worst = std::max(worst, (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300));
  }
  return at_most(worst, 1e-14);
}

// --- rkhs -------------------------------------------------------------------

Outcome partial_isometry(std::uint64_t seed) {
  const SpectralProblem problem(100, 2.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const CounterRng rng(seed, Stream::test, 200 + t);
    const Coeffs f = normals(rng, problem.size());
    const double norm_k = rkhs_norm(problem, forward_data(problem, f).coeffs);
    worst = std::max(worst, std::abs(norm_k - f.norm()) / f.norm());
  }
  return at_most(worst, 1e-10);
}

Outcome reproducing_property(std::uint64_t seed) {
  const SpectralProblem problem(60, 2.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const CounterRng rng(seed, Stream::test, 300 + t);
    const Coeffs g = forward_data(problem, normals(rng, problem.size())).coeffs;
    const double x = rng.uniform(999);
    const Coeffs u = basis_values(problem.size(), x);
    const double direct = eval_function(problem, g, Space::output, x);
    const Coeffs kx = problem.mu().cwiseProduct(u);
    const double inner = (g.array() * kx.array() / problem.mu().array()).sum();
    worst = std::max({worst, std::abs(direct - g.dot(u)), std::abs(direct - inner)});
  }
  return at_most(worst, 1e-10);
}

Outcome gram_psd(std::uint64_t seed) {
  const SpectralProblem problem(100, 2.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    const CounterRng rng(seed, Stream::test, 400 + t);
    const int n = 2 + static_cast<int>(rng.bits(0) % 19);
    const auto pts = uniforms(rng, n, 1);
    const GramMatrix gram = gram_matrix(problem, pts);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.entries, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    worst = std::max(worst, -ev[0] / ev[ev.size() - 1]);
  }
  return at_most(worst, 1e-10, "max of -lambda_min/lambda_max");
}

Outcome unitary_invariance(std::uint64_t seed) {
  const SpectralProblem problem(40, 2.0, 1.0);
  const CounterRng rng(seed, Stream::test, 500);
  const auto pts = uniforms(rng, 12);
  const Eigen::MatrixXd phi = feature_matrix(problem, pts);
  // Random signed permutation of the feature coordinates.
  std::vector<int> perm(static_cast<std::size_t>(problem.size()));
  for (int j = 0; j < problem.size(); ++j) perm[j] = j;
  for (int j = problem.size() - 1; j > 0; --j) {
    std::swap(perm[j], perm[rng.bits(100 + j) % static_cast<std::uint64_t>(j + 1)]);
  }
  Eigen::MatrixXd rotated(phi.rows(), phi.cols());
  for (int j = 0; j < problem.size(); ++j) {
    const double sign = rng.uniform(200 + j) < 0.5 ? -1.0 : 1.0;
    rotated.col(perm[j]) = sign * phi.col(j);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double kv = kernel_eval(problem, pts[i], pts[k]);
      const double inner = rotated.row(static_cast<Eigen::Index>(i)).dot(rotated.row(static_cast<Eigen::Index>(k)));
      worst = std::max(worst, std::abs(kv - inner));
    }
  }
  return at_most(worst, 1e-12);
}

// --- sampling ---------------------------------------------------------------

Outcome perturbation_norm(std::uint64_t seed) {
  const SpectralProblem problem(100, 2.0, 1.0);
  const GroundTruth truth = make_source_solution(problem, 1.0, Coeffs::Ones(100));
  const DataFunction y = forward_data(problem, truth.coeffs);
  double worst = 0.0;
  for (const double delta : {1e-6, 1e-3, 0.1, 1.0}) {
    const FilterSpec filter = make_tikhonov(0.01);
    const PerturbationSpec specs[] = {PerturbationSpec::random_unit(delta), PerturbationSpec::fixed_mode(delta, 7),
                                      PerturbationSpec::filter_adversarial(delta, filter)};
    for (const auto& spec : specs) {
      const DataFunction yd = perturb_data(problem, y, spec, seed);
      worst = std::max(worst, std::abs((yd.coeffs - y.coeffs).norm() - delta));
    }
  }
  return at_most(worst, 1e-14);
}

Outcome sample_reproducibility(std::uint64_t seed) {
  const SpectralProblem problem(100, 2.0, 1.0);
  const GroundTruth truth = make_source_solution(problem, 1.0, Coeffs::Ones(100));
  int mismatches = 0;
  for (const Scheme scheme : {Scheme::grid, Scheme::iid_uniform}) {
    for (std::uint64_t rep : {0ull, 7ull, (1ull << 40) + 3}) {
      const SampleSet a = sample_outputs(problem, truth, sample_design(scheme, 64, seed, rep),
                                         NoiseModel::gaussian(0.1), seed, rep);
      const SampleSet b = sample_outputs(problem, truth, sample_design(scheme, 64, seed, rep),
                                         NoiseModel::gaussian(0.1), seed, rep);
      if (a.design != b.design || a.outputs != b.outputs) ++mismatches;
    }
  }
  return at_most(mismatches, 0.0);
}

Outcome riemann_slope(std::uint64_t) {
  // y = A f for a smooth source solution, g(x) = x (outside the sine span), so the
  // midpoint sums of (y - g)^2 converge at the generic second-order rate.
  const SpectralProblem problem(100, 2.0, 1.0);
  const GroundTruth truth = make_source_solution(problem, 1.0, Coeffs::Ones(100));
  const Coeffs y = forward_data(problem, truth.coeffs).coeffs;
  double cross = 0.0;
  for (int j = 1; j <= problem.size(); ++j) {
    const double xu = std::numbers::sqrt2 * (j % 2 ? 1.0 : -1.0) / (j * std::numbers::pi);
    cross += y[j - 1] * xu;
  }
  const double exact = y.squaredNorm() - 2.0 * cross + 1.0 / 3.0;
  std::vector<std::pair<double, double>> pts;
  const LossSpec loss = LossSpec::square();
  for (int n = 16; n <= 1024; n *= 2) {
    const Design design = sample_design(Scheme::grid, n, 0);
    double sum = 0.0;
    for (double x : design.points) sum += loss.value(eval_function(problem, y, Space::output, x), x);
    pts.emplace_back(n, std::abs(sum / n - exact));
  }
  const RateFit fit = fit_rate(pts);
  std::ostringstream d;
  d << "slope " << fit.slope;
  return at_most(std::abs(fit.slope + 2.0), 0.1, d.str());
}

// --- filters / estimators -----------------------------------------------------

Outcome filter_certificates(std::uint64_t) {
  const SpectralProblem problem(100, 2.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  std::string detail;
  for (const FilterKind kind : {FilterKind::tikhonov, FilterKind::cutoff, FilterKind::landweber}) {
    const FilterCertificate cert =
        certify_filter(kind, problem.mu_min(), problem.mu_max(), problem.mu_min(), problem.mu_max());
    if (cert.worst_margin < worst) {
      worst = cert.worst_margin;
      detail = to_string(kind) + " " + cert.worst_property;
    }
  }
  return at_least(worst, -1e-12, detail);
}

Outcome methods_equivalence(std::uint64_t seed) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const CounterRng rng(seed, Stream::test, 600 + t);
    const int J = 5 + static_cast<int>(rng.bits(0) % 46);
    const int n = 2 + static_cast<int>(rng.bits(1) % 29);
    const double b = 1.2 + 2.0 * rng.uniform(2);
    const double lambda = std::pow(10.0, -4.0 + 3.0 * rng.uniform(3));
    const SpectralProblem problem(J, b, 1.0);
    const GroundTruth truth = make_source_solution(problem, 1.0, normals(rng, J, 10));
    const SampleSet samples = sample_outputs(problem, truth, sample_design(Scheme::iid_uniform, n, seed, 600 + t),
                                             NoiseModel::gaussian(0.05), seed, 600 + t);
    const EquivalenceDeviations d = equivalence_deviations(problem, samples, lambda, truth.w);
    worst = std::max({worst, d.methods, d.norm_equality});
  }
  return at_most(worst, 1e-10);
}

Outcome representer_limit(std::uint64_t seed) {
  const SpectralProblem problem(100, 2.0, 1.0);
  const GroundTruth truth = make_source_solution(problem, 1.0, Coeffs::Ones(100));
  const SampleSet samples =
      sample_outputs(problem, truth, sample_design(Scheme::iid_uniform, 12, seed, 700), NoiseModel::none(), seed, 700);
  const GramMatrix gram = gram_matrix(problem, samples.design);
  const double scale = gram.entries.trace() / static_cast<double>(samples.size());
  std::vector<Eigen::VectorXd> betas;
  for (int e = 2; e <= 8; ++e) betas.push_back(kernel_tikhonov(problem, samples, std::pow(10.0, -e) * scale).beta);
  // Successive differences must shrink: the path is Cauchy as lambda decreases.
  double worst_ratio = 0.0;
  for (std::size_t k = 2; k < betas.size(); ++k) {
    const double prev = (betas[k - 1] - betas[k - 2]).norm();
    const double cur = (betas[k] - betas[k - 1]).norm();
    worst_ratio = std::max(worst_ratio, cur / prev);
  }
  return at_most(worst_ratio, 1.0, "max ratio of successive beta increments");
}

Outcome interpolation_limit(std::uint64_t seed) {
  const SpectralProblem problem(100, 2.0, 1.0);
  const GroundTruth truth = make_source_solution(problem, 1.0, Coeffs::Ones(100));
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int n = 20;
    const SampleSet samples = sample_outputs(problem, truth, sample_design(Scheme::iid_uniform, n, seed, 800 + t),
                                             NoiseModel::none(), seed, 800 + t);
    const GramMatrix gram = gram_matrix(problem, samples.design);
    const double lambda = 1e-10 * gram.entries.trace() / n;
    const KernelSolution ks = kernel_tikhonov(problem, samples, lambda);
    const Eigen::VectorXd fitted = gram.entries * ks.beta;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(fitted[i] - samples.outputs[i]));
  }
  return at_most(worst, 1e-6);
}

Outcome erm_closed_form(std::uint64_t seed) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const CounterRng rng(seed, Stream::test, 900 + t);
    const int J = 5 + static_cast<int>(rng.bits(0) % 46);
    const int n = 2 + static_cast<int>(rng.bits(1) % 29);
    const double lambda = std::pow(10.0, -3.0 + 2.0 * rng.uniform(2));
    const SpectralProblem problem(J, 2.0, 1.0);
    const GroundTruth truth = make_source_solution(problem, 1.0, normals(rng, J, 10));
    const SampleSet samples = sample_outputs(problem, truth, sample_design(Scheme::iid_uniform, n, seed, 900 + t),
                                             NoiseModel::gaussian(0.1), seed, 900 + t);
    const KernelSolution ks = kernel_tikhonov(problem, samples, lambda);
    const ErmSolution erm = erm_representer_solve(problem, samples, LossSpec::square(), PenaltySpec{}, lambda);
    worst = std::max(worst, (erm.beta - ks.beta).norm() / ks.beta.norm());
  }
  return at_most(worst, 1e-6);
}

// --- rates ------------------------------------------------------------------

Outcome conjugate_identity(std::uint64_t seed) {
  const CounterRng rng(seed, Stream::test, 1000);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double sigma = std::pow(10.0, -3.0 + 4.0 * rng.uniform(3 * t));
    const double eps = std::pow(10.0, -4.0 + 5.0 * rng.uniform(3 * t + 1));
    const long long n = 1 + static_cast<long long>(rng.bits(3 * t + 2) % 10000);
    const RateLink link{sigma, eps, 1.0};
    const double s2n = sigma * sigma / static_cast<double>(n);
    const double naive = std::sqrt(s2n + eps * eps) - eps;
    worst = std::max(worst, std::abs(delta_of(n, link) - naive) / std::max(1.0, s2n));
  }
  return at_most(worst, 1e-12);
}

Outcome exact_inversion(std::uint64_t seed) {
  const CounterRng rng(seed, Stream::test, 1001);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const RateLink link{std::pow(10.0, -2.0 + 3.0 * rng.uniform(2 * t)), std::pow(10.0, -3.0 + 4.0 * rng.uniform(2 * t + 1)),
                        1.0};
    for (long long n = 1; n <= 10000; ++n) {
      const double back = n_of(delta_of(n, link), link).value;
      worst = std::max(worst, std::abs(back - static_cast<double>(n)) / static_cast<double>(n));
    }
  }
  return at_most(worst, 1e-9);
}

Outcome conversion_examples(std::uint64_t) {
  RateExponents up;
  up.alpha = 2.0 / 3.5;
  up.p = 1.0 / 3.5;
  up.gamma = 1.5;
  RateExponents low;
  low.alpha = 4.0 / 3.0;
  low.p_star = 2.0 / 3.0;
  low.gamma = 1.5;
  const ConvertedRate u = convert_upper(up);
  const ConvertedRate l = convert_lower(low);
  const bool exact = u.error_exponent == 1.0 && u.lambda_exponent == 0.5 && u.branch == RateBranch::slow &&
                     l.error_exponent == 2.0 / 3.0 && l.branch == RateBranch::fast &&
                     loss_factor_tau(1.0, 2.0, TauVariant::general) == 3.5 / 3.0 &&
                     loss_factor_tau(1.0, 2.0, TauVariant::tikhonov) == 4.0 / 3.0;
  return at_most(exact ? 0.0 : 1.0, 0.0);
}

Outcome lemma_check(std::uint64_t seed) {
  StudyConfig c = reference_config("lemma-check");
  c.seed = seed;
  return verdict_outcome(run_study(c));
}

Outcome noiseless_lemma(std::uint64_t seed) {
  StudyConfig c = reference_config("lemma-check");
  c.seed = seed;
  c.sigma = 0.0;
  c.design = Scheme::grid;
  c.replicates = 4;
  const StudyReport r = run_study(c);
  Outcome o = verdict_outcome(r);
  const double variance = r.stats.at("mc_variance");
  o.detail += "variance=" + std::to_string(variance);
  o.passed = o.passed && variance <= 1e-20;
  return o;
}

Outcome variance_slope(std::uint64_t seed) {
  StudyConfig c = reference_config("variance-sweep");
  c.seed = seed;
  const StudyReport r = variance_sweep(c);
  Outcome o = verdict_outcome(r);
  o.detail += "gamma_hat=" + std::to_string(r.stats.at("gamma_hat")) +
              " nominal=" + std::to_string(r.theory.at("gamma_nominal"));
  return o;
}

// --- experiments --------------------------------------------------------------

Outcome determinism(std::uint64_t seed) {
  StudyConfig c = reference_config("stat-rate");
  c.seed = seed;
  c.replicates = 10;
  c.n_grid = {32, 64, 128};
  StudyReport a = run_study(c);
  StudyReport b = run_study(c);
  a.runtime_seconds = b.runtime_seconds = 0.0;
  const bool same = nlohmann::json(a).dump() == nlohmann::json(b).dump() && report_csv(a) == report_csv(b);
  return at_most(same ? 0.0 : 1.0, 0.0);
}

Outcome statistical_consistency(std::uint64_t seed) {
  StudyConfig c = reference_config("stat-rate");
  c.seed = seed;
  return verdict_outcome(run_study(c), "median-rank-correlation");
}

Outcome scheme_agnosticism(std::uint64_t seed) {
  const SpectralProblem problem(50, 2.0, 1.0);
  const GroundTruth truth = make_source_solution(problem, 1.0, Coeffs::Ones(50));
  int mismatches = 0;
  for (int t = 0; t < 5; ++t) {
    SampleSet iid = sample_outputs(problem, truth, sample_design(Scheme::iid_uniform, 25, seed, t),
                                   NoiseModel::gaussian(0.1), seed, t);
    SampleSet grid = iid;
    grid.scheme = Scheme::grid;
    const CounterRng rng(seed, Stream::test, 1100 + t);
    const Coeffs probe = normals(rng, 50);
    const EquivalenceDeviations a = equivalence_deviations(problem, iid, 0.01, probe);
    const EquivalenceDeviations b = equivalence_deviations(problem, grid, 0.01, probe);
    if (a.isometry != b.isometry || a.pullback != b.pullback || a.methods != b.methods ||
        a.norm_equality != b.norm_equality || a.representer != b.representer) {
      ++mismatches;
    }
  }
  return at_most(mismatches, 0.0);
}

Outcome report_round_trip(std::uint64_t seed) {
  StudyConfig c = reference_config("equivalence-check");
  c.seed = seed;
  c.replicates = 3;
  const StudyReport r = run_study(c);
  const StudyReport back = nlohmann::json::parse(nlohmann::json(r).dump()).get<StudyReport>();
  const auto again = evaluate_verdicts(back);
  bool same = again.size() == r.verdicts.size();
  for (std::size_t i = 0; same && i < again.size(); ++i) {
    same = again[i].pass == r.verdicts[i].pass && again[i].value == r.verdicts[i].value &&
           again[i].threshold == r.verdicts[i].threshold;
  }
  return at_most(same ? 0.0 : 1.0, 0.0);
}

const std::vector<Property>& registry() {
  static const std::vector<Property> props = {
      {"spectral_model", "parseval", parseval},
      {"spectral_model", "decay-certificate", decay_certificate},
      {"spectral_model", "forward-linearity", forward_linearity},
      {"rkhs", "partial-isometry", partial_isometry},
      {"rkhs", "reproducing-property", reproducing_property},
      {"rkhs", "gram-psd", gram_psd},
      {"rkhs", "unitary-invariance", unitary_invariance},
      {"sampling", "perturbation-norm", perturbation_norm},
      {"sampling", "reproducibility", sample_reproducibility},
      {"sampling", "riemann-slope", riemann_slope},
      {"regularization", "filter-certificates", filter_certificates},
      {"regularization", "methods-equivalence", methods_equivalence},
      {"regularization", "representer-limit", representer_limit},
      {"regularization", "interpolation-limit", interpolation_limit},
      {"regularization", "erm-closed-form", erm_closed_form},
      {"rates", "conjugate-identity", conjugate_identity},
      {"rates", "exact-inversion", exact_inversion},
      {"rates", "conversion-examples", conversion_examples},
      {"rates", "lemma-and-key-inequalities", lemma_check},
      {"rates", "noiseless-lemma", noiseless_lemma},
      {"rates", "variance-slope", variance_slope},
      {"experiments", "determinism", determinism},
      {"experiments", "statistical-consistency", statistical_consistency},
      {"experiments", "scheme-agnosticism", scheme_agnosticism},
      {"experiments", "report-round-trip", report_round_trip},
  };
  return props;
}

}  // namespace

std::vector<std::string> property_names() {
  std::vector<std::string> names;
  for (const auto& p : registry()) names.push_back(std::string(p.module) + "/" + p.name);
  return names;
}

std::vector<PropertyResult> run_property_suite(const PropertyOptions& options) {
  std::vector<PropertyResult> results;
  for (const auto& p : registry()) {
    if (!options.only.empty() &&
        std::none_of(options.only.begin(), options.only.end(),
                     [&](const std::string& s) { return s == p.module || s == p.name; })) {
      continue;
    }
    PropertyResult res;
    res.module = p.module;
    res.name = p.name;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Outcome o = p.check(options.seed);
      res.passed = o.passed;
      res.value = o.value;
      res.threshold = o.threshold;
      res.detail = o.detail;
    } catch (const std::exception& e) {
      res.passed = false;
      res.detail = std::string("exception: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace invlab
