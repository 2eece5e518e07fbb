#pragma once

// Verification studies. Each study is a pure function of its config: replicate r of
// grid point k draws from the counter-based streams keyed by (seed, k, r), replicates
// run in parallel, and aggregation is an ordered reduction, so reports are reproducible
// bit for bit regardless of the worker count.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invlab/filters.hpp"
#include "invlab/rates.hpp"
#include "invlab/sampling.hpp"
#include "invlab/spectral_model.hpp"

namespace invlab {

enum class StudyKind { stat_rate, det_rate, lemma_check, gamma_study, equivalence_check };

std::string to_string(StudyKind kind);
StudyKind study_kind_from_string(const std::string& name);

enum class EstimatorChoice { paper, learn };

struct ScheduleConfig {
  double c = 1.0;
  /// Defaults: stat-rate 1/(2r+1+1/b); det-rate 2/(2r+1) (classical) or the converted
  /// lambda_delta exponent.
  std::optional<double> exponent;
};

struct Tolerances {
  double slope = 0.12;             // |fitted - theory| bound
  double rank_correlation = 0.9;   // Spearman must be < -rank_correlation
  double final_ratio = 0.5;        // last error <= final_ratio * first error
  double se_multiplier = 3.0;      // Monte-Carlo comparisons use k standard errors
  double equality = 1e-10;         // identities (isometry, norm equality, ...)
  double representer = 1e-6;       // ERM vs closed form
};

struct StudyConfig {
  StudyKind kind = StudyKind::stat_rate;
  ProblemDescriptor problem;
  FilterKind filter = FilterKind::tikhonov;
  Scheme design = Scheme::iid_uniform;
  EstimatorChoice estimator = EstimatorChoice::paper;
  double sigma = 0.1;
  std::vector<int> n_grid;
  std::vector<double> delta_grid;
  PerturbationMode perturbation = PerturbationMode::filter_adversarial;
  int perturbation_mode_index = 1;
  ScheduleConfig schedule;
  double lambda = 0.1;  // fixed lambda for lemma-check, gamma-study, equivalence-check
  int n = 200;          // sample size for lemma-check and equivalence-check
  std::string theory = "classical";  // det-rate: classical | converted
  std::optional<double> gamma;       // nominal gamma for conversions; default r + 1/2
  int replicates = 100;
  std::uint64_t seed = 1;
  Tolerances tolerances;

  /// Throws ValidationError listing every offending field.
  void validate() const;
  double nominal_gamma() const { return gamma.value_or(problem.r + 0.5); }
};

void to_json(nlohmann::json& j, const StudyConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, StudyConfig& c);

struct PointRecord {
  double x = 0.0;
  double lambda = 0.0;
  double err_mean = 0.0;
  double err_se = 0.0;
  double err_median = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> extra;
};

struct Verdict {
  std::string criterion;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // how value is compared with threshold, e.g. "<=", "|.-theory|<="
};

struct StudyReport {
  StudyKind kind = StudyKind::stat_rate;
  StudyConfig config;
  std::vector<PointRecord> records;
  std::optional<RateFit> fit;
  std::optional<RateReport> rate;
  std::map<std::string, double> theory;
  std::map<std::string, double> stats;
  std::vector<Verdict> verdicts;
  double runtime_seconds = 0.0;

  bool passed() const;
};

void to_json(nlohmann::json& j, const StudyReport& r);
void from_json(const nlohmann::json& j, StudyReport& r);

StudyReport run_study(const StudyConfig& config);

/// Built-in reference configurations: stat-rate, det-rate-classical, det-rate-converted,
/// lemma-check, gamma-study, equivalence-check, variance-sweep. Throws ValidationError for
/// other names.
StudyConfig reference_config(const std::string& name);
std::vector<std::string> reference_config_names();

/// Verdicts from the report's recorded statistics, tolerances and theory values only.
std::vector<Verdict> evaluate_verdicts(const StudyReport& report);

enum class ReportFormat { json, csv };

/// Writes through a temporary file in the target directory and renames it into place;
/// on failure nothing is left behind and IoError is thrown.
void write_report(const StudyReport& report, ReportFormat format, const std::string& path);
StudyReport read_report_json(const std::string& path);

/// CSV column order: kind,x,lambda,err_mean,err_se followed by sorted extra keys.
std::string report_csv(const StudyReport& report);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct MonteCarloSummary {
  double mean = 0.0;
  double se = 0.0;
  double median = 0.0;
};

MonteCarloSummary summarize(const std::vector<double>& values);

/// Maximal relative deviations of the correspondence identities on one sample set:
/// isometry ||A f||_K vs ||f|| and pullback round trip for `probe`, learn-Tikhonov vs
/// kernel-Tikhonov (data-space fit and norms), and square-loss ERM vs the closed form.
/// The design scheme tag is never consulted, only the realized points.
struct EquivalenceDeviations {
  double isometry = 0.0;
  double pullback = 0.0;
  double methods = 0.0;
  double norm_equality = 0.0;
  double representer = 0.0;
};

EquivalenceDeviations equivalence_deviations(const SpectralProblem& problem, const SampleSet& samples,
                                             double lambda, const Coeffs& probe);

/// Monte-Carlo variance E||f_n - E f_n||^2 of the configured estimator for `count`
/// log-spaced lambdas over [10 mu_J, mu_1] at sample size config.n. Records hold
/// x = lambda, err_mean = variance, err_se = its standard error; the fit is variance vs
/// lambda.
StudyReport variance_sweep(const StudyConfig& config, int count = 13);

}  // namespace invlab
