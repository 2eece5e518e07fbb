#pragma once

// Sampling operator: n design points plus outputs Y_i = y(x_i) + zeta_i, and bounded
// infinite-dimensional perturbations y^delta = y + delta e with ||e|| = 1.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "invlab/filters.hpp"
#include "invlab/spectral_model.hpp"

namespace invlab {

enum class Scheme { grid, iid_uniform };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

enum class NoiseKind { none, gaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;

  static NoiseModel none() { return {}; }
  /// sigma == 0 collapses to the Dirac model.
  static NoiseModel gaussian(double sigma);
};

struct Design {
  Scheme scheme = Scheme::grid;
  std::vector<double> points;
};

struct SampleSet {
  std::vector<double> design;
  std::vector<double> outputs;
  Scheme scheme = Scheme::grid;
  NoiseModel noise;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return design.size(); }
};

/// grid: x_i = (i - 1/2)/n. iid-uniform: draws keyed by (seed, replicate, i).
Design sample_design(Scheme scheme, int n, std::uint64_t seed, std::uint64_t replicate = 0);

/// Y_i = (A f)(x_i) + zeta_i, zeta_i ~ N(0, sigma^2) keyed by (seed, replicate, i).
SampleSet sample_outputs(const SpectralProblem& problem, const GroundTruth& truth, const Design& design,
                         const NoiseModel& noise, std::uint64_t seed, std::uint64_t replicate = 0);

enum class PerturbationMode { random_unit, fixed_mode, filter_adversarial };

struct PerturbationSpec {
  double delta = 0.0;
  PerturbationMode mode = PerturbationMode::random_unit;
  int mode_index = 1;  // fixed_mode: 1-based j
  FilterSpec filter;   // filter_adversarial: the filter whose response is maximized

  static PerturbationSpec random_unit(double delta);
  static PerturbationSpec fixed_mode(double delta, int j);
  static PerturbationSpec filter_adversarial(double delta, const FilterSpec& filter);
};

std::string to_string(PerturbationMode mode);
PerturbationMode perturbation_mode_from_string(const std::string& name);

/// argmax_j s_lambda(mu_j) sqrt(mu_j), 1-based.
int adversarial_mode(const SpectralProblem& problem, const FilterSpec& filter);

/// Unit direction e used by perturb_data.
Coeffs perturbation_direction(const SpectralProblem& problem, const PerturbationSpec& spec,
                              std::uint64_t seed, std::uint64_t replicate = 0);

DataFunction perturb_data(const SpectralProblem& problem, const DataFunction& y, const PerturbationSpec& spec,
                          std::uint64_t seed, std::uint64_t replicate = 0);

/// Columns i,x,y with 1-based i.
void write_samples_csv(const SampleSet& samples, std::ostream& out);

}  // namespace invlab
