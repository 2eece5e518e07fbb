#include "invlab/sampling.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "invlab/errors.hpp"
#include "invlab/rng.hpp"

namespace invlab {

std::string to_string(Scheme scheme) { return scheme == Scheme::grid ? "grid" : "iid-uniform"; }

Scheme scheme_from_string(const std::string& name) {
  if (name == "grid") return Scheme::grid;
  if (name == "iid-uniform") return Scheme::iid_uniform;
  throw ParameterError("unknown sampling scheme '" + name + "'");
}

NoiseModel NoiseModel::gaussian(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("noise sigma must be >= 0");
  if (sigma == 0.0) return none();
  return {NoiseKind::gaussian, sigma};
}

Design sample_design(Scheme scheme, int n, std::uint64_t seed, std::uint64_t replicate) {
  if (n < 1) throw ShapeError("sample_design: n must be >= 1");
  Design design{scheme, std::vector<double>(static_cast<std::size_t>(n))};
  if (scheme == Scheme::grid) {
    for (int i = 0; i < n; ++i) design.points[i] = (i + 0.5) / n;
  } else {
    const CounterRng rng(seed, Stream::design, replicate);
    for (int i = 0; i < n; ++i) design.points[i] = rng.uniform(static_cast<std::uint64_t>(i));
  }
  return design;
}

SampleSet sample_outputs(const SpectralProblem& problem, const GroundTruth& truth, const Design& design,
                         const NoiseModel& noise, std::uint64_t seed, std::uint64_t replicate) {
  if (design.points.empty()) throw ShapeError("sample_outputs: empty design");
  if (noise.kind == NoiseKind::none && noise.sigma != 0.0) throw ParameterError("noise kind none requires sigma = 0");
  const DataFunction y = forward_data(problem, truth.coeffs);

  SampleSet samples;
  samples.design = design.points;
  samples.scheme = design.scheme;
  samples.noise = noise;
  samples.seed = seed;
  samples.outputs.resize(design.points.size());
  const CounterRng rng(seed, Stream::noise, replicate);
  for (std::size_t i = 0; i < design.points.size(); ++i) {
    double value = eval_function(problem, y.coeffs, Space::output, design.points[i]);
    if (noise.kind == NoiseKind::gaussian) value += noise.sigma * rng.normal(i);
    samples.outputs[i] = value;
  }
  return samples;
}

PerturbationSpec PerturbationSpec::random_unit(double delta) {
  PerturbationSpec spec;
  spec.delta = delta;
  spec.mode = PerturbationMode::random_unit;
  return spec;
}

PerturbationSpec PerturbationSpec::fixed_mode(double delta, int j) {
  PerturbationSpec spec;
  spec.delta = delta;
  spec.mode = PerturbationMode::fixed_mode;
  spec.mode_index = j;
  return spec;
}

PerturbationSpec PerturbationSpec::filter_adversarial(double delta, const FilterSpec& filter) {
  PerturbationSpec spec;
  spec.delta = delta;
  spec.mode = PerturbationMode::filter_adversarial;
  spec.filter = filter;
  return spec;
}

std::string to_string(PerturbationMode mode) {
  switch (mode) {
    case PerturbationMode::random_unit: return "random-unit";
    case PerturbationMode::fixed_mode: return "fixed-mode";
    case PerturbationMode::filter_adversarial: return "filter-adversarial";
  }
  return "unknown";
}

PerturbationMode perturbation_mode_from_string(const std::string& name) {
  if (name == "random-unit") return PerturbationMode::random_unit;
  if (name == "fixed-mode") return PerturbationMode::fixed_mode;
  if (name == "filter-adversarial") return PerturbationMode::filter_adversarial;
  throw ParameterError("unknown perturbation mode '" + name + "'");
}

int adversarial_mode(const SpectralProblem& problem, const FilterSpec& filter) {
  check_filter_on_problem(problem, filter);
  int best = 1;
  double best_gain = -1.0;
  for (int j = 0; j < problem.size(); ++j) {
    const double gain = filter_value(filter, problem.mu()[j]) * problem.singular_values()[j];
    if (gain > best_gain) {
      best_gain = gain;
      best = j + 1;
    }
  }
  return best;
}

Coeffs perturbation_direction(const SpectralProblem& problem, const PerturbationSpec& spec,
                              std::uint64_t seed, std::uint64_t replicate) {
  const int J = problem.size();
  Coeffs e = Coeffs::Zero(J);
  switch (spec.mode) {
    case PerturbationMode::random_unit: {
      const CounterRng rng(seed, Stream::perturbation, replicate);
      double norm = 0.0;
      for (std::uint64_t attempt = 0; norm == 0.0; ++attempt) {
        for (int j = 0; j < J; ++j) e[j] = rng.normal(attempt * static_cast<std::uint64_t>(J) + j);
        norm = e.norm();
      }
      e /= norm;
      break;
    }
    case PerturbationMode::fixed_mode:
      if (spec.mode_index < 1 || spec.mode_index > J) throw ShapeError("fixed-mode index outside 1..J");
      e[spec.mode_index - 1] = 1.0;
      break;
    case PerturbationMode::filter_adversarial:
      e[adversarial_mode(problem, spec.filter) - 1] = 1.0;
      break;
  }
  return e;
}

DataFunction perturb_data(const SpectralProblem& problem, const DataFunction& y, const PerturbationSpec& spec,
                          std::uint64_t seed, std::uint64_t replicate) {
  if (!(spec.delta >= 0.0) || !std::isfinite(spec.delta)) throw ParameterError("perturbation delta must be >= 0");
  if (y.coeffs.size() != problem.size()) throw ShapeError("perturb_data: data length differs from J");
  const Coeffs e = perturbation_direction(problem, spec, seed, replicate);
  if (spec.delta == 0.0) return y;
  return DataFunction{y.coeffs + spec.delta * e, DataKind::perturbed, spec.delta};
}

void write_samples_csv(const SampleSet& samples, std::ostream& out) {
  out << "i,x,y\n" << std::setprecision(17);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << (i + 1) << ',' << samples.design[i] << ',' << samples.outputs[i] << '\n';
  }
}

}  // namespace invlab
