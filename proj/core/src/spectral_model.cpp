#include "invlab/spectral_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "invlab/errors.hpp"
#include "invlab/rng.hpp"

namespace invlab {

SpectralProblem::SpectralProblem(int J, double b, double d) : b_(b), d_(d) {
  if (J < 1) throw ParameterError("truncation order J must be >= 1");
  if (!(b > 1.0)) throw ParameterError("decay exponent b must be > 1");
  if (!(d > 0.0)) throw ParameterError("decay constant d must be > 0");
  mu_.resize(J);
  sigma_.resize(J);
  for (int j = 0; j < J; ++j) {
    mu_[j] = d * std::pow(static_cast<double>(j + 1), -b);
    sigma_[j] = std::sqrt(mu_[j]);
  }
}

double SpectralProblem::kernel_bound_squared() const noexcept { return 2.0 * mu_.sum(); }

SpectralProblem build_power_law_problem(int J, double b, double d) { return SpectralProblem(J, b, d); }

SpectralProblem rescaled_for_unit_norm(const SpectralProblem& problem) {
  if (problem.mu_max() <= 1.0) return problem;
  const double factor = 1.0 / problem.mu_max();
  SpectralProblem out(problem.size(), problem.decay_b(), problem.decay_d() * factor);
  out.scale_ = problem.scale_ * factor;
  return out;
}

GroundTruth make_source_solution(const SpectralProblem& problem, double r, const Coeffs& w) {
  if (!(r > 0.0)) throw ParameterError("smoothness r must be > 0");
  if (w.size() != problem.size()) {
    std::ostringstream msg;
    msg << "source element has " << w.size() << " coordinates, problem has J=" << problem.size();
    throw ShapeError(msg.str());
  }
  GroundTruth truth;
  truth.r = r;
  truth.w = w;
  truth.coeffs = problem.mu().array().pow(r) * w.array();
  truth.R = w.norm();
  return truth;
}

DataFunction forward_data(const SpectralProblem& problem, const Coeffs& f) {
  if (f.size() != problem.size()) throw ShapeError("forward_data: coefficient length differs from J");
  return DataFunction{problem.singular_values().cwiseProduct(f), DataKind::clean, 0.0};
}

void check_unit_interval(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    std::ostringstream msg;
    msg << what << " = " << x << " lies outside [0,1]";
    throw DomainError(msg.str());
  }
}

Coeffs basis_values(int J, double x) {
  Coeffs u(J);
  for (int j = 0; j < J; ++j) u[j] = basis_value(j + 1, x);
  return u;
}

double eval_function(const SpectralProblem& problem, const Coeffs& coeffs, Space, double x) {
  check_unit_interval(x, "evaluation point");
  if (coeffs.size() > problem.size()) throw ShapeError("eval_function: more coefficients than J");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) sum += coeffs[j] * basis_value(static_cast<int>(j) + 1, x);
  return sum;
}

SpectralProblem ProblemDescriptor::problem() const { return build_power_law_problem(J, b, d); }

GroundTruth ProblemDescriptor::truth(const SpectralProblem& prob) const {
  Coeffs w = Coeffs::Zero(prob.size());
  if (std::holds_alternative<WSpecOnes>(w_spec)) {
    w.setOnes();
  } else if (std::holds_alternative<WSpecUnitRandom>(w_spec)) {
    if (!(R > 0.0)) throw ParameterError("unit-random w_spec needs R > 0");
    CounterRng rng(seed, Stream::source);
    for (int j = 0; j < prob.size(); ++j) w[j] = rng.uniform(j) < 0.5 ? -1.0 : 1.0;
    w *= R / std::sqrt(static_cast<double>(prob.size()));
  } else {
    const auto& explicit_w = std::get<std::vector<double>>(w_spec);
    if (static_cast<int>(explicit_w.size()) > prob.size())
      throw ShapeError("explicit w_spec is longer than J");
    for (std::size_t j = 0; j < explicit_w.size(); ++j) w[static_cast<Eigen::Index>(j)] = explicit_w[j];
  }
  return make_source_solution(prob, r, w);
}

void to_json(nlohmann::json& j, const ProblemDescriptor& p) {
  j = nlohmann::json{{"J", p.J}, {"b", p.b}, {"d", p.d}, {"r", p.r}, {"R", p.R}, {"seed", p.seed}};
  if (std::holds_alternative<WSpecOnes>(p.w_spec)) {
    j["w_spec"] = "ones";
  } else if (std::holds_alternative<WSpecUnitRandom>(p.w_spec)) {
    j["w_spec"] = "unit-random";
  } else {
    j["w_spec"] = std::get<std::vector<double>>(p.w_spec);
  }
}

void from_json(const nlohmann::json& j, ProblemDescriptor& p) {
  if (!j.is_object()) throw ValidationError("problem descriptor must be a JSON object");
  p = ProblemDescriptor{};
  if (j.contains("J")) p.J = j.at("J").get<int>();
  if (j.contains("b")) p.b = j.at("b").get<double>();
  if (j.contains("d")) p.d = j.at("d").get<double>();
  if (j.contains("r")) p.r = j.at("r").get<double>();
  if (j.contains("R")) p.R = j.at("R").get<double>();
  if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("w_spec")) {
    const auto& w = j.at("w_spec");
    if (w.is_string()) {
      const auto tag = w.get<std::string>();
      if (tag == "ones") {
        p.w_spec = WSpecOnes{};
      } else if (tag == "unit-random") {
        p.w_spec = WSpecUnitRandom{};
      } else {
        throw ValidationError("unknown w_spec '" + tag + "' (expected ones, unit-random or an array)");
      }
    } else if (w.is_array()) {
      p.w_spec = w.get<std::vector<double>>();
    } else {
      throw ValidationError("w_spec must be a string or an array of numbers");
    }
  }
}

}  // namespace invlab
