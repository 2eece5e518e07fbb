#include "invlab/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "invlab/errors.hpp"

namespace invlab {

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::tikhonov: return "tikhonov";
    case FilterKind::cutoff: return "cutoff";
    case FilterKind::landweber: return "landweber";
  }
  return "unknown";
}

FilterKind filter_kind_from_string(const std::string& name) {
  if (name == "tikhonov") return FilterKind::tikhonov;
  if (name == "cutoff") return FilterKind::cutoff;
  if (name == "landweber") return FilterKind::landweber;
  throw ParameterError("unknown filter kind '" + name + "'");
}

double FilterSpec::qualification_constant(double nu) const {
  for (const auto& entry : c_nu) {
    if (std::abs(entry.nu - nu) < 1e-12) return entry.c_nu;
  }
  std::ostringstream msg;
  msg << "no qualification constant tabulated for nu = " << nu << " (q = " << q << ")";
  throw ParameterError(msg.str());
}

namespace {

std::vector<QualificationConstant> half_integer_table(double q, double (*constant)(double)) {
  std::vector<QualificationConstant> table;
  for (double nu = 0.0; nu <= q + 1e-12; nu += 0.5) table.push_back({nu, constant(nu)});
  return table;
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("filter parameter lambda must be > 0");
}

}  // namespace

FilterSpec make_tikhonov(double lambda) {
  check_lambda(lambda);
  FilterSpec f;
  f.kind = FilterKind::tikhonov;
  f.lambda = lambda;
  f.q = 1.0;
  // t^nu lambda / (t + lambda) <= nu^nu (1-nu)^(1-nu) lambda^nu <= lambda^nu on [0,1]
  f.c_nu = half_integer_table(f.q, [](double) { return 1.0; });
  return f;
}

FilterSpec make_cutoff(double lambda) {
  check_lambda(lambda);
  FilterSpec f;
  f.kind = FilterKind::cutoff;
  f.lambda = lambda;
  f.q = kQualificationCap;
  f.c_nu = half_integer_table(f.q, [](double) { return 1.0; });
  return f;
}

FilterSpec make_landweber(int iterations) {
  if (iterations < 1) throw ParameterError("Landweber needs at least one iteration");
  FilterSpec f;
  f.kind = FilterKind::landweber;
  f.iterations = iterations;
  f.lambda = 1.0 / iterations;
  f.q = kQualificationCap;
  // max_t t^nu (1-t)^m = (nu/(nu+m))^nu (m/(nu+m))^m <= nu^nu m^{-nu}
  f.c_nu = half_integer_table(f.q, [](double nu) { return nu > 0.0 ? std::max(1.0, std::pow(nu, nu)) : 1.0; });
  return f;
}

FilterSpec make_filter(FilterKind kind, double lambda) {
  switch (kind) {
    case FilterKind::tikhonov: return make_tikhonov(lambda);
    case FilterKind::cutoff: return make_cutoff(lambda);
    case FilterKind::landweber: {
      check_lambda(lambda);
      const double m = std::max(1.0, std::round(1.0 / lambda));
      if (m > static_cast<double>(std::numeric_limits<int>::max())) throw ParameterError("Landweber lambda too small");
      return make_landweber(static_cast<int>(m));
    }
  }
  throw ParameterError("unknown filter kind");
}

namespace {

double landweber_sum(int m, double t) {
  // sum_{k<m} (1-t)^k = (1 - (1-t)^m) / t, evaluated without cancellation for small t
  if (t == 0.0) return static_cast<double>(m);
  if (t == 1.0) return 1.0;
  return -std::expm1(m * std::log1p(-t)) / t;
}

}  // namespace

double filter_value(const FilterSpec& filter, double t) {
  if (!(t > 0.0)) {
    std::ostringstream msg;
    msg << "filter argument t = " << t << " must be > 0";
    throw DomainError(msg.str());
  }
  if (filter.kind == FilterKind::landweber && t > 1.0) {
    throw ModelError("Landweber requires the spectrum in (0,1]; rescale the operator so that ||A*A|| <= 1");
  }
  return filter_value_closure(filter, t);
}

double filter_value_closure(const FilterSpec& filter, double t) {
  t = std::max(t, 0.0);
  switch (filter.kind) {
    case FilterKind::tikhonov: return 1.0 / (t + filter.lambda);
    case FilterKind::cutoff: return (t >= filter.lambda && t > 0.0) ? 1.0 / t : 0.0;
    case FilterKind::landweber: return landweber_sum(filter.iterations, t);
  }
  return 0.0;
}

void check_filter_on_problem(const SpectralProblem& problem, const FilterSpec& filter) {
  if (filter.kind == FilterKind::landweber && problem.mu_max() > 1.0) {
    std::ostringstream msg;
    msg << "Landweber requires mu_1 <= 1 but mu_1 = " << problem.mu_max()
        << "; rescale the problem (rescaled_for_unit_norm)";
    throw ModelError(msg.str());
  }
}

FilterCertificate certify_filter(FilterKind kind, double t_min, double t_max, double lambda_min,
                                 double lambda_max, int lambda_count, int grid_points) {
  if (!(t_min > 0.0 && t_max >= t_min)) throw ParameterError("certify_filter: need 0 < t_min <= t_max");
  if (!(lambda_min > 0.0 && lambda_max >= lambda_min)) throw ParameterError("certify_filter: bad lambda range");
  if (lambda_count < 1 || grid_points < 2) throw ParameterError("certify_filter: grid too small");

  std::vector<double> ts(static_cast<std::size_t>(grid_points));
  const double log_span = std::log(t_max / t_min);
  for (int k = 0; k < grid_points; ++k) ts[k] = t_min * std::exp(log_span * k / (grid_points - 1));
  ts.back() = t_max;

  FilterCertificate cert{};
  cert.kind = kind;
  cert.grid_points = grid_points;
  cert.worst_margin = std::numeric_limits<double>::infinity();

  auto record = [&](double margin, const std::string& property, double lambda) {
    if (margin < cert.worst_margin) {
      cert.worst_margin = margin;
      cert.worst_property = property;
      cert.worst_lambda = lambda;
    }
  };

  for (int l = 0; l < lambda_count; ++l) {
    const double frac = lambda_count == 1 ? 0.0 : static_cast<double>(l) / (lambda_count - 1);
    const double lambda_req = lambda_min * std::pow(lambda_max / lambda_min, frac);
    const FilterSpec filter = make_filter(kind, lambda_req);
    const double lambda = filter.lambda;

    double sup_ts = 0.0, sup_ls = 0.0;
    std::vector<double> sup_qual(filter.c_nu.size(), 0.0);
    for (double t : ts) {
      const double s = filter_value(filter, t);
      sup_ts = std::max(sup_ts, std::abs(t * s));
      sup_ls = std::max(sup_ls, std::abs(lambda * s));
      const double residual = std::abs(1.0 - t * s);
      for (std::size_t k = 0; k < filter.c_nu.size(); ++k) {
        sup_qual[k] = std::max(sup_qual[k], std::pow(t, filter.c_nu[k].nu) * residual);
      }
    }
    record(filter.D - sup_ts, "D", lambda);
    record(filter.E - sup_ls, "E", lambda);
    for (std::size_t k = 0; k < filter.c_nu.size(); ++k) {
      const double bound = filter.c_nu[k].c_nu * std::pow(lambda, filter.c_nu[k].nu);
      std::ostringstream name;
      name << "C_" << filter.c_nu[k].nu;
      record(bound - sup_qual[k], name.str(), lambda);
    }
    ++cert.lambdas_checked;
  }
  return cert;
}

}  // namespace invlab
