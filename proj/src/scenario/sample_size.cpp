#include "gridrecon/scenario/sample_size.hpp"

#include <cmath>
#include <stdexcept>

namespace gridrecon::scenario {

std::int64_t min_sample_size(double rho, double beta, std::int64_t m) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in (0, 1)");
  if (m < 1) throw std::domain_error("decision dimension m must be >= 1");
  // long double keeps the ceiling stable for values that sit close to an integer
  const long double r = rho;
  const long double b = beta;
  const long double md = static_cast<long double>(m);
  const long double k = 2.0L / r * std::log(1.0L / b) + 2.0L * md + 2.0L * md / r * std::log(2.0L / r);
  return static_cast<std::int64_t>(std::ceil(k));
}

std::int64_t min_sample_size_reconfig(double rho, double beta, std::int64_t n_dg, std::int64_t line_phase_count) {
  if (n_dg < 0 || line_phase_count < 0) throw std::domain_error("counts must be non-negative");
  if (n_dg + line_phase_count == 0) throw std::domain_error("n_dg and line_phase_count cannot both be zero");
  return min_sample_size(rho, beta, 2 * (n_dg + line_phase_count));
}

}  // namespace gridrecon::scenario
