#include "pms/random.hpp"

#include <cmath>
#include <limits>

namespace pms {

double log_beta_pdf(double x, double a, double b)
{
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double log_dirichlet_pdf(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& weights)
{
  double out = std::lgamma(weights.sum());
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (!(x(k) > 0.0)) return -std::numeric_limits<double>::infinity();
    out += (weights(k) - 1.0) * std::log(x(k)) - std::lgamma(weights(k));
  }
  return out;
}

} // namespace pms
