#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace pms {

/// splitmix64 finaliser; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
{
  return mix64(mix64(mix64(mix64(seed) ^ a) ^ b) ^ c);
}

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double gamma(double shape, double scale = 1.0) { return std::gamma_distribution<double>(shape, scale)(engine_); }

  /// X ~ Beta(a, b) via two gamma draws.
  double beta(double a, double b)
  {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  Eigen::VectorXd dirichlet(const Eigen::Ref<const Eigen::VectorXd>& weights)
  {
    Eigen::VectorXd g(weights.size());
    for (Eigen::Index k = 0; k < weights.size(); ++k) g(k) = gamma(weights(k));
    return g / g.sum();
  }

  Eigen::VectorXd standard_normal(Eigen::Index n)
  {
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = normal();
    return v;
  }

  /// Draws a category in [0, weights.size()) proportional to `weights`.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& weights)
  {
    double u = uniform() * weights.sum();
    for (Eigen::Index k = 0; k + 1 < weights.size(); ++k) {
      if (u < weights(k)) return static_cast<int>(k);
      u -= weights(k);
    }
    return static_cast<int>(weights.size() - 1);
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

/// Normalised log densities (proposal terms of the MH steps).
double log_beta_pdf(double x, double a, double b);
double log_dirichlet_pdf(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& weights);

} // namespace pms
