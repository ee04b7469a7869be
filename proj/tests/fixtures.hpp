#pragma once

#include "pms/model.hpp"
#include "pms/random.hpp"
#include "pms/types.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace fixtures {

inline pms::PanelDataset random_dataset(Eigen::Index T, Eigen::Index N, Eigen::Index m, Eigen::Index mf, pms::Rng& rng)
{
  pms::PanelDataset d;
  d.y.resize(T, N);
  d.x.resize(T);
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::MatrixXd z(T, m);
    for (Eigen::Index t = 0; t < T; ++t) {
      z(t, 0) = 1.0;
      for (Eigen::Index c = 1; c < m; ++c) z(t, c) = rng.normal();
      d.y(t, i) = 1.5 * rng.normal();
    }
    d.z_bc.push_back(z);
    d.unit_labels.push_back("U" + std::to_string(i + 1));
  }
  d.z_fc.resize(T, mf);
  for (Eigen::Index t = 0; t < T; ++t) {
    d.z_fc(t, 0) = 1.0;
    for (Eigen::Index c = 1; c < mf; ++c) d.z_fc(t, c) = rng.normal();
    d.x(t) = 1.5 * rng.normal();
    d.dates.push_back(pms::YearMonth{2001, 1}.plus(static_cast<int>(t)));
  }
  d.bc_covariate_names.push_back("const");
  for (Eigen::Index c = 1; c < m; ++c) d.bc_covariate_names.push_back("z" + std::to_string(c));
  d.fc_covariate_names.push_back("const");
  for (Eigen::Index c = 1; c < mf; ++c) d.fc_covariate_names.push_back("w" + std::to_string(c));
  return d;
}

inline Eigen::Matrix2d random_rows(pms::Rng& rng)
{
  Eigen::Matrix2d p;
  for (int l = 0; l < 2; ++l) {
    const double a = 0.05 + 0.9 * rng.uniform();
    p(l, 0) = a;
    p(l, 1) = 1.0 - a;
  }
  return p;
}

inline pms::ModelParams random_params(Eigen::Index N, Eigen::Index m, Eigen::Index mf, pms::Rng& rng)
{
  pms::ModelParams p;
  auto ordered = [&](Eigen::Index len) {
    std::array<Eigen::VectorXd, 2> b{Eigen::VectorXd(len), Eigen::VectorXd(len)};
    for (int k = 0; k < 2; ++k) {
      for (Eigen::Index c = 0; c < len; ++c) b[static_cast<std::size_t>(k)](c) = rng.normal();
    }
    if (b[0](0) > b[1](0)) std::swap(b[0](0), b[1](0));
    return b;
  };
  p.sigma.resize(N, 2);
  for (Eigen::Index i = 0; i < N; ++i) {
    p.psi.push_back(ordered(m));
    p.sigma(i, 0) = 0.5 + rng.uniform();
    p.sigma(i, 1) = 0.5 + rng.uniform();
    p.p_unit.push_back(random_rows(rng));
    p.interaction_unit.push_back(rng.dirichlet(Eigen::Vector3d(4.0, 1.0, 1.0)));
  }
  p.phi = ordered(mf);
  p.tau = Eigen::Vector2d(0.5 + rng.uniform(), 0.5 + rng.uniform());
  p.p_fin = random_rows(rng);
  p.interaction_fin = rng.dirichlet(Eigen::Vector3d(4.0, 1.0, 1.0));
  return p;
}

inline pms::LatentStates random_states(Eigen::Index T, Eigen::Index N, pms::Rng& rng)
{
  pms::LatentStates s;
  s.s_y.resize(T, N);
  s.s_x.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < N; ++i) s.s_y(t, i) = rng.uniform() < 0.5 ? 1 : 2;
    s.s_x(t) = rng.uniform() < 0.5 ? 1 : 2;
  }
  return s;
}

/// Independent normalised row: the transition formula written out by hand.
inline std::array<double, 2> hand_row(const Eigen::Matrix2d& p, const Eigen::Vector3d& abg, int l, int sx, double m2)
{
  double q1 = abg(0) * p(l - 1, 0) + abg(1) * (sx - 1) + abg(2) * (1.0 - m2);
  double q2 = abg(0) * p(l - 1, 1) + abg(1) * (sx - 1) + abg(2) * m2;
  q1 = std::min(std::max(q1, 1e-10), 1.0 - 1e-10);
  q2 = std::min(std::max(q2, 1e-10), 1.0 - 1e-10);
  return {q1 / (q1 + q2), q2 / (q1 + q2)};
}

inline double hand_normal_logpdf(double y, double mu, double sd)
{
  return -0.5 * std::log(2.0 * M_PI * sd * sd) - (y - mu) * (y - mu) / (2.0 * sd * sd);
}

/// Exact marginals P(S_{c,t} = 2 | rest) of one chain by enumerating all 2^T
/// trajectories. `own_only` keeps just the chain's emission and own
/// transition terms; otherwise the full complete-data likelihood is used.
inline Eigen::VectorXd enumerate_expansion_marginals(const pms::PanelDataset& data,
                                                     const pms::ModelParams& params,
                                                     pms::LatentStates states,
                                                     pms::Chain chain,
                                                     bool own_only)
{
  const Eigen::Index T = data.t_len();
  const long paths = 1L << T;
  std::vector<double> logw(static_cast<std::size_t>(paths));
  for (long code = 0; code < paths; ++code) {
    for (Eigen::Index t = 0; t < T; ++t) {
      const int s = ((code >> t) & 1) ? 2 : 1;
      if (chain.is_financial()) states.s_x(t) = s;
      else states.s_y(t, chain.unit_index()) = s;
    }
    double lw = 0.0;
    if (own_only) {
      for (Eigen::Index t = 0; t < T; ++t) {
        const int s = chain.is_financial() ? states.s_x(t) : states.s_y(t, chain.unit_index());
        double mu = 0.0, sd = 0.0, obs = 0.0;
        if (chain.is_financial()) {
          mu = data.z_fc.row(t).dot(params.phi[static_cast<std::size_t>(s - 1)]);
          sd = params.tau(s - 1);
          obs = data.x(t);
        } else {
          const auto i = static_cast<std::size_t>(chain.unit_index());
          mu = data.z_bc[i].row(t).dot(params.psi[i][static_cast<std::size_t>(s - 1)]);
          sd = params.sigma(chain.unit_index(), s - 1);
          obs = data.y(t, chain.unit_index());
        }
        lw += hand_normal_logpdf(obs, mu, sd);
        if (t == 0) continue;
        const int prev = chain.is_financial() ? states.s_x(t - 1) : states.s_y(t - 1, chain.unit_index());
        double m2 = 0.0;
        for (Eigen::Index j = 0; j < states.s_y.cols(); ++j) m2 += states.s_y(t - 1, j) == 2 ? 1.0 : 0.0;
        m2 /= static_cast<double>(states.s_y.cols());
        const auto row = hand_row(params.transition(chain), params.interaction(chain), prev, states.s_x(t - 1), m2);
        lw += std::log(row[static_cast<std::size_t>(s - 1)]);
      }
    } else {
      lw = pms::complete_data_loglik(data, params, states);
    }
    logw[static_cast<std::size_t>(code)] = lw;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  Eigen::VectorXd p2 = Eigen::VectorXd::Zero(T);
  for (long code = 0; code < paths; ++code) {
    const double w = std::exp(logw[static_cast<std::size_t>(code)] - mx);
    total += w;
    for (Eigen::Index t = 0; t < T; ++t) {
      if ((code >> t) & 1) p2(t) += w;
    }
  }
  return p2 / total;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("pms_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace fixtures
