#include "pms/simulator.hpp"

#include "pms/model.hpp"
#include "pms/random.hpp"

namespace pms {

CovariateGenerator::Kind CovariateGenerator::parse_kind(const std::string& name)
{
  if (name == "constant") return Kind::kConstant;
  if (name == "gaussian") return Kind::kGaussian;
  if (name == "replay") return Kind::kReplay;
  throw InputError("unknown covariate generator '" + name + "' (expected constant, gaussian or replay)");
}

std::string CovariateGenerator::kind_name(Kind kind)
{
  switch (kind) {
  case Kind::kConstant: return "constant";
  case Kind::kGaussian: return "gaussian";
  case Kind::kReplay: return "replay";
  }
  return "?";
}

void SimSpec::validate() const
{
  if (t_len < 1 || n_units < 1) throw InputError("SimSpec: T and N must be positive");
  if (truth.n_units() != n_units) throw InputError("SimSpec: true parameters have N=" + std::to_string(truth.n_units()) +
                                                   " but the spec asks for N=" + std::to_string(n_units));
  truth.validate();
  if (!unit_labels.empty() && static_cast<Eigen::Index>(unit_labels.size()) != n_units) {
    throw InputError("SimSpec: unit label count does not match N");
  }
  const Eigen::Index m = truth.psi.front()[0].size();
  for (const auto& pk : truth.psi) {
    if (pk[0].size() != m) throw InputError("SimSpec: all units must share the covariate count");
  }
  if (covariates.kind == CovariateGenerator::Kind::kReplay) {
    const Eigen::Index mf = truth.phi[0].size();
    if (static_cast<Eigen::Index>(covariates.replay_bc.size()) != n_units) {
      throw InputError("SimSpec: replayed covariates need one block per unit");
    }
    for (const auto& b : covariates.replay_bc) {
      if (b.rows() < t_len || b.cols() != m - 1) throw InputError("SimSpec: replayed unit covariate block has the wrong shape");
    }
    if (covariates.replay_fc.rows() < t_len || covariates.replay_fc.cols() != mf - 1) {
      throw InputError("SimSpec: replayed financial covariate block has the wrong shape");
    }
  }
  if (covariates.kind == CovariateGenerator::Kind::kGaussian && !(covariates.sd > 0.0)) {
    throw InputError("SimSpec: gaussian covariate sd must be positive");
  }
}

namespace {

Eigen::MatrixXd make_block(const CovariateGenerator& gen, const Eigen::MatrixXd* replay, Eigen::Index T, Eigen::Index m, Rng& rng)
{
  Eigen::MatrixXd z(T, m);
  z.col(0).setOnes();
  for (Eigen::Index c = 1; c < m; ++c) {
    for (Eigen::Index t = 0; t < T; ++t) {
      switch (gen.kind) {
      case CovariateGenerator::Kind::kConstant: z(t, c) = gen.value; break;
      case CovariateGenerator::Kind::kGaussian: z(t, c) = gen.sd * rng.normal(); break;
      case CovariateGenerator::Kind::kReplay: z(t, c) = (*replay)(t, c - 1); break;
      }
    }
  }
  return z;
}

} // namespace

Simulation simulate(const SimSpec& spec)
{
  spec.validate();
  const Eigen::Index T = spec.t_len;
  const Eigen::Index N = spec.n_units;
  const ModelParams& p = spec.truth;
  const Eigen::Index m = p.psi.front()[0].size();
  const Eigen::Index mf = p.phi[0].size();

  Simulation sim;
  PanelDataset& d = sim.data;
  Rng cov_rng(derive_seed(spec.seed, 1));
  Rng state_rng(derive_seed(spec.seed, 2));
  Rng noise_rng(derive_seed(spec.seed, 3));

  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::MatrixXd* replay =
        spec.covariates.kind == CovariateGenerator::Kind::kReplay ? &spec.covariates.replay_bc[static_cast<std::size_t>(i)] : nullptr;
    d.z_bc.push_back(make_block(spec.covariates, replay, T, m, cov_rng));
  }
  d.z_fc = make_block(spec.covariates,
                      spec.covariates.kind == CovariateGenerator::Kind::kReplay ? &spec.covariates.replay_fc : nullptr, T, mf,
                      cov_rng);

  LatentStates& s = sim.states;
  s.s_y.resize(T, N);
  s.s_x.resize(T);
  s.s_x(0) = state_rng.uniform() < 0.5 ? kRecession : kExpansion;
  for (Eigen::Index i = 0; i < N; ++i) s.s_y(0, i) = state_rng.uniform() < 0.5 ? kRecession : kExpansion;
  for (Eigen::Index t = 1; t < T; ++t) {
    const int sx_prev = s.s_x(t - 1);
    const double m2 = global_factor(s.s_y.row(t - 1), kExpansion);
    const Eigen::Vector2d rf = transition_row(p, Chain::financial(), sx_prev, sx_prev, m2);
    s.s_x(t) = state_rng.uniform() < rf(1) ? kExpansion : kRecession;
    for (Eigen::Index i = 0; i < N; ++i) {
      const Eigen::Vector2d r = transition_row(p, Chain::unit(static_cast<int>(i)), s.s_y(t - 1, i), sx_prev, m2);
      s.s_y(t, i) = state_rng.uniform() < r(1) ? kExpansion : kRecession;
    }
  }

  d.y.resize(T, N);
  d.x.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int k = s.s_y(t, i);
      d.y(t, i) = d.z_bc[ui].row(t).dot(p.psi[ui][static_cast<std::size_t>(k - 1)]) + p.sigma(i, k - 1) * noise_rng.normal();
    }
    const int k = s.s_x(t);
    d.x(t) = d.z_fc.row(t).dot(p.phi[static_cast<std::size_t>(k - 1)]) + p.tau(k - 1) * noise_rng.normal();
  }

  for (Eigen::Index i = 0; i < N; ++i) {
    d.unit_labels.push_back(spec.unit_labels.empty() ? "U" + std::to_string(i + 1) : spec.unit_labels[static_cast<std::size_t>(i)]);
  }
  d.bc_covariate_names.push_back("const");
  for (Eigen::Index c = 1; c < m; ++c) d.bc_covariate_names.push_back("z" + std::to_string(c));
  d.fc_covariate_names.push_back("const");
  for (Eigen::Index c = 1; c < mf; ++c) d.fc_covariate_names.push_back("w" + std::to_string(c));
  for (Eigen::Index t = 0; t < T; ++t) d.dates.push_back(spec.start.plus(static_cast<int>(t)));
  d.validate();
  return sim;
}

ModelParams default_truth(Eigen::Index n_units, Eigen::Index m, Eigen::Index m_f)
{
  ModelParams p;
  Eigen::Matrix2d rows;
  rows << 0.85, 0.15, 0.1, 0.9;
  for (Eigen::Index i = 0; i < n_units; ++i) {
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(m), hi = Eigen::VectorXd::Zero(m);
    lo(0) = -1.0;
    hi(0) = 1.0;
    if (m > 1) {
      lo(1) = 0.3;
      hi(1) = -0.2;
    }
    p.psi.push_back({lo, hi});
    p.p_unit.push_back(rows);
    p.interaction_unit.push_back(Eigen::Vector3d(0.8, 0.1, 0.1));
  }
  p.sigma = Eigen::MatrixXd::Constant(n_units, 2, 0.5);
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(m_f), hi = Eigen::VectorXd::Zero(m_f);
  lo(0) = -1.0;
  hi(0) = 1.0;
  p.phi = {lo, hi};
  p.tau = Eigen::Vector2d::Constant(0.5);
  p.p_fin = rows;
  p.interaction_fin = Eigen::Vector3d(0.8, 0.1, 0.1);
  return p;
}

} // namespace pms
