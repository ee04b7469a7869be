#include "pms/types.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace pms {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

bool on_simplex(const Eigen::Ref<const Eigen::VectorXd>& v, double tol = 1e-9)
{
  if ((v.array() < 0.0).any() || (v.array() > 1.0).any()) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

std::string unit_name(const std::vector<std::string>& labels, Eigen::Index i)
{
  if (static_cast<std::size_t>(i) < labels.size()) return labels[static_cast<std::size_t>(i)];
  return "unit " + std::to_string(i);
}

} // namespace

void PanelDataset::validate() const
{
  const Eigen::Index T = t_len();
  const Eigen::Index N = n_units();
  if (T < 1 || N < 1) throw InputError("dataset must have T >= 1 and N >= 1");
  if (x.size() != T) throw InputError("x length does not match T");
  if (static_cast<Eigen::Index>(z_bc.size()) != N) throw InputError("z_bc must hold one block per unit");
  if (z_fc.rows() != T || z_fc.cols() < 1) throw InputError("z_fc must be T x m_f with m_f >= 1");
  if (!all_finite(y)) throw InputError("non-finite value in y");
  if (!x.allFinite()) throw InputError("non-finite value in x");
  if (!z_fc.allFinite()) throw InputError("non-finite value in z_fc");
  const Eigen::Index m = z_bc.front().cols();
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& z = z_bc[static_cast<std::size_t>(i)];
    if (z.rows() != T || z.cols() != m || m < 1) {
      throw InputError("z_bc block of " + unit_name(unit_labels, i) + " has wrong shape");
    }
    if (!all_finite(z)) throw InputError("non-finite covariate for " + unit_name(unit_labels, i));
    if ((z.col(0).array() != 1.0).any()) {
      throw InputError("first covariate of " + unit_name(unit_labels, i) + " must be the intercept");
    }
  }
  if ((z_fc.col(0).array() != 1.0).any()) throw InputError("first financial covariate must be the intercept");
  if (!unit_labels.empty() && static_cast<Eigen::Index>(unit_labels.size()) != N) {
    throw InputError("unit label count does not match N");
  }
  if (!dates.empty()) {
    if (static_cast<Eigen::Index>(dates.size()) != T) throw InputError("date count does not match T");
    for (std::size_t t = 1; t < dates.size(); ++t) {
      if (dates[t].index() != dates[t - 1].index() + 1) {
        throw InputError("dates must be consecutive months (break at " + dates[t].str() + ")");
      }
    }
  }
}

std::string data_fingerprint(const PanelDataset& data)
{
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_bytes = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= b[k];
      h *= 1099511628211ULL;
    }
  };
  auto mix_i64 = [&](std::int64_t v) { mix_bytes(&v, sizeof v); };
  mix_i64(data.t_len());
  mix_i64(data.n_units());
  for (const auto& d : data.dates) mix_i64(d.index());
  for (const auto& s : data.unit_labels) mix_bytes(s.data(), s.size() + 1);
  for (Eigen::Index j = 0; j < data.y.cols(); ++j) {
    for (Eigen::Index t = 0; t < data.y.rows(); ++t) {
      double v = data.y(t, j);
      mix_bytes(&v, sizeof v);
    }
  }
  for (Eigen::Index t = 0; t < data.x.size(); ++t) {
    double v = data.x(t);
    mix_bytes(&v, sizeof v);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool ModelParams::identified() const
{
  for (const auto& pk : psi) {
    if (pk[0](0) > pk[1](0)) return false;
  }
  return phi[0](0) <= phi[1](0);
}

void ModelParams::validate(bool check_identification) const
{
  const Eigen::Index N = n_units();
  if (static_cast<Eigen::Index>(psi.size()) != N || static_cast<Eigen::Index>(p_unit.size()) != N ||
      static_cast<Eigen::Index>(interaction_unit.size()) != N || sigma.cols() != 2) {
    throw InputError("ModelParams: per-unit blocks disagree on N");
  }
  if (!(sigma.array() > 0.0).all() || !sigma.allFinite()) throw InputError("ModelParams: sigma must be positive");
  if (!(tau.array() > 0.0).all() || !tau.allFinite()) throw InputError("ModelParams: tau must be positive");
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& pk = psi[static_cast<std::size_t>(i)];
    if (pk[0].size() != pk[1].size() || pk[0].size() < 1) throw InputError("ModelParams: psi blocks inconsistent");
    if (!pk[0].allFinite() || !pk[1].allFinite()) throw InputError("ModelParams: non-finite psi");
  }
  if (phi[0].size() != phi[1].size() || phi[0].size() < 1) throw InputError("ModelParams: phi blocks inconsistent");
  auto check_rows = [](const Eigen::Matrix2d& p, const std::string& who) {
    for (int l = 0; l < 2; ++l) {
      if (!on_simplex(p.row(l).transpose())) throw InputError("ModelParams: transition row of " + who + " off the simplex");
    }
  };
  auto check_triple = [](const Eigen::Vector3d& v, const std::string& who) {
    if (!on_simplex(v) || !(v(0) > 0.0)) {
      throw InputError("ModelParams: interaction triple of " + who + " must lie on the simplex with alpha > 0");
    }
  };
  for (Eigen::Index i = 0; i < N; ++i) {
    check_rows(p_unit[static_cast<std::size_t>(i)], "unit " + std::to_string(i));
    check_triple(interaction_unit[static_cast<std::size_t>(i)], "unit " + std::to_string(i));
  }
  check_rows(p_fin, "financial chain");
  check_triple(interaction_fin, "financial chain");
  if (check_identification && !identified()) {
    throw InputError("ModelParams: intercept ordering (regime 1 <= regime 2) violated");
  }
}

void LatentStates::validate() const
{
  if (s_y.rows() != s_x.size()) throw InputError("LatentStates: s_y and s_x lengths differ");
  auto ok = [](int v) { return v == kRecession || v == kExpansion; };
  for (Eigen::Index t = 0; t < s_y.rows(); ++t) {
    if (!ok(s_x(t))) throw InputError("LatentStates: financial state must be 1 or 2");
    for (Eigen::Index i = 0; i < s_y.cols(); ++i) {
      if (!ok(s_y(t, i))) throw InputError("LatentStates: unit state must be 1 or 2");
    }
  }
}

PriorConfig PriorConfig::defaults(Eigen::Index n_units,
                                  Eigen::Index m,
                                  Eigen::Index m_f,
                                  double coef_var,
                                  double var_shape,
                                  double var_rate,
                                  const Eigen::Vector2d& delta,
                                  const Eigen::Vector3d& interaction)
{
  PriorConfig prior;
  const auto N = static_cast<std::size_t>(n_units);
  for (std::size_t i = 0; i < N; ++i) {
    prior.psi_mean.push_back({Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)});
    prior.psi_cov.push_back({coef_var * Eigen::MatrixXd::Identity(m, m), coef_var * Eigen::MatrixXd::Identity(m, m)});
  }
  prior.phi_mean = {Eigen::VectorXd::Zero(m_f), Eigen::VectorXd::Zero(m_f)};
  prior.phi_cov = {coef_var * Eigen::MatrixXd::Identity(m_f, m_f), coef_var * Eigen::MatrixXd::Identity(m_f, m_f)};
  prior.sigma_shape = Eigen::MatrixXd::Constant(n_units, 2, var_shape);
  prior.sigma_rate = Eigen::MatrixXd::Constant(n_units, 2, var_rate);
  prior.tau_shape = Eigen::Vector2d::Constant(var_shape);
  prior.tau_rate = Eigen::Vector2d::Constant(var_rate);
  prior.delta_unit.assign(N, delta);
  prior.delta_fin = delta;
  prior.interaction_unit.assign(N, interaction);
  prior.interaction_fin = interaction;
  return prior;
}

void PriorConfig::validate(Eigen::Index n_units, Eigen::Index m, Eigen::Index m_f) const
{
  const auto N = static_cast<std::size_t>(n_units);
  if (psi_mean.size() != N || psi_cov.size() != N || delta_unit.size() != N || interaction_unit.size() != N ||
      sigma_shape.rows() != n_units || sigma_rate.rows() != n_units) {
    throw InputError("PriorConfig: per-unit blocks do not match N");
  }
  auto check_cov = [](const Eigen::MatrixXd& c, Eigen::Index dim, const char* who) {
    if (c.rows() != dim || c.cols() != dim) throw InputError(std::string("PriorConfig: ") + who + " covariance has wrong shape");
    if (!c.isApprox(c.transpose(), 1e-12)) throw InputError(std::string("PriorConfig: ") + who + " covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw InputError(std::string("PriorConfig: ") + who + " covariance not positive definite");
  };
  for (std::size_t i = 0; i < N; ++i) {
    for (int l = 0; l < 2; ++l) {
      if (psi_mean[i][static_cast<std::size_t>(l)].size() != m) throw InputError("PriorConfig: psi mean has wrong length");
      check_cov(psi_cov[i][static_cast<std::size_t>(l)], m, "psi");
    }
    if (!(delta_unit[i].array() > 0.0).all()) throw InputError("PriorConfig: delta must be positive");
    if (!(interaction_unit[i].array() > 0.0).all()) throw InputError("PriorConfig: interaction weights must be positive");
  }
  for (int l = 0; l < 2; ++l) {
    if (phi_mean[static_cast<std::size_t>(l)].size() != m_f) throw InputError("PriorConfig: phi mean has wrong length");
    check_cov(phi_cov[static_cast<std::size_t>(l)], m_f, "phi");
  }
  if (!(sigma_shape.array() > 0.0).all() || !(sigma_rate.array() > 0.0).all() || !(tau_shape.array() > 0.0).all() ||
      !(tau_rate.array() > 0.0).all()) {
    throw InputError("PriorConfig: inverse-gamma hyperparameters must be positive");
  }
  if (!(delta_fin.array() > 0.0).all() || !(interaction_fin.array() > 0.0).all()) {
    throw InputError("PriorConfig: financial Dirichlet weights must be positive");
  }
}

} // namespace pms
