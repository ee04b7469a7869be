#include "pms/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace pms {

namespace {

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

double log_sum_exp(double a, double b)
{
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

Eigen::Index count_expansion_excluding(const LatentStates& states, Eigen::Index t, Eigen::Index skip)
{
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < states.s_y.cols(); ++j) {
    if (j != skip && states.s_y(t, j) == kExpansion) ++c;
  }
  return c;
}

double quantile_type7(std::vector<double> v, double q)
{
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace

void McmcConfig::validate() const
{
  if (burn_in < 0) throw InputError("McmcConfig: burn_in must be non-negative");
  if (thin < 1) throw InputError("McmcConfig: thin must be >= 1");
  if (burn_in >= total_iterations) throw InputError("McmcConfig: burn_in must be smaller than total_iterations");
  if (retained() < 1) throw InputError("McmcConfig: (total_iterations - burn_in) / thin must be >= 1");
  if (!(mixture_weights.array() > 0.0).all() || std::abs(mixture_weights.sum() - 1.0) > 1e-9) {
    throw InputError("McmcConfig: mixture weights must be positive and sum to 1");
  }
  if (refine_steps < 0) throw InputError("McmcConfig: refine_steps must be non-negative");
  if (!(refine_concentration > 0.0)) throw InputError("McmcConfig: refine_concentration must be positive");
  if (init_strategy != "quantile") throw InputError("McmcConfig: unknown init strategy '" + init_strategy + "'");
}

// ---------------------------------------------------------------------------
// Trajectories

StateLattice state_lattice(const PanelDataset& data,
                           const ModelParams& params,
                           const LatentStates& states,
                           Chain chain,
                           StateConditional mode)
{
  const Eigen::Index T = data.t_len();
  const Eigen::Index N = data.n_units();
  StateLattice lat;
  lat.log_evidence.resize(T, 2);
  lat.log_transition.resize(static_cast<std::size_t>(std::max<Eigen::Index>(T - 1, 0)));
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int k = 1; k <= 2; ++k) lat.log_evidence(t, k - 1) = emission_logpdf(data, params, chain, t, k);
  }
  const auto n = static_cast<double>(N);
  const Chain fin = Chain::financial();

  if (!chain.is_financial()) {
    const Eigen::Index i = chain.unit_index();
    for (Eigen::Index t = 0; t + 1 < T; ++t) {
      const Eigen::Index others2 = count_expansion_excluding(states, t, i);
      Eigen::Matrix2d& A = lat.log_transition[static_cast<std::size_t>(t)];
      for (int l = 1; l <= 2; ++l) {
        const double m2 = static_cast<double>(others2 + (l == kExpansion ? 1 : 0)) / n;
        const Eigen::Vector2d row = transition_row(params, chain, l, states.s_x(t), m2);
        A(l - 1, 0) = safe_log(row(0));
        A(l - 1, 1) = safe_log(row(1));
        if (mode == StateConditional::kExact) {
          double cross = 0.0;
          for (Eigen::Index j = 0; j < N; ++j) {
            if (j == i) continue;
            const Eigen::Vector2d rj =
                transition_row(params, Chain::unit(static_cast<int>(j)), states.s_y(t, j), states.s_x(t), m2);
            cross += safe_log(rj(states.s_y(t + 1, j) - 1));
          }
          const Eigen::Vector2d rf = transition_row(params, fin, states.s_x(t), states.s_x(t), m2);
          cross += safe_log(rf(states.s_x(t + 1) - 1));
          lat.log_evidence(t, l - 1) += cross;
        }
      }
    }
    return lat;
  }

  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    const double m2 = global_factor(states.s_y.row(t), kExpansion);
    Eigen::Matrix2d& A = lat.log_transition[static_cast<std::size_t>(t)];
    for (int l = 1; l <= 2; ++l) {
      const Eigen::Vector2d row = transition_row(params, fin, l, l, m2);
      A(l - 1, 0) = safe_log(row(0));
      A(l - 1, 1) = safe_log(row(1));
      if (mode == StateConditional::kExact) {
        double cross = 0.0;
        for (Eigen::Index j = 0; j < N; ++j) {
          const Eigen::Vector2d rj = transition_row(params, Chain::unit(static_cast<int>(j)), states.s_y(t, j), l, m2);
          cross += safe_log(rj(states.s_y(t + 1, j) - 1));
        }
        lat.log_evidence(t, l - 1) += cross;
      }
    }
  }
  return lat;
}

Eigen::MatrixXd forward_filter(const StateLattice& lattice)
{
  const Eigen::Index T = lattice.log_evidence.rows();
  Eigen::MatrixXd filtered(T, 2);
  Eigen::Vector2d log_f;
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::Vector2d log_pred;
    if (t == 0) {
      log_pred.setConstant(std::log(0.5));
    } else {
      const Eigen::Matrix2d& A = lattice.log_transition[static_cast<std::size_t>(t - 1)];
      for (int k = 0; k < 2; ++k) log_pred(k) = log_sum_exp(log_f(0) + A(0, k), log_f(1) + A(1, k));
    }
    log_f = log_pred + lattice.log_evidence.row(t).transpose();
    const double norm = log_sum_exp(log_f(0), log_f(1));
    if (!std::isfinite(norm)) throw NumericalError("forward filter: non-finite normaliser at t=" + std::to_string(t));
    log_f.array() -= norm;
    filtered(t, 0) = std::exp(log_f(0));
    filtered(t, 1) = std::exp(log_f(1));
  }
  return filtered;
}

Eigen::MatrixXd smoothed_marginals(const StateLattice& lattice)
{
  const Eigen::MatrixXd filtered = forward_filter(lattice);
  const Eigen::Index T = filtered.rows();
  Eigen::MatrixXd smoothed = filtered;
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const Eigen::Matrix2d A = lattice.log_transition[static_cast<std::size_t>(t)].array().exp();
    const Eigen::RowVector2d pred = filtered.row(t) * A;
    const Eigen::RowVector2d ratio = smoothed.row(t + 1).cwiseQuotient(pred);
    for (int l = 0; l < 2; ++l) smoothed(t, l) = filtered(t, l) * A.row(l).dot(ratio);
    smoothed.row(t) /= smoothed.row(t).sum();
  }
  return smoothed;
}

Eigen::VectorXi backward_sample(const StateLattice& lattice, const Eigen::MatrixXd& filtered, Rng& rng)
{
  const Eigen::Index T = filtered.rows();
  Eigen::VectorXi path(T);
  path(T - 1) = rng.uniform() < filtered(T - 1, 1) ? kExpansion : kRecession;
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const Eigen::Matrix2d& A = lattice.log_transition[static_cast<std::size_t>(t)];
    const int next = path(t + 1) - 1;
    const double w1 = safe_log(filtered(t, 0)) + A(0, next);
    const double w2 = safe_log(filtered(t, 1)) + A(1, next);
    const double p2 = 1.0 / (1.0 + std::exp(w1 - w2));
    path(t) = rng.uniform() < p2 ? kExpansion : kRecession;
  }
  return path;
}

Eigen::VectorXi ffbs_unit(const PanelDataset& data,
                          const ModelParams& params,
                          const LatentStates& states,
                          int unit,
                          StateConditional mode,
                          Rng& rng)
{
  const StateLattice lat = state_lattice(data, params, states, Chain::unit(unit), mode);
  return backward_sample(lat, forward_filter(lat), rng);
}

Eigen::VectorXi ffbs_financial(const PanelDataset& data,
                               const ModelParams& params,
                               const LatentStates& states,
                               StateConditional mode,
                               Rng& rng)
{
  const StateLattice lat = state_lattice(data, params, states, Chain::financial(), mode);
  return backward_sample(lat, forward_filter(lat), rng);
}

// ---------------------------------------------------------------------------
// Conjugate updates

GaussianConditional regression_conditional(const Eigen::MatrixXd& z,
                                           const Eigen::VectorXd& r,
                                           double scale,
                                           const Eigen::VectorXd& prior_mean,
                                           const Eigen::MatrixXd& prior_cov,
                                           ConjugateForm form)
{
  if (!(scale > 0.0)) throw InputError("regression_conditional: scale must be positive");
  const double divisor = form == ConjugateForm::kStandard ? scale * scale : scale;
  const Eigen::MatrixXd prior_prec = prior_cov.llt().solve(Eigen::MatrixXd::Identity(prior_cov.rows(), prior_cov.cols()));
  GaussianConditional out;
  out.precision = prior_prec + z.transpose() * z / divisor;
  const Eigen::VectorXd b = prior_prec * prior_mean + z.transpose() * r / divisor;
  Eigen::LLT<Eigen::MatrixXd> llt(out.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("regression_conditional: posterior precision not SPD");
  out.mean = llt.solve(b);
  return out;
}

Eigen::VectorXd draw_gaussian(const GaussianConditional& cond, Rng& rng)
{
  Eigen::LLT<Eigen::MatrixXd> llt(cond.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("draw_gaussian: precision not SPD");
  const Eigen::VectorXd eps = rng.standard_normal(cond.mean.size());
  // precision = L L'  =>  L'^{-1} eps has covariance precision^{-1}
  return cond.mean + llt.matrixU().solve(eps);
}

double truncated_standard_normal(double a, Rng& rng)
{
  if (a < 0.5) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a) return z;
    }
  }
  // exponential proposal for the upper tail (Robert 1995)
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform()) / lambda;
    if (std::log(rng.uniform()) <= -0.5 * (z - lambda) * (z - lambda)) return z;
  }
}

Eigen::VectorXd draw_gaussian_truncated(const GaussianConditional& cond, double bound, bool above, Rng& rng)
{
  const Eigen::Index n = cond.mean.size();
  const Eigen::MatrixXd cov = cond.precision.llt().solve(Eigen::MatrixXd::Identity(n, n));
  const double sd0 = std::sqrt(cov(0, 0));
  const double a = (bound - cond.mean(0)) / sd0;
  const double z = above ? truncated_standard_normal(a, rng) : -truncated_standard_normal(-a, rng);
  Eigen::VectorXd out(n);
  out(0) = cond.mean(0) + sd0 * z;
  if (n == 1) return out;
  // rest | first ~ N(mu_r - P_rr^{-1} P_r0 (x0 - mu0), P_rr^{-1})
  const Eigen::MatrixXd prr = cond.precision.bottomRightCorner(n - 1, n - 1);
  GaussianConditional rest;
  rest.precision = prr;
  rest.mean = cond.mean.tail(n - 1) - prr.llt().solve(cond.precision.col(0).tail(n - 1)) * (out(0) - cond.mean(0));
  out.tail(n - 1) = draw_gaussian(rest, rng);
  return out;
}

namespace {

template <typename RowSelector>
std::pair<Eigen::MatrixXd, Eigen::VectorXd> allocated_rows(const Eigen::MatrixXd& z,
                                                            const Eigen::Ref<const Eigen::VectorXd>& response,
                                                            RowSelector&& selected)
{
  Eigen::Index n = 0;
  for (Eigen::Index t = 0; t < z.rows(); ++t) n += selected(t) ? 1 : 0;
  Eigen::MatrixXd zs(n, z.cols());
  Eigen::VectorXd rs(n);
  Eigen::Index row = 0;
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    if (!selected(t)) continue;
    zs.row(row) = z.row(t);
    rs(row) = response(t);
    ++row;
  }
  return {std::move(zs), std::move(rs)};
}

InverseGammaConditional scale_conditional(const Eigen::MatrixXd& z,
                                          const Eigen::VectorXd& r,
                                          const Eigen::VectorXd& coef,
                                          double shape,
                                          double rate,
                                          ConjugateForm form)
{
  const double ss = (r - z * coef).squaredNorm();
  const auto n = static_cast<double>(r.size());
  if (form == ConjugateForm::kStandard) return {shape + 0.5 * n, rate + 0.5 * ss};
  return {shape + n, rate + ss};
}

} // namespace

GaussianConditional psi_conditional(const PanelDataset& data,
                                    const LatentStates& states,
                                    double sigma,
                                    const PriorConfig& prior,
                                    int unit,
                                    int regime,
                                    ConjugateForm form)
{
  require_regime(regime);
  const auto i = static_cast<std::size_t>(unit);
  auto [z, r] = allocated_rows(data.z_bc[i], data.y.col(unit), [&](Eigen::Index t) { return states.s_y(t, unit) == regime; });
  const auto l = static_cast<std::size_t>(regime - 1);
  return regression_conditional(z, r, sigma, prior.psi_mean[i][l], prior.psi_cov[i][l], form);
}

GaussianConditional phi_conditional(const PanelDataset& data,
                                    const LatentStates& states,
                                    double tau,
                                    const PriorConfig& prior,
                                    int regime,
                                    ConjugateForm form)
{
  require_regime(regime);
  auto [z, r] = allocated_rows(data.z_fc, data.x, [&](Eigen::Index t) { return states.s_x(t) == regime; });
  const auto l = static_cast<std::size_t>(regime - 1);
  return regression_conditional(z, r, tau, prior.phi_mean[l], prior.phi_cov[l], form);
}

Eigen::VectorXd draw_psi(const PanelDataset& data,
                         const LatentStates& states,
                         double sigma,
                         const PriorConfig& prior,
                         int unit,
                         int regime,
                         ConjugateForm form,
                         Rng& rng)
{
  return draw_gaussian(psi_conditional(data, states, sigma, prior, unit, regime, form), rng);
}

Eigen::VectorXd draw_phi(const PanelDataset& data,
                         const LatentStates& states,
                         double tau,
                         const PriorConfig& prior,
                         int regime,
                         ConjugateForm form,
                         Rng& rng)
{
  return draw_gaussian(phi_conditional(data, states, tau, prior, regime, form), rng);
}

InverseGammaConditional sigma_conditional(const PanelDataset& data,
                                          const LatentStates& states,
                                          const Eigen::VectorXd& psi,
                                          const PriorConfig& prior,
                                          int unit,
                                          int regime,
                                          ConjugateForm form)
{
  require_regime(regime);
  const auto i = static_cast<std::size_t>(unit);
  auto [z, r] = allocated_rows(data.z_bc[i], data.y.col(unit), [&](Eigen::Index t) { return states.s_y(t, unit) == regime; });
  return scale_conditional(z, r, psi, prior.sigma_shape(unit, regime - 1), prior.sigma_rate(unit, regime - 1), form);
}

InverseGammaConditional tau_conditional(const PanelDataset& data,
                                        const LatentStates& states,
                                        const Eigen::VectorXd& phi,
                                        const PriorConfig& prior,
                                        int regime,
                                        ConjugateForm form)
{
  require_regime(regime);
  auto [z, r] = allocated_rows(data.z_fc, data.x, [&](Eigen::Index t) { return states.s_x(t) == regime; });
  return scale_conditional(z, r, phi, prior.tau_shape(regime - 1), prior.tau_rate(regime - 1), form);
}

double draw_scale(const InverseGammaConditional& cond, Rng& rng)
{
  const double g = rng.gamma(cond.shape, 1.0);
  const double var = cond.rate / g;
  if (!std::isfinite(var) || !(var > 0.0)) throw NumericalError("draw_scale: non-finite variance draw");
  return std::sqrt(var);
}

double draw_sigma(const PanelDataset& data,
                  const LatentStates& states,
                  const Eigen::VectorXd& psi,
                  const PriorConfig& prior,
                  int unit,
                  int regime,
                  ConjugateForm form,
                  Rng& rng)
{
  return draw_scale(sigma_conditional(data, states, psi, prior, unit, regime, form), rng);
}

double draw_tau(const PanelDataset& data,
                const LatentStates& states,
                const Eigen::VectorXd& phi,
                const PriorConfig& prior,
                int regime,
                ConjugateForm form,
                Rng& rng)
{
  return draw_scale(tau_conditional(data, states, phi, prior, regime, form), rng);
}

// ---------------------------------------------------------------------------
// MH updates

double transition_row_log_target(const Eigen::Matrix2d& p,
                                 const Eigen::Vector3d& interaction,
                                 const Eigen::Vector2d& delta,
                                 const std::vector<TransitionEvent>& events,
                                 int origin)
{
  double out = 0.0;
  for (int k = 0; k < 2; ++k) out += (delta(k) - 1.0) * safe_log(p(origin - 1, k));
  return out + log_transition_product(events, p, interaction, origin);
}

RowUpdate mh_transition_row(const Eigen::Matrix2d& p,
                            const Eigen::Vector3d& interaction,
                            const Eigen::Vector2d& delta,
                            const std::vector<TransitionEvent>& events,
                            int origin,
                            Rng& rng)
{
  require_regime(origin);
  Eigen::Vector2d counts = Eigen::Vector2d::Zero();
  for (const auto& e : events) {
    if (e.from == origin) counts(e.to - 1) += 1.0;
  }
  const double a = delta(0) + counts(0);
  const double b = delta(1) + counts(1);
  const double proposed = rng.beta(a, b);
  const double log_u = std::log(rng.uniform());
  if (!(proposed > 0.0 && proposed < 1.0)) return {p, false};

  Eigen::Matrix2d candidate = p;
  candidate(origin - 1, 0) = proposed;
  candidate(origin - 1, 1) = 1.0 - proposed;

  const double q_current = log_beta_pdf(p(origin - 1, 0), a, b);
  const double t_current = transition_row_log_target(p, interaction, delta, events, origin);
  if (!std::isfinite(q_current) || !std::isfinite(t_current)) return {candidate, true};

  const double log_ratio = transition_row_log_target(candidate, interaction, delta, events, origin) - t_current +
                           q_current - log_beta_pdf(proposed, a, b);
  if (log_u < log_ratio) return {candidate, true};
  return {p, false};
}

RowUpdate mh_transition_row(const ModelParams& params,
                            const LatentStates& states,
                            const PriorConfig& prior,
                            Chain chain,
                            int origin,
                            Rng& rng)
{
  const Eigen::Vector2d& delta =
      chain.is_financial() ? prior.delta_fin : prior.delta_unit[static_cast<std::size_t>(chain.unit_index())];
  return mh_transition_row(params.transition(chain), params.interaction(chain), delta, transition_events(states, chain),
                           origin, rng);
}

double interaction_log_target(const Eigen::Vector3d& interaction,
                              const Eigen::Matrix2d& p,
                              const Eigen::Vector3d& prior_weights,
                              const std::vector<TransitionEvent>& events)
{
  double out = 0.0;
  for (int j = 0; j < 3; ++j) out += (prior_weights(j) - 1.0) * safe_log(interaction(j));
  return out + log_transition_product(events, p, interaction);
}

double interaction_log_proposal(const Eigen::Vector3d& interaction,
                                const Eigen::Vector3d& prior_weights,
                                double t_len,
                                const Eigen::Vector3d& mixture_weights)
{
  double out = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3d w = prior_weights;
    w(c) += t_len;
    out = log_sum_exp(out, std::log(mixture_weights(c)) + log_dirichlet_pdf(interaction, w));
  }
  return out;
}

Eigen::Vector3d draw_interaction_proposal(const Eigen::Vector3d& prior_weights,
                                          double t_len,
                                          const Eigen::Vector3d& mixture_weights,
                                          Rng& rng)
{
  const int c = rng.categorical(mixture_weights);
  Eigen::Vector3d w = prior_weights;
  w(c) += t_len;
  return rng.dirichlet(w);
}

InteractionUpdate mh_interaction(const Eigen::Vector3d& interaction,
                                 const Eigen::Matrix2d& p,
                                 const Eigen::Vector3d& prior_weights,
                                 const std::vector<TransitionEvent>& events,
                                 double t_len,
                                 const Eigen::Vector3d& mixture_weights,
                                 Rng& rng)
{
  const Eigen::Vector3d proposed = draw_interaction_proposal(prior_weights, t_len, mixture_weights, rng);
  const double log_u = std::log(rng.uniform());
  if (!(proposed.array() > 0.0).all() || !proposed.allFinite()) return {interaction, false};

  const double q_current = interaction_log_proposal(interaction, prior_weights, t_len, mixture_weights);
  const double t_current = interaction_log_target(interaction, p, prior_weights, events);
  if (!std::isfinite(q_current) || !std::isfinite(t_current)) return {proposed, true};

  const double log_ratio = interaction_log_target(proposed, p, prior_weights, events) - t_current + q_current -
                           interaction_log_proposal(proposed, prior_weights, t_len, mixture_weights);
  if (log_u < log_ratio) return {proposed, true};
  return {interaction, false};
}

InteractionUpdate mh_interaction(const ModelParams& params,
                                 const LatentStates& states,
                                 const PriorConfig& prior,
                                 Chain chain,
                                 const Eigen::Vector3d& mixture_weights,
                                 Rng& rng)
{
  const Eigen::Vector3d& weights =
      chain.is_financial() ? prior.interaction_fin : prior.interaction_unit[static_cast<std::size_t>(chain.unit_index())];
  return mh_interaction(params.interaction(chain), params.transition(chain), weights, transition_events(states, chain),
                        static_cast<double>(states.t_len()), mixture_weights, rng);
}

RowUpdate mh_transition_row_refine(const Eigen::Matrix2d& p,
                                   const Eigen::Vector3d& interaction,
                                   const Eigen::Vector2d& delta,
                                   const std::vector<TransitionEvent>& events,
                                   int origin,
                                   double concentration,
                                   Rng& rng)
{
  require_regime(origin);
  const double cur = p(origin - 1, 0);
  const double proposed = rng.beta(1.0 + concentration * cur, 1.0 + concentration * (1.0 - cur));
  const double log_u = std::log(rng.uniform());
  if (!(proposed > 0.0 && proposed < 1.0)) return {p, false};
  Eigen::Matrix2d candidate = p;
  candidate(origin - 1, 0) = proposed;
  candidate(origin - 1, 1) = 1.0 - proposed;
  const double log_ratio = transition_row_log_target(candidate, interaction, delta, events, origin) -
                           transition_row_log_target(p, interaction, delta, events, origin) +
                           log_beta_pdf(cur, 1.0 + concentration * proposed, 1.0 + concentration * (1.0 - proposed)) -
                           log_beta_pdf(proposed, 1.0 + concentration * cur, 1.0 + concentration * (1.0 - cur));
  if (log_u < log_ratio) return {candidate, true};
  return {p, false};
}

InteractionUpdate mh_interaction_refine(const Eigen::Vector3d& interaction,
                                        const Eigen::Matrix2d& p,
                                        const Eigen::Vector3d& prior_weights,
                                        const std::vector<TransitionEvent>& events,
                                        double concentration,
                                        Rng& rng)
{
  const Eigen::Vector3d forward = Eigen::Vector3d::Ones() + concentration * interaction;
  const Eigen::Vector3d proposed = rng.dirichlet(forward);
  const double log_u = std::log(rng.uniform());
  if (!(proposed.array() > 0.0).all() || !proposed.allFinite()) return {interaction, false};
  const Eigen::Vector3d backward = Eigen::Vector3d::Ones() + concentration * proposed;
  const double log_ratio = interaction_log_target(proposed, p, prior_weights, events) -
                           interaction_log_target(interaction, p, prior_weights, events) +
                           log_dirichlet_pdf(interaction, backward) - log_dirichlet_pdf(proposed, forward);
  if (log_u < log_ratio) return {proposed, true};
  return {interaction, false};
}

// ---------------------------------------------------------------------------
// Sweep

int enforce_identification(ModelParams& params, LatentStates& states)
{
  auto relabel = [](Eigen::Matrix2d& p) {
    const Eigen::Matrix2d old = p;
    for (int l = 0; l < 2; ++l) {
      for (int k = 0; k < 2; ++k) p(l, k) = old(1 - l, 1 - k);
    }
  };
  int swaps = 0;
  for (Eigen::Index i = 0; i < params.n_units(); ++i) {
    auto& pk = params.psi[static_cast<std::size_t>(i)];
    if (pk[0](0) <= pk[1](0)) continue;
    std::swap(pk[0], pk[1]);
    std::swap(params.sigma(i, 0), params.sigma(i, 1));
    relabel(params.p_unit[static_cast<std::size_t>(i)]);
    states.s_y.col(i) = (3 - states.s_y.col(i).array()).matrix();
    ++swaps;
  }
  if (params.phi[0](0) > params.phi[1](0)) {
    std::swap(params.phi[0], params.phi[1]);
    std::swap(params.tau(0), params.tau(1));
    relabel(params.p_fin);
    states.s_x = (3 - states.s_x.array()).matrix();
    ++swaps;
  }
  return swaps;
}

Rng sweep_stream(std::uint64_t seed, long iteration, SweepStep step, Eigen::Index chain_id)
{
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(step),
                         static_cast<std::uint64_t>(chain_id)));
}

SweepStats gibbs_sweep(const PanelDataset& data,
                       const PriorConfig& prior,
                       const McmcConfig& config,
                       SamplerState& state,
                       long iteration)
{
  const Eigen::Index N = data.n_units();
  const auto seed = config.seed;
  ModelParams& params = state.params;
  LatentStates& states = state.states;
  SweepStats stats;

  // 1. trajectories, units in order then the financial chain
  for (Eigen::Index i = 0; i < N; ++i) {
    Rng rng = sweep_stream(seed, iteration, SweepStep::kStates, i);
    states.s_y.col(i) = ffbs_unit(data, params, states, static_cast<int>(i), config.state_conditional, rng);
  }
  {
    Rng rng = sweep_stream(seed, iteration, SweepStep::kStates, N);
    states.s_x = ffbs_financial(data, params, states, config.state_conditional, rng);
  }

  std::vector<std::vector<TransitionEvent>> events(static_cast<std::size_t>(N + 1));
  for (Eigen::Index i = 0; i < N; ++i) events[static_cast<std::size_t>(i)] = transition_events(states, Chain::unit(static_cast<int>(i)));
  events[static_cast<std::size_t>(N)] = transition_events(states, Chain::financial());
  const auto t_len = static_cast<double>(data.t_len());

  // 2-3. interaction triples
  for (Eigen::Index i = 0; i <= N; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const bool fin = i == N;
    Rng rng = sweep_stream(seed, iteration, fin ? SweepStep::kInteractionFin : SweepStep::kInteractionUnit, i);
    Eigen::Vector3d& tri = fin ? params.interaction_fin : params.interaction_unit[ui];
    const Eigen::Matrix2d& p = fin ? params.p_fin : params.p_unit[ui];
    const Eigen::Vector3d& w = fin ? prior.interaction_fin : prior.interaction_unit[ui];
    const InteractionUpdate up = mh_interaction(tri, p, w, events[ui], t_len, config.mixture_weights, rng);
    tri = up.interaction;
    ++stats.interaction.proposed;
    stats.interaction.accepted += up.accepted ? 1 : 0;
    for (int r = 0; r < config.refine_steps; ++r) {
      const InteractionUpdate rw = mh_interaction_refine(tri, p, w, events[ui], config.refine_concentration, rng);
      tri = rw.interaction;
      ++stats.interaction_refine.proposed;
      stats.interaction_refine.accepted += rw.accepted ? 1 : 0;
    }
  }

  // 4-5. fixed transition rows
  for (Eigen::Index i = 0; i <= N; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const bool fin = i == N;
    Rng rng = sweep_stream(seed, iteration, fin ? SweepStep::kRowsFin : SweepStep::kRowsUnit, i);
    Eigen::Matrix2d& p = fin ? params.p_fin : params.p_unit[ui];
    const Eigen::Vector3d& tri = fin ? params.interaction_fin : params.interaction_unit[ui];
    const Eigen::Vector2d& delta = fin ? prior.delta_fin : prior.delta_unit[ui];
    for (int l = 1; l <= 2; ++l) {
      const RowUpdate up = mh_transition_row(p, tri, delta, events[ui], l, rng);
      p = up.p;
      ++stats.transition_rows.proposed;
      stats.transition_rows.accepted += up.accepted ? 1 : 0;
      for (int r = 0; r < config.refine_steps; ++r) {
        const RowUpdate rw = mh_transition_row_refine(p, tri, delta, events[ui], l, config.refine_concentration, rng);
        p = rw.p;
        ++stats.transition_rows_refine.proposed;
        stats.transition_rows_refine.accepted += rw.accepted ? 1 : 0;
      }
    }
  }

  // 6. regression coefficients
  const bool truncated = config.identification == Identification::kTruncated;
  for (Eigen::Index i = 0; i < N; ++i) {
    Rng rng = sweep_stream(seed, iteration, SweepStep::kCoefficients, i);
    auto& pk = params.psi[static_cast<std::size_t>(i)];
    for (int l = 1; l <= 2; ++l) {
      const auto k = static_cast<std::size_t>(l - 1);
      const GaussianConditional cond =
          psi_conditional(data, states, params.sigma(i, l - 1), prior, static_cast<int>(i), l, config.conjugate_form);
      pk[k] = truncated ? draw_gaussian_truncated(cond, pk[1 - k](0), l == kExpansion, rng) : draw_gaussian(cond, rng);
    }
  }
  {
    Rng rng = sweep_stream(seed, iteration, SweepStep::kCoefficients, N);
    for (int l = 1; l <= 2; ++l) {
      const auto k = static_cast<std::size_t>(l - 1);
      const GaussianConditional cond = phi_conditional(data, states, params.tau(l - 1), prior, l, config.conjugate_form);
      params.phi[k] = truncated ? draw_gaussian_truncated(cond, params.phi[1 - k](0), l == kExpansion, rng) : draw_gaussian(cond, rng);
    }
  }

  // 7. scales
  for (Eigen::Index i = 0; i < N; ++i) {
    Rng rng = sweep_stream(seed, iteration, SweepStep::kScales, i);
    for (int l = 1; l <= 2; ++l) {
      params.sigma(i, l - 1) = draw_sigma(data, states, params.psi[static_cast<std::size_t>(i)][static_cast<std::size_t>(l - 1)],
                                          prior, static_cast<int>(i), l, config.conjugate_form, rng);
    }
  }
  {
    Rng rng = sweep_stream(seed, iteration, SweepStep::kScales, N);
    for (int l = 1; l <= 2; ++l) {
      params.tau(l - 1) = draw_tau(data, states, params.phi[static_cast<std::size_t>(l - 1)], prior, l, config.conjugate_form, rng);
    }
  }

  if (!truncated) stats.label_swaps = enforce_identification(params, states);
  return stats;
}

SamplerState initialize(const PanelDataset& data, const McmcConfig& config)
{
  config.validate();
  const Eigen::Index T = data.t_len();
  const Eigen::Index N = data.n_units();
  const Eigen::Index m = data.n_bc_covariates();
  const Eigen::Index mf = data.n_fc_covariates();

  SamplerState st;
  ModelParams& p = st.params;
  st.states.s_y.resize(T, N);
  st.states.s_x.resize(T);

  auto series_stats = [](const Eigen::VectorXd& v) {
    std::vector<double> s(v.data(), v.data() + v.size());
    const double mean = v.mean();
    const double sd = v.size() > 1 ? std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1)) : 0.0;
    return std::array<double, 4>{quantile_type7(s, 0.25), quantile_type7(s, 0.5), quantile_type7(s, 0.75), sd > 0.0 ? sd : 1.0};
  };

  Eigen::Matrix2d persistent;
  persistent << 0.9, 0.1, 0.1, 0.9;
  const Eigen::Vector3d interaction(0.95, 0.02, 0.03);

  p.sigma.resize(N, 2);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::VectorXd yi = data.y.col(i);
    const auto s = series_stats(yi);
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(m), hi = Eigen::VectorXd::Zero(m);
    lo(0) = s[0];
    hi(0) = s[2];
    p.psi.push_back({lo, hi});
    p.sigma.row(i).setConstant(s[3]);
    p.p_unit.push_back(persistent);
    p.interaction_unit.push_back(interaction);
    for (Eigen::Index t = 0; t < T; ++t) st.states.s_y(t, i) = yi(t) < s[1] ? kRecession : kExpansion;
  }
  const auto s = series_stats(data.x);
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(mf), hi = Eigen::VectorXd::Zero(mf);
  lo(0) = s[0];
  hi(0) = s[2];
  p.phi = {lo, hi};
  p.tau.setConstant(s[3]);
  p.p_fin = persistent;
  p.interaction_fin = interaction;
  for (Eigen::Index t = 0; t < T; ++t) st.states.s_x(t) = data.x(t) < s[1] ? kRecession : kExpansion;
  return st;
}

ModelParams draw_prior(const PriorConfig& prior, Rng& rng)
{
  auto mvn = [&rng](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    return Eigen::VectorXd(mean + llt.matrixL() * rng.standard_normal(mean.size()));
  };
  auto ordered_pair = [&](const std::array<Eigen::VectorXd, 2>& mean, const std::array<Eigen::MatrixXd, 2>& cov) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::array<Eigen::VectorXd, 2> b{mvn(mean[0], cov[0]), mvn(mean[1], cov[1])};
      if (b[0](0) <= b[1](0)) return b;
    }
    throw NumericalError("draw_prior: prior puts almost no mass on the ordered region");
  };
  auto ig_scale = [&rng](double shape, double rate) { return std::sqrt(rate / rng.gamma(shape, 1.0)); };
  auto rows = [&rng](const Eigen::Vector2d& delta) {
    Eigen::Matrix2d p;
    for (int l = 0; l < 2; ++l) {
      const double a = rng.beta(delta(0), delta(1));
      p(l, 0) = a;
      p(l, 1) = 1.0 - a;
    }
    return p;
  };

  const Eigen::Index N = static_cast<Eigen::Index>(prior.psi_mean.size());
  ModelParams p;
  p.sigma.resize(N, 2);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    p.psi.push_back(ordered_pair(prior.psi_mean[ui], prior.psi_cov[ui]));
    for (int k = 0; k < 2; ++k) p.sigma(i, k) = ig_scale(prior.sigma_shape(i, k), prior.sigma_rate(i, k));
    p.p_unit.push_back(rows(prior.delta_unit[ui]));
    p.interaction_unit.push_back(rng.dirichlet(prior.interaction_unit[ui]));
  }
  p.phi = ordered_pair(prior.phi_mean, prior.phi_cov);
  for (int k = 0; k < 2; ++k) p.tau(k) = ig_scale(prior.tau_shape(k), prior.tau_rate(k));
  p.p_fin = rows(prior.delta_fin);
  p.interaction_fin = rng.dirichlet(prior.interaction_fin);
  return p;
}

PosteriorDraws run(const PanelDataset& data, const PriorConfig& prior, const McmcConfig& config, const RunHooks& hooks)
{
  config.validate();
  data.validate();
  prior.validate(data.n_units(), data.n_bc_covariates(), data.n_fc_covariates());

  PosteriorDraws out;
  out.config = config;
  out.fingerprint = data_fingerprint(data);
  if (hooks.keep_draws) out.draws.reserve(static_cast<std::size_t>(config.retained()));

  SamplerState state = initialize(data, config);
  for (long it = 1; it <= config.total_iterations; ++it) {
    if (hooks.stop != nullptr && hooks.stop->load()) break;
    out.stats += gibbs_sweep(data, prior, config, state, it);
    out.iterations_done = it;
    if (it <= config.burn_in || (it - config.burn_in) % config.thin != 0) continue;
    Draw d{it, state.params, state.states, complete_data_loglik(data, state.params, state.states)};
    if (!std::isfinite(d.loglik)) throw NumericalError("non-finite complete-data log-likelihood at iteration " + std::to_string(it));
    if (hooks.on_draw) hooks.on_draw(d);
    if (hooks.keep_draws) out.draws.push_back(std::move(d));
  }
  out.complete = out.iterations_done == config.total_iterations;
  return out;
}

} // namespace pms
