#pragma once

#include "pms/model.hpp"
#include "pms/random.hpp"
#include "pms/types.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pms {

/// Which terms enter the full conditional of one chain's trajectory.
enum class StateConditional
{
  /// Every factor of the complete-data likelihood that involves the chain,
  /// including the other chains' transitions it drives through m_k and S_x.
  kExact,
  /// Own emissions and own transitions only.
  kOwnChain,
};

/// Variance convention of the conjugate measurement-equation updates.
enum class ConjugateForm
{
  /// Gaussian-likelihood conjugacy: precision uses 1/sigma^2, IG(a + n/2, b + SS/2).
  kStandard,
  /// Literal printed forms: precision uses 1/sigma, IG(a + n, b + SS).
  kAsPrinted,
};

/// How the intercept ordering is imposed on every sweep.
enum class Identification
{
  /// Unrestricted draws, then relabel chains whose ordering is violated.
  kLabelSwap,
  /// Coefficient draws truncated to the ordered region; no relabelling.
  kTruncated,
};

struct McmcConfig
{
  long total_iterations = 22000; // includes burn-in
  long burn_in = 2000;
  long thin = 10;
  std::uint64_t seed = 1;
  Eigen::Vector3d mixture_weights = Eigen::Vector3d::Constant(1.0 / 3.0);
  std::string init_strategy = "quantile";
  StateConditional state_conditional = StateConditional::kExact;
  ConjugateForm conjugate_form = ConjugateForm::kStandard;
  Identification identification = Identification::kTruncated;
  // Random-walk MH steps run after each independence step on a transition row
  // or interaction triple (0 keeps the independence kernel alone), and the
  // concentration of their Beta/Dirichlet proposal around the current value.
  int refine_steps = 1;
  double refine_concentration = 100.0;

  long retained() const { return (total_iterations - burn_in) / thin; }
  void validate() const;
};

struct SamplerState
{
  ModelParams params;
  LatentStates states;
};

struct MhCounter
{
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct SweepStats
{
  MhCounter transition_rows;
  MhCounter interaction;
  MhCounter transition_rows_refine;
  MhCounter interaction_refine;
  int label_swaps = 0;

  SweepStats& operator+=(const SweepStats& o)
  {
    transition_rows.proposed += o.transition_rows.proposed;
    transition_rows.accepted += o.transition_rows.accepted;
    interaction.proposed += o.interaction.proposed;
    interaction.accepted += o.interaction.accepted;
    transition_rows_refine.proposed += o.transition_rows_refine.proposed;
    transition_rows_refine.accepted += o.transition_rows_refine.accepted;
    interaction_refine.proposed += o.interaction_refine.proposed;
    interaction_refine.accepted += o.interaction_refine.accepted;
    label_swaps += o.label_swaps;
    return *this;
  }
};

struct Draw
{
  long iteration = 0; // 1-based sweep index
  ModelParams params;
  LatentStates states;
  double loglik = 0.0;
};

struct PosteriorDraws
{
  std::vector<Draw> draws;
  McmcConfig config;
  std::string fingerprint;
  bool complete = false;
  long iterations_done = 0;
  SweepStats stats;
};

// ---------------------------------------------------------------------------
// Latent trajectories

/// Log-space lattice for one chain's trajectory with every other chain fixed:
/// per-time local evidence and per-step transition matrices.
struct StateLattice
{
  Eigen::MatrixXd log_evidence;              // T x 2
  std::vector<Eigen::Matrix2d> log_transition; // T-1 entries, (from, to)
};

StateLattice state_lattice(const PanelDataset& data,
                           const ModelParams& params,
                           const LatentStates& states,
                           Chain chain,
                           StateConditional mode);

/// Filtered probabilities P(S_t | data up to t), T x 2, uniform initial law.
Eigen::MatrixXd forward_filter(const StateLattice& lattice);

/// Smoothed marginals P(S_t | all data), T x 2.
Eigen::MatrixXd smoothed_marginals(const StateLattice& lattice);

Eigen::VectorXi backward_sample(const StateLattice& lattice, const Eigen::MatrixXd& filtered, Rng& rng);

Eigen::VectorXi ffbs_unit(const PanelDataset& data,
                          const ModelParams& params,
                          const LatentStates& states,
                          int unit,
                          StateConditional mode,
                          Rng& rng);

Eigen::VectorXi ffbs_financial(const PanelDataset& data,
                               const ModelParams& params,
                               const LatentStates& states,
                               StateConditional mode,
                               Rng& rng);

// ---------------------------------------------------------------------------
// Conjugate measurement-equation updates

struct GaussianConditional
{
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

struct InverseGammaConditional
{
  double shape;
  double rate;
};

/// Posterior of the regression coefficients of rows `z` / responses `r`
/// under a N(prior_mean, prior_cov) prior.
GaussianConditional regression_conditional(const Eigen::MatrixXd& z,
                                           const Eigen::VectorXd& r,
                                           double scale,
                                           const Eigen::VectorXd& prior_mean,
                                           const Eigen::MatrixXd& prior_cov,
                                           ConjugateForm form);

Eigen::VectorXd draw_gaussian(const GaussianConditional& cond, Rng& rng);

/// Draw with the first coordinate restricted to [bound, inf) (`above` true)
/// or (-inf, bound]; the remaining coordinates follow their exact
/// conditional given the first.
Eigen::VectorXd draw_gaussian_truncated(const GaussianConditional& cond, double bound, bool above, Rng& rng);

/// Standard normal restricted to [a, inf).
double truncated_standard_normal(double a, Rng& rng);

GaussianConditional psi_conditional(const PanelDataset& data,
                                    const LatentStates& states,
                                    double sigma,
                                    const PriorConfig& prior,
                                    int unit,
                                    int regime,
                                    ConjugateForm form);
GaussianConditional phi_conditional(const PanelDataset& data,
                                    const LatentStates& states,
                                    double tau,
                                    const PriorConfig& prior,
                                    int regime,
                                    ConjugateForm form);

Eigen::VectorXd draw_psi(const PanelDataset& data,
                         const LatentStates& states,
                         double sigma,
                         const PriorConfig& prior,
                         int unit,
                         int regime,
                         ConjugateForm form,
                         Rng& rng);
Eigen::VectorXd draw_phi(const PanelDataset& data,
                         const LatentStates& states,
                         double tau,
                         const PriorConfig& prior,
                         int regime,
                         ConjugateForm form,
                         Rng& rng);

InverseGammaConditional sigma_conditional(const PanelDataset& data,
                                          const LatentStates& states,
                                          const Eigen::VectorXd& psi,
                                          const PriorConfig& prior,
                                          int unit,
                                          int regime,
                                          ConjugateForm form);
InverseGammaConditional tau_conditional(const PanelDataset& data,
                                        const LatentStates& states,
                                        const Eigen::VectorXd& phi,
                                        const PriorConfig& prior,
                                        int regime,
                                        ConjugateForm form);

/// Returns the scale (square root of the inverse-gamma variance draw).
double draw_scale(const InverseGammaConditional& cond, Rng& rng);

double draw_sigma(const PanelDataset& data,
                  const LatentStates& states,
                  const Eigen::VectorXd& psi,
                  const PriorConfig& prior,
                  int unit,
                  int regime,
                  ConjugateForm form,
                  Rng& rng);
double draw_tau(const PanelDataset& data,
                const LatentStates& states,
                const Eigen::VectorXd& phi,
                const PriorConfig& prior,
                int regime,
                ConjugateForm form,
                Rng& rng);

// ---------------------------------------------------------------------------
// Metropolis-Hastings updates of the transition parameters

struct RowUpdate
{
  Eigen::Matrix2d p;
  bool accepted;
};

struct InteractionUpdate
{
  Eigen::Vector3d interaction;
  bool accepted;
};

/// Log target of row `origin` of `p`: Dirichlet prior times the transition
/// probabilities of every observed move leaving `origin`.
double transition_row_log_target(const Eigen::Matrix2d& p,
                                 const Eigen::Vector3d& interaction,
                                 const Eigen::Vector2d& delta,
                                 const std::vector<TransitionEvent>& events,
                                 int origin);

/// Independence MH step for row `origin` with Beta(delta + counts) proposal.
/// Works for unit and financial chains alike (events carry the drivers).
RowUpdate mh_transition_row(const Eigen::Matrix2d& p,
                            const Eigen::Vector3d& interaction,
                            const Eigen::Vector2d& delta,
                            const std::vector<TransitionEvent>& events,
                            int origin,
                            Rng& rng);

RowUpdate mh_transition_row(const ModelParams& params,
                            const LatentStates& states,
                            const PriorConfig& prior,
                            Chain chain,
                            int origin,
                            Rng& rng);

double interaction_log_target(const Eigen::Vector3d& interaction,
                              const Eigen::Matrix2d& p,
                              const Eigen::Vector3d& prior_weights,
                              const std::vector<TransitionEvent>& events);

/// Log density of the three-component Dirichlet mixture proposal.
double interaction_log_proposal(const Eigen::Vector3d& interaction,
                                const Eigen::Vector3d& prior_weights,
                                double t_len,
                                const Eigen::Vector3d& mixture_weights);

Eigen::Vector3d draw_interaction_proposal(const Eigen::Vector3d& prior_weights,
                                          double t_len,
                                          const Eigen::Vector3d& mixture_weights,
                                          Rng& rng);

InteractionUpdate mh_interaction(const Eigen::Vector3d& interaction,
                                 const Eigen::Matrix2d& p,
                                 const Eigen::Vector3d& prior_weights,
                                 const std::vector<TransitionEvent>& events,
                                 double t_len,
                                 const Eigen::Vector3d& mixture_weights,
                                 Rng& rng);

InteractionUpdate mh_interaction(const ModelParams& params,
                                 const LatentStates& states,
                                 const PriorConfig& prior,
                                 Chain chain,
                                 const Eigen::Vector3d& mixture_weights,
                                 Rng& rng);

/// Random-walk MH step on row `origin`: proposal Beta(1 + c p_l1, 1 + c p_l2).
RowUpdate mh_transition_row_refine(const Eigen::Matrix2d& p,
                                   const Eigen::Vector3d& interaction,
                                   const Eigen::Vector2d& delta,
                                   const std::vector<TransitionEvent>& events,
                                   int origin,
                                   double concentration,
                                   Rng& rng);

/// Random-walk MH step on the triple: proposal Dirichlet(1 + c * current).
InteractionUpdate mh_interaction_refine(const Eigen::Vector3d& interaction,
                                        const Eigen::Matrix2d& p,
                                        const Eigen::Vector3d& prior_weights,
                                        const std::vector<TransitionEvent>& events,
                                        double concentration,
                                        Rng& rng);

// ---------------------------------------------------------------------------
// Sweep and run

/// Relabels every chain whose regime-1 intercept exceeds its regime-2
/// intercept: swaps parameter blocks, transition-matrix labels and the
/// trajectory. Returns the number of chains relabelled.
int enforce_identification(ModelParams& params, LatentStates& states);

/// Sweep step identifiers used to derive RNG streams.
enum class SweepStep : int
{
  kStates = 1,
  kInteractionUnit = 2,
  kInteractionFin = 3,
  kRowsUnit = 4,
  kRowsFin = 5,
  kCoefficients = 6,
  kScales = 7,
};

/// Independent stream for (iteration, step, chain); the financial chain uses
/// chain id N.
Rng sweep_stream(std::uint64_t seed, long iteration, SweepStep step, Eigen::Index chain_id);

SweepStats gibbs_sweep(const PanelDataset& data,
                       const PriorConfig& prior,
                       const McmcConfig& config,
                       SamplerState& state,
                       long iteration);

SamplerState initialize(const PanelDataset& data, const McmcConfig& config);

/// Draw from the prior restricted to the identified region (rejection on each
/// coefficient pair).
ModelParams draw_prior(const PriorConfig& prior, Rng& rng);

struct RunHooks
{
  std::function<void(const Draw&)> on_draw;
  const std::atomic<bool>* stop = nullptr;
  bool keep_draws = true; // false: draws only go to on_draw
};

PosteriorDraws run(const PanelDataset& data,
                   const PriorConfig& prior,
                   const McmcConfig& config,
                   const RunHooks& hooks = {});

} // namespace pms
