#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "geweke.hpp"
#include "pms/sampler.hpp"
#include "pms/simulator.hpp"

#include <cstdlib>
#include <numeric>

using namespace pms;

namespace {

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("FFBS smoothed marginals match path enumeration")
{
  Rng rng(101);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index T = 6 + 2 * (rep % 3);
    const Eigen::Index N = 1 + rep % 2;
    const PanelDataset d = fixtures::random_dataset(T, N, 2, 2, rng);
    const ModelParams p = fixtures::random_params(N, 2, 2, rng);
    const LatentStates s = fixtures::random_states(T, N, rng);
    for (Eigen::Index c = -1; c < N; ++c) {
      const Chain chain = c < 0 ? Chain::financial() : Chain::unit(static_cast<int>(c));
      for (bool own : {false, true}) {
        const StateLattice lat = state_lattice(d, p, s, chain, own ? StateConditional::kOwnChain : StateConditional::kExact);
        const Eigen::VectorXd got = smoothed_marginals(lat).col(1);
        const Eigen::VectorXd want = fixtures::enumerate_expansion_marginals(d, p, s, chain, own);
        CHECK(max_abs_diff(got, want) < 1e-10);
        const Eigen::MatrixXd f = forward_filter(lat);
        CHECK((f.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("FFBS edge cases")
{
  Rng rng(7);
  SUBCASE("uninformative emissions and transitions give flat filters")
  {
    PanelDataset d = fixtures::random_dataset(12, 2, 1, 1, rng);
    ModelParams p = fixtures::random_params(2, 1, 1, rng);
    p.psi[0][0](0) = p.psi[0][1](0) = 0.3;
    p.sigma.row(0).setConstant(1.1);
    p.p_unit[0].setConstant(0.5);
    p.interaction_unit[0] = Eigen::Vector3d(1, 0, 0);
    const LatentStates s = fixtures::random_states(12, 2, rng);
    const Eigen::MatrixXd f = forward_filter(state_lattice(d, p, s, Chain::unit(0), StateConditional::kOwnChain));
    CHECK((f.array() - 0.5).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("strongly separated regimes are recovered")
  {
    const Eigen::Index T = 60;
    PanelDataset d = fixtures::random_dataset(T, 1, 1, 1, rng);
    ModelParams p = fixtures::random_params(1, 1, 1, rng);
    p.psi[0][0](0) = -5.0;
    p.psi[0][1](0) = 5.0;
    p.sigma.setConstant(1.0);
    p.phi[0](0) = -5.0;
    p.phi[1](0) = 5.0;
    p.tau.setConstant(1.0);
    Eigen::VectorXi truth(T), truth_x(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      truth(t) = (t / 7) % 2 == 0 ? 1 : 2;
      truth_x(t) = (t / 5) % 2 == 0 ? 2 : 1;
      d.y(t, 0) = (truth(t) == 1 ? -5.0 : 5.0) + 0.5 * rng.normal();
      d.x(t) = (truth_x(t) == 1 ? -5.0 : 5.0) + 0.5 * rng.normal();
    }
    LatentStates s = fixtures::random_states(T, 1, rng);
    long agree = 0, agree_x = 0;
    for (int draw = 0; draw < 1000; ++draw) {
      agree += (ffbs_unit(d, p, s, 0, StateConditional::kExact, rng).array() == truth.array()).count();
      agree_x += (ffbs_financial(d, p, s, StateConditional::kExact, rng).array() == truth_x.array()).count();
    }
    CHECK(static_cast<double>(agree) / (1000.0 * T) >= 0.99);
    CHECK(static_cast<double>(agree_x) / (1000.0 * T) >= 0.99);
  }
  SUBCASE("backward sampling frequencies match smoothed marginals")
  {
    const PanelDataset d = fixtures::random_dataset(8, 2, 2, 1, rng);
    const ModelParams p = fixtures::random_params(2, 2, 1, rng);
    const LatentStates s = fixtures::random_states(8, 2, rng);
    const StateLattice lat = state_lattice(d, p, s, Chain::unit(1), StateConditional::kExact);
    const Eigen::MatrixXd f = forward_filter(lat);
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(8);
    const int draws = 40000;
    for (int k = 0; k < draws; ++k) freq += (backward_sample(lat, f, rng).array() == 2).cast<double>().matrix();
    freq /= draws;
    CHECK(max_abs_diff(freq, smoothed_marginals(lat).col(1)) < 0.015);
  }
}

TEST_CASE("conjugate coefficient conditionals")
{
  Rng rng(31);
  const PanelDataset d = fixtures::random_dataset(40, 1, 2, 2, rng);
  PriorConfig prior = PriorConfig::defaults(1, 2, 2);
  LatentStates s = fixtures::random_states(40, 1, rng);

  SUBCASE("empty allocation falls back to the prior")
  {
    s.s_y.setConstant(2);
    prior.psi_mean[0][0] = Eigen::Vector2d(1.0, -2.0);
    prior.psi_cov[0][0] << 2.0, 0.5, 0.5, 1.0;
    const GaussianConditional c = psi_conditional(d, s, 0.7, prior, 0, 1, ConjugateForm::kStandard);
    CHECK(max_abs_diff(c.mean, prior.psi_mean[0][0]) < 1e-12);
    const int n = 100000;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXd v = draw_psi(d, s, 0.7, prior, 0, 1, ConjugateForm::kStandard, rng);
      mean += v;
      second += v * v.transpose();
    }
    mean /= n;
    const Eigen::Matrix2d cov = second / n - mean * mean.transpose();
    CHECK(std::abs(mean(0) - 1.0) < 0.02);
    CHECK(std::abs(mean(1) + 2.0) < 0.02);
    CHECK((cov - prior.psi_cov[0][0]).cwiseAbs().maxCoeff() < 0.03);
  }
  SUBCASE("vague prior approaches least squares")
  {
    Rng data_rng(4);
    PanelDataset dd = fixtures::random_dataset(400, 1, 2, 1, data_rng);
    for (Eigen::Index t = 0; t < 400; ++t) dd.y(t, 0) = 0.5 - 1.2 * dd.z_bc[0](t, 1) + 0.3 * data_rng.normal();
    s = fixtures::random_states(400, 1, data_rng);
    PriorConfig vague = PriorConfig::defaults(1, 2, 1, 1e6);
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < 400; ++t) {
      if (s.s_y(t, 0) == 1) rows.push_back(t);
    }
    Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), 2);
    Eigen::VectorXd r(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      z.row(static_cast<Eigen::Index>(k)) = dd.z_bc[0].row(rows[k]);
      r(static_cast<Eigen::Index>(k)) = dd.y(rows[k], 0);
    }
    const Eigen::VectorXd ols = (z.transpose() * z).ldlt().solve(z.transpose() * r);
    const Eigen::Matrix2d ols_cov = 0.09 * (z.transpose() * z).inverse();
    const int n = 4000;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int k = 0; k < n; ++k) mean += draw_psi(dd, s, 0.3, vague, 0, 1, ConjugateForm::kStandard, rng);
    mean /= n;
    for (int j = 0; j < 2; ++j) CHECK(std::abs(mean(j) - ols(j)) < 3.0 * std::sqrt(ols_cov(j, j) / n));
  }
  SUBCASE("hand-built precision")
  {
    Eigen::MatrixXd z(3, 2);
    z << 1, 0.5, 1, -1, 1, 2;
    const Eigen::Vector3d r(1, 2, 3);
    Eigen::Matrix2d cov;
    cov << 4, 1, 1, 2;
    const Eigen::Vector2d m0(0.5, -0.5);
    const double sigma = 0.8;
    for (ConjugateForm form : {ConjugateForm::kStandard, ConjugateForm::kAsPrinted}) {
      const double div = form == ConjugateForm::kStandard ? sigma * sigma : sigma;
      const Eigen::Matrix2d prec = cov.inverse() + z.transpose() * z / div;
      const Eigen::Vector2d mean = prec.inverse() * (cov.inverse() * m0 + z.transpose() * r / div);
      const GaussianConditional c = regression_conditional(z, r, sigma, m0, cov, form);
      CHECK((c.precision - prec).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(max_abs_diff(c.mean, mean) < 1e-12);
    }
  }
}

TEST_CASE("conjugate scale conditionals")
{
  Rng rng(37);
  PanelDataset d = fixtures::random_dataset(10, 1, 1, 1, rng);
  PriorConfig prior = PriorConfig::defaults(1, 1, 1);
  LatentStates s = fixtures::random_states(10, 1, rng);
  s.s_y.setConstant(1);
  s.s_x.setConstant(2);
  const Eigen::VectorXd psi = Eigen::VectorXd::Constant(1, 0.4);
  d.y.setConstant(0.4);
  d.x.setConstant(-0.1);

  SUBCASE("zero residuals")
  {
    const InverseGammaConditional printed = sigma_conditional(d, s, psi, prior, 0, 1, ConjugateForm::kAsPrinted);
    CHECK(printed.shape == doctest::Approx(2.5 + 10));
    CHECK(printed.rate == doctest::Approx(0.5));
    const InverseGammaConditional standard = sigma_conditional(d, s, psi, prior, 0, 1, ConjugateForm::kStandard);
    CHECK(standard.shape == doctest::Approx(2.5 + 5));
    CHECK(standard.rate == doctest::Approx(0.5));
    const InverseGammaConditional tau = tau_conditional(d, s, Eigen::VectorXd::Constant(1, -0.1), prior, 2, ConjugateForm::kAsPrinted);
    CHECK(tau.shape == doctest::Approx(12.5));
  }
  SUBCASE("empty allocation is the prior")
  {
    const InverseGammaConditional c = sigma_conditional(d, s, psi, prior, 0, 2, ConjugateForm::kStandard);
    CHECK(c.shape == 2.5);
    CHECK(c.rate == 0.5);
  }
  SUBCASE("moments of the variance draw")
  {
    for (Eigen::Index t = 0; t < 10; ++t) d.y(t, 0) = 0.4 + 0.1 * static_cast<double>(t - 5);
    const InverseGammaConditional c = sigma_conditional(d, s, psi, prior, 0, 1, ConjugateForm::kStandard);
    CHECK(c.rate == doctest::Approx(0.5 + 0.5 * 0.85));
    const double want = c.rate / (c.shape - 1.0);
    double acc = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
      const double v = draw_sigma(d, s, psi, prior, 0, 1, ConjugateForm::kStandard, rng);
      acc += v * v;
    }
    CHECK(std::abs(acc / n / want - 1.0) < 0.01);
  }
}

TEST_CASE("truncated draws respect their bound")
{
  Rng rng(41);
  GaussianConditional c;
  c.mean = Eigen::Vector2d(0.0, 1.0);
  c.precision = Eigen::Matrix2d::Identity() * 4.0;
  c.precision(0, 1) = c.precision(1, 0) = 1.0;
  for (double bound : {-1.0, 0.0, 2.5}) {
    for (int k = 0; k < 2000; ++k) {
      CHECK(draw_gaussian_truncated(c, bound, true, rng)(0) >= bound);
      CHECK(draw_gaussian_truncated(c, bound, false, rng)(0) <= bound);
    }
  }
  // E[Z | Z >= a] = pdf(a) / (1 - cdf(a))
  for (double a : {-0.5, 1.0, 3.0}) {
    double acc = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) acc += truncated_standard_normal(a, rng);
    const double want = std::exp(-0.5 * a * a) / std::sqrt(2 * M_PI) / (0.5 * std::erfc(a / std::sqrt(2.0)));
    CHECK(std::abs(acc / n - want) < 0.01);
  }
}

TEST_CASE("transition-row MH")
{
  Rng rng(43);
  const LatentStates s = fixtures::random_states(30, 2, rng);
  const auto events = transition_events(s, Chain::unit(0));
  Eigen::Matrix2d p;
  p << 0.7, 0.3, 0.4, 0.6;

  SUBCASE("alpha = 1 makes the proposal exact")
  {
    long accepted = 0;
    for (int k = 0; k < 2000; ++k) {
      const RowUpdate up = mh_transition_row(p, Eigen::Vector3d(1, 0, 0), Eigen::Vector2d(1, 1), events, 1 + k % 2, rng);
      accepted += up.accepted;
      p = up.p;
    }
    CHECK(accepted == 2000);
  }
  SUBCASE("acceptance rate is sensible on a coupled chain")
  {
    long accepted = 0;
    for (int k = 0; k < 5000; ++k) {
      const RowUpdate up = mh_transition_row(p, Eigen::Vector3d(0.8, 0.1, 0.1), Eigen::Vector2d(1, 1), events, 1 + k % 2, rng);
      accepted += up.accepted;
      p = up.p;
      CHECK(std::abs(p.row(0).sum() - 1.0) < 1e-15);
    }
    const double rate = accepted / 5000.0;
    CHECK(rate > 0.1);
    CHECK(rate < 1.0);
  }
}

TEST_CASE("interaction MH")
{
  Rng rng(47);
  const Eigen::Vector3d phi(8, 1, 1);
  const Eigen::Vector3d w = Eigen::Vector3d::Constant(1.0 / 3.0);

  SUBCASE("proposals lie on the simplex")
  {
    for (int k = 0; k < 5000; ++k) {
      const Eigen::Vector3d q = draw_interaction_proposal(phi, 50, w, rng);
      CHECK(std::abs(q.sum() - 1.0) < 1e-12);
      CHECK((q.array() >= 0.0).all());
    }
  }
  SUBCASE("mixture density is the weighted sum of components")
  {
    const Eigen::Vector3d x(0.6, 0.3, 0.1);
    double want = 0.0;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d a = phi;
      a(c) += 20;
      want += std::exp(log_dirichlet_pdf(x, a)) / 3.0;
    }
    CHECK(interaction_log_proposal(x, phi, 20, w) == doctest::Approx(std::log(want)).epsilon(1e-12));
  }
  SUBCASE("no transitions: draws follow the prior")
  {
    const std::vector<TransitionEvent> none;
    Eigen::Vector3d tri(0.5, 0.25, 0.25);
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      tri = mh_interaction(tri, Eigen::Matrix2d::Constant(0.5), phi, none, 0.0, w, rng).interaction;
      acc += tri;
    }
    acc /= n;
    CHECK(std::abs(acc(0) - 0.8) < 0.005);
    CHECK(std::abs(acc(1) - 0.1) < 0.005);
  }
}

namespace {

McmcConfig small_config(long total, long burn, long thin)
{
  McmcConfig c;
  c.total_iterations = total;
  c.burn_in = burn;
  c.thin = thin;
  c.seed = 5;
  return c;
}

Simulation small_simulation(std::uint64_t seed, Eigen::Index T = 80, Eigen::Index N = 2)
{
  SimSpec spec;
  spec.t_len = T;
  spec.n_units = N;
  spec.truth = default_truth(N, 2, 1);
  spec.seed = seed;
  return simulate(spec);
}

} // namespace

TEST_CASE("run-size contract")
{
  CHECK(McmcConfig{}.retained() == 2000);
  const Simulation sim = small_simulation(3);
  const PriorConfig prior = PriorConfig::defaults(2, 2, 1);
  const PosteriorDraws out = run(sim.data, prior, small_config(30, 10, 2));
  CHECK(out.draws.size() == 10);
  CHECK(out.complete);
  CHECK(out.draws.front().iteration == 12);
  CHECK(out.draws.back().iteration == 30);

  CHECK_THROWS_AS(run(sim.data, prior, small_config(10, 10, 1)), InputError);
  CHECK_THROWS_AS(run(sim.data, prior, small_config(10, 2, 0)), InputError);
  CHECK_THROWS_AS(run(sim.data, prior, small_config(10, 2, 9)), InputError);
}

TEST_CASE("sweeps preserve invariants and are reproducible")
{
  const Simulation sim = small_simulation(9);
  const PriorConfig prior = PriorConfig::defaults(2, 2, 1);
  for (Identification id : {Identification::kLabelSwap, Identification::kTruncated}) {
    McmcConfig c = small_config(60, 20, 1);
    c.identification = id;
    const PosteriorDraws a = run(sim.data, prior, c);
    const PosteriorDraws b = run(sim.data, prior, c);
    REQUIRE(a.draws.size() == b.draws.size());
    for (std::size_t k = 0; k < a.draws.size(); ++k) {
      CHECK_NOTHROW(a.draws[k].params.validate());
      CHECK_NOTHROW(a.draws[k].states.validate());
      CHECK(a.draws[k].loglik == b.draws[k].loglik);
      CHECK(a.draws[k].params.sigma == b.draws[k].params.sigma);
      CHECK(a.draws[k].states.s_y == b.draws[k].states.s_y);
    }
  }
}

TEST_CASE("label swap relabels parameters and trajectory together")
{
  Rng rng(53);
  ModelParams p = fixtures::random_params(2, 2, 1, rng);
  LatentStates s = fixtures::random_states(10, 2, rng);
  std::swap(p.psi[1][0], p.psi[1][1]);
  const ModelParams before = p;
  const LatentStates sb = s;
  CHECK(enforce_identification(p, s) == 1);
  CHECK(p.identified());
  CHECK(p.psi[1][0] == before.psi[1][1]);
  CHECK(p.sigma(1, 0) == before.sigma(1, 1));
  CHECK(p.p_unit[1](0, 0) == before.p_unit[1](1, 1));
  CHECK(p.p_unit[1](0, 1) == before.p_unit[1](1, 0));
  CHECK((s.s_y.col(1).array() == 3 - sb.s_y.col(1).array()).all());
  CHECK(s.s_y.col(0) == sb.s_y.col(0));
  CHECK(s.s_x == sb.s_x);
}

TEST_CASE("Geweke joint-distribution test")
{
  // T = 50, N = 2; moments within 3 combined Monte-Carlo standard errors.
  McmcConfig c;
  c.seed = 19;
  const geweke::Result r = geweke::run(c, geweke::test_prior(2), 50, 2, 20000, 100000, 23);
  const Eigen::VectorXd z = r.z();
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    INFO(r.names[static_cast<std::size_t>(k)], " z=", z(k));
    CHECK(std::abs(z(k)) < 3.0);
  }
}
