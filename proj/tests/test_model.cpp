#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "pms/model.hpp"

using namespace pms;

TEST_CASE("global_factor counts regime shares")
{
  CHECK(global_factor(Eigen::Vector4i(2, 2, 2, 2), 2) == 1.0);
  CHECK(global_factor(Eigen::Vector4i(1, 2, 2, 1), 2) == 0.5);
  CHECK(global_factor(Eigen::VectorXi::Constant(13, 1), 2) == 0.0);

  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXi s(7);
    for (int j = 0; j < 7; ++j) s(j) = rng.uniform() < 0.5 ? 1 : 2;
    CHECK(global_factor(s, 1) + global_factor(s, 2) == 1.0);
  }
  CHECK_THROWS_AS(global_factor(Eigen::Vector2i(1, 3), 2), InputError);
  CHECK_THROWS_AS(global_factor(Eigen::Vector2i(1, 2), 0), InputError);
}

TEST_CASE("transition_row worked values")
{
  Eigen::Matrix2d p;
  p << 0.9, 0.1, 0.2, 0.8;

  SUBCASE("fixed-transition limit")
  {
    for (int sx = 1; sx <= 2; ++sx) {
      for (double m2 : {0.0, 0.3, 1.0}) {
        const Eigen::Vector2d r = transition_row(p, Eigen::Vector3d(1, 0, 0), 1, sx, m2);
        CHECK(r(0) == 0.9);
        CHECK(r(1) == 0.1);
      }
    }
  }
  SUBCASE("beta off, gamma on")
  {
    const Eigen::Vector2d r = transition_row(p, Eigen::Vector3d(0.95, 0.0, 0.05), 1, 1, 1.0);
    CHECK(r(0) == doctest::Approx(0.95 * 0.9).epsilon(1e-14));
    CHECK(r(1) == doctest::Approx(0.95 * 0.1 + 0.05).epsilon(1e-14));
  }
  SUBCASE("beta on renormalises")
  {
    const Eigen::Vector2d r = transition_row(p, Eigen::Vector3d(0.95, 0.02, 0.03), 1, 2, 0.5);
    const double raw1 = 0.95 * 0.9 + 0.02 + 0.03 * 0.5;
    const double raw2 = 0.95 * 0.1 + 0.02 + 0.03 * 0.5;
    CHECK(raw1 == doctest::Approx(0.890));
    CHECK(raw2 == doctest::Approx(0.130));
    CHECK(r(0) == doctest::Approx(raw1 / (raw1 + raw2)).epsilon(1e-14));
    CHECK(r(1) == doctest::Approx(raw2 / (raw1 + raw2)).epsilon(1e-14));
  }
  SUBCASE("invalid inputs")
  {
    CHECK_THROWS_AS(transition_row(p, Eigen::Vector3d(1, 0, 0), 3, 1, 0.5), InputError);
    CHECK_THROWS_AS(transition_row(p, Eigen::Vector3d(1, 0, 0), 1, 0, 0.5), InputError);
    CHECK_THROWS_AS(transition_row(p, Eigen::Vector3d(1, 0, 0), 1, 1, 1.5), InputError);
  }
}

TEST_CASE("transition_row is always a distribution")
{
  Rng rng(11);
  for (int rep = 0; rep < 2000; ++rep) {
    Eigen::Matrix2d p = fixtures::random_rows(rng);
    if (rep % 7 == 0) p.row(0) << 1.0, 0.0;
    const Eigen::Vector3d abg = rng.dirichlet(Eigen::Vector3d(1, 1, 1));
    const int l = rng.uniform() < 0.5 ? 1 : 2;
    const int sx = rng.uniform() < 0.5 ? 1 : 2;
    const double m2 = rng.uniform();
    const Eigen::Vector2d r = transition_row(p, abg, l, sx, m2);
    CHECK(std::abs(r.sum() - 1.0) < 1e-12);
    CHECK(r(0) > 0.0);
    CHECK(r(0) < 1.0);
    const auto h = fixtures::hand_row(p, abg, l, sx, m2);
    CHECK(std::abs(r(0) - h[0]) < 1e-14);
  }
}

TEST_CASE("emission_logpdf")
{
  Rng rng(5);
  PanelDataset d = fixtures::random_dataset(4, 2, 2, 1, rng);
  ModelParams p = fixtures::random_params(2, 2, 1, rng);

  SUBCASE("mode and one-sigma point")
  {
    p.sigma(0, 0) = 1.0;
    d.y(1, 0) = d.z_bc[0].row(1).dot(p.psi[0][0]);
    CHECK(emission_logpdf(d, p, Chain::unit(0), 1, 1) == doctest::Approx(std::log(1.0 / std::sqrt(2 * M_PI))).epsilon(1e-14));
    p.sigma(0, 0) = 2.5;
    d.y(1, 0) += 2.5;
    CHECK(emission_logpdf(d, p, Chain::unit(0), 1, 1) ==
          doctest::Approx(std::log(1.0 / std::sqrt(2 * M_PI)) - std::log(2.5) - 0.5).epsilon(1e-14));
  }
  SUBCASE("random fixture against scalar formula")
  {
    for (Eigen::Index t = 0; t < 4; ++t) {
      for (int k = 1; k <= 2; ++k) {
        for (int i = 0; i < 2; ++i) {
          const double want = fixtures::hand_normal_logpdf(d.y(t, i), d.z_bc[static_cast<std::size_t>(i)].row(t).dot(p.psi[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - 1)]), p.sigma(i, k - 1));
          CHECK(std::abs(emission_logpdf(d, p, Chain::unit(i), t, k) - want) < 1e-12);
        }
        const double want = fixtures::hand_normal_logpdf(d.x(t), p.phi[static_cast<std::size_t>(k - 1)](0), p.tau(k - 1));
        CHECK(std::abs(emission_logpdf(d, p, Chain::financial(), t, k) - want) < 1e-12);
      }
    }
  }
  SUBCASE("non-positive scale")
  {
    p.sigma(1, 1) = 0.0;
    CHECK_THROWS_AS(emission_logpdf(d, p, Chain::unit(1), 0, 2), InputError);
    p.tau(0) = -1.0;
    CHECK_THROWS_AS(emission_logpdf(d, p, Chain::financial(), 0, 1), InputError);
  }
}

namespace {

double term_by_term(const PanelDataset& d, const ModelParams& p, const LatentStates& s)
{
  const Eigen::Index T = d.t_len(), N = d.n_units();
  double total = static_cast<double>(N + 1) * std::log(0.5);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int k = s.s_y(t, i);
      total += fixtures::hand_normal_logpdf(d.y(t, i), d.z_bc[ui].row(t).dot(p.psi[ui][static_cast<std::size_t>(k - 1)]), p.sigma(i, k - 1));
    }
    const int k = s.s_x(t);
    total += fixtures::hand_normal_logpdf(d.x(t), d.z_fc.row(t).dot(p.phi[static_cast<std::size_t>(k - 1)]), p.tau(k - 1));
    if (t == 0) continue;
    double m2 = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) m2 += s.s_y(t - 1, j) == 2;
    m2 /= static_cast<double>(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto r = fixtures::hand_row(p.p_unit[static_cast<std::size_t>(i)], p.interaction_unit[static_cast<std::size_t>(i)],
                                        s.s_y(t - 1, i), s.s_x(t - 1), m2);
      total += std::log(r[static_cast<std::size_t>(s.s_y(t, i) - 1)]);
    }
    const auto r = fixtures::hand_row(p.p_fin, p.interaction_fin, s.s_x(t - 1), s.s_x(t - 1), m2);
    total += std::log(r[static_cast<std::size_t>(s.s_x(t) - 1)]);
  }
  return total;
}

// Likelihood of one fixed-transition two-state chain, written independently.
double single_chain(const Eigen::VectorXd& obs, const Eigen::VectorXd& means1, const Eigen::VectorXd& means2,
                    const Eigen::Vector2d& sd, const Eigen::Matrix2d& p, const Eigen::VectorXi& path)
{
  double total = std::log(0.5);
  for (Eigen::Index t = 0; t < obs.size(); ++t) {
    const int k = path(t);
    total += fixtures::hand_normal_logpdf(obs(t), k == 1 ? means1(t) : means2(t), sd(k - 1));
    if (t > 0) total += std::log(p(path(t - 1) - 1, k - 1));
  }
  return total;
}

ModelParams swap_unit(ModelParams p, int i)
{
  auto& pk = p.psi[static_cast<std::size_t>(i)];
  std::swap(pk[0], pk[1]);
  std::swap(p.sigma(i, 0), p.sigma(i, 1));
  Eigen::Matrix2d& m = p.p_unit[static_cast<std::size_t>(i)];
  const Eigen::Matrix2d old = m;
  m << old(1, 1), old(1, 0), old(0, 1), old(0, 0);
  return p;
}

} // namespace

TEST_CASE("complete_data_loglik")
{
  Rng rng(17);

  SUBCASE("T=1 is emissions plus initial terms")
  {
    const PanelDataset d = fixtures::random_dataset(1, 3, 2, 2, rng);
    const ModelParams p = fixtures::random_params(3, 2, 2, rng);
    const LatentStates s = fixtures::random_states(1, 3, rng);
    CHECK(complete_data_loglik(d, p, s) == doctest::Approx(emission_loglik(d, p, s) + 4 * std::log(0.5)).epsilon(1e-14));
  }
  SUBCASE("term-by-term oracle")
  {
    for (int rep = 0; rep < 20; ++rep) {
      const PanelDataset d = fixtures::random_dataset(3, 2, 2, 2, rng);
      const ModelParams p = fixtures::random_params(2, 2, 2, rng);
      const LatentStates s = fixtures::random_states(3, 2, rng);
      CHECK(std::abs(complete_data_loglik(d, p, s) - term_by_term(d, p, s)) < 1e-10);
    }
  }
  SUBCASE("doubling sigma away from the optimum lowers the emission part")
  {
    const PanelDataset d = fixtures::random_dataset(30, 2, 1, 1, rng);
    ModelParams p = fixtures::random_params(2, 1, 1, rng);
    LatentStates s = fixtures::random_states(30, 2, rng);
    s.s_y.col(0).setConstant(1);
    const Eigen::VectorXd resid = d.y.col(0).array() - p.psi[0][0](0);
    p.sigma(0, 0) = std::sqrt(resid.squaredNorm() / 30.0);
    const double at_opt = emission_loglik(d, p, s);
    p.sigma(0, 0) *= 2.0;
    const double doubled = emission_loglik(d, p, s);
    p.sigma(0, 0) *= 2.0;
    CHECK(doubled < at_opt);
    CHECK(emission_loglik(d, p, s) < doubled);
  }
  SUBCASE("label swap of one unit leaves the likelihood unchanged when gamma = 0")
  {
    for (int rep = 0; rep < 20; ++rep) {
      const PanelDataset d = fixtures::random_dataset(12, 3, 2, 1, rng);
      ModelParams p = fixtures::random_params(3, 2, 1, rng);
      for (auto& abg : p.interaction_unit) abg = Eigen::Vector3d(0.7, 0.3, 0.0);
      p.interaction_fin = Eigen::Vector3d(0.6, 0.4, 0.0);
      LatentStates s = fixtures::random_states(12, 3, rng);
      const double before = complete_data_loglik(d, p, s);
      const ModelParams q = swap_unit(p, 1);
      s.s_y.col(1) = (3 - s.s_y.col(1).array()).matrix();
      CHECK(std::abs(complete_data_loglik(d, q, s) - before) < 1e-10);
    }
  }
  SUBCASE("alpha = 1 factorises into independent chains")
  {
    const Eigen::Index T = 15, N = 2;
    const PanelDataset d = fixtures::random_dataset(T, N, 2, 2, rng);
    ModelParams p = fixtures::random_params(N, 2, 2, rng);
    for (auto& abg : p.interaction_unit) abg = Eigen::Vector3d(1, 0, 0);
    p.interaction_fin = Eigen::Vector3d(1, 0, 0);
    const LatentStates s = fixtures::random_states(T, N, rng);
    double want = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      want += single_chain(d.y.col(i), d.z_bc[ui] * p.psi[ui][0], d.z_bc[ui] * p.psi[ui][1], p.sigma.row(i).transpose(),
                           p.p_unit[ui], s.s_y.col(i));
    }
    want += single_chain(d.x, d.z_fc * p.phi[0], d.z_fc * p.phi[1], p.tau, p.p_fin, s.s_x);
    CHECK(std::abs(complete_data_loglik(d, p, s) - want) < 1e-10);
  }
  SUBCASE("dimension mismatch")
  {
    const PanelDataset d = fixtures::random_dataset(5, 2, 2, 1, rng);
    const ModelParams p = fixtures::random_params(2, 2, 1, rng);
    const LatentStates s = fixtures::random_states(4, 2, rng);
    CHECK_THROWS_AS(complete_data_loglik(d, p, s), InputError);
    const ModelParams p3 = fixtures::random_params(3, 2, 1, rng);
    CHECK_THROWS_AS(complete_data_loglik(d, p3, fixtures::random_states(5, 2, rng)), InputError);
  }
}

TEST_CASE("dataset and parameter validation")
{
  Rng rng(23);
  PanelDataset d = fixtures::random_dataset(6, 2, 2, 1, rng);
  CHECK_NOTHROW(d.validate());
  PanelDataset bad = d;
  bad.y(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = d;
  bad.z_bc[0](3, 0) = 0.5;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = d;
  bad.dates[4] = bad.dates[4].plus(1);
  CHECK_THROWS_AS(bad.validate(), InputError);

  ModelParams p = fixtures::random_params(2, 2, 1, rng);
  CHECK_NOTHROW(p.validate());
  ModelParams q = p;
  q.interaction_unit[0] = Eigen::Vector3d(0.5, 0.5, 0.1);
  CHECK_THROWS_AS(q.validate(), InputError);
  q = p;
  std::swap(q.psi[1][0], q.psi[1][1]);
  q.psi[1][0](0) = q.psi[1][1](0) + 1.0;
  CHECK_THROWS_AS(q.validate(), InputError);
  CHECK_NOTHROW(q.validate(false));

  CHECK(data_fingerprint(d) == data_fingerprint(d));
  PanelDataset covariates_changed = d;
  covariates_changed.z_bc[0](0, 1) += 1.0;
  CHECK(data_fingerprint(covariates_changed) == data_fingerprint(d));
  PanelDataset y_changed = d;
  y_changed.y(0, 0) += 1e-9;
  CHECK(data_fingerprint(y_changed) != data_fingerprint(d));
}

TEST_CASE("dates")
{
  CHECK(YearMonth::parse("2004-03").str() == "2004-03");
  CHECK(YearMonth::parse("2004-03-15").month == 3);
  CHECK(YearMonth::parse("2004-Q3").month == 7);
  CHECK(YearMonth::parse("2004-12").next().str() == "2005-01");
  CHECK_THROWS_AS(YearMonth::parse("2004-13"), InputError);
  CHECK_THROWS_AS(YearMonth::parse("March"), InputError);
}
