#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "pms/archive.hpp"
#include "pms/io.hpp"
#include "pms/simulator.hpp"

#include <fstream>

using namespace pms;
namespace fs = std::filesystem;

TEST_CASE("format_double round-trips exactly")
{
  Rng rng(30);
  for (int k = 0; k < 2000; ++k) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform() * 40 - 20);
    CHECK(parse_double(format_double(v), "test") == v);
  }
  CHECK(std::isnan(parse_double("NA", "test")));
  CHECK_THROWS_AS(parse_double("1.2x", "test"), InputError);
}

TEST_CASE("dataset round trip")
{
  const auto dir = fixtures::scratch_dir("io_dataset");
  Rng rng(31);
  PanelDataset d = fixtures::random_dataset(17, 3, 3, 2, rng);
  d.unit_labels = {"AT", "BE", "CY"};
  d.bc_covariate_names = {"const", "csu", "spi"};
  d.fc_covariate_names = {"const", "csu"};
  write_dataset(dir, d);
  const PanelDataset e = read_dataset(dir);
  CHECK(e.y == d.y);
  CHECK(e.x == d.x);
  CHECK(e.z_bc[2] == d.z_bc[2]);
  CHECK(e.z_fc == d.z_fc);
  CHECK(e.dates == d.dates);
  CHECK(e.unit_labels == d.unit_labels);
  CHECK(e.bc_covariate_names == d.bc_covariate_names);
  CHECK(data_fingerprint(e) == data_fingerprint(d));

  d.unit_labels[1] = "FIN";
  CHECK_THROWS_AS(write_dataset(dir, d), InputError);
  fs::remove_all(dir);
}

TEST_CASE("dataset reader rejects damaged files")
{
  const auto dir = fixtures::scratch_dir("io_damaged");
  Rng rng(32);
  const PanelDataset d = fixtures::random_dataset(6, 2, 2, 1, rng);
  write_dataset(dir, d);
  std::ifstream in(dir / "dataset.csv");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto cut = text.rfind('\n', text.size() - 2);
  std::ofstream(dir / "dataset.csv") << text.substr(0, cut + 1);
  CHECK_THROWS_AS(read_dataset(dir), InputError);
  fs::remove_all(dir);
}

TEST_CASE("params JSON and states CSV round trip")
{
  const auto dir = fixtures::scratch_dir("io_params");
  Rng rng(33);
  const ModelParams p = fixtures::random_params(3, 2, 2, rng);
  const std::vector<std::string> labels{"A", "B", "C"};
  const Json j = params_to_json(p, labels);
  write_json(dir / "p.json", j);
  const ModelParams q = params_from_json(read_json(dir / "p.json"));
  CHECK(q.sigma == p.sigma);
  CHECK(q.tau == p.tau);
  CHECK(q.psi[2][1] == p.psi[2][1]);
  CHECK(q.phi[0] == p.phi[0]);
  CHECK(q.p_unit[1] == p.p_unit[1]);
  CHECK(q.p_fin == p.p_fin);
  CHECK(q.interaction_unit[0] == p.interaction_unit[0]);
  CHECK(q.interaction_fin == p.interaction_fin);

  Json bad = j;
  bad["units"][0]["interaction"] = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(params_from_json(bad), InputError);

  PanelDataset d = fixtures::random_dataset(9, 3, 2, 2, rng);
  d.unit_labels = labels;
  const LatentStates s = fixtures::random_states(9, 3, rng);
  write_states_csv(dir / "s.csv", s, d);
  const LatentStates t = read_states_csv(dir / "s.csv", d);
  CHECK(t.s_y == s.s_y);
  CHECK(t.s_x == s.s_x);
  fs::remove_all(dir);
}

TEST_CASE("draws archive round trip")
{
  const auto dir = fixtures::scratch_dir("io_archive");
  SimSpec spec;
  spec.t_len = 40;
  spec.n_units = 2;
  spec.truth = default_truth(2, 2, 2);
  spec.seed = 3;
  const Simulation sim = simulate(spec);
  McmcConfig cfg;
  cfg.total_iterations = 60;
  cfg.burn_in = 20;
  cfg.thin = 4;
  const PriorConfig prior = PriorConfig::defaults(2, 2, 2);

  std::unique_ptr<ArchiveWriter> writer;
  RunHooks hooks;
  writer = std::make_unique<ArchiveWriter>(dir, sim.data, Json{{"note", "test"}});
  hooks.on_draw = [&](const Draw& d) { writer->append(d); };
  const PosteriorDraws draws = run(sim.data, prior, cfg, hooks);
  writer->finish(draws.complete, draws.iterations_done, draws.stats);

  const DrawTable mem = make_table(draws, sim.data);
  const DrawTable disk = read_archive(dir);
  CHECK(disk.names == mem.names);
  CHECK(disk.names.size() == static_cast<std::size_t>(flatten_params(draws.draws[0].params).size()));
  CHECK(disk.values == mem.values);
  CHECK(disk.loglik == mem.loglik);
  CHECK(disk.iterations == mem.iterations);
  CHECK(disk.chains == std::vector<std::string>{"U1", "U2", "FIN"});
  CHECK(disk.fingerprint == data_fingerprint(sim.data));
  CHECK(disk.complete);
  REQUIRE(disk.states.size() == mem.states.size());
  for (std::size_t k = 0; k < disk.states.size(); ++k) CHECK(disk.states[k] == mem.states[k]);
  CHECK(mem.n_draws() == 10);
  CHECK(disk.column("gamma/FIN") == static_cast<Eigen::Index>(disk.names.size()) - 1);
  CHECK_THROWS_AS(disk.column("nope"), InputError);

  const Json meta = read_json(dir / "meta.json");
  CHECK(meta["config"]["note"] == "test");
  CHECK(meta["iterations_done"] == 60);
  CHECK(meta["acceptance"]["transition_rows"]["proposed"].get<long>() > 0);

  // A draw cut off mid-write is dropped on read.
  {
    std::ofstream app(dir / "draws.csv", std::ios::app);
    app << "99,psi/U1/1/const,1.0\n";
  }
  CHECK(read_archive(dir).n_draws() == 10);
  fs::remove_all(dir);
}
