#include "pms/cli.hpp"

#include "pms/analysis.hpp"
#include "pms/archive.hpp"
#include "pms/dataprep.hpp"
#include "pms/io.hpp"
#include "pms/sampler.hpp"
#include "pms/simulator.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <csignal>
#include <exception>
#include <ostream>
#include <thread>

namespace pms::cli {

namespace fs = std::filesystem;

std::atomic<bool>& interrupt_flag()
{
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

extern "C" void on_sigint(int) { interrupt_flag().store(true); }

template <class E>
struct EnumName
{
  E value;
  const char* name;
};

constexpr EnumName<StateConditional> kStateConditionals[] = {{StateConditional::kExact, "exact"},
                                                             {StateConditional::kOwnChain, "own_chain"}};
constexpr EnumName<ConjugateForm> kConjugateForms[] = {{ConjugateForm::kStandard, "standard"}, {ConjugateForm::kAsPrinted, "as_printed"}};
constexpr EnumName<Identification> kIdentifications[] = {{Identification::kTruncated, "truncated"},
                                                         {Identification::kLabelSwap, "label_swap"}};

template <class E, std::size_t K>
E parse_enum(const EnumName<E> (&table)[K], const std::string& text, const std::string& what)
{
  for (const auto& e : table) {
    if (text == e.name) return e.value;
  }
  throw InputError("unknown " + what + " '" + text + "'");
}

template <class E, std::size_t K>
std::string enum_name(const EnumName<E> (&table)[K], E v)
{
  for (const auto& e : table) {
    if (v == e.value) return e.name;
  }
  return "?";
}

std::string resolve(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

struct Global
{
  std::uint64_t seed = 1;
  std::string out = "pms_out";
};

// ---------------------------------------------------------------------------

struct PrepareArgs
{
  std::string input;
  std::string spi_transform = "dichotomy";
  double spi_a = -1.0, spi_b = 1.0, spi_threshold = -0.5;
  bool panel_growth = true, financial_growth = true;
  std::string aggregation = "average";
  std::vector<std::string> covariates;
  std::vector<std::string> backcast;
  std::string start, end;
};

int cmd_prepare(const Global& g, const PrepareArgs& a, std::ostream& out)
{
  PrepareOptions o;
  o.input_dir = resolve(a.input);
  o.spi.variant = SpiTransformSpec::parse_variant(a.spi_transform);
  o.spi.a = a.spi_a;
  o.spi.b = a.spi_b;
  o.spi.dichotomy_threshold = a.spi_threshold;
  o.panel_growth = a.panel_growth;
  o.financial_growth = a.financial_growth;
  o.chow_lin_aggregation = parse_aggregation(a.aggregation);
  o.covariates = a.covariates;
  for (const auto& b : a.backcast) {
    const auto eq = b.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == b.size()) throw InputError("--backcast expects TARGET=PROXY, got '" + b + "'");
    o.backcast[b.substr(0, eq)] = b.substr(eq + 1);
  }
  if (!a.start.empty()) o.start = YearMonth::parse(a.start);
  if (!a.end.empty()) o.end = YearMonth::parse(a.end);

  const PanelDataset d = prepare_dataset(o);
  Json extra;
  extra["prepare"]["input"] = o.input_dir.string();
  extra["prepare"]["spi_transform"] = SpiTransformSpec::variant_name(o.spi.variant);
  extra["prepare"]["spi_a"] = o.spi.a;
  extra["prepare"]["spi_b"] = o.spi.b;
  extra["prepare"]["spi_threshold"] = o.spi.dichotomy_threshold;
  extra["prepare"]["panel_growth"] = o.panel_growth;
  extra["prepare"]["financial_growth"] = o.financial_growth;
  extra["prepare"]["aggregation"] = a.aggregation;
  extra["prepare"]["backcast"] = a.backcast;
  write_dataset(resolve(g.out), d, extra);
  out << "prepared " << d.n_units() << " units x " << d.t_len() << " months (" << d.dates.front().str() << " to "
      << d.dates.back().str() << ") in " << resolve(g.out) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs
{
  long t_len = 240;
  long n_units = 3;
  std::string truth;
  std::string covariates = "gaussian";
  long n_covariates = 1;
  long n_fin_covariates = 0;
  double covariate_sd = 1.0;
  double covariate_value = 0.0;
  std::string replay;
  std::string start = "2000-01";
  std::vector<std::string> labels;
};

int cmd_simulate(const Global& g, const SimulateArgs& a, std::ostream& out)
{
  SimSpec spec;
  spec.t_len = a.t_len;
  spec.seed = g.seed;
  spec.start = YearMonth::parse(a.start);
  spec.unit_labels = a.labels;
  spec.covariates.kind = CovariateGenerator::parse_kind(a.covariates);
  spec.covariates.sd = a.covariate_sd;
  spec.covariates.value = a.covariate_value;
  if (!a.truth.empty()) {
    spec.truth = params_from_json(read_json(resolve(a.truth)));
    spec.truth.validate(true);
  } else {
    if (a.n_covariates < 0 || a.n_fin_covariates < 0) throw InputError("covariate counts must be non-negative");
    spec.truth = default_truth(a.n_units, a.n_covariates + 1, a.n_fin_covariates + 1);
  }
  spec.n_units = spec.truth.n_units();
  if (!a.truth.empty() && spec.n_units != a.n_units && a.n_units != SimulateArgs{}.n_units) {
    throw InputError("--units " + std::to_string(a.n_units) + " disagrees with the truth file (" + std::to_string(spec.n_units) + " units)");
  }
  if (spec.covariates.kind == CovariateGenerator::Kind::kReplay) {
    if (a.replay.empty()) throw InputError("--covariates replay needs --replay DATASET_DIR");
    const PanelDataset src = read_dataset(resolve(a.replay));
    if (src.t_len() < spec.t_len) throw InputError("replay dataset has only " + std::to_string(src.t_len()) + " months");
    if (src.n_units() != spec.n_units) throw InputError("replay dataset unit count differs from the simulation");
    for (const auto& z : src.z_bc) spec.covariates.replay_bc.push_back(z.block(0, 1, spec.t_len, z.cols() - 1));
    spec.covariates.replay_fc = src.z_fc.block(0, 1, spec.t_len, src.z_fc.cols() - 1);
  }
  spec.validate();
  const Simulation sim = simulate(spec);

  const fs::path dir = resolve(g.out);
  Json extra;
  Json& s = extra["simulation"];
  s["t_len"] = spec.t_len;
  s["n_units"] = spec.n_units;
  s["seed"] = spec.seed;
  s["covariates"] = CovariateGenerator::kind_name(spec.covariates.kind);
  s["covariate_sd"] = spec.covariates.sd;
  s["covariate_value"] = spec.covariates.value;
  s["replay"] = resolve(a.replay);
  s["truth"] = a.truth.empty() ? "default" : resolve(a.truth);
  write_dataset(dir, sim.data, extra);
  write_json(dir / "true_params.json", params_to_json(spec.truth, sim.data.unit_labels));
  write_states_csv(dir / "true_states.csv", sim.states, sim.data);
  out << "simulated T=" << spec.t_len << " N=" << spec.n_units << " into " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs
{
  std::string data;
  long iters = McmcConfig{}.total_iterations;
  long burn = McmcConfig{}.burn_in;
  long thin = McmcConfig{}.thin;
  int chains = 1;
  std::string identification = "truncated";
  std::string state_conditional = "exact";
  std::string conjugate_form = "standard";
  int refine_steps = McmcConfig{}.refine_steps;
  double refine_concentration = McmcConfig{}.refine_concentration;
  std::vector<double> mixture_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double prior_coef_var = 100.0, prior_var_shape = 2.5, prior_var_rate = 0.5;
  std::vector<double> prior_delta{1.0, 1.0};
  std::vector<double> prior_interaction{8.0, 1.0, 1.0};
  bool no_states = false;
};

Json mcmc_json(const McmcConfig& c)
{
  Json j;
  j["total_iterations"] = c.total_iterations;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["retained"] = c.retained();
  j["seed"] = c.seed;
  j["mixture_weights"] = {c.mixture_weights(0), c.mixture_weights(1), c.mixture_weights(2)};
  j["init_strategy"] = c.init_strategy;
  j["state_conditional"] = enum_name(kStateConditionals, c.state_conditional);
  j["conjugate_form"] = enum_name(kConjugateForms, c.conjugate_form);
  j["identification"] = enum_name(kIdentifications, c.identification);
  j["refine_steps"] = c.refine_steps;
  j["refine_concentration"] = c.refine_concentration;
  return j;
}

struct ChainOutcome
{
  bool complete = false;
  long retained = 0;
  std::exception_ptr error;
};

ChainOutcome run_chain(const PanelDataset& data, const PriorConfig& prior, const McmcConfig& config, const fs::path& dir,
                       Json echo, bool store_states)
{
  ChainOutcome r;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    echo["mcmc"] = mcmc_json(config);
    ArchiveWriter writer(dir, data, echo, store_states);
    RunHooks hooks;
    hooks.on_draw = [&](const Draw& d) { writer.append(d); };
    hooks.stop = &interrupt_flag();
    hooks.keep_draws = false;
    const PosteriorDraws res = run(data, prior, config, hooks);
    writer.finish(res.complete, res.iterations_done, res.stats);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Json timing;
    timing["wall_seconds"] = secs;
    timing["iterations_done"] = res.iterations_done;
    write_json(dir / "timing.json", timing);
    r.complete = res.complete;
    r.retained = res.iterations_done <= config.burn_in ? 0 : (res.iterations_done - config.burn_in) / config.thin;
  } catch (...) {
    r.error = std::current_exception();
  }
  return r;
}

int cmd_estimate(const Global& g, const EstimateArgs& a, std::ostream& out)
{
  if (a.chains < 1) throw InputError("--chains must be at least 1");
  if (a.mixture_weights.size() != 3) throw InputError("--mixture-weights takes three values");
  if (a.prior_delta.size() != 2) throw InputError("--prior-delta takes two values");
  if (a.prior_interaction.size() != 3) throw InputError("--prior-interaction takes three values");

  McmcConfig config;
  config.total_iterations = a.iters;
  config.burn_in = a.burn;
  config.thin = a.thin;
  config.seed = g.seed;
  config.mixture_weights = Eigen::Vector3d(a.mixture_weights[0], a.mixture_weights[1], a.mixture_weights[2]);
  config.identification = parse_enum(kIdentifications, a.identification, "identification");
  config.state_conditional = parse_enum(kStateConditionals, a.state_conditional, "state conditional");
  config.conjugate_form = parse_enum(kConjugateForms, a.conjugate_form, "conjugate form");
  config.refine_steps = a.refine_steps;
  config.refine_concentration = a.refine_concentration;
  config.validate();

  const std::string data_dir = resolve(a.data);
  const PanelDataset data = read_dataset(data_dir);
  const PriorConfig prior =
      PriorConfig::defaults(data.n_units(), data.n_bc_covariates(), data.n_fc_covariates(), a.prior_coef_var, a.prior_var_shape,
                            a.prior_var_rate, Eigen::Vector2d(a.prior_delta[0], a.prior_delta[1]),
                            Eigen::Vector3d(a.prior_interaction[0], a.prior_interaction[1], a.prior_interaction[2]));
  prior.validate(data.n_units(), data.n_bc_covariates(), data.n_fc_covariates());

  Json echo;
  echo["command"] = "estimate";
  echo["data"] = data_dir;
  echo["base_seed"] = g.seed;
  echo["chains"] = a.chains;
  echo["store_states"] = !a.no_states;
  echo["prior"]["coef_var"] = a.prior_coef_var;
  echo["prior"]["var_shape"] = a.prior_var_shape;
  echo["prior"]["var_rate"] = a.prior_var_rate;
  echo["prior"]["delta"] = a.prior_delta;
  echo["prior"]["interaction"] = a.prior_interaction;

  const fs::path root = resolve(g.out);
  std::vector<ChainOutcome> outcomes(static_cast<std::size_t>(a.chains));
  if (a.chains == 1) {
    echo["chain"] = 1;
    outcomes[0] = run_chain(data, prior, config, root, echo, !a.no_states);
  } else {
    std::vector<std::thread> threads;
    for (int c = 1; c <= a.chains; ++c) {
      McmcConfig cc = config;
      cc.seed = derive_seed(g.seed, static_cast<std::uint64_t>(c));
      Json e = echo;
      e["chain"] = c;
      threads.emplace_back([&, cc, e, c] {
        outcomes[static_cast<std::size_t>(c - 1)] =
            run_chain(data, prior, cc, root / ("chain_" + std::to_string(c)), e, !a.no_states);
      });
    }
    for (auto& t : threads) t.join();
  }
  for (const auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
  }
  bool complete = true;
  for (std::size_t c = 0; c < outcomes.size(); ++c) {
    complete = complete && outcomes[c].complete;
    out << (a.chains == 1 ? root : root / ("chain_" + std::to_string(c + 1))).string() << ": " << outcomes[c].retained
        << " draws" << (outcomes[c].complete ? "" : " (incomplete)") << "\n";
  }
  if (!complete) return kExitInterrupted;
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// A run directory, or a directory of chain_* runs that are pooled.
DrawTable load_draws(const fs::path& dir, bool with_states)
{
  if (fs::exists(dir / "meta.json")) return read_archive(dir, with_states);
  std::vector<fs::path> chains;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && e.path().filename().string().rfind("chain_", 0) == 0 && fs::exists(e.path() / "meta.json")) {
        chains.push_back(e.path());
      }
    }
  }
  if (chains.empty()) throw InputError(dir.string() + " holds no draws archive");
  std::sort(chains.begin(), chains.end(), [](const fs::path& x, const fs::path& y) {
    return std::stol(x.filename().string().substr(6)) < std::stol(y.filename().string().substr(6));
  });
  DrawTable all = read_archive(chains.front(), with_states);
  for (std::size_t c = 1; c < chains.size(); ++c) {
    DrawTable t = read_archive(chains[c], with_states);
    if (t.names != all.names || t.fingerprint != all.fingerprint) throw InputError(chains[c].string() + " does not match " + chains[0].string());
    const Eigen::Index n0 = all.n_draws();
    all.values.conservativeResize(n0 + t.n_draws(), Eigen::NoChange);
    all.values.bottomRows(t.n_draws()) = t.values;
    all.loglik.conservativeResize(n0 + t.n_draws());
    all.loglik.tail(t.n_draws()) = t.loglik;
    all.iterations.insert(all.iterations.end(), t.iterations.begin(), t.iterations.end());
    all.states.insert(all.states.end(), t.states.begin(), t.states.end());
    all.complete = all.complete && t.complete;
  }
  return all;
}

struct AnalyzeArgs
{
  std::string draws;
  std::string cycle_estimator = "mode";
};

int cmd_analyze(const Global& g, const AnalyzeArgs& a, std::ostream& out)
{
  const CycleEstimator est = parse_cycle_estimator(a.cycle_estimator);
  const DrawTable t = load_draws(resolve(a.draws), true);
  if (t.n_draws() == 0) throw InputError(a.draws + ": archive holds no draws");
  const PosteriorSummary s = summarize(t, est);
  const fs::path dir = resolve(g.out);
  fs::create_directories(dir);
  write_summary_csv(dir / "summary.csv", s);
  if (!t.states.empty()) {
    write_cycles_csv(dir / "cycles.csv", s.cycles);
    write_concordance_csv(dir / "concordance.csv", t.chains, concordance_matrix(s.cycles.map_state));
  }
  const IdentificationScan scan = scan_identification(t);
  Json id;
  id["draws"] = scan.draws;
  id["checks"] = scan.checks;
  id["violations"] = scan.violations;
  id["examples"] = scan.examples;
  write_json(dir / "identification.json", id);
  out << "analyzed " << t.n_draws() << " draws" << (t.complete ? "" : " (archive incomplete)") << "; identification violations: "
      << scan.violations << "\n";
  return kExitOk;
}

struct CompareArgs
{
  std::vector<std::string> runs;
  std::vector<std::string> labels;
};

int cmd_compare(const Global& g, const CompareArgs& a, std::ostream& out)
{
  if (a.runs.size() < 2) throw InputError("compare needs at least two runs");
  std::vector<std::string> labels = a.labels;
  if (labels.empty()) {
    for (const auto& r : a.runs) labels.push_back(fs::path(resolve(r)).filename().string());
  }
  if (labels.size() != a.runs.size()) throw InputError("--labels must name every run");
  std::vector<DrawTable> tables;
  for (const auto& r : a.runs) tables.push_back(load_draws(resolve(r), false));
  const ModelComparison mc = compare_models(tables, labels);
  const fs::path dir = resolve(g.out);
  fs::create_directories(dir);
  write_bayes_factors_csv(dir / "bayes_factors.csv", mc);
  for (const auto& f : mc.fits) {
    if (!f.converged) out << "warning: fit " << f.model_a << " vs " << f.model_b << (f.separated ? " separated" : " did not converge") << "\n";
  }
  out << "compared " << labels.size() << " models into " << (dir / "bayes_factors.csv").string() << "\n";
  return kExitOk;
}

} // namespace

void install_interrupt_handler() { std::signal(SIGINT, on_sigint); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Bayesian panel Markov-switching models: data preparation, simulation, estimation and analysis"};
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.set_config("--config", "", "TOML/INI file of options; command-line flags win");
  app.fallthrough();

  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  PrepareArgs pa;
  CLI::App* prepare = app.add_subcommand("prepare", "Build a dataset from raw CSV inputs");
  prepare->add_option("--input", pa.input, "Directory holding panel.csv and friends")->required();
  prepare->add_option("--spi-transform", pa.spi_transform, "dichotomy, cdf, conditional_cdf_tails or threshold_tails")
      ->capture_default_str();
  prepare->add_option("--spi-a", pa.spi_a, "Lower tail threshold")->capture_default_str();
  prepare->add_option("--spi-b", pa.spi_b, "Upper tail threshold")->capture_default_str();
  prepare->add_option("--spi-threshold", pa.spi_threshold, "Dichotomy threshold")->capture_default_str();
  prepare->add_option("--panel-growth", pa.panel_growth, "panel.csv holds levels to convert to growth rates")->capture_default_str();
  prepare->add_option("--financial-growth", pa.financial_growth, "Financial series holds levels")->capture_default_str();
  prepare->add_option("--aggregation", pa.aggregation, "Chow-Lin aggregation: sum or average")->capture_default_str();
  prepare->add_option("--covariates", pa.covariates, "Covariate columns to use (default all)");
  prepare->add_option("--backcast", pa.backcast, "TARGET=PROXY pairs for missing-history backcasts");
  prepare->add_option("--start", pa.start, "First month kept (YYYY-MM)");
  prepare->add_option("--end", pa.end, "Last month kept (YYYY-MM)");

  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand("simulate", "Simulate a dataset from known parameters");
  sim->add_option("--t-len,-T", sa.t_len, "Months")->capture_default_str();
  sim->add_option("--units,-N", sa.n_units, "Units (ignored with --truth)")->capture_default_str();
  sim->add_option("--truth", sa.truth, "Parameter JSON (default: built-in symmetric truth)");
  sim->add_option("--covariates", sa.covariates, "constant, gaussian or replay")->capture_default_str();
  sim->add_option("--n-covariates", sa.n_covariates, "Non-intercept unit covariates for the default truth")->capture_default_str();
  sim->add_option("--n-fin-covariates", sa.n_fin_covariates, "Non-intercept financial covariates for the default truth")
      ->capture_default_str();
  sim->add_option("--covariate-sd", sa.covariate_sd, "Gaussian covariate sd")->capture_default_str();
  sim->add_option("--covariate-value", sa.covariate_value, "Constant covariate value")->capture_default_str();
  sim->add_option("--replay", sa.replay, "Dataset directory whose covariates are replayed");
  sim->add_option("--start", sa.start, "First month")->capture_default_str();
  sim->add_option("--labels", sa.labels, "Unit labels");

  EstimateArgs ea;
  CLI::App* est = app.add_subcommand("estimate", "Run the Gibbs sampler");
  est->add_option("--data", ea.data, "Dataset directory")->required();
  est->add_option("--iters", ea.iters, "Total sweeps including burn-in")->capture_default_str();
  est->add_option("--burn", ea.burn, "Burn-in sweeps")->capture_default_str();
  est->add_option("--thin", ea.thin, "Keep every k-th sweep after burn-in")->capture_default_str();
  est->add_option("--chains", ea.chains, "Independent chains run in parallel")->capture_default_str();
  est->add_option("--identification", ea.identification, "truncated or label_swap")->capture_default_str();
  est->add_option("--state-conditional", ea.state_conditional, "exact or own_chain")->capture_default_str();
  est->add_option("--conjugate-form", ea.conjugate_form, "standard or as_printed")->capture_default_str();
  est->add_option("--refine-steps", ea.refine_steps, "Random-walk MH steps after each independence step")->capture_default_str();
  est->add_option("--refine-concentration", ea.refine_concentration, "Concentration of the random-walk proposals")
      ->capture_default_str();
  est->add_option("--mixture-weights", ea.mixture_weights, "Weights of the three interaction proposal components")
      ->expected(3)
      ->capture_default_str();
  est->add_option("--prior-coef-var", ea.prior_coef_var, "Prior variance of regression coefficients")->capture_default_str();
  est->add_option("--prior-var-shape", ea.prior_var_shape, "Inverse-gamma shape for variances")->capture_default_str();
  est->add_option("--prior-var-rate", ea.prior_var_rate, "Inverse-gamma rate for variances")->capture_default_str();
  est->add_option("--prior-delta", ea.prior_delta, "Dirichlet weights of transition rows")->expected(2)->capture_default_str();
  est->add_option("--prior-interaction", ea.prior_interaction, "Dirichlet weights of interaction triples")
      ->expected(3)
      ->capture_default_str();
  est->add_flag("--no-states", ea.no_states, "Do not write states.csv");

  AnalyzeArgs aa;
  CLI::App* ana = app.add_subcommand("analyze", "Summaries, cycles and concordance from a draws archive");
  ana->add_option("--draws", aa.draws, "Draws directory (or a directory of chain_* runs)")->required();
  ana->add_option("--cycle-estimator", aa.cycle_estimator, "mode or mean_threshold")->capture_default_str();

  CompareArgs ca;
  CLI::App* cmp = app.add_subcommand("compare", "Pairwise log Bayes factors between runs on the same data");
  cmp->add_option("--runs", ca.runs, "Draws directories")->required()->expected(2, -1);
  cmp->add_option("--labels", ca.labels, "Model labels (default: directory names)");

  for (CLI::App* s : {prepare, sim, est, ana, cmp}) s->allow_config_extras(false);

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*prepare) return cmd_prepare(g, pa, out);
    if (*sim) return cmd_simulate(g, sa, out);
    if (*est) return cmd_estimate(g, ea, out);
    if (*ana) return cmd_analyze(g, aa, out);
    if (*cmp) return cmd_compare(g, ca, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

} // namespace pms::cli
