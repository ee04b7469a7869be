#include "pms/archive.hpp"

#include <array>
#include <charconv>
#include <limits>
#include <unordered_map>

namespace pms {

namespace fs = std::filesystem;

std::vector<std::string> parameter_names(const PanelDataset& data)
{
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < data.n_units(); ++i) {
    const std::string& u = data.unit_labels[static_cast<std::size_t>(i)];
    for (int k = 1; k <= 2; ++k) {
      for (const auto& c : data.bc_covariate_names) names.push_back("psi/" + u + "/" + std::to_string(k) + "/" + c);
    }
    names.push_back("sigma/" + u + "/1");
    names.push_back("sigma/" + u + "/2");
    names.push_back("p/" + u + "/1/1");
    names.push_back("p/" + u + "/2/2");
    names.push_back("alpha/" + u);
    names.push_back("beta/" + u);
    names.push_back("gamma/" + u);
  }
  for (int k = 1; k <= 2; ++k) {
    for (const auto& c : data.fc_covariate_names) names.push_back("phi/" + std::to_string(k) + "/" + c);
  }
  names.push_back("tau/1");
  names.push_back("tau/2");
  names.push_back(std::string("p/") + kFinancialChain + "/1/1");
  names.push_back(std::string("p/") + kFinancialChain + "/2/2");
  names.push_back(std::string("alpha/") + kFinancialChain);
  names.push_back(std::string("beta/") + kFinancialChain);
  names.push_back(std::string("gamma/") + kFinancialChain);
  return names;
}

Eigen::VectorXd flatten_params(const ModelParams& p)
{
  std::vector<double> v;
  for (Eigen::Index i = 0; i < p.n_units(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXd& b = p.psi[ui][static_cast<std::size_t>(k)];
      v.insert(v.end(), b.data(), b.data() + b.size());
    }
    v.push_back(p.sigma(i, 0));
    v.push_back(p.sigma(i, 1));
    v.push_back(p.p_unit[ui](0, 0));
    v.push_back(p.p_unit[ui](1, 1));
    for (int j = 0; j < 3; ++j) v.push_back(p.interaction_unit[ui](j));
  }
  for (int k = 0; k < 2; ++k) v.insert(v.end(), p.phi[static_cast<std::size_t>(k)].data(),
                                       p.phi[static_cast<std::size_t>(k)].data() + p.phi[static_cast<std::size_t>(k)].size());
  v.push_back(p.tau(0));
  v.push_back(p.tau(1));
  v.push_back(p.p_fin(0, 0));
  v.push_back(p.p_fin(1, 1));
  for (int j = 0; j < 3; ++j) v.push_back(p.interaction_fin(j));
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::Index DrawTable::column(const std::string& name) const
{
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return static_cast<Eigen::Index>(k);
  }
  throw InputError("draws have no parameter '" + name + "'");
}

namespace {

Eigen::MatrixXi joint_states(const LatentStates& s)
{
  Eigen::MatrixXi out(s.t_len(), s.s_y.cols() + 1);
  out.leftCols(s.s_y.cols()) = s.s_y;
  out.col(s.s_y.cols()) = s.s_x;
  return out;
}

} // namespace

DrawTable make_table(const PosteriorDraws& draws, const PanelDataset& data)
{
  DrawTable t;
  t.names = parameter_names(data);
  t.chains = data.unit_labels;
  t.chains.push_back(kFinancialChain);
  t.dates = data.dates;
  t.fingerprint = draws.fingerprint;
  t.complete = draws.complete;
  const auto n = static_cast<Eigen::Index>(draws.draws.size());
  t.values.resize(n, static_cast<Eigen::Index>(t.names.size()));
  t.loglik.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Draw& d = draws.draws[static_cast<std::size_t>(k)];
    t.iterations.push_back(d.iteration);
    t.values.row(k) = flatten_params(d.params).transpose();
    t.loglik(k) = d.loglik;
    t.states.push_back(joint_states(d.states));
  }
  return t;
}

// ---------------------------------------------------------------------------

ArchiveWriter::ArchiveWriter(const fs::path& dir, const PanelDataset& data, Json config_echo, bool store_states)
    : dir_(dir), data_(data), config_(std::move(config_echo)), store_states_(store_states), names_(parameter_names(data))
{
  fs::create_directories(dir_);
  draws_.open(dir_ / "draws.csv", std::ios::binary | std::ios::trunc);
  if (!draws_) throw InputError("cannot write " + (dir_ / "draws.csv").string());
  draws_ << "iteration,name,value\n";
  if (store_states_) {
    states_.open(dir_ / "states.csv", std::ios::binary | std::ios::trunc);
    if (!states_) throw InputError("cannot write " + (dir_ / "states.csv").string());
    states_ << "iteration,chain,t,regime\n";
  }
  write_meta(false, 0, nullptr);
}

void ArchiveWriter::append(const Draw& draw)
{
  const Eigen::VectorXd v = flatten_params(draw.params);
  const std::string it = std::to_string(draw.iteration);
  std::string buf;
  for (std::size_t k = 0; k < names_.size(); ++k) {
    buf += it + "," + names_[k] + "," + format_double(v(static_cast<Eigen::Index>(k))) + "\n";
  }
  buf += it + ",loglik," + format_double(draw.loglik) + "\n";
  draws_ << buf;
  if (store_states_) {
    buf.clear();
    const LatentStates& s = draw.states;
    for (Eigen::Index i = 0; i <= s.s_y.cols(); ++i) {
      const bool fin = i == s.s_y.cols();
      const std::string prefix = it + "," + (fin ? std::string(kFinancialChain) : data_.unit_labels[static_cast<std::size_t>(i)]) + ",";
      for (Eigen::Index t = 0; t < s.t_len(); ++t) {
        buf += prefix + std::to_string(t + 1) + "," + std::to_string(fin ? s.s_x(t) : s.s_y(t, i)) + "\n";
      }
    }
    states_ << buf;
  }
  ++written_;
  if (written_ % 50 == 0) {
    draws_.flush();
    states_.flush();
  }
}

void ArchiveWriter::finish(bool complete, long iterations_done, const SweepStats& stats)
{
  draws_.flush();
  if (store_states_) states_.flush();
  write_meta(complete, iterations_done, &stats);
}

void ArchiveWriter::write_meta(bool complete, long iterations_done, const SweepStats* stats)
{
  Json meta;
  meta["format"] = "pms-draws/1";
  meta["complete"] = complete;
  meta["iterations_done"] = iterations_done;
  meta["retained"] = written_;
  meta["fingerprint"] = data_fingerprint(data_);
  meta["config"] = config_;
  Json chains = data_.unit_labels;
  chains.push_back(kFinancialChain);
  meta["chains"] = chains;
  meta["t_len"] = data_.t_len();
  meta["start"] = data_.dates.front().str();
  meta["end"] = data_.dates.back().str();
  meta["states_stored"] = store_states_;
  meta["parameters"] = names_;
  if (stats != nullptr) {
    auto rate = [](const MhCounter& c) {
      Json j;
      j["proposed"] = c.proposed;
      j["accepted"] = c.accepted;
      j["rate"] = c.rate();
      return j;
    };
    meta["acceptance"]["transition_rows"] = rate(stats->transition_rows);
    meta["acceptance"]["interaction"] = rate(stats->interaction);
    meta["acceptance"]["transition_rows_refine"] = rate(stats->transition_rows_refine);
    meta["acceptance"]["interaction_refine"] = rate(stats->interaction_refine);
    meta["label_swaps"] = stats->label_swaps;
  }
  write_json(dir_ / "meta.json", meta);
}

// ---------------------------------------------------------------------------

namespace {

// Splits "a,b,c,d" in place without allocation beyond the views.
template <std::size_t K>
bool split_fixed(std::string_view line, std::array<std::string_view, K>& out)
{
  std::size_t pos = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t next = k + 1 < K ? line.find(',', pos) : line.size();
    if (next == std::string_view::npos) return false;
    out[k] = line.substr(pos, next - pos);
    pos = next + 1;
  }
  if (!out[K - 1].empty() && out[K - 1].back() == '\r') out[K - 1].remove_suffix(1);
  return true;
}

long parse_long(std::string_view s, const std::string& where)
{
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InputError(where + ": bad integer '" + std::string(s) + "'");
  return v;
}

} // namespace

DrawTable read_archive(const fs::path& dir, bool with_states)
{
  const Json meta = read_json(dir / "meta.json");
  DrawTable t;
  Eigen::Index T = 0;
  try {
    t.names = meta.at("parameters").get<std::vector<std::string>>();
    t.chains = meta.at("chains").get<std::vector<std::string>>();
    t.fingerprint = meta.at("fingerprint").get<std::string>();
    t.complete = meta.at("complete").get<bool>();
    T = meta.at("t_len").get<Eigen::Index>();
    const YearMonth start = YearMonth::parse(meta.at("start").get<std::string>());
    for (Eigen::Index k = 0; k < T; ++k) t.dates.push_back(start.plus(static_cast<int>(k)));
    if (with_states && !meta.value("states_stored", true)) with_states = false;
  } catch (const Json::exception& e) {
    throw InputError((dir / "meta.json").string() + ": " + e.what());
  }

  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t k = 0; k < t.names.size(); ++k) col[t.names[k]] = static_cast<Eigen::Index>(k);
  const auto P = static_cast<Eigen::Index>(t.names.size());

  std::ifstream in(dir / "draws.csv");
  if (!in) throw InputError("cannot open " + (dir / "draws.csv").string());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  std::vector<double> ll;
  std::vector<int> filled;
  std::unordered_map<long, std::size_t> draw_index;
  const std::string where = (dir / "draws.csv").string();
  std::array<std::string_view, 3> f;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!split_fixed(line, f)) throw InputError(where + ": malformed row '" + line + "'");
    const long it = parse_long(f[0], where);
    auto [pos, inserted] = draw_index.try_emplace(it, rows.size());
    if (inserted) {
      t.iterations.push_back(it);
      rows.emplace_back(static_cast<std::size_t>(P), std::numeric_limits<double>::quiet_NaN());
      ll.push_back(std::numeric_limits<double>::quiet_NaN());
      filled.push_back(0);
    }
    const double v = parse_double(f[2], where);
    const std::string name(f[1]);
    if (name == "loglik") {
      ll[pos->second] = v;
      ++filled[pos->second];
      continue;
    }
    const auto c = col.find(name);
    if (c == col.end()) throw InputError(where + ": unknown parameter '" + name + "'");
    rows[pos->second][static_cast<std::size_t>(c->second)] = v;
    ++filled[pos->second];
  }
  // A draw cut short by an interrupted write is dropped.
  while (!filled.empty() && filled.back() != P + 1) {
    filled.pop_back();
    rows.pop_back();
    ll.pop_back();
    draw_index.erase(t.iterations.back());
    t.iterations.pop_back();
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  t.values.resize(n, P);
  t.loglik.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    t.values.row(k) = Eigen::Map<const Eigen::RowVectorXd>(rows[static_cast<std::size_t>(k)].data(), P);
    t.loglik(k) = ll[static_cast<std::size_t>(k)];
  }

  if (!with_states) return t;
  const auto C = static_cast<Eigen::Index>(t.chains.size());
  t.states.assign(static_cast<std::size_t>(n), Eigen::MatrixXi::Zero(T, C));
  std::unordered_map<std::string, Eigen::Index> chain_col;
  for (Eigen::Index c = 0; c < C; ++c) chain_col[t.chains[static_cast<std::size_t>(c)]] = c;
  std::ifstream sin(dir / "states.csv");
  if (!sin) throw InputError("cannot open " + (dir / "states.csv").string());
  const std::string swhere = (dir / "states.csv").string();
  std::getline(sin, line);
  std::array<std::string_view, 4> g;
  while (std::getline(sin, line)) {
    if (line.empty()) continue;
    if (!split_fixed(line, g)) break; // truncated tail of an interrupted run
    const auto d = draw_index.find(parse_long(g[0], swhere));
    if (d == draw_index.end()) continue;
    const auto c = chain_col.find(std::string(g[1]));
    if (c == chain_col.end()) throw InputError(swhere + ": unknown chain '" + std::string(g[1]) + "'");
    const long tt = parse_long(g[2], swhere) - 1;
    if (tt < 0 || tt >= T) throw InputError(swhere + ": time index out of range");
    t.states[d->second](tt, c->second) = static_cast<int>(parse_long(g[3], swhere));
  }
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    if ((t.states[k].array() == 0).any()) {
      // states of the last draw may be incomplete after an interrupt
      t.states.resize(k);
      t.values.conservativeResize(static_cast<Eigen::Index>(k), P);
      t.loglik.conservativeResize(static_cast<Eigen::Index>(k));
      t.iterations.resize(k);
      break;
    }
  }
  return t;
}

} // namespace pms
