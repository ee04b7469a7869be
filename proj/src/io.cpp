#include "pms/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace pms {

namespace fs = std::filesystem;

std::string format_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& where)
{
  while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r')) text.remove_suffix(1);
  if (text == "NA" || text == "NaN" || text == "nan" || text.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InputError(where + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    while (!f.empty() && f.back() == ' ') f.pop_back();
  }
  return out;
}

std::size_t CsvTable::column(const std::string& name) const
{
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw InputError(source + ": missing column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const
{
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

CsvTable read_csv(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  CsvTable t;
  t.source = path.string();
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3); // UTF-8 BOM
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size()) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

void write_text(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

Json read_json(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------

void write_dataset(const fs::path& dir, const PanelDataset& data, const Json& extra_meta)
{
  data.validate();
  fs::create_directories(dir);
  const Eigen::Index T = data.t_len();
  const Eigen::Index N = data.n_units();
  for (const auto& l : data.unit_labels) {
    if (l.find(',') != std::string::npos || l == kFinancialChain) throw InputError("unit label '" + l + "' is not allowed");
  }
  std::string csv = "date,chain,variable,value\n";
  for (Eigen::Index t = 0; t < T; ++t) {
    const std::string date = data.dates[static_cast<std::size_t>(t)].str();
    for (Eigen::Index i = 0; i < N; ++i) {
      const std::string& label = data.unit_labels[static_cast<std::size_t>(i)];
      csv += date + "," + label + ",y," + format_double(data.y(t, i)) + "\n";
      for (Eigen::Index c = 1; c < data.n_bc_covariates(); ++c) {
        csv += date + "," + label + "," + data.bc_covariate_names[static_cast<std::size_t>(c)] + "," +
               format_double(data.z_bc[static_cast<std::size_t>(i)](t, c)) + "\n";
      }
    }
    csv += date + "," + kFinancialChain + ",x," + format_double(data.x(t)) + "\n";
    for (Eigen::Index c = 1; c < data.n_fc_covariates(); ++c) {
      csv += date + "," + kFinancialChain + "," + data.fc_covariate_names[static_cast<std::size_t>(c)] + "," +
             format_double(data.z_fc(t, c)) + "\n";
    }
  }
  write_text(dir / "dataset.csv", csv);

  Json meta;
  meta["t_len"] = T;
  meta["n_units"] = N;
  meta["units"] = data.unit_labels;
  meta["bc_covariates"] = data.bc_covariate_names;
  meta["fc_covariates"] = data.fc_covariate_names;
  meta["start"] = data.dates.front().str();
  meta["end"] = data.dates.back().str();
  meta["fingerprint"] = data_fingerprint(data);
  for (const auto& [k, v] : extra_meta.items()) meta[k] = v;
  write_json(dir / "dataset_meta.json", meta);
}

PanelDataset read_dataset(const fs::path& dir)
{
  const Json meta = read_json(dir / "dataset_meta.json");
  PanelDataset d;
  Eigen::Index T = 0, N = 0;
  try {
    T = meta.at("t_len").get<Eigen::Index>();
    N = meta.at("n_units").get<Eigen::Index>();
    d.unit_labels = meta.at("units").get<std::vector<std::string>>();
    d.bc_covariate_names = meta.at("bc_covariates").get<std::vector<std::string>>();
    d.fc_covariate_names = meta.at("fc_covariates").get<std::vector<std::string>>();
    const YearMonth start = YearMonth::parse(meta.at("start").get<std::string>());
    for (Eigen::Index t = 0; t < T; ++t) d.dates.push_back(start.plus(static_cast<int>(t)));
  } catch (const Json::exception& e) {
    throw InputError((dir / "dataset_meta.json").string() + ": " + e.what());
  }
  if (static_cast<Eigen::Index>(d.unit_labels.size()) != N) throw InputError("dataset_meta.json: unit list does not match n_units");
  const auto m = static_cast<Eigen::Index>(d.bc_covariate_names.size());
  const auto mf = static_cast<Eigen::Index>(d.fc_covariate_names.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  d.y = Eigen::MatrixXd::Constant(T, N, nan);
  d.x = Eigen::VectorXd::Constant(T, nan);
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Constant(T, m, nan);
    z.col(0).setOnes();
    d.z_bc.push_back(z);
  }
  d.z_fc = Eigen::MatrixXd::Constant(T, mf, nan);
  d.z_fc.col(0).setOnes();

  std::unordered_map<std::string, Eigen::Index> unit_index, bc_index, fc_index;
  for (Eigen::Index i = 0; i < N; ++i) unit_index[d.unit_labels[static_cast<std::size_t>(i)]] = i;
  for (Eigen::Index c = 1; c < m; ++c) bc_index[d.bc_covariate_names[static_cast<std::size_t>(c)]] = c;
  for (Eigen::Index c = 1; c < mf; ++c) fc_index[d.fc_covariate_names[static_cast<std::size_t>(c)]] = c;

  const CsvTable csv = read_csv(dir / "dataset.csv");
  const std::size_t c_date = csv.column("date"), c_chain = csv.column("chain"), c_var = csv.column("variable"),
                    c_val = csv.column("value");
  const int start_idx = d.dates.front().index();
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string where = csv.source + " row " + std::to_string(r + 2);
    const Eigen::Index t = YearMonth::parse(row[c_date]).index() - start_idx;
    if (t < 0 || t >= T) throw InputError(where + ": date " + row[c_date] + " outside the declared range");
    const double v = parse_double(row[c_val], where);
    const std::string& var = row[c_var];
    if (row[c_chain] == kFinancialChain) {
      if (var == "x") {
        d.x(t) = v;
      } else if (auto it = fc_index.find(var); it != fc_index.end()) {
        d.z_fc(t, it->second) = v;
      } else {
        throw InputError(where + ": unknown financial variable '" + var + "'");
      }
      continue;
    }
    const auto u = unit_index.find(row[c_chain]);
    if (u == unit_index.end()) throw InputError(where + ": unknown chain '" + row[c_chain] + "'");
    if (var == "y") {
      d.y(t, u->second) = v;
    } else if (auto it = bc_index.find(var); it != bc_index.end()) {
      d.z_bc[static_cast<std::size_t>(u->second)](t, it->second) = v;
    } else {
      throw InputError(where + ": unknown unit variable '" + var + "'");
    }
  }
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------

namespace {

Json vec_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json rows_json(const Eigen::Matrix2d& p) { return Json::array({{p(0, 0), p(0, 1)}, {p(1, 0), p(1, 1)}}); }

Eigen::VectorXd json_vec(const Json& j)
{
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::Matrix2d json_rows(const Json& j)
{
  Eigen::Matrix2d p;
  for (int l = 0; l < 2; ++l) {
    const auto r = j.at(static_cast<std::size_t>(l)).get<std::vector<double>>();
    if (r.size() != 2) throw InputError("transition rows must have two entries");
    p(l, 0) = r[0];
    p(l, 1) = r[1];
  }
  return p;
}

Eigen::Vector3d json_triple(const Json& j)
{
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw InputError("interaction must be an (alpha, beta, gamma) triple");
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

} // namespace

Json params_to_json(const ModelParams& p, const std::vector<std::string>& unit_labels)
{
  Json units = Json::array();
  for (Eigen::Index i = 0; i < p.n_units(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    Json u;
    u["label"] = ui < unit_labels.size() ? unit_labels[ui] : "U" + std::to_string(i + 1);
    u["psi"] = Json::array({vec_json(p.psi[ui][0]), vec_json(p.psi[ui][1])});
    u["sigma"] = Json::array({p.sigma(i, 0), p.sigma(i, 1)});
    u["p"] = rows_json(p.p_unit[ui]);
    u["interaction"] = Json::array({p.interaction_unit[ui](0), p.interaction_unit[ui](1), p.interaction_unit[ui](2)});
    units.push_back(u);
  }
  Json fin;
  fin["phi"] = Json::array({vec_json(p.phi[0]), vec_json(p.phi[1])});
  fin["tau"] = Json::array({p.tau(0), p.tau(1)});
  fin["p"] = rows_json(p.p_fin);
  fin["interaction"] = Json::array({p.interaction_fin(0), p.interaction_fin(1), p.interaction_fin(2)});
  Json out;
  out["units"] = units;
  out["financial"] = fin;
  return out;
}

ModelParams params_from_json(const Json& j)
{
  ModelParams p;
  try {
    const Json& units = j.at("units");
    const auto N = static_cast<Eigen::Index>(units.size());
    p.sigma.resize(N, 2);
    for (Eigen::Index i = 0; i < N; ++i) {
      const Json& u = units.at(static_cast<std::size_t>(i));
      p.psi.push_back({json_vec(u.at("psi").at(0)), json_vec(u.at("psi").at(1))});
      const auto s = u.at("sigma").get<std::vector<double>>();
      if (s.size() != 2) throw InputError("sigma must have two entries");
      p.sigma(i, 0) = s[0];
      p.sigma(i, 1) = s[1];
      p.p_unit.push_back(json_rows(u.at("p")));
      p.interaction_unit.push_back(json_triple(u.at("interaction")));
    }
    const Json& f = j.at("financial");
    p.phi = {json_vec(f.at("phi").at(0)), json_vec(f.at("phi").at(1))};
    const auto tau = f.at("tau").get<std::vector<double>>();
    if (tau.size() != 2) throw InputError("tau must have two entries");
    p.tau = Eigen::Vector2d(tau[0], tau[1]);
    p.p_fin = json_rows(f.at("p"));
    p.interaction_fin = json_triple(f.at("interaction"));
  } catch (const Json::exception& e) {
    throw InputError(std::string("parameter file: ") + e.what());
  }
  if (p.psi.empty()) throw InputError("parameter file: at least one unit is required");
  p.validate(false);
  return p;
}

void write_states_csv(const fs::path& path, const LatentStates& states, const PanelDataset& data)
{
  std::string csv = "chain,t,date,regime\n";
  auto emit = [&](const std::string& chain, auto&& at) {
    for (Eigen::Index t = 0; t < states.t_len(); ++t) {
      csv += chain + "," + std::to_string(t + 1) + "," + data.dates[static_cast<std::size_t>(t)].str() + "," +
             std::to_string(at(t)) + "\n";
    }
  };
  for (Eigen::Index i = 0; i < states.s_y.cols(); ++i) {
    emit(data.unit_labels[static_cast<std::size_t>(i)], [&](Eigen::Index t) { return states.s_y(t, i); });
  }
  emit(kFinancialChain, [&](Eigen::Index t) { return states.s_x(t); });
  write_text(path, csv);
}

LatentStates read_states_csv(const fs::path& path, const PanelDataset& data)
{
  const CsvTable csv = read_csv(path);
  const std::size_t c_chain = csv.column("chain"), c_t = csv.column("t"), c_reg = csv.column("regime");
  LatentStates s;
  s.s_y = Eigen::MatrixXi::Zero(data.t_len(), data.n_units());
  s.s_x = Eigen::VectorXi::Zero(data.t_len());
  for (const auto& row : csv.rows) {
    const Eigen::Index t = std::stol(row[c_t]) - 1;
    const int k = std::stoi(row[c_reg]);
    if (t < 0 || t >= data.t_len()) throw InputError(path.string() + ": time index out of range");
    if (row[c_chain] == kFinancialChain) {
      s.s_x(t) = k;
      continue;
    }
    bool found = false;
    for (Eigen::Index i = 0; i < data.n_units(); ++i) {
      if (data.unit_labels[static_cast<std::size_t>(i)] == row[c_chain]) {
        s.s_y(t, i) = k;
        found = true;
      }
    }
    if (!found) throw InputError(path.string() + ": unknown chain '" + row[c_chain] + "'");
  }
  s.validate();
  return s;
}

} // namespace pms
