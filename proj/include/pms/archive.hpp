#pragma once

#include "pms/io.hpp"
#include "pms/sampler.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace pms {

/// Scalar parameter names in archive order, e.g. psi/AU/1/const, sigma/AU/2,
/// p/AU/1/1, alpha/AU, phi/2/const, tau/1, p/FIN/2/2, gamma/FIN.
std::vector<std::string> parameter_names(const PanelDataset& data);

/// Values in the order of parameter_names.
Eigen::VectorXd flatten_params(const ModelParams& params);

/// Retained draws in tabular form, from memory or from an archive directory.
struct DrawTable
{
  std::vector<std::string> names;
  std::vector<long> iterations;
  Eigen::MatrixXd values; // draws x parameters
  Eigen::VectorXd loglik;
  std::vector<std::string> chains; // unit labels, then FIN
  std::vector<YearMonth> dates;
  std::vector<Eigen::MatrixXi> states; // per draw, T x (N+1); empty when not loaded
  std::string fingerprint;
  bool complete = true;

  Eigen::Index n_draws() const { return values.rows(); }
  /// Column of `name`; throws InputError when absent.
  Eigen::Index column(const std::string& name) const;
};

DrawTable make_table(const PosteriorDraws& draws, const PanelDataset& data);

/// Streams draws into `dir`: draws.csv (iteration,name,value), states.csv
/// (iteration,chain,t,regime) and meta.json. meta.json is written up front
/// with complete=false and rewritten by finish().
class ArchiveWriter
{
public:
  ArchiveWriter(const std::filesystem::path& dir, const PanelDataset& data, Json config_echo, bool store_states = true);

  void append(const Draw& draw);
  void finish(bool complete, long iterations_done, const SweepStats& stats);

private:
  void write_meta(bool complete, long iterations_done, const SweepStats* stats);

  std::filesystem::path dir_;
  const PanelDataset& data_;
  Json config_;
  bool store_states_;
  std::vector<std::string> names_;
  std::ofstream draws_;
  std::ofstream states_;
  long written_ = 0;
};

DrawTable read_archive(const std::filesystem::path& dir, bool with_states = true);

} // namespace pms
