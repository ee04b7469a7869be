#pragma once

#include "pms/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace pms {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal representation.
std::string format_double(double v);
double parse_double(std::string_view text, const std::string& where);

/// Minimal CSV table: header plus rows of unquoted fields.
struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source;

  /// Index of `name` in the header; throws InputError naming the column when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_csv_line(std::string_view line);

void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

// ---------------------------------------------------------------------------
// PanelDataset on disk: `dataset.csv` (date, chain, variable, value; the
// intercept columns are implied) and `dataset_meta.json`.

inline constexpr const char* kFinancialChain = "FIN";

void write_dataset(const std::filesystem::path& dir, const PanelDataset& data, const Json& extra_meta = Json::object());
PanelDataset read_dataset(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// ModelParams as JSON (true_params.json and simulation specs).

Json params_to_json(const ModelParams& params, const std::vector<std::string>& unit_labels);
/// Inverse of params_to_json. Validates the result (without the ordering
/// check, which the caller decides on).
ModelParams params_from_json(const Json& j);

/// `chain,t,date,regime` rows for every chain, financial chain last.
void write_states_csv(const std::filesystem::path& path, const LatentStates& states, const PanelDataset& data);
LatentStates read_states_csv(const std::filesystem::path& path, const PanelDataset& data);

} // namespace pms
