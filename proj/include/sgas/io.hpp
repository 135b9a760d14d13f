#pragma once

#include <array>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sgas/dataset.hpp"
#include "sgas/evaluate.hpp"
#include "sgas/search.hpp"

namespace sgas {

inline constexpr const char* kToolVersion = "0.1.0";

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string iso_utc_now();

// 16-hex-digit FNV-1a digest of the canonical (sorted-key) dump; identical
// configuration content hashes identically on every platform.
std::string config_digest(const nlohmann::json& j);

nlohmann::json search_config_to_json(const SearchConfig& cfg);
SearchConfig search_config_from_json(const nlohmann::json& j);

nlohmann::json eval_config_to_json(const EvalConfig& cfg);
EvalConfig eval_config_from_json(const nlohmann::json& j);

// Dataset description carried in config files.
struct DatasetSpec {
  std::string kind = "spirals";  // spirals | blobs | csv
  int n_per_class = 100;
  int classes = 3;
  double noise = 0.15;
  double spread = 0.5;
  std::uint64_t seed = 7;
  int width = 32;
  std::string path;
  std::string label_column = "label";
  std::array<double, 3> fractions = {0.4, 0.4, 0.2};
};

nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);
Dataset build_dataset(const DatasetSpec& spec);

// Full tool configuration: search fields at the top level plus nested
// "dataset" and "eval" sections.
struct ToolConfig {
  SearchConfig search;
  DatasetSpec dataset;
  EvalConfig eval;
  nlohmann::json canonical;  // defaults resolved
  std::string digest;
};

ToolConfig tool_config_from_json(const nlohmann::json& j);
ToolConfig load_tool_config(const std::string& path);

nlohmann::json epoch_to_json(const EpochStats& s);
nlohmann::json decision_to_json(const DecisionRecord& rec);
nlohmann::json result_to_json(const SearchResult& result, const std::string& digest);
nlohmann::json report_to_json(const ExperimentReport& report);

std::string experiment_csv(std::span<const ExperimentReport> reports);
std::string ablation_csv(std::span<const AblationRow> rows);

// Kendall tau between the val_err and test_err rankings of a CSV file.
double kendall_tau_from_csv(const std::string& path);

// One compact JSON document per line, flushed per record.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void write(const nlohmann::json& j);

 private:
  std::ofstream out_;
};

}  // namespace sgas
