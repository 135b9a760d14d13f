#include "sgas/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>
#include <sstream>

namespace sgas {

using nlohmann::json;

namespace {

[[noreturn]] void field_fail(const std::string& where, const std::string& what) {
  throw ConfigError("config field '" + where + "': " + what);
}

const json& get_member(const json& j, const std::string& key, const std::string& scope) {
  if (!j.is_object()) field_fail(scope.empty() ? key : scope, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) field_fail(scope + key, "missing");
  return *it;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& scope) {
  if (!j.is_object()) field_fail(scope + key, "parent is not an object");
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    field_fail(scope + key, "wrong type, got " + it->dump());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& scope) {
  if (!j.is_object()) return;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) field_fail(scope + it.key(), "unknown field");
  }
}

char hexdigit(std::uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw Error("write failed: " + path);
}

std::string iso_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string config_digest(const json& j) {
  const std::uint64_t h = fnv1a64(j.dump());
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = hexdigit(h >> (4 * i));
  return out;
}

json search_config_to_json(const SearchConfig& cfg) {
  return {{"seed", cfg.seed},
          {"epochs", cfg.epochs},
          {"warm_up_epochs", cfg.warm_up_epochs},
          {"decision_interval", cfg.decision_interval},
          {"history_window", cfg.history_window},
          {"criterion", method_name(cfg.criterion)},
          {"batch_size", cfg.batch_size},
          {"batch_growth", cfg.batch_growth},
          {"cells", cfg.cells},
          {"width", cfg.width},
          {"intermediate_nodes", cfg.intermediate_nodes},
          {"w_optim",
           {{"lr", cfg.w_optim.lr},
            {"momentum", cfg.w_optim.momentum},
            {"weight_decay", cfg.w_optim.weight_decay},
            {"clip_norm", cfg.w_optim.clip_norm}}},
          {"alpha_optim",
           {{"lr", cfg.alpha_optim.lr},
            {"beta1", cfg.alpha_optim.beta1},
            {"beta2", cfg.alpha_optim.beta2},
            {"weight_decay", cfg.alpha_optim.weight_decay},
            {"clip_norm", cfg.alpha_optim.clip_norm}}}};
}

SearchConfig search_config_from_json(const json& j) {
  SearchConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "");
  cfg.epochs = get_or<int>(j, "epochs", cfg.epochs, "");
  cfg.warm_up_epochs = get_or<int>(j, "warm_up_epochs", cfg.warm_up_epochs, "");
  cfg.decision_interval = get_or<int>(j, "decision_interval", cfg.decision_interval, "");
  cfg.history_window = get_or<int>(j, "history_window", cfg.history_window, "");
  cfg.criterion = method_from_string(
      get_or<std::string>(j, "criterion", method_name(cfg.criterion), ""));
  cfg.batch_size = get_or<int>(j, "batch_size", cfg.batch_size, "");
  cfg.batch_growth = get_or<int>(j, "batch_growth", cfg.batch_growth, "");
  cfg.cells = get_or<int>(j, "cells", cfg.cells, "");
  cfg.width = get_or<int>(j, "width", cfg.width, "");
  cfg.intermediate_nodes = get_or<int>(j, "intermediate_nodes", cfg.intermediate_nodes, "");
  if (j.is_object() && j.contains("w_optim")) {
    const json& w = j.at("w_optim");
    reject_unknown(w, {"lr", "momentum", "weight_decay", "clip_norm"}, "w_optim.");
    cfg.w_optim.lr = get_or<double>(w, "lr", cfg.w_optim.lr, "w_optim.");
    cfg.w_optim.momentum = get_or<double>(w, "momentum", cfg.w_optim.momentum, "w_optim.");
    cfg.w_optim.weight_decay =
        get_or<double>(w, "weight_decay", cfg.w_optim.weight_decay, "w_optim.");
    cfg.w_optim.clip_norm = get_or<double>(w, "clip_norm", cfg.w_optim.clip_norm, "w_optim.");
  }
  if (j.is_object() && j.contains("alpha_optim")) {
    const json& a = j.at("alpha_optim");
    reject_unknown(a, {"lr", "beta1", "beta2", "weight_decay", "clip_norm"}, "alpha_optim.");
    cfg.alpha_optim.lr = get_or<double>(a, "lr", cfg.alpha_optim.lr, "alpha_optim.");
    cfg.alpha_optim.beta1 = get_or<double>(a, "beta1", cfg.alpha_optim.beta1, "alpha_optim.");
    cfg.alpha_optim.beta2 = get_or<double>(a, "beta2", cfg.alpha_optim.beta2, "alpha_optim.");
    cfg.alpha_optim.weight_decay =
        get_or<double>(a, "weight_decay", cfg.alpha_optim.weight_decay, "alpha_optim.");
    cfg.alpha_optim.clip_norm =
        get_or<double>(a, "clip_norm", cfg.alpha_optim.clip_norm, "alpha_optim.");
  }
  return cfg;
}

json eval_config_to_json(const EvalConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"cells", cfg.cells},
          {"width", cfg.width},
          {"rank_by_best_epoch", cfg.rank_by_best_epoch},
          {"optim",
           {{"lr", cfg.optim.lr},
            {"momentum", cfg.optim.momentum},
            {"weight_decay", cfg.optim.weight_decay},
            {"clip_norm", cfg.optim.clip_norm}}}};
}

EvalConfig eval_config_from_json(const json& j) {
  EvalConfig cfg;
  reject_unknown(j, {"epochs", "batch_size", "cells", "width", "rank_by_best_epoch", "optim"},
                 "eval.");
  cfg.epochs = get_or<int>(j, "epochs", cfg.epochs, "eval.");
  cfg.batch_size = get_or<int>(j, "batch_size", cfg.batch_size, "eval.");
  cfg.cells = get_or<int>(j, "cells", cfg.cells, "eval.");
  cfg.width = get_or<int>(j, "width", cfg.width, "eval.");
  cfg.rank_by_best_epoch =
      get_or<bool>(j, "rank_by_best_epoch", cfg.rank_by_best_epoch, "eval.");
  if (j.is_object() && j.contains("optim")) {
    const json& w = j.at("optim");
    reject_unknown(w, {"lr", "momentum", "weight_decay", "clip_norm"}, "eval.optim.");
    cfg.optim.lr = get_or<double>(w, "lr", cfg.optim.lr, "eval.optim.");
    cfg.optim.momentum = get_or<double>(w, "momentum", cfg.optim.momentum, "eval.optim.");
    cfg.optim.weight_decay =
        get_or<double>(w, "weight_decay", cfg.optim.weight_decay, "eval.optim.");
    cfg.optim.clip_norm = get_or<double>(w, "clip_norm", cfg.optim.clip_norm, "eval.optim.");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.cells < 1 || cfg.width < 2) {
    throw ConfigError("eval: epochs/batch_size/cells must be >= 1 and width >= 2");
  }
  return cfg;
}

json dataset_spec_to_json(const DatasetSpec& spec) {
  json j = {{"kind", spec.kind},
            {"seed", spec.seed},
            {"width", spec.width},
            {"fractions", spec.fractions}};
  if (spec.kind == "spirals") {
    j["n_per_class"] = spec.n_per_class;
    j["classes"] = spec.classes;
    j["noise"] = spec.noise;
  } else if (spec.kind == "blobs") {
    j["n_per_class"] = spec.n_per_class;
    j["classes"] = spec.classes;
    j["spread"] = spec.spread;
  } else {
    j["path"] = spec.path;
    j["label_column"] = spec.label_column;
  }
  return j;
}

DatasetSpec dataset_spec_from_json(const json& j) {
  DatasetSpec spec;
  reject_unknown(j,
                 {"kind", "seed", "width", "fractions", "n_per_class", "classes", "noise",
                  "spread", "path", "label_column"},
                 "dataset.");
  spec.kind = get_or<std::string>(j, "kind", spec.kind, "dataset.");
  if (spec.kind != "spirals" && spec.kind != "blobs" && spec.kind != "csv") {
    field_fail("dataset.kind", "must be spirals|blobs|csv, got '" + spec.kind + "'");
  }
  spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed, "dataset.");
  spec.width = get_or<int>(j, "width", spec.width, "dataset.");
  spec.n_per_class = get_or<int>(j, "n_per_class", spec.n_per_class, "dataset.");
  spec.classes = get_or<int>(j, "classes", spec.classes, "dataset.");
  spec.noise = get_or<double>(j, "noise", spec.noise, "dataset.");
  spec.spread = get_or<double>(j, "spread", spec.spread, "dataset.");
  spec.path = get_or<std::string>(j, "path", spec.path, "dataset.");
  spec.label_column = get_or<std::string>(j, "label_column", spec.label_column, "dataset.");
  if (j.is_object() && j.contains("fractions")) {
    const json& f = j.at("fractions");
    if (!f.is_array() || f.size() != 3) {
      field_fail("dataset.fractions", "expected an array of 3 numbers");
    }
    for (int i = 0; i < 3; ++i) spec.fractions[i] = f.at(i).get<double>();
  }
  if (spec.kind == "csv" && spec.path.empty()) field_fail("dataset.path", "missing");
  return spec;
}

Dataset build_dataset(const DatasetSpec& spec) {
  Dataset ds;
  if (spec.kind == "spirals") {
    ds = make_spirals(spec.n_per_class, spec.classes, spec.noise, spec.seed, spec.width);
  } else if (spec.kind == "blobs") {
    ds = make_blobs(spec.n_per_class, spec.classes, spec.spread, spec.seed, spec.width);
  } else {
    ds = load_csv(spec.path, spec.label_column);
  }
  return split(std::move(ds), spec.fractions, spec.seed);
}

ToolConfig tool_config_from_json(const json& j) {
  static const std::set<std::string> kTop = {
      "seed",       "epochs",     "warm_up_epochs", "decision_interval",
      "history_window", "criterion",  "batch_size",     "batch_growth",
      "cells",      "width",      "intermediate_nodes", "w_optim",
      "alpha_optim", "dataset",   "eval"};
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  reject_unknown(j, kTop, "");

  ToolConfig cfg;
  cfg.search = search_config_from_json(j);
  cfg.dataset = dataset_spec_from_json(get_member(j, "dataset", ""));
  cfg.eval = j.contains("eval") ? eval_config_from_json(j.at("eval")) : EvalConfig{};

  cfg.canonical = search_config_to_json(cfg.search);
  cfg.canonical["dataset"] = dataset_spec_to_json(cfg.dataset);
  cfg.canonical["eval"] = eval_config_to_json(cfg.eval);
  cfg.digest = config_digest(cfg.canonical);
  return cfg;
}

ToolConfig load_tool_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": invalid JSON: " + e.what());
  }
  return tool_config_from_json(j);
}

json epoch_to_json(const EpochStats& s) {
  return {{"type", "epoch"},
          {"epoch", s.epoch},
          {"train_loss", s.train_loss},
          {"val_loss", s.val_loss},
          {"val_acc", s.val_acc},
          {"batch_size", s.batch_size},
          {"undetermined", s.undetermined}};
}

json decision_to_json(const DecisionRecord& rec) {
  json scores = json::array();
  for (const EdgeScore& s : rec.scores) {
    scores.push_back({{"edge", s.edge},
                      {"ei", s.ei},
                      {"sc", s.sc},
                      {"ss", s.ss},
                      {"ei_n", s.ei_n},
                      {"sc_n", s.sc_n},
                      {"ss_n", s.ss_n},
                      {"s1", s.s1},
                      {"s2", s.s2}});
  }
  return {{"type", "decision"},
          {"epoch", rec.epoch},
          {"edge", {rec.edge_nodes.src, rec.edge_nodes.dst}},
          {"op", rec.op},
          {"pruned", rec.pruned_edges},
          {"weights_freed", rec.weights_freed},
          {"alpha_freed", rec.alpha_freed},
          {"weight_params_after", rec.weight_params_after},
          {"alpha_params_after", rec.alpha_params_after},
          {"scores", std::move(scores)}};
}

json result_to_json(const SearchResult& result, const std::string& digest) {
  json epochs = json::array();
  for (const EpochStats& s : result.epochs) {
    json e = epoch_to_json(s);
    e.erase("type");
    epochs.push_back(std::move(e));
  }
  json decisions = json::array();
  for (const DecisionRecord& d : result.decisions) {
    json rec = decision_to_json(d);
    rec.erase("type");
    decisions.push_back(std::move(rec));
  }
  return {{"method", result.method},
          {"config_digest", digest},
          {"genotype", json::parse(genotype_to_json(result.genotype))},
          {"final_val_acc", result.final_val_acc},
          {"final_val_err", result.final_val_err},
          {"best_val_err", result.best_val_err},
          {"epochs", std::move(epochs)},
          {"decisions", std::move(decisions)}};
}

json report_to_json(const ExperimentReport& report) {
  json runs = json::array();
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const RunOutcome& r = report.runs[i];
    json row = {{"run", r.run_id},
                {"seed", r.seed},
                {"val_err", r.search_val_err},
                {"test_err", r.test_err},
                {"params", r.params}};
    if (i < report.rank_search.size()) row["rank_search"] = report.rank_search[i];
    if (i < report.rank_eval.size()) row["rank_eval"] = report.rank_eval[i];
    runs.push_back(std::move(row));
  }
  return {{"method", report.method},
          {"tau", report.tau},
          {"test_err_mean", report.test_err_mean},
          {"test_err_std", report.test_err_std},
          {"params_mean", report.params_mean},
          {"params_std", report.params_std},
          {"runs", std::move(runs)}};
}

std::string experiment_csv(std::span<const ExperimentReport> reports) {
  std::ostringstream out;
  out << "method,run,val_err,test_err,params,rank_search,rank_eval,tau\n";
  for (const ExperimentReport& rep : reports) {
    for (std::size_t i = 0; i < rep.runs.size(); ++i) {
      const RunOutcome& r = rep.runs[i];
      out << rep.method << "," << r.run_id << "," << fmt_double(r.search_val_err) << ","
          << fmt_double(r.test_err) << "," << r.params << "," << rep.rank_search[i] << ","
          << rep.rank_eval[i] << "," << fmt_double(rep.tau) << "\n";
    }
  }
  return out.str();
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::ostringstream out;
  out << "interval,window,epochs,test_err_mean,test_err_std,best_test_err,params_mean,tau\n";
  for (const AblationRow& r : rows) {
    out << r.interval << "," << r.window << "," << r.epochs << ","
        << fmt_double(r.test_err_mean) << "," << fmt_double(r.test_err_std) << ","
        << fmt_double(r.best_test_err) << "," << fmt_double(r.params_mean) << ","
        << fmt_double(r.tau) << "\n";
  }
  return out.str();
}

double kendall_tau_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("csv " + path + ": empty file");

  auto cells_of = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    cells.push_back(cur);
    return cells;
  };

  const std::vector<std::string> header = cells_of(line);
  int val_col = -1, test_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "val_err") val_col = static_cast<int>(i);
    if (header[i] == "test_err") test_col = static_cast<int>(i);
  }
  if (val_col < 0 || test_col < 0) {
    throw Error("csv " + path + ": missing val_err or test_err column");
  }

  std::vector<double> val, test;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = cells_of(line);
    if (cells.size() != header.size()) {
      throw Error("csv " + path + ":" + std::to_string(line_no) + ": ragged row");
    }
    try {
      val.push_back(std::stod(cells[val_col]));
      test.push_back(std::stod(cells[test_col]));
    } catch (const std::exception&) {
      throw Error("csv " + path + ":" + std::to_string(line_no) + ": non-numeric value");
    }
  }
  const std::vector<int> ra = rank_ascending(val);
  const std::vector<int> rb = rank_ascending(test);
  return kendall_tau(ra, rb);
}

JsonlWriter::JsonlWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw Error("cannot open " + path + " for writing");
}

void JsonlWriter::write(const json& j) {
  out_ << j.dump() << "\n";
  out_.flush();
}

}  // namespace sgas
