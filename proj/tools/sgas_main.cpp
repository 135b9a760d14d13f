#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "sgas/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

sgas::ToolConfig load_config(CommonOpts& opts) {
  sgas::ToolConfig cfg = sgas::load_tool_config(opts.config_path);
  if (opts.seed_set) {
    cfg.search.seed = opts.seed;
    cfg.canonical["seed"] = opts.seed;
    cfg.digest = sgas::config_digest(cfg.canonical);
  }
  return cfg;
}

void write_manifest(const fs::path& out_dir, const sgas::ToolConfig& cfg,
                    const std::string& started, double wall_seconds,
                    const std::vector<std::string>& outputs) {
  const json manifest = {{"config_digest", cfg.digest},
                         {"tool_version", sgas::kToolVersion},
                         {"seed", cfg.search.seed},
                         {"started_at", started},
                         {"finished_at", sgas::iso_utc_now()},
                         {"wall_seconds", wall_seconds},
                         {"outputs", outputs}};
  sgas::write_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

int cmd_search(CommonOpts& opts) {
  const sgas::ToolConfig cfg = load_config(opts);
  const sgas::Dataset ds = sgas::build_dataset(cfg.dataset);
  const fs::path out(opts.out_dir);
  fs::create_directories(out);

  const std::string started = sgas::iso_utc_now();
  sgas::JsonlWriter events((out / "events.jsonl").string());
  const sgas::SearchResult result = sgas::run_search(
      cfg.search, ds, [&events](const json& e) { events.write(e); });

  sgas::write_file((out / "genotype.json").string(), sgas::genotype_to_json(result.genotype));
  sgas::write_file((out / "result.json").string(),
                   sgas::result_to_json(result, cfg.digest).dump(2) + "\n");
  write_manifest(out, cfg, started, result.wall_seconds,
                 {"genotype.json", "result.json", "events.jsonl"});
  std::cout << "search done: method=" << result.method
            << " val_acc=" << result.final_val_acc << " out=" << out.string() << "\n";
  return kExitOk;
}

int cmd_experiment(CommonOpts& opts, int runs, const std::vector<std::string>& methods,
                   int jobs) {
  const sgas::ToolConfig cfg = load_config(opts);
  const sgas::Dataset ds = sgas::build_dataset(cfg.dataset);
  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  const std::string started = sgas::iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<sgas::ExperimentReport> reports;
  std::vector<std::string> outputs;
  for (const std::string& name : methods) {
    const sgas::Method method = sgas::method_from_string(name);
    try {
      sgas::ExperimentReport report =
          sgas::run_experiment(method, runs, cfg.search, cfg.eval, ds, jobs);
      const std::string file = "report_" + name + ".json";
      sgas::write_file((out / file).string(),
                       sgas::report_to_json(report).dump(2) + "\n");
      outputs.push_back(file);
      std::printf("%-7s tau=%.4f test_err=%.4f±%.4f\n", name.c_str(), report.tau,
                  report.test_err_mean, report.test_err_std);
      reports.push_back(std::move(report));
    } catch (const sgas::ExperimentFailure& e) {
      const std::string file = "report_" + name + ".partial.json";
      sgas::write_file((out / file).string(),
                       sgas::report_to_json(e.partial).dump(2) + "\n");
      std::cerr << "error: " << e.what() << " (partial results in " << file << ")\n";
      return kExitRuntime;
    }
  }
  sgas::write_file((out / "experiment.csv").string(), sgas::experiment_csv(reports));
  outputs.push_back("experiment.csv");
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out, cfg, started, wall, outputs);
  return kExitOk;
}

int cmd_kendall(const std::string& csv_path) {
  std::printf("%.4f\n", sgas::kendall_tau_from_csv(csv_path));
  return kExitOk;
}

int cmd_export_dot(const std::string& genotype_path) {
  const sgas::Genotype g = sgas::genotype_from_json(sgas::read_file(genotype_path));
  std::cout << sgas::genotype_to_dot(g);
  return kExitOk;
}

int cmd_gen_data(const std::string& kind, int n, int classes, double noise, double spread,
                 std::uint64_t seed, int width, const std::string& out_path) {
  sgas::Dataset ds;
  if (kind == "spirals") {
    ds = sgas::make_spirals(n, classes, noise, seed, width);
  } else if (kind == "blobs") {
    ds = sgas::make_blobs(n, classes, spread, seed, width);
  } else {
    throw sgas::ConfigError("gen-data: kind must be spirals or blobs, got '" + kind + "'");
  }
  sgas::save_csv(ds, out_path);
  std::cout << "wrote " << ds.size() << " rows to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale sequential greedy architecture search"};
  app.require_subcommand(1);

  CommonOpts opts;
  const char* env_out = std::getenv("SGAS_OUT_DIR");
  if (env_out != nullptr && *env_out != '\0') opts.out_dir = env_out;

  int runs = 10;
  int jobs = 1;
  std::vector<std::string> methods = {"cri1", "cri2", "darts1", "random"};
  std::string csv_path, genotype_path;
  std::string kind = "spirals", data_out = "data.csv";
  int n_per_class = 100, classes = 3, width = 32;
  double noise = 0.15, spread = 0.5;
  std::uint64_t gen_seed = 7;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "JSON config file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
  };

  CLI::App* search = app.add_subcommand("search", "run one architecture search");
  add_common(search);

  CLI::App* experiment =
      app.add_subcommand("experiment", "multi-run search/retrain correlation experiment");
  add_common(experiment);
  experiment->add_option("--runs", runs, "independent runs per method")
      ->check(CLI::Range(2, 1000));
  experiment->add_option("--methods", methods, "methods: cri1 cri2 darts1 random")
      ->delimiter(',');
  experiment->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 256));

  CLI::App* kendall = app.add_subcommand("kendall", "Kendall tau of val_err vs test_err");
  kendall->add_option("--csv", csv_path, "CSV with val_err and test_err columns")
      ->required();

  CLI::App* export_dot = app.add_subcommand("export-dot", "genotype to DOT on stdout");
  export_dot->add_option("--genotype", genotype_path, "genotype JSON file")->required();

  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset CSV");
  gen->add_option("--kind", kind, "spirals|blobs");
  gen->add_option("--n", n_per_class, "samples per class");
  gen->add_option("--classes", classes, "number of classes");
  gen->add_option("--noise", noise, "spiral noise sigma");
  gen->add_option("--spread", spread, "blob spread sigma");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--width", width, "embedded feature width");
  gen->add_option("--out", data_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (search->parsed()) return cmd_search(opts);
    if (experiment->parsed()) return cmd_experiment(opts, runs, methods, jobs);
    if (kendall->parsed()) return cmd_kendall(csv_path);
    if (export_dot->parsed()) return cmd_export_dot(genotype_path);
    if (gen->parsed()) {
      return cmd_gen_data(kind, n_per_class, classes, noise, spread, gen_seed, width,
                          data_out);
    }
  } catch (const sgas::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
