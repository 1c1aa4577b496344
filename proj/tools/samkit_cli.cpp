// Experiment driver: single runs, rho grid searches, optimizer comparisons
// and chart rendering over the samkit training library.
//
// Exit codes: 0 success, 1 config error, 2 numerical abort, 3 I/O error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "samkit/errors.hpp"
#include "samkit/experiment.hpp"
#include "samkit/render.hpp"
#include "samkit/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string item =
        csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!item.empty()) items.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

samkit::RunConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed,
                              const std::optional<std::string>& out_override) {
  samkit::RunConfig cfg = samkit::RunConfig::from_file(path);
  if (seed.has_value()) cfg.seed = *seed;
  if (out_override.has_value()) cfg.out_dir = *out_override;
  cfg.validate();
  return cfg;
}

void print_summary(const samkit::RunResult& result) {
  const samkit::RunSummary& s = result.summary;
  if (s.aborted) {
    std::cerr << "run aborted: " << s.abort_context << "\n";
    std::cerr << "partial telemetry in " << result.dir.string() << "\n";
    return;
  }
  std::cout << "run complete: " << result.dir.string() << "\n";
  std::cout << "  final val accuracy  " << s.final_val_accuracy << "\n";
  std::cout << "  best val accuracy   " << s.best_val_accuracy << " (epoch " << s.best_val_epoch
            << ")\n";
  std::cout << "  final test accuracy " << s.final_test_accuracy << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sharpness-aware training experiments (SAM and adversarial perturbations)"};
  app.set_version_flag("--version", std::string(samkit::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;

  auto* run_cmd = app.add_subcommand("run", "run one configured experiment");
  run_cmd->add_option("--config", config_path, "config file")->required();
  run_cmd->add_option("--seed", seed_override, "override the config seed");
  run_cmd->add_option("--out", out_override, "override the output directory");
  bool per_step = false;
  run_cmd->add_flag("--per-step", per_step, "also dump per-step telemetry (steps.csv)");

  auto* grid_cmd = app.add_subcommand("grid", "rho grid search over both adversarial variants");
  grid_cmd->add_option("--config", config_path, "config file")->required();
  std::string rho_csv;
  grid_cmd->add_option("--rho", rho_csv, "comma-separated rho values")->required();
  grid_cmd->add_option("--seed", seed_override, "override the config seed");
  grid_cmd->add_option("--out", out_override, "override the output directory");

  auto* compare_cmd = app.add_subcommand("compare", "compare optimizer kinds, equal budget");
  compare_cmd->add_option("--config", config_path, "config file")->required();
  std::string kinds_csv;
  compare_cmd->add_option("--kinds", kinds_csv, "comma-separated kinds (sgd,sam,aace,...)")
      ->required();
  compare_cmd->add_option("--seed", seed_override, "override the config seed");
  compare_cmd->add_option("--out", out_override, "override the output directory");

  auto* render_cmd = app.add_subcommand("render", "render charts from a run directory");
  std::string run_dir;
  render_cmd->add_option("run_dir", run_dir, "directory holding telemetry.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      samkit::RunConfig cfg = load_config(config_path, seed_override, out_override);
      if (per_step) cfg.per_step = true;
      const samkit::RunResult result = samkit::run_experiment(cfg);
      print_summary(result);
      return result.summary.aborted ? kExitNumerical : kExitOk;
    }

    if (grid_cmd->parsed()) {
      samkit::RunConfig cfg = load_config(config_path, seed_override, out_override);
      std::vector<double> rhos;
      for (const std::string& item : split_list(rho_csv)) {
        try {
          rhos.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw samkit::ConfigError({"--rho: bad value '" + item + "'"});
        }
      }
      const auto cells = samkit::run_grid(cfg, rhos);
      std::size_t failed = 0;
      for (const auto& cell : cells) {
        if (!cell.final_val_accuracy.has_value()) ++failed;
      }
      std::cout << "grid complete: " << (cfg.out_dir / "grid.csv").string();
      if (failed > 0) std::cout << " (" << failed << " cells failed)";
      std::cout << "\n";
      return kExitOk;
    }

    if (compare_cmd->parsed()) {
      samkit::RunConfig cfg = load_config(config_path, seed_override, out_override);
      std::vector<samkit::PerturbKind> kinds;
      for (const std::string& item : split_list(kinds_csv)) {
        const auto kind = samkit::parse_kind(item);
        if (!kind.has_value()) {
          throw samkit::ConfigError({"--kinds: unknown kind '" + item + "'"});
        }
        kinds.push_back(*kind);
      }
      const auto rows = samkit::run_compare(cfg, kinds);
      std::cout << "comparison complete: " << (cfg.out_dir / "compare.csv").string() << "\n";
      for (const auto& row : rows) {
        if (row.aborted) return kExitNumerical;
      }
      return kExitOk;
    }

    if (render_cmd->parsed()) {
      samkit::render_run(run_dir);
      std::cout << "charts written to " << run_dir << "\n";
      return kExitOk;
    }
  } catch (const samkit::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const samkit::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const samkit::IoError& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  return kExitOk;
}
