#pragma once

#include <optional>
#include <string>
#include <vector>

#include "samkit/config.hpp"
#include "samkit/data.hpp"
#include "samkit/telemetry.hpp"

namespace samkit {

/// Builds and splits the dataset a config trains on, standardized with train
/// statistics. Depends only on the seed and dataset fields, never on the
/// optimizer, so comparison runs see identical splits.
SplitResult prepare_splits(const RunConfig& config);

struct RunSummary {
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  double final_val_accuracy = 0.0;
  double best_val_accuracy = 0.0;
  std::size_t best_val_epoch = 0;
  double final_test_accuracy = 0.0;
  bool aborted = false;
  std::string abort_context;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<TelemetryRecord> telemetry;
  RunSummary summary;
};

/// Runs one configured experiment. Writes manifest.json (echoed config,
/// library version, wall time), telemetry.csv (one record per epoch, streamed
/// so an abort still leaves the rows so far) and summary.json under
/// config.out_dir. A non-finite loss mid-run flags the summary as aborted
/// instead of throwing.
RunResult run_experiment(const RunConfig& config);

struct GridCell {
  double rho = 0.0;
  PerturbKind kind = PerturbKind::AaceNorm;
  std::optional<double> final_val_accuracy;  // empty when the cell failed
};

/// One run per (rho, adversarial variant) cell; per-cell failures are
/// recorded and the remaining cells still run. Writes grid.csv (rows = rho,
/// columns = the two variants' final validation accuracy) under
/// base.out_dir; each cell runs in its own subdirectory.
std::vector<GridCell> run_grid(const RunConfig& base, const std::vector<double>& rhos);

struct CompareRow {
  PerturbKind kind = PerturbKind::None;
  std::optional<double> rho;  // empty for plain SGD
  std::size_t epochs = 0;
  std::optional<double> final_test_accuracy;
  std::optional<double> best_val_accuracy;
  bool aborted = false;
};

/// One run per optimizer kind at its default rho, identical dataset splits.
/// Plain SGD automatically receives twice the configured epochs so every row
/// spends the same backpropagation budget. Writes compare.csv under
/// base.out_dir.
std::vector<CompareRow> run_compare(const RunConfig& base,
                                    const std::vector<PerturbKind>& kinds);

}  // namespace samkit
