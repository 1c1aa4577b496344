#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace samkit {

/// One epoch of training telemetry. Per-step quantities (train loss and
/// accuracy, perturbation loss / gradient norm / distance) are arithmetic
/// means over all steps in the epoch; validation numbers come from a full
/// pass at the end of the epoch. Perturbation fields are absent for plain
/// SGD runs.
struct TelemetryRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> perturb_loss;
  std::optional<double> perturb_grad_norm;
  std::optional<double> perturb_distance;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

/// Fixed column set and order; render and the readers rely on it.
inline constexpr std::string_view kTelemetryHeader =
    "epoch,train_loss,val_loss,perturb_loss,perturb_grad_norm,perturb_distance,"
    "train_acc,val_acc,lr";

/// Shortest decimal that round-trips the double (std::to_chars).
std::string format_double(double v);

std::string telemetry_csv_row(const TelemetryRecord& rec);

/// Strict reader; malformed input is rejected with the 1-based row number.
std::vector<TelemetryRecord> read_telemetry_csv(const std::filesystem::path& path);

}  // namespace samkit
