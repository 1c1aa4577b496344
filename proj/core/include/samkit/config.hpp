#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "samkit/optim.hpp"

namespace samkit {

enum class DatasetKind { Blobs, Spirals, Csv };

std::string_view dataset_kind_name(DatasetKind kind);

/// Everything a single run needs. Defaults are desk-scale; every field is
/// echoed into the run's manifest.
struct RunConfig {
  DatasetKind dataset = DatasetKind::Spirals;
  std::size_t n_per_class = 500;
  std::size_t classes = 3;
  std::size_t dim = 2;     // blobs
  double spread = 0.1;     // blobs
  double noise = 0.15;     // spirals
  std::string csv_path;    // csv
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  std::vector<std::size_t> hidden{32, 32};
  PerturbKind optimizer = PerturbKind::None;
  double rho = 0.0;  // resolved from the kind default when the file omits it
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  bool per_step = false;

  /// Every constraint violation in the config, empty when valid.
  std::vector<std::string> collect_issues() const;
  /// Reports every problem at once via ConfigError.
  void validate() const;

  static RunConfig from_file(const std::filesystem::path& path);
};

/// Flat `key = value` text: '#' starts a comment, strings are bare or quoted,
/// numbers use '.' decimals, lists sit in brackets `[a, b, c]`.
RunConfig parse_run_config(std::string_view text, const std::string& source_name);

}  // namespace samkit
