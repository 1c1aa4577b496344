#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "samkit/array.hpp"

namespace samkit {

enum class SplitTag { Train, Val, Test };

struct Dataset {
  Array features;  // (n, d)
  std::vector<int> labels;
  std::size_t classes = 0;
  SplitTag tag = SplitTag::Train;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.rank() == 2 ? features.cols() : 0; }
};

struct Batch {
  Array x;
  std::vector<int> labels;
};

/// K isotropic Gaussian clusters. Class means sit on a regular simplex with
/// unit pairwise separation, which requires dim >= classes - 1. spread is the
/// per-axis standard deviation; deterministic under seed.
Dataset gen_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t classes,
                  std::size_t dim, double spread);

/// Spirals geometry, exposed so tests can derive bounds: per arm the radius
/// grows linearly from inner to outer while the angle sweeps kSpiralTurns
/// revolutions plus the arm offset.
inline constexpr double kSpiralInnerRadius = 0.25;
inline constexpr double kSpiralOuterRadius = 2.0;
inline constexpr double kSpiralTurns = 1.0;

/// K interleaved 2-D spiral arms with Gaussian angular noise (noise is the
/// standard deviation in radians); deterministic under seed.
Dataset gen_spirals(std::uint64_t seed, std::size_t n_per_class, std::size_t classes,
                    double noise);

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Stratified shuffled partition; per-class counts preserved within one
/// sample. Fractions must be positive, sum to 1, and leave no split empty.
SplitResult split(const Dataset& ds, const std::array<double, 3>& fractions,
                  std::uint64_t seed);

/// A fresh permutation of the indices per epoch seed, chunked; the last short
/// batch is kept.
std::vector<std::vector<std::size_t>> batches(const Dataset& ds, std::size_t batch_size,
                                              std::uint64_t epoch_seed);

/// Header row `f0,...,f{d-1},label`, UTF-8, comma-delimited, '.' decimal
/// point. K is inferred as max label + 1. Problems are reported with the
/// 1-based line number.
Dataset load_csv(const std::filesystem::path& path);

/// Zero mean / unit variance per feature, statistics taken from train only.
void standardize(Dataset& train, Dataset& val, Dataset& test);

Batch gather_batch(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace samkit
