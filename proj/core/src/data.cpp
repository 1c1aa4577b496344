#include "samkit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "samkit/errors.hpp"
#include "samkit/rng.hpp"

namespace samkit {

namespace {

/// K points in R^dim on a regular simplex with unit pairwise separation,
/// centered at the origin. Needs dim >= K - 1.
std::vector<std::vector<double>> simplex_means(std::size_t k, std::size_t dim) {
  if (dim + 1 < k) {
    throw std::invalid_argument("gen_blobs: " + std::to_string(k) +
                                " unit-separated means need dimension >= " +
                                std::to_string(k - 1) + ", got " + std::to_string(dim));
  }
  // Vertices e_i / sqrt(2) in R^k have unit pairwise distance; project their
  // centered copies onto an orthonormal basis of the sum-zero subspace.
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  std::vector<std::vector<double>> basis;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    std::vector<double> v(k, 0.0);
    v[j] = 1.0;
    v[k - 1] = -1.0;
    for (const auto& q : basis) {
      const double proj = dot(v, q);
      for (std::size_t i = 0; i < k; ++i) v[i] -= proj * q[i];
    }
    const double norm = l2_norm(v);
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }

  std::vector<std::vector<double>> means(k, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> centered(k, -inv_sqrt2 / static_cast<double>(k));
    centered[i] += inv_sqrt2;
    for (std::size_t j = 0; j < basis.size(); ++j) {
      means[i][j] = dot(centered, basis[j]);
    }
  }
  return means;
}

}  // namespace

Dataset gen_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t classes,
                  std::size_t dim, double spread) {
  if (classes < 2) throw std::invalid_argument("gen_blobs: need at least 2 classes");
  if (dim < 2) throw std::invalid_argument("gen_blobs: need dimension >= 2");
  if (n_per_class < 1) throw std::invalid_argument("gen_blobs: need n_per_class >= 1");
  const auto means = simplex_means(classes, dim);

  Rng rng(seed);
  Dataset ds;
  const std::size_t n = n_per_class * classes;
  ds.features = Array({n, dim});
  ds.labels.reserve(n);
  ds.classes = classes;
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < n_per_class; ++s, ++row) {
      for (std::size_t a = 0; a < dim; ++a) {
        ds.features.at(row, a) = means[c][a] + spread * rng.normal();
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

Dataset gen_spirals(std::uint64_t seed, std::size_t n_per_class, std::size_t classes,
                    double noise) {
  if (classes < 2) throw std::invalid_argument("gen_spirals: need at least 2 classes");
  if (n_per_class < 1) throw std::invalid_argument("gen_spirals: need n_per_class >= 1");

  Rng rng(seed);
  Dataset ds;
  const std::size_t n = n_per_class * classes;
  ds.features = Array({n, 2});
  ds.labels.reserve(n);
  ds.classes = classes;
  const double two_pi = 2.0 * std::numbers::pi;
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double arm_offset = two_pi * static_cast<double>(c) / static_cast<double>(classes);
    for (std::size_t s = 0; s < n_per_class; ++s, ++row) {
      const double t = n_per_class > 1
                           ? static_cast<double>(s) / static_cast<double>(n_per_class - 1)
                           : 0.0;
      const double r = kSpiralInnerRadius + (kSpiralOuterRadius - kSpiralInnerRadius) * t;
      const double angle = arm_offset + two_pi * kSpiralTurns * t + noise * rng.normal();
      ds.features.at(row, 0) = r * std::cos(angle);
      ds.features.at(row, 1) = r * std::sin(angle);
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

SplitResult split(const Dataset& ds, const std::array<double, 3>& fractions,
                  std::uint64_t seed) {
  static const char* kNames[3] = {"train", "val", "test"};
  if (ds.size() == 0) throw std::invalid_argument("split: empty dataset");
  double total = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    if (!(fractions[s] > 0.0)) {
      throw std::invalid_argument(std::string("split: fraction for ") + kNames[s] +
                                  " must be positive (would receive zero samples)");
    }
    total += fractions[s];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }

  // Per-class largest-remainder allocation, then a seeded shuffle per class.
  std::vector<std::vector<std::size_t>> by_class(ds.classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }

  Rng rng(seed);
  std::array<std::vector<std::size_t>, 3> picks;
  for (auto& cls : by_class) {
    if (cls.empty()) continue;
    rng.shuffle(cls);
    const std::size_t n_c = cls.size();
    std::array<std::size_t, 3> want{};
    std::array<double, 3> frac_part{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double exact = fractions[s] * static_cast<double>(n_c);
      want[s] = static_cast<std::size_t>(std::floor(exact));
      frac_part[s] = exact - std::floor(exact);
      assigned += want[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac_part[a] > frac_part[b]; });
    for (std::size_t r = 0; assigned < n_c; ++r, ++assigned) want[order[r % 3]] += 1;

    std::size_t off = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < want[s]; ++i) picks[s].push_back(cls[off + i]);
      off += want[s];
    }
  }

  for (std::size_t s = 0; s < 3; ++s) {
    if (picks[s].empty()) {
      throw std::invalid_argument(std::string("split: ") + kNames[s] +
                                  " split receives zero samples");
    }
  }

  SplitResult result;
  Dataset* outs[3] = {&result.train, &result.val, &result.test};
  const SplitTag tags[3] = {SplitTag::Train, SplitTag::Val, SplitTag::Test};
  for (std::size_t s = 0; s < 3; ++s) {
    Dataset& out = *outs[s];
    out.classes = ds.classes;
    out.tag = tags[s];
    out.features = Array({picks[s].size(), ds.dim()});
    out.labels.reserve(picks[s].size());
    for (std::size_t r = 0; r < picks[s].size(); ++r) {
      const std::size_t src = picks[s][r];
      for (std::size_t a = 0; a < ds.dim(); ++a) out.features.at(r, a) = ds.features.at(src, a);
      out.labels.push_back(ds.labels[src]);
    }
  }
  return result;
}

std::vector<std::vector<std::size_t>> batches(const Dataset& ds, std::size_t batch_size,
                                              std::uint64_t epoch_seed) {
  if (batch_size < 1) throw std::invalid_argument("batches: batch size must be >= 1");
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(epoch_seed);
  rng.shuffle(perm);

  std::vector<std::vector<std::size_t>> chunks;
  for (std::size_t off = 0; off < perm.size(); off += batch_size) {
    const std::size_t end = std::min(off + batch_size, perm.size());
    chunks.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(off),
                        perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return chunks;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? comma : comma - start);
    // tolerate surrounding blanks and a trailing CR
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.pop_back();
    std::size_t lead = 0;
    while (lead < field.size() && (field[lead] == ' ' || field[lead] == '\t')) ++lead;
    fields.push_back(field.substr(lead));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("load_csv: no data rows in " + path.string());
  }
  ++line_no;
  const auto header = split_fields(line);
  if (header.size() < 2 || header.back() != "label") {
    throw std::invalid_argument("load_csv: line 1: expected header f0,...,label");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[i] != "f" + std::to_string(i)) {
      throw std::invalid_argument("load_csv: line 1: expected column f" + std::to_string(i) +
                                  ", got '" + header[i] + "'");
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1) {
      throw std::invalid_argument("load_csv: line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(dim + 1) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < dim; ++i) {
      double v = 0.0;
      const auto* first = fields[i].data();
      const auto* last = first + fields[i].size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw std::invalid_argument("load_csv: line " + std::to_string(line_no) +
                                    ": non-numeric value '" + fields[i] + "' in column f" +
                                    std::to_string(i));
      }
      values.push_back(v);
    }
    long label = 0;
    const auto* first = fields[dim].data();
    const auto* last = first + fields[dim].size();
    const auto [ptr, ec] = std::from_chars(first, last, label);
    if (ec != std::errc() || ptr != last) {
      throw std::invalid_argument("load_csv: line " + std::to_string(line_no) +
                                  ": non-integer label '" + fields[dim] + "'");
    }
    if (label < 0) {
      throw std::invalid_argument("load_csv: line " + std::to_string(line_no) +
                                  ": negative label " + std::to_string(label));
    }
    labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }

  if (labels.empty()) {
    throw std::invalid_argument("load_csv: no data rows in " + path.string());
  }

  Dataset ds;
  ds.features = Array({labels.size(), dim}, std::move(values));
  ds.labels = std::move(labels);
  ds.classes = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

void standardize(Dataset& train, Dataset& val, Dataset& test) {
  const std::size_t dim = train.dim();
  const std::size_t n = train.size();
  if (n == 0) throw std::invalid_argument("standardize: empty train split");

  std::vector<double> mean(dim, 0.0), sdev(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a) mean[a] += train.features.at(i, a);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a) {
      const double d = train.features.at(i, a) - mean[a];
      sdev[a] += d * d;
    }
  for (double& s : sdev) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;  // constant feature
  }

  for (Dataset* ds : {&train, &val, &test}) {
    if (ds->size() == 0) continue;
    if (ds->dim() != dim) throw std::invalid_argument("standardize: dimension mismatch");
    for (std::size_t i = 0; i < ds->size(); ++i)
      for (std::size_t a = 0; a < dim; ++a)
        ds->features.at(i, a) = (ds->features.at(i, a) - mean[a]) / sdev[a];
  }
}

Batch gather_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  Batch batch;
  batch.x = Array({indices.size(), ds.dim()});
  batch.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    for (std::size_t a = 0; a < ds.dim(); ++a) batch.x.at(r, a) = ds.features.at(indices[r], a);
    batch.labels.push_back(ds.labels[indices[r]]);
  }
  return batch;
}

}  // namespace samkit
