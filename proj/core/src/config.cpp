#include "samkit/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "samkit/errors.hpp"

namespace samkit {

std::string_view dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Blobs: return "blobs";
    case DatasetKind::Spirals: return "spirals";
    case DatasetKind::Csv: return "csv";
  }
  return "unknown";
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct RawValue {
  bool is_list = false;
  std::string scalar;
  std::vector<std::string> items;
  std::size_t line = 0;
};

/// Flat key = value grammar; returns parse-level issues in `issues`.
std::map<std::string, RawValue> tokenize(std::string_view text,
                                         std::vector<std::string>& issues) {
  std::map<std::string, RawValue> entries;
  std::istringstream stream{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;

    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      issues.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      issues.push_back("line " + std::to_string(line_no) + ": empty key");
      continue;
    }
    if (entries.contains(key)) {
      issues.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      continue;
    }

    RawValue raw;
    raw.line = line_no;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') {
        issues.push_back("line " + std::to_string(line_no) + ": unterminated list for '" +
                         key + "'");
        continue;
      }
      raw.is_list = true;
      const std::string body = trim(std::string_view(value).substr(1, value.size() - 2));
      if (!body.empty()) {
        std::size_t start = 0;
        for (;;) {
          const std::size_t comma = body.find(',', start);
          raw.items.push_back(
              trim(std::string_view(body).substr(start, comma == std::string::npos
                                                            ? comma
                                                            : comma - start)));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
    } else {
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      raw.scalar = value;
    }
    entries.emplace(key, std::move(raw));
  }
  return entries;
}

class Extractor {
 public:
  Extractor(std::map<std::string, RawValue> entries, std::vector<std::string>& issues)
      : entries_(std::move(entries)), issues_(issues) {}

  bool has(const std::string& key) const { return entries_.contains(key); }

  template <typename T>
  void integer(const std::string& key, T& out) {
    const RawValue* raw = scalar_entry(key);
    if (raw == nullptr) return;
    long long v = 0;
    if (!parse_number(raw->scalar, v)) {
      issues_.push_back("key '" + key + "': expected an integer, got '" + raw->scalar + "'");
      return;
    }
    if (v < 0) {
      issues_.push_back("key '" + key + "': must be non-negative");
      return;
    }
    out = static_cast<T>(v);
  }

  void real(const std::string& key, double& out) {
    const RawValue* raw = scalar_entry(key);
    if (raw == nullptr) return;
    double v = 0.0;
    if (!parse_number(raw->scalar, v) || !std::isfinite(v)) {
      issues_.push_back("key '" + key + "': expected a number, got '" + raw->scalar + "'");
      return;
    }
    out = v;
  }

  void string(const std::string& key, std::string& out) {
    const RawValue* raw = scalar_entry(key);
    if (raw == nullptr) return;
    out = raw->scalar;
  }

  void boolean(const std::string& key, bool& out) {
    const RawValue* raw = scalar_entry(key);
    if (raw == nullptr) return;
    if (raw->scalar == "true") {
      out = true;
    } else if (raw->scalar == "false") {
      out = false;
    } else {
      issues_.push_back("key '" + key + "': expected true or false, got '" + raw->scalar + "'");
    }
  }

  void real_list(const std::string& key, std::vector<double>& out) {
    const RawValue* raw = list_entry(key);
    if (raw == nullptr) return;
    std::vector<double> values;
    for (const std::string& item : raw->items) {
      double v = 0.0;
      if (!parse_number(item, v) || !std::isfinite(v)) {
        issues_.push_back("key '" + key + "': expected a number, got '" + item + "'");
        return;
      }
      values.push_back(v);
    }
    out = std::move(values);
  }

  void size_list(const std::string& key, std::vector<std::size_t>& out) {
    const RawValue* raw = list_entry(key);
    if (raw == nullptr) return;
    std::vector<std::size_t> values;
    for (const std::string& item : raw->items) {
      long long v = 0;
      if (!parse_number(item, v) || v < 0) {
        issues_.push_back("key '" + key + "': expected a non-negative integer, got '" + item +
                          "'");
        return;
      }
      values.push_back(static_cast<std::size_t>(v));
    }
    out = std::move(values);
  }

  void finish(std::initializer_list<const char*> known) {
    for (const auto& [key, raw] : entries_) {
      bool ok = false;
      for (const char* k : known) {
        if (key == k) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        issues_.push_back("line " + std::to_string(raw.line) + ": unknown key '" + key + "'");
      }
    }
  }

 private:
  const RawValue* scalar_entry(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    if (it->second.is_list) {
      issues_.push_back("key '" + key + "': expected a single value, got a list");
      return nullptr;
    }
    return &it->second;
  }

  const RawValue* list_entry(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    if (!it->second.is_list) {
      issues_.push_back("key '" + key + "': expected a bracketed list");
      return nullptr;
    }
    return &it->second;
  }

  template <typename T>
  static bool parse_number(const std::string& s, T& out) {
    const auto* first = s.data();
    const auto* last = first + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
  }

  std::map<std::string, RawValue> entries_;
  std::vector<std::string>& issues_;
};

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& source_name) {
  std::vector<std::string> issues;
  Extractor ex(tokenize(text, issues), issues);
  RunConfig cfg;

  std::string dataset_name = "spirals";
  ex.string("dataset", dataset_name);
  if (dataset_name == "blobs") {
    cfg.dataset = DatasetKind::Blobs;
  } else if (dataset_name == "spirals") {
    cfg.dataset = DatasetKind::Spirals;
  } else if (dataset_name == "csv") {
    cfg.dataset = DatasetKind::Csv;
  } else {
    issues.push_back("key 'dataset': expected blobs, spirals or csv, got '" + dataset_name +
                     "'");
  }

  ex.integer("n_per_class", cfg.n_per_class);
  ex.integer("classes", cfg.classes);
  ex.integer("dim", cfg.dim);
  ex.real("spread", cfg.spread);
  ex.real("noise", cfg.noise);
  ex.string("csv_path", cfg.csv_path);

  std::vector<double> fractions;
  ex.real_list("split", fractions);
  if (!fractions.empty()) {
    if (fractions.size() != 3) {
      issues.push_back("key 'split': expected exactly 3 fractions");
    } else {
      cfg.split_fractions = {fractions[0], fractions[1], fractions[2]};
    }
  }

  ex.size_list("hidden", cfg.hidden);

  std::string optimizer_name;
  if (ex.has("optimizer")) {
    ex.string("optimizer", optimizer_name);
    const auto kind = parse_kind(optimizer_name);
    if (kind.has_value()) {
      cfg.optimizer = *kind;
    } else {
      issues.push_back("key 'optimizer': expected sgd, sam, aace_norm or aace_raw, got '" +
                       optimizer_name + "'");
    }
  } else {
    issues.push_back("missing required key 'optimizer'");
  }

  ex.real("rho", cfg.rho);
  if (!ex.has("rho")) cfg.rho = default_rho(cfg.optimizer);

  if (ex.has("epochs")) {
    ex.integer("epochs", cfg.epochs);
  } else {
    issues.push_back("missing required key 'epochs'");
  }
  ex.integer("batch", cfg.batch_size);
  ex.real("lr", cfg.base_lr);
  ex.real("momentum", cfg.momentum);
  ex.real("weight_decay", cfg.weight_decay);
  ex.integer("seed", cfg.seed);

  std::string out;
  if (ex.has("out")) {
    ex.string("out", out);
    cfg.out_dir = out;
  } else {
    issues.push_back("missing required key 'out'");
  }
  ex.boolean("per_step", cfg.per_step);

  ex.finish({"dataset", "n_per_class", "classes", "dim", "spread", "noise", "csv_path",
             "split", "hidden", "optimizer", "rho", "epochs", "batch", "lr", "momentum",
             "weight_decay", "seed", "out", "per_step"});

  // semantic violations join the parse-level ones so everything surfaces in
  // one report
  for (const std::string& issue : cfg.collect_issues()) issues.push_back(issue);
  if (!issues.empty()) {
    for (std::string& issue : issues) issue = source_name + ": " + issue;
    throw ConfigError(std::move(issues));
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

void RunConfig::validate() const {
  std::vector<std::string> issues = collect_issues();
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

std::vector<std::string> RunConfig::collect_issues() const {
  std::vector<std::string> issues;

  if (epochs < 1) issues.push_back("epochs must be >= 1");
  if (batch_size < 1) issues.push_back("batch must be >= 1");
  if (optimizer != PerturbKind::None && !(rho > 0.0)) {
    issues.push_back("rho must be positive for optimizer " + std::string(kind_name(optimizer)));
  }
  if (!(base_lr > 0.0)) issues.push_back("lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) issues.push_back("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) issues.push_back("weight_decay must be non-negative");
  if (classes < 2) issues.push_back("classes must be >= 2");
  if (n_per_class < 1) issues.push_back("n_per_class must be >= 1");
  for (std::size_t h : hidden) {
    if (h < 1) {
      issues.push_back("hidden layer widths must be >= 1");
      break;
    }
  }

  switch (dataset) {
    case DatasetKind::Blobs:
      if (dim < 2) issues.push_back("dim must be >= 2 for blobs");
      if (dim + 1 < classes) {
        issues.push_back("blobs needs dim >= classes - 1 for unit-separated means");
      }
      if (spread < 0.0) issues.push_back("spread must be non-negative");
      break;
    case DatasetKind::Spirals:
      if (noise < 0.0) issues.push_back("noise must be non-negative");
      break;
    case DatasetKind::Csv:
      if (csv_path.empty()) issues.push_back("csv dataset needs csv_path");
      break;
  }

  double fraction_sum = 0.0;
  bool fractions_positive = true;
  for (double f : split_fractions) {
    fraction_sum += f;
    if (!(f > 0.0)) fractions_positive = false;
  }
  if (!fractions_positive) {
    issues.push_back("split fractions must be positive");
  } else if (std::abs(fraction_sum - 1.0) > 1e-9) {
    issues.push_back("split fractions must sum to 1");
  }

  if (out_dir.empty()) issues.push_back("out directory must be set");

  return issues;
}

}  // namespace samkit
