#include "samkit/telemetry.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "samkit/errors.hpp"

namespace samkit {

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::logic_error("format_double: buffer too small");
  return std::string(buf, ptr);
}

namespace {

std::string opt_field(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : std::string();
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(std::move(field));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double_field(const std::string& field, std::size_t row, std::size_t col) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = first + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw std::invalid_argument("telemetry row " + std::to_string(row) + ": bad value '" +
                                field + "' in column " + std::to_string(col));
  }
  return v;
}

}  // namespace

std::string telemetry_csv_row(const TelemetryRecord& rec) {
  std::string row = std::to_string(rec.epoch);
  row += ',';
  row += format_double(rec.train_loss);
  row += ',';
  row += format_double(rec.val_loss);
  row += ',';
  row += opt_field(rec.perturb_loss);
  row += ',';
  row += opt_field(rec.perturb_grad_norm);
  row += ',';
  row += opt_field(rec.perturb_distance);
  row += ',';
  row += format_double(rec.train_acc);
  row += ',';
  row += format_double(rec.val_acc);
  row += ',';
  row += format_double(rec.lr);
  return row;
}

std::vector<TelemetryRecord> read_telemetry_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_telemetry_csv: cannot open " + path.string());

  std::string line;
  std::size_t row_no = 0;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("telemetry row 1: missing header");
  }
  ++row_no;
  {
    auto header = split_row(line);
    std::string joined;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i > 0) joined += ',';
      joined += header[i];
    }
    if (joined != kTelemetryHeader) {
      throw std::invalid_argument("telemetry row 1: unexpected header '" + joined + "'");
    }
  }

  std::vector<TelemetryRecord> records;
  while (std::getline(in, line)) {
    ++row_no;
    const auto fields = split_row(line);
    if (fields.size() != 9) {
      throw std::invalid_argument("telemetry row " + std::to_string(row_no) + ": expected 9 " +
                                  "fields, got " + std::to_string(fields.size()));
    }
    TelemetryRecord rec;
    rec.epoch = static_cast<std::size_t>(parse_double_field(fields[0], row_no, 0));
    rec.train_loss = parse_double_field(fields[1], row_no, 1);
    rec.val_loss = parse_double_field(fields[2], row_no, 2);
    for (std::size_t c = 3; c <= 5; ++c) {
      std::optional<double>& slot = c == 3   ? rec.perturb_loss
                                    : c == 4 ? rec.perturb_grad_norm
                                             : rec.perturb_distance;
      if (!fields[c].empty()) slot = parse_double_field(fields[c], row_no, c);
    }
    rec.train_acc = parse_double_field(fields[6], row_no, 6);
    rec.val_acc = parse_double_field(fields[7], row_no, 7);
    rec.lr = parse_double_field(fields[8], row_no, 8);
    records.push_back(rec);
  }
  return records;
}

}  // namespace samkit
