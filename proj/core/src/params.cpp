#include "samkit/params.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "samkit/errors.hpp"

namespace samkit {

void ParamVector::add(std::string name, Array value) {
  for (const Param& p : items_) {
    if (p.name == name) {
      throw std::invalid_argument("ParamVector::add: duplicate name '" + name + "'");
    }
  }
  Param p;
  p.name = std::move(name);
  p.grad = Array(value.shape);
  p.value = std::move(value);
  total_ += p.value.size();
  items_.push_back(std::move(p));
}

std::vector<double> ParamVector::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_);
  for (const Param& p : items_) {
    flat.insert(flat.end(), p.value.data.begin(), p.value.data.end());
  }
  return flat;
}

void ParamVector::unflatten(std::span<const double> flat) {
  if (flat.size() != total_) {
    throw std::invalid_argument("ParamVector::unflatten: got " + std::to_string(flat.size()) +
                                " values, registry holds " + std::to_string(total_));
  }
  std::size_t off = 0;
  for (Param& p : items_) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value.data[i] = flat[off + i];
    off += p.value.size();
  }
}

std::vector<double> ParamVector::grad_flat() const {
  std::vector<double> flat;
  flat.reserve(total_);
  for (const Param& p : items_) {
    if (!p.has_grad) {
      throw std::logic_error("ParamVector::grad_flat: parameter '" + p.name +
                             "' has no gradient");
    }
    flat.insert(flat.end(), p.grad.data.begin(), p.grad.data.end());
  }
  return flat;
}

void ParamVector::reset_grads() {
  for (Param& p : items_) {
    p.grad.fill(0.0);
    p.has_grad = false;
  }
}

ParamSnapshot ParamVector::snapshot() const {
  ParamSnapshot snap;
  snap.values.reserve(items_.size());
  for (const Param& p : items_) snap.values.push_back(p.value);
  return snap;
}

void ParamVector::restore(const ParamSnapshot& snap) {
  if (snap.values.size() != items_.size()) {
    throw std::invalid_argument("ParamVector::restore: snapshot holds " +
                                std::to_string(snap.values.size()) + " arrays, registry " +
                                std::to_string(items_.size()));
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!snap.values[i].same_shape(items_[i].value)) {
      throw std::invalid_argument("ParamVector::restore: shape mismatch at '" +
                                  items_[i].name + "'");
    }
    items_[i].value = snap.values[i];
  }
}

void ParamVector::apply_offset(std::span<const double> offset) {
  if (offset.size() != total_) {
    throw std::invalid_argument("ParamVector::apply_offset: offset length " +
                                std::to_string(offset.size()) + " does not match P = " +
                                std::to_string(total_));
  }
  std::size_t off = 0;
  for (Param& p : items_) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value.data[i] += offset[off + i];
    off += p.value.size();
  }
}

namespace {

void write_f64_le(std::ofstream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

double read_f64_le(std::ifstream& in) {
  char bytes[8];
  in.read(bytes, 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

std::filesystem::path sidecar_path(const std::filesystem::path& blob) {
  return std::filesystem::path(blob.string() + ".json");
}

}  // namespace

void save_params(const ParamVector& params, const std::filesystem::path& blob_path) {
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("save_params: cannot open " + blob_path.string());
  nlohmann::json sidecar = nlohmann::json::array();
  for (const Param& p : params) {
    for (double v : p.value.data) write_f64_le(blob, v);
    nlohmann::json entry;
    entry["name"] = p.name;
    entry["shape"] = p.value.shape;
    sidecar.push_back(entry);
  }
  blob.close();
  if (!blob) throw IoError("save_params: write failed for " + blob_path.string());

  std::ofstream side(sidecar_path(blob_path));
  if (!side) throw IoError("save_params: cannot open " + sidecar_path(blob_path).string());
  side << sidecar.dump(2) << "\n";
  side.close();
  if (!side) throw IoError("save_params: write failed for " + sidecar_path(blob_path).string());
}

ParamVector load_params(const std::filesystem::path& blob_path) {
  std::ifstream side(sidecar_path(blob_path));
  if (!side) throw IoError("load_params: cannot open " + sidecar_path(blob_path).string());
  nlohmann::json sidecar;
  try {
    side >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_params: bad sidecar " + sidecar_path(blob_path).string() + ": " +
                  e.what());
  }

  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("load_params: cannot open " + blob_path.string());

  ParamVector params;
  for (const auto& entry : sidecar) {
    const std::string name = entry.at("name").get<std::string>();
    const Shape shape = entry.at("shape").get<Shape>();
    Array value(shape);
    for (std::size_t i = 0; i < value.size(); ++i) {
      value.data[i] = read_f64_le(blob);
      if (!blob) {
        throw IoError("load_params: blob " + blob_path.string() + " truncated at '" + name +
                      "'");
      }
    }
    params.add(name, std::move(value));
  }
  blob.peek();
  if (!blob.eof()) {
    throw IoError("load_params: blob " + blob_path.string() + " longer than sidecar describes");
  }
  return params;
}

}  // namespace samkit
