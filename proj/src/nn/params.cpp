#include "tempme/nn/params.hpp"

#include <cmath>
#include <fstream>

#include "tempme/error.hpp"

namespace tempme::nn {

ParameterStore::Handle ParameterStore::add(const std::string& name, std::size_t rows,
                                           std::size_t cols, Init init, SplitMix64& rng) {
  std::vector<double> values(rows * cols, 0.0);
  if (init == Init::Xavier) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (auto& x : values) x = (2.0 * uniform_open01(rng) - 1.0) * bound;
  }
  return add(name, rows, cols, std::move(values));
}

ParameterStore::Handle ParameterStore::add(const std::string& name, std::size_t rows,
                                           std::size_t cols, std::vector<double> values) {
  if (contains(name)) throw InvariantError("duplicate parameter name '" + name + "'");
  if (values.size() != rows * cols) {
    throw ShapeError("parameter '" + name + "' has " + std::to_string(values.size()) +
                     " values for shape " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("parameter '" + name + "' initialised non-finite");
  }
  Parameter p;
  p.name = name;
  p.rows = rows;
  p.cols = cols;
  p.grad.assign(values.size(), 0.0);
  p.value = std::move(values);
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

ParameterStore::Handle ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw InvariantError("no parameter named '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

Matrix ParameterStore::value(Handle h) const {
  const auto& p = params_.at(h);
  return Matrix(p.rows, p.cols, p.value);
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

nlohmann::ordered_json ParameterStore::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : params_) {
    nlohmann::ordered_json jp;
    jp["name"] = p.name;
    jp["shape"] = {p.rows, p.cols};
    jp["values"] = p.value;
    arr.push_back(std::move(jp));
  }
  j["parameters"] = std::move(arr);
  return j;
}

ParameterStore ParameterStore::from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw SchemaError("unsupported checkpoint version " + j.at("version").dump());
    }
    ParameterStore store;
    for (const auto& jp : j.at("parameters")) {
      const auto shape = jp.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw SchemaError("parameter shape must have two entries");
      store.add(jp.at("name").get<std::string>(), shape[0], shape[1],
                jp.at("values").get<std::vector<double>>());
    }
    return store;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed checkpoint: ") + ex.what());
  }
}

void ParameterStore::load_values(const nlohmann::json& j) {
  ParameterStore other = from_json(j);
  if (other.size() != size()) throw SchemaError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    auto& mine = params_[i];
    const auto& theirs = other.params_[i];
    if (mine.name != theirs.name || mine.rows != theirs.rows || mine.cols != theirs.cols) {
      throw SchemaError("checkpoint parameter '" + theirs.name + "' does not match '" + mine.name + "'");
    }
    mine.value = theirs.value;
  }
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.params_[i];
    const auto& y = b.params_[i];
    if (x.name != y.name || x.rows != y.rows || x.cols != y.cols || x.value != y.value) return false;
  }
  return true;
}

}  // namespace tempme::nn
