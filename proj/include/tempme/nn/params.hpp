#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempme/nn/matrix.hpp"
#include "tempme/random.hpp"

namespace tempme::nn {

struct Parameter {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
};

enum class Init { Zeros, Xavier };

// Named flat parameter arrays. Shapes are fixed at creation; checkpoints are
// JSON objects `name -> {shape, values}` tagged with a format version.
class ParameterStore {
 public:
  using Handle = std::size_t;

  Handle add(const std::string& name, std::size_t rows, std::size_t cols, Init init,
             SplitMix64& rng);
  Handle add(const std::string& name, std::size_t rows, std::size_t cols,
             std::vector<double> values);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](Handle h) { return params_.at(h); }
  const Parameter& operator[](Handle h) const { return params_.at(h); }
  Handle find(const std::string& name) const;
  bool contains(const std::string& name) const;

  Matrix value(Handle h) const;
  void zero_grad();
  std::size_t total_values() const;

  nlohmann::ordered_json to_json() const;
  // Replaces values of existing parameters; names and shapes must match.
  void load_values(const nlohmann::json& j);
  static ParameterStore from_json(const nlohmann::json& j);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::vector<Parameter> params_;
};

inline constexpr int kCheckpointVersion = 1;

}  // namespace tempme::nn
