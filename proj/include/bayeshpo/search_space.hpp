#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bayeshpo/rng.hpp"

namespace bayeshpo {

enum class Scale { kLinear, kLog10 };

struct IntegerRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 1.0;
  Scale scale = Scale::kLinear;
};

struct CategoricalSet {
  std::vector<std::string> labels;
};

struct ParamSpec {
  std::string name;
  std::variant<IntegerRange, RealRange, CategoricalSet> kind;

  static ParamSpec integer(std::string name, std::int64_t lo, std::int64_t hi);
  static ParamSpec real(std::string name, double lo, double hi, Scale scale = Scale::kLinear);
  static ParamSpec categorical(std::string name, std::vector<std::string> labels);

  bool is_categorical() const { return std::holds_alternative<CategoricalSet>(kind); }
  // Width of this parameter's block in the encoded vector.
  std::size_t encoded_width() const;
};

using ParamValue = std::variant<std::int64_t, double, std::string>;

/// One concrete point of a SearchSpace: a value per parameter, in declaration order.
struct Configuration {
  std::vector<ParamValue> values;

  bool operator==(const Configuration&) const = default;
};

/// Continuous representation the surrogate sees; every coordinate lies in [0,1].
using EncodedPoint = Eigen::VectorXd;

class SearchSpace {
 public:
  explicit SearchSpace(std::vector<ParamSpec> params);

  const std::vector<ParamSpec>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t encoded_dim() const { return encoded_dim_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws if absent
  // First encoded coordinate of parameter `index`.
  std::size_t encoded_offset(std::size_t index) const { return offsets_[index]; }

  /// Throws ValidationError naming the first offending parameter.
  void validate(const Configuration& cfg) const;

  EncodedPoint encode(const Configuration& cfg) const;
  Configuration decode(const EncodedPoint& point) const;

  Configuration sample_uniform(Rng& rng) const;
  Configuration sample_uniform(std::uint64_t seed) const;

  /// Maps a per-parameter unit coordinate u in [0,1) to a value; used by
  /// stratified initial designs. Integers and categoricals are binned evenly.
  ParamValue value_from_unit(std::size_t index, double u) const;

  nlohmann::json config_to_json(const Configuration& cfg) const;
  Configuration config_from_json(const nlohmann::json& j) const;

  nlohmann::json to_json() const;
  static SearchSpace from_json(const nlohmann::json& j);

  /// Six-parameter DNN space with activation labels {ReLU, sigmoid, TanH}.
  static SearchSpace default_dnn();
  /// Same space with only the two activation labels listed in the results table.
  static SearchSpace table2_dnn();
  /// "default" or "table2".
  static SearchSpace preset(std::string_view name);

 private:
  std::vector<ParamSpec> params_;
  std::vector<std::size_t> offsets_;
  std::size_t encoded_dim_ = 0;
};

std::string to_string(const ParamValue& v);

}  // namespace bayeshpo
