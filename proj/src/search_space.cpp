#include "bayeshpo/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "bayeshpo/errors.hpp"

namespace bayeshpo {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void fail(const std::string& name, const std::string& what) {
  throw ValidationError("parameter '" + name + "': " + what);
}

void check_spec(const ParamSpec& p) {
  if (p.name.empty()) throw ValidationError("parameter with empty name");
  std::visit(Overloaded{
                 [&](const IntegerRange& r) {
                   if (r.lo > r.hi) fail(p.name, "integer range has lo > hi");
                 },
                 [&](const RealRange& r) {
                   if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi))
                     fail(p.name, "real range needs finite lo < hi");
                   if (r.scale == Scale::kLog10 && r.lo <= 0.0)
                     fail(p.name, "log10 scale needs lo > 0");
                 },
                 [&](const CategoricalSet& c) {
                   std::set<std::string> distinct(c.labels.begin(), c.labels.end());
                   if (c.labels.size() < 2 || distinct.size() != c.labels.size())
                     fail(p.name, "categorical needs at least 2 distinct labels");
                 },
             },
             p.kind);
}

double to_unit(const RealRange& r, double v) {
  if (r.scale == Scale::kLog10)
    return (std::log10(v) - std::log10(r.lo)) / (std::log10(r.hi) - std::log10(r.lo));
  return (v - r.lo) / (r.hi - r.lo);
}

double from_unit(const RealRange& r, double c) {
  double v;
  if (r.scale == Scale::kLog10) {
    const double a = std::log10(r.lo);
    const double b = std::log10(r.hi);
    v = std::pow(10.0, a + c * (b - a));
  } else {
    v = r.lo + c * (r.hi - r.lo);
  }
  return std::clamp(v, r.lo, r.hi);
}

}  // namespace

ParamSpec ParamSpec::integer(std::string name, std::int64_t lo, std::int64_t hi) {
  return ParamSpec{std::move(name), IntegerRange{lo, hi}};
}

ParamSpec ParamSpec::real(std::string name, double lo, double hi, Scale scale) {
  return ParamSpec{std::move(name), RealRange{lo, hi, scale}};
}

ParamSpec ParamSpec::categorical(std::string name, std::vector<std::string> labels) {
  return ParamSpec{std::move(name), CategoricalSet{std::move(labels)}};
}

std::size_t ParamSpec::encoded_width() const {
  if (const auto* c = std::get_if<CategoricalSet>(&kind)) return c->labels.size();
  return 1;
}

SearchSpace::SearchSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
  if (params_.empty()) throw ValidationError("search space has no parameters");
  std::set<std::string> names;
  for (const auto& p : params_) {
    check_spec(p);
    if (!names.insert(p.name).second) fail(p.name, "duplicate parameter name");
    offsets_.push_back(encoded_dim_);
    encoded_dim_ += p.encoded_width();
  }
}

std::optional<std::size_t> SearchSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  return std::nullopt;
}

std::size_t SearchSpace::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("unknown parameter '" + std::string(name) + "'");
}

void SearchSpace::validate(const Configuration& cfg) const {
  if (cfg.values.size() != params_.size())
    throw ValidationError("configuration has " + std::to_string(cfg.values.size()) +
                          " values, space has " + std::to_string(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    const auto& v = cfg.values[i];
    std::visit(Overloaded{
                   [&](const IntegerRange& r) {
                     const auto* x = std::get_if<std::int64_t>(&v);
                     if (!x) fail(p.name, "expected an integer value");
                     if (*x < r.lo || *x > r.hi)
                       fail(p.name, "value " + std::to_string(*x) + " outside [" +
                                        std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
                   },
                   [&](const RealRange& r) {
                     const auto* x = std::get_if<double>(&v);
                     if (!x) fail(p.name, "expected a real value");
                     if (!std::isfinite(*x) || *x < r.lo || *x > r.hi)
                       fail(p.name, "value " + to_string(v) + " outside [" + to_string(r.lo) +
                                        ", " + to_string(r.hi) + "]");
                   },
                   [&](const CategoricalSet& c) {
                     const auto* x = std::get_if<std::string>(&v);
                     if (!x) fail(p.name, "expected a label");
                     if (std::find(c.labels.begin(), c.labels.end(), *x) == c.labels.end())
                       fail(p.name, "unknown label '" + *x + "'");
                   },
               },
               p.kind);
  }
}

EncodedPoint SearchSpace::encode(const Configuration& cfg) const {
  validate(cfg);
  EncodedPoint out = EncodedPoint::Zero(static_cast<Eigen::Index>(encoded_dim_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(offsets_[i]);
    const auto& v = cfg.values[i];
    std::visit(Overloaded{
                   [&](const IntegerRange& r) {
                     const auto x = std::get<std::int64_t>(v);
                     out[off] = r.hi == r.lo ? 0.0
                                             : static_cast<double>(x - r.lo) /
                                                   static_cast<double>(r.hi - r.lo);
                   },
                   [&](const RealRange& r) {
                     out[off] = std::clamp(to_unit(r, std::get<double>(v)), 0.0, 1.0);
                   },
                   [&](const CategoricalSet& c) {
                     const auto it = std::find(c.labels.begin(), c.labels.end(),
                                               std::get<std::string>(v));
                     out[off + (it - c.labels.begin())] = 1.0;
                   },
               },
               params_[i].kind);
  }
  return out;
}

Configuration SearchSpace::decode(const EncodedPoint& point) const {
  if (static_cast<std::size_t>(point.size()) != encoded_dim_)
    throw ValidationError("encoded point has dimension " + std::to_string(point.size()) +
                          ", expected " + std::to_string(encoded_dim_));
  for (Eigen::Index k = 0; k < point.size(); ++k)
    if (!(point[k] >= 0.0 && point[k] <= 1.0))
      throw ValidationError("encoded coordinate " + std::to_string(k) + " outside [0,1]");

  Configuration cfg;
  cfg.values.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(offsets_[i]);
    std::visit(Overloaded{
                   [&](const IntegerRange& r) {
                     const double x =
                         static_cast<double>(r.lo) + point[off] * static_cast<double>(r.hi - r.lo);
                     cfg.values.emplace_back(std::clamp<std::int64_t>(std::llround(x), r.lo, r.hi));
                   },
                   [&](const RealRange& r) { cfg.values.emplace_back(from_unit(r, point[off])); },
                   [&](const CategoricalSet& c) {
                     std::size_t best = 0;
                     for (std::size_t k = 1; k < c.labels.size(); ++k)
                       if (point[off + static_cast<Eigen::Index>(k)] >
                           point[off + static_cast<Eigen::Index>(best)])
                         best = k;
                     cfg.values.emplace_back(c.labels[best]);
                   },
               },
               params_[i].kind);
  }
  return cfg;
}

ParamValue SearchSpace::value_from_unit(std::size_t index, double u) const {
  u = std::clamp(u, 0.0, std::nextafter(1.0, 0.0));
  return std::visit(
      Overloaded{
          [&](const IntegerRange& r) -> ParamValue {
            const auto n = static_cast<double>(r.hi - r.lo + 1);
            return std::min(r.hi, r.lo + static_cast<std::int64_t>(std::floor(u * n)));
          },
          [&](const RealRange& r) -> ParamValue { return from_unit(r, u); },
          [&](const CategoricalSet& c) -> ParamValue {
            const auto n = c.labels.size();
            return c.labels[std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)))];
          },
      },
      params_.at(index).kind);
}

Configuration SearchSpace::sample_uniform(Rng& rng) const {
  Configuration cfg;
  cfg.values.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i)
    cfg.values.push_back(value_from_unit(i, unit_uniform(rng)));
  return cfg;
}

Configuration SearchSpace::sample_uniform(std::uint64_t seed) const {
  Rng rng(seed);
  return sample_uniform(rng);
}

nlohmann::json SearchSpace::config_to_json(const Configuration& cfg) const {
  validate(cfg);
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < params_.size(); ++i)
    std::visit([&](const auto& x) { j[params_[i].name] = x; }, cfg.values[i]);
  return j;
}

Configuration SearchSpace::config_from_json(const nlohmann::json& j) const {
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
  Configuration cfg;
  for (const auto& p : params_) {
    if (!j.contains(p.name)) fail(p.name, "missing from configuration");
    const auto& v = j.at(p.name);
    std::visit(Overloaded{
                   [&](const IntegerRange&) {
                     if (v.is_number_integer()) {
                       cfg.values.emplace_back(v.get<std::int64_t>());
                     } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
                       cfg.values.emplace_back(static_cast<std::int64_t>(v.get<double>()));
                     } else {
                       fail(p.name, "expected an integer value");
                     }
                   },
                   [&](const RealRange&) {
                     if (!v.is_number()) fail(p.name, "expected a number");
                     cfg.values.emplace_back(v.get<double>());
                   },
                   [&](const CategoricalSet&) {
                     if (!v.is_string()) fail(p.name, "expected a label string");
                     cfg.values.emplace_back(v.get<std::string>());
                   },
               },
               p.kind);
  }
  validate(cfg);
  return cfg;
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : params_) {
    nlohmann::json e{{"name", p.name}};
    std::visit(Overloaded{
                   [&](const IntegerRange& r) {
                     e["kind"] = "integer";
                     e["lo"] = r.lo;
                     e["hi"] = r.hi;
                   },
                   [&](const RealRange& r) {
                     e["kind"] = "real";
                     e["lo"] = r.lo;
                     e["hi"] = r.hi;
                     e["scale"] = r.scale == Scale::kLog10 ? "log10" : "linear";
                   },
                   [&](const CategoricalSet& c) {
                     e["kind"] = "categorical";
                     e["labels"] = c.labels;
                   },
               },
               p.kind);
    arr.push_back(std::move(e));
  }
  return arr;
}

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("search space document must be a JSON array");
  std::vector<ParamSpec> params;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("name") || !e.contains("kind"))
      throw ValidationError("search space entry needs 'name' and 'kind'");
    const auto name = e.at("name").get<std::string>();
    const auto kind = e.at("kind").get<std::string>();
    try {
      if (kind == "integer") {
        params.push_back(ParamSpec::integer(name, e.at("lo").get<std::int64_t>(),
                                            e.at("hi").get<std::int64_t>()));
      } else if (kind == "real") {
        const auto scale = e.value("scale", std::string("linear"));
        if (scale != "linear" && scale != "log10") fail(name, "unknown scale '" + scale + "'");
        params.push_back(ParamSpec::real(name, e.at("lo").get<double>(), e.at("hi").get<double>(),
                                         scale == "log10" ? Scale::kLog10 : Scale::kLinear));
      } else if (kind == "categorical") {
        params.push_back(
            ParamSpec::categorical(name, e.at("labels").get<std::vector<std::string>>()));
      } else {
        fail(name, "unknown kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& ex) {
      fail(name, ex.what());
    }
  }
  return SearchSpace(std::move(params));
}

SearchSpace SearchSpace::default_dnn() {
  return SearchSpace({
      ParamSpec::integer("n_hidden_layers", 1, 3),
      ParamSpec::integer("n_neurons", 10, 100),
      ParamSpec::real("dropout_rate", 0.1, 0.6),
      ParamSpec::categorical("activation", {"ReLU", "sigmoid", "TanH"}),
      ParamSpec::categorical("optimizer", {"Adam", "SGD"}),
      ParamSpec::real("learning_rate", 1e-6, 1e-1, Scale::kLog10),
  });
}

SearchSpace SearchSpace::table2_dnn() {
  return SearchSpace({
      ParamSpec::integer("n_hidden_layers", 1, 3),
      ParamSpec::integer("n_neurons", 10, 100),
      ParamSpec::real("dropout_rate", 0.1, 0.6),
      ParamSpec::categorical("activation", {"ReLU", "sigmoid"}),
      ParamSpec::categorical("optimizer", {"Adam", "SGD"}),
      ParamSpec::real("learning_rate", 1e-6, 1e-1, Scale::kLog10),
  });
}

SearchSpace SearchSpace::preset(std::string_view name) {
  if (name == "default") return default_dnn();
  if (name == "table2") return table2_dnn();
  throw ValidationError("unknown search space preset '" + std::string(name) + "'");
}

std::string to_string(const ParamValue& v) {
  return std::visit(Overloaded{
                        [](std::int64_t x) { return std::to_string(x); },
                        [](double x) {
                          std::ostringstream os;
                          os.precision(17);
                          os << x;
                          return os.str();
                        },
                        [](const std::string& s) { return s; },
                    },
                    v);
}

}  // namespace bayeshpo
