#include "bayeshpo/search_space.hpp"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "bayeshpo/errors.hpp"

namespace bayeshpo {
namespace {

Configuration dnn_config(std::int64_t layers, std::int64_t neurons, double dropout,
                         const std::string& act, const std::string& opt, double lr) {
  return Configuration{{layers, neurons, dropout, act, opt, lr}};
}

TEST(SearchSpace, DefaultSpaceLayout) {
  const auto s = SearchSpace::default_dnn();
  EXPECT_EQ(s.size(), 6u);
  EXPECT_EQ(s.encoded_dim(), 1u + 1u + 1u + 3u + 2u + 1u);
  EXPECT_EQ(SearchSpace::table2_dnn().encoded_dim(), 8u);
  EXPECT_EQ(s.encoded_offset(s.index_of("learning_rate")), 8u);
}

TEST(SearchSpace, RejectsInvalidSpecs) {
  EXPECT_THROW(SearchSpace({ParamSpec::integer("a", 3, 1)}), ValidationError);
  EXPECT_THROW(SearchSpace({ParamSpec::real("a", 1.0, 1.0)}), ValidationError);
  EXPECT_THROW(SearchSpace({ParamSpec::real("a", 0.0, 1.0, Scale::kLog10)}), ValidationError);
  EXPECT_THROW(SearchSpace({ParamSpec::categorical("a", {"x"})}), ValidationError);
  EXPECT_THROW(SearchSpace({ParamSpec::categorical("a", {"x", "x"})}), ValidationError);
  EXPECT_THROW(SearchSpace({ParamSpec::integer("a", 1, 2), ParamSpec::integer("a", 1, 2)}),
               ValidationError);
}

TEST(SearchSpace, EncodeEndpoints) {
  const SearchSpace s({ParamSpec::integer("layers", 1, 3),
                       ParamSpec::real("lr", 1e-6, 1e-1, Scale::kLog10),
                       ParamSpec::categorical("act", {"ReLU", "sigmoid"})});
  auto e = s.encode(Configuration{{std::int64_t{1}, 1e-6, std::string("sigmoid")}});
  EXPECT_DOUBLE_EQ(e[0], 0.0);
  EXPECT_NEAR(e[1], 0.0, 1e-15);
  EXPECT_EQ(e[2], 0.0);
  EXPECT_EQ(e[3], 1.0);
  e = s.encode(Configuration{{std::int64_t{3}, 1e-1, std::string("ReLU")}});
  EXPECT_DOUBLE_EQ(e[0], 1.0);
  EXPECT_NEAR(e[1], 1.0, 1e-15);
  EXPECT_EQ(e[2], 1.0);
  EXPECT_EQ(e[3], 0.0);
}

TEST(SearchSpace, EncodeOutOfBoundsNamesParameter) {
  const auto s = SearchSpace::default_dnn();
  try {
    s.encode(dnn_config(4, 50, 0.3, "ReLU", "Adam", 1e-3));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("n_hidden_layers"), std::string::npos);
  }
  EXPECT_THROW(s.encode(dnn_config(1, 50, 0.3, "softplus", "Adam", 1e-3)), ValidationError);
  EXPECT_THROW(s.encode(dnn_config(1, 50, 0.7, "ReLU", "Adam", 1e-3)), ValidationError);
}

TEST(SearchSpace, DecodeRoundsIntegersAndBreaksTiesLow) {
  const SearchSpace s({ParamSpec::integer("n", 10, 100), ParamSpec::categorical("act", {"a", "b"})});
  EncodedPoint p(3);
  p << 0.5, 0.2, 0.2;
  const auto cfg = s.decode(p);
  EXPECT_EQ(std::get<std::int64_t>(cfg.values[0]), 55);  // round(10 + 0.5 * 90)
  EXPECT_EQ(std::get<std::string>(cfg.values[1]), "a");
}

TEST(SearchSpace, DecodeRejectsBadPoints) {
  const auto s = SearchSpace::default_dnn();
  EXPECT_THROW(s.decode(EncodedPoint::Zero(3)), ValidationError);
  EncodedPoint p = EncodedPoint::Constant(9, 0.5);
  p[2] = 1.5;
  EXPECT_THROW(s.decode(p), ValidationError);
}

TEST(SearchSpace, SampleUniformIsDeterministic) {
  const auto s = SearchSpace::default_dnn();
  EXPECT_EQ(s.sample_uniform(42), s.sample_uniform(42));
  EXPECT_NE(s.sample_uniform(42), s.sample_uniform(43));
}

TEST(SearchSpace, SampleUniformIntegerFrequencies) {
  const SearchSpace s({ParamSpec::integer("k", 1, 3)});
  Rng rng(7);
  std::map<std::int64_t, int> counts;
  for (int i = 0; i < 10000; ++i) counts[std::get<std::int64_t>(s.sample_uniform(rng).values[0])]++;
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [v, c] : counts) {
    EXPECT_GE(c / 10000.0, 0.30) << v;
    EXPECT_LE(c / 10000.0, 0.37) << v;
  }
}

TEST(SearchSpace, SampleUniformLogScaleMedian) {
  const SearchSpace s({ParamSpec::real("lr", 1e-6, 1e-1, Scale::kLog10)});
  Rng rng(11);
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back(std::get<double>(s.sample_uniform(rng).values[0]));
  std::nth_element(v.begin(), v.begin() + 5000, v.end());
  EXPECT_GE(v[5000], std::pow(10.0, -3.8));
  EXPECT_LE(v[5000], std::pow(10.0, -3.2));
}

// Property: random configurations encode into [0,1] and decode back unchanged
// (reals within rounding).
TEST(SearchSpace, RoundTripAndRangeProperty) {
  const auto s = SearchSpace::default_dnn();
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto cfg = s.sample_uniform(rng);
    const auto e = s.encode(cfg);
    ASSERT_TRUE((e.array() >= 0.0).all() && (e.array() <= 1.0).all());
    const auto back = s.decode(e);
    for (std::size_t k = 0; k < cfg.values.size(); ++k) {
      if (const auto* d = std::get_if<double>(&cfg.values[k])) {
        ASSERT_NEAR(std::get<double>(back.values[k]), *d, 1e-12 * std::max(1.0, std::abs(*d)));
      } else {
        ASSERT_EQ(back.values[k], cfg.values[k]);
      }
    }
  }
}

TEST(SearchSpace, EncodeStrictlyIncreasingInReals) {
  const auto s = SearchSpace::default_dnn();
  const auto lr_at = s.encoded_offset(s.index_of("learning_rate"));
  double prev = -1.0;
  for (double lr = 1e-6; lr <= 1e-1; lr *= 1.37) {
    const double c = s.encode(dnn_config(2, 50, 0.3, "ReLU", "Adam", lr))[static_cast<Eigen::Index>(lr_at)];
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(SearchSpace, JsonDocumentRoundTrip) {
  const auto s = SearchSpace::default_dnn();
  const auto again = SearchSpace::from_json(s.to_json());
  EXPECT_EQ(again.to_json(), s.to_json());
  const auto doc = nlohmann::json::parse(R"([
    {"name": "n_hidden_layers", "kind": "integer", "lo": 1, "hi": 3},
    {"name": "learning_rate", "kind": "real", "lo": 1e-6, "hi": 0.1, "scale": "log10"},
    {"name": "activation", "kind": "categorical", "labels": ["ReLU", "sigmoid"]}
  ])");
  const auto parsed = SearchSpace::from_json(doc);
  EXPECT_EQ(parsed.encoded_dim(), 4u);
  EXPECT_THROW(SearchSpace::from_json(nlohmann::json::parse(R"([{"name": "x", "kind": "blob"}])")),
               ValidationError);
}

TEST(SearchSpace, ConfigurationJson) {
  const auto s = SearchSpace::default_dnn();
  const auto cfg = dnn_config(1, 100, 0.6, "ReLU", "Adam", 0.0006);
  const auto j = s.config_to_json(cfg);
  EXPECT_EQ(j.at("n_neurons"), 100);
  EXPECT_EQ(s.config_from_json(j), cfg);
  auto bad = j;
  bad.erase("optimizer");
  EXPECT_THROW(s.config_from_json(bad), ValidationError);
}

TEST(SearchSpace, UnitMappingCoversEveryValue) {
  const auto s = SearchSpace::default_dnn();
  EXPECT_EQ(std::get<std::int64_t>(s.value_from_unit(0, 0.0)), 1);
  EXPECT_EQ(std::get<std::int64_t>(s.value_from_unit(0, 0.999)), 3);
  EXPECT_EQ(std::get<std::string>(s.value_from_unit(3, 0.5)), "sigmoid");
}

}  // namespace
}  // namespace bayeshpo
