#include <clayer/error.hpp>
#include <clayer/layer_io.hpp>
#include <clayer/orderings.hpp>
#include <clayer/parser.hpp>
#include <clayer/projection.hpp>
#include <doctest.h>
#include <random>

#include "random_systems.hpp"

using namespace clayer;

namespace {

ErrorKind load_error(const nlohmann::json& doc) {
  try {
    layer_from_json(doc);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::invalid_argument;
}

bool same_tables(const CompiledLayer& a, const CompiledLayer& b) {
  if (a.rank_count() != b.rank_count()) return false;
  for (Rank r = 1; r <= a.rank_count(); ++r) {
    if (a.rank(r).lower != b.rank(r).lower || a.rank(r).upper != b.rank(r).upper) return false;
    if (a.rank(r).chain_size != b.rank(r).chain_size) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("layers survive a round trip") {
  std::mt19937_64 rng(41);
  testing::SystemShape shape;
  shape.max_vars = 6;
  shape.max_constraints = 9;
  for (int i = 0; i < 30; ++i) {
    const auto system = testing::random_satisfiable(rng, shape);
    const auto schema = testing::numbered_schema(system.dims);
    const auto layer = compile(testing::to_constraint_set(system, schema), random_ordering(schema, rng()));
    const auto text = serialize_layer(layer);
    const auto back = deserialize_layer(text);
    CHECK(back.schema() == layer.schema());
    CHECK(back.ordering().columns() == layer.ordering().columns());
    CHECK(same_tables(back, layer));
    CHECK(serialize_layer(back) == text);
    for (int s = 0; s < 20; ++s) {
      const auto x = testing::uniform_sample(rng, system.dims, -10, 10);
      CHECK(clayer::apply(back, x) == clayer::apply(layer, x));
    }
  }
}

TEST_CASE("non-integer coefficients keep every bit") {
  const auto schema = testing::numbered_schema(3);
  const auto set = parse_constraints("0.1*x1 - 0.3*x2 >= 0.7\nx3 < 2.5*x2 + 1e-7\n", schema);
  const auto layer = compile(set, VariableOrdering::natural(schema));
  CHECK(same_tables(deserialize_layer(serialize_layer(layer)), layer));
}

TEST_CASE("document shape") {
  const FeatureSchema schema({{"x1", FeatureKind::continuous},
                              {"g", FeatureKind::categorical},
                              {"x2", FeatureKind::continuous}});
  const auto layer = compile(parse_constraints("x1 - x2 >= 0\nx2 - 5 > 0\n", schema),
                             VariableOrdering::natural(schema));
  const auto doc = layer_to_json(layer);
  CHECK(doc.at("format") == kLayerFormatName);
  CHECK(doc.at("version") == kLayerFormatVersion);
  CHECK(doc.at("ordering") == nlohmann::json::array({"x1", "x2"}));
  CHECK(doc.at("schema")[1].at("kind") == "categorical");
  CHECK(doc.at("stats").at("per_rank_sizes") == nlohmann::json::array({2, 1, 0}));
  CHECK(doc.at("ranks").size() == 2);
  CHECK(layer_from_json(doc).schema() == schema);
}

TEST_CASE("malformed documents") {
  const auto schema = testing::numbered_schema(2);
  const auto layer = compile(parse_constraints("x1 - x2 >= 0\nx2 - 5 > 0\n", schema),
                             VariableOrdering::natural(schema));
  const auto good = layer_to_json(layer);

  auto doc = good;
  doc["version"] = kLayerFormatVersion + 1;
  CHECK(load_error(doc) == ErrorKind::format_error);
  doc = good;
  doc["format"] = "something-else";
  CHECK(load_error(doc) == ErrorKind::format_error);
  doc = good;
  doc.erase("ranks");
  CHECK(load_error(doc) == ErrorKind::format_error);
  doc = good;
  doc["ranks"][0]["rank"] = 2;
  CHECK(load_error(doc) == ErrorKind::format_error);
  doc = good;
  doc["ranks"][1]["lower"][0]["terms"][0]["rank"] = 7;
  CHECK(load_error(doc) == ErrorKind::format_error);
  doc = good;
  doc["constraints"][0] = "x1 >= = 0";
  CHECK(load_error(doc) == ErrorKind::format_error);
  doc = good;
  doc["schema"][0]["kind"] = "ordinal";
  CHECK(load_error(doc) == ErrorKind::format_error);
  CHECK_THROWS_AS(deserialize_layer("{not json"), Error);
}

TEST_CASE("satisfiability report document") {
  const auto schema = testing::numbered_schema(2);
  const auto ok = sat_report_to_json(check_satisfiable(parse_constraints("x1 >= x2\n", schema)), schema);
  CHECK(ok.at("satisfiable") == true);
  const auto bad =
      sat_report_to_json(check_satisfiable(parse_constraints("x1 > x2\nx2 > x1\n", schema)), schema);
  CHECK(bad.at("satisfiable") == false);
  CHECK(bad.contains("witness"));
}
