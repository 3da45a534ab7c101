#include "clayer/layer_io.hpp"

#include "clayer/parser.hpp"

namespace clayer {

using nlohmann::json;

namespace {

json expression_to_json(const BoundExpression& expr, const FeatureSchema& schema) {
  json terms = json::array();
  for (const auto& term : expr.terms) {
    terms.push_back({{"rank", term.rank},
                     {"feature", schema[term.column].name},
                     {"coefficient", term.coefficient}});
  }
  return {{"terms", std::move(terms)},
          {"offset", expr.offset},
          {"strict", expr.strict},
          {"source", format_constraint(expr.source, schema)}};
}

LinearConstraint parse_single(const std::string& text, const FeatureSchema& schema) {
  ConstraintSet parsed = parse_constraints(text, schema);
  if (parsed.size() != 1) {
    throw Error(ErrorKind::format_error, "expected exactly one constraint in '" + text + "'");
  }
  return parsed[0];
}

BoundExpression expression_from_json(const json& doc, Rank rank, BoundSide side,
                                     const FeatureSchema& schema,
                                     const VariableOrdering& ordering) {
  BoundExpression expr;
  expr.source_rank = rank;
  expr.side = side;
  expr.offset = doc.at("offset").get<double>();
  expr.strict = doc.at("strict").get<bool>();
  expr.source = parse_single(doc.at("source").get<std::string>(), schema);
  for (const auto& term : doc.at("terms")) {
    const Rank term_rank = term.at("rank").get<Rank>();
    if (term_rank == 0 || term_rank > ordering.size()) {
      throw Error(ErrorKind::format_error, "bound term rank out of range");
    }
    const std::size_t column = ordering.column(term_rank);
    if (term.contains("feature") && term.at("feature").get<std::string>() != schema[column].name) {
      throw Error(ErrorKind::format_error, "bound term feature does not match its rank");
    }
    expr.terms.push_back({term_rank, column, term.at("coefficient").get<double>()});
  }
  return expr;
}

}  // namespace

json layer_to_json(const CompiledLayer& layer) {
  const FeatureSchema& schema = layer.schema();
  json features = json::array();
  for (const auto& f : schema.features()) {
    features.push_back({{"name", f.name}, {"kind", std::string(to_string(f.kind))}});
  }
  json constraints = json::array();
  for (const auto& c : layer.constraints()) constraints.push_back(format_constraint(c, schema));
  json ordering = json::array();
  for (std::size_t column : layer.ordering().columns()) ordering.push_back(schema[column].name);

  json ranks = json::array();
  for (Rank r = 1; r <= layer.rank_count(); ++r) {
    const RankTable& table = layer.rank(r);
    json lower = json::array();
    json upper = json::array();
    for (const auto& e : table.lower) lower.push_back(expression_to_json(e, schema));
    for (const auto& e : table.upper) upper.push_back(expression_to_json(e, schema));
    ranks.push_back({{"rank", r},
                     {"feature", schema[layer.ordering().column(r)].name},
                     {"chain_size", table.chain_size},
                     {"lower", std::move(lower)},
                     {"upper", std::move(upper)}});
  }
  const auto sizes = layer.per_rank_sizes();
  return {{"format", kLayerFormatName},
          {"version", kLayerFormatVersion},
          {"schema", std::move(features)},
          {"constraints", std::move(constraints)},
          {"ordering", std::move(ordering)},
          {"ranks", std::move(ranks)},
          {"stats",
           {{"constraint_count", layer.constraints().size()},
            {"per_rank_sizes", sizes},
            {"residual_size", sizes.back()}}}};
}

CompiledLayer layer_from_json(const json& document) {
  try {
    if (document.at("format").get<std::string>() != kLayerFormatName) {
      throw Error(ErrorKind::format_error, "not a compiled layer document");
    }
    const int version = document.at("version").get<int>();
    if (version != kLayerFormatVersion) {
      throw Error(ErrorKind::format_error,
                  "unsupported compiled layer version " + std::to_string(version));
    }
    std::vector<Feature> features;
    for (const auto& f : document.at("schema")) {
      auto kind = feature_kind_from_string(f.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorKind::format_error, "unknown feature kind in layer schema");
      features.push_back({f.at("name").get<std::string>(), *kind});
    }
    FeatureSchema schema(std::move(features));

    ConstraintSet constraints(schema);
    for (const auto& text : document.at("constraints")) {
      constraints.add(parse_single(text.get<std::string>(), schema));
    }
    const auto names = document.at("ordering").get<std::vector<std::string>>();
    std::vector<std::size_t> columns;
    for (const auto& name : names) columns.push_back(schema.index_of(name));
    VariableOrdering ordering(schema, std::move(columns));

    std::vector<RankTable> tables;
    for (const auto& entry : document.at("ranks")) {
      const Rank r = entry.at("rank").get<Rank>();
      if (r != tables.size() + 1) throw Error(ErrorKind::format_error, "ranks out of sequence");
      RankTable table;
      table.chain_size = entry.at("chain_size").get<std::size_t>();
      for (const auto& e : entry.at("lower")) {
        table.lower.push_back(expression_from_json(e, r, BoundSide::lower, schema, ordering));
      }
      for (const auto& e : entry.at("upper")) {
        table.upper.push_back(expression_from_json(e, r, BoundSide::upper, schema, ordering));
      }
      tables.push_back(std::move(table));
    }
    const std::size_t residual = document.at("stats").at("residual_size").get<std::size_t>();
    return CompiledLayer(std::move(constraints), std::move(ordering), std::move(tables), residual);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format_error, std::string("malformed compiled layer: ") + e.what());
  } catch (const SyntaxError& e) {
    throw Error(ErrorKind::format_error, std::string("malformed constraint in layer: ") + e.what());
  }
}

std::string serialize_layer(const CompiledLayer& layer) { return layer_to_json(layer).dump(2) + "\n"; }

CompiledLayer deserialize_layer(std::string_view text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format_error, std::string("compiled layer is not JSON: ") + e.what());
  }
  return layer_from_json(document);
}

json sat_report_to_json(const SatReport& report, const FeatureSchema& schema) {
  json out = {{"satisfiable", report.satisfiable}, {"per_rank_sizes", report.per_rank_sizes}};
  out["witness"] = report.witness ? json(format_constraint(*report.witness, schema)) : json(nullptr);
  return out;
}

}  // namespace clayer
