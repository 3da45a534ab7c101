#include "clayer/schema.hpp"

#include <cctype>
#include <sstream>

#include "clayer/error.hpp"

namespace clayer {

std::string_view to_string(FeatureKind kind) noexcept {
  return kind == FeatureKind::continuous ? "continuous" : "categorical";
}

std::optional<FeatureKind> feature_kind_from_string(std::string_view text) noexcept {
  if (text == "continuous") return FeatureKind::continuous;
  if (text == "categorical") return FeatureKind::categorical;
  return std::nullopt;
}

bool is_valid_feature_name(std::string_view name) noexcept {
  if (name.empty()) return false;
  auto first = static_cast<unsigned char>(name.front());
  if (!(std::isalpha(first) || first == '_')) return false;
  for (char c : name) {
    auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || u == '_')) return false;
  }
  return true;
}

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
  if (features_.empty()) {
    throw Error(ErrorKind::empty_header, "schema has no features");
  }
  index_.reserve(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& name = features_[i].name;
    if (!is_valid_feature_name(name)) {
      throw Error(ErrorKind::invalid_name, "invalid feature name '" + name + "'");
    }
    if (!index_.emplace(name, i).second) {
      throw Error(ErrorKind::duplicate_feature, "duplicate feature '" + name + "'");
    }
  }
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  if (auto column = find(name)) return *column;
  throw Error(ErrorKind::unknown_feature, "unknown feature '" + std::string(name) + "'");
}

std::vector<std::size_t> FeatureSchema::continuous_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].kind == FeatureKind::continuous) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FeatureSchema::categorical_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].kind == FeatureKind::categorical) out.push_back(i);
  }
  return out;
}

FeatureSchema parse_schema(std::span<const std::string> header, const KindHints& kind_hints) {
  if (header.empty()) {
    throw Error(ErrorKind::empty_header, "header has no columns");
  }
  std::vector<Feature> features;
  features.reserve(header.size());
  for (const auto& name : header) {
    features.push_back({name, FeatureKind::continuous});
  }
  FeatureSchema schema(std::move(features));
  std::vector<Feature> hinted = schema.features();
  for (const auto& [name, kind] : kind_hints) {
    hinted[schema.index_of(name)].kind = kind;
  }
  return FeatureSchema(std::move(hinted));
}

FeatureSchema parse_schema_file(std::string_view text) {
  std::vector<Feature> features;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string name;
    std::string kind_text;
    std::string extra;
    if (!(fields >> name)) continue;
    FeatureKind kind = FeatureKind::continuous;
    if (fields >> kind_text) {
      auto parsed = feature_kind_from_string(kind_text);
      if (!parsed) {
        throw Error(ErrorKind::format_error, "schema line " + std::to_string(line_no) +
                                                 ": unknown feature kind '" + kind_text + "'");
      }
      kind = *parsed;
    }
    if (fields >> extra) {
      throw Error(ErrorKind::format_error,
                  "schema line " + std::to_string(line_no) + ": trailing text '" + extra + "'");
    }
    features.push_back({name, kind});
  }
  return FeatureSchema(std::move(features));
}

std::string format_schema_file(const FeatureSchema& schema) {
  std::string out;
  for (const auto& feature : schema.features()) {
    out += feature.name;
    out += ' ';
    out += to_string(feature.kind);
    out += '\n';
  }
  return out;
}

}  // namespace clayer
