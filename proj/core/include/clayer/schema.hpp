#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clayer {

enum class FeatureKind { continuous, categorical };

std::string_view to_string(FeatureKind kind) noexcept;
std::optional<FeatureKind> feature_kind_from_string(std::string_view text) noexcept;

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;

  bool operator==(const Feature&) const = default;
};

using KindHints = std::map<std::string, FeatureKind, std::less<>>;

/// Ordered list of named columns. Column positions are 0-based and the
/// name index is a bijection onto 0..size()-1.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Feature> features);

  std::size_t size() const noexcept { return features_.size(); }
  bool empty() const noexcept { return features_.empty(); }

  const Feature& operator[](std::size_t column) const { return features_[column]; }
  const std::vector<Feature>& features() const noexcept { return features_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws UnknownFeature.
  std::size_t index_of(std::string_view name) const;

  bool is_continuous(std::size_t column) const {
    return features_[column].kind == FeatureKind::continuous;
  }
  std::vector<std::size_t> continuous_columns() const;
  std::vector<std::size_t> categorical_columns() const;

  bool operator==(const FeatureSchema& other) const { return features_ == other.features_; }

 private:
  std::vector<Feature> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

bool is_valid_feature_name(std::string_view name) noexcept;

/// Builds a schema from a header row; features default to continuous unless
/// a hint says otherwise. Hints naming absent columns are rejected.
FeatureSchema parse_schema(std::span<const std::string> header, const KindHints& kind_hints = {});

/// Schema file: one feature per line, `name [continuous|categorical]`,
/// `#` comments and blank lines ignored.
FeatureSchema parse_schema_file(std::string_view text);
std::string format_schema_file(const FeatureSchema& schema);

}  // namespace clayer
