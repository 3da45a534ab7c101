#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "clayer/fm.hpp"

namespace clayer {

inline constexpr int kLayerFormatVersion = 1;
inline constexpr std::string_view kLayerFormatName = "clayer-compiled-layer";

/// Versioned document holding everything `apply` needs: schema, the original
/// constraints, the ordering and every rank's bound expressions.
nlohmann::json layer_to_json(const CompiledLayer& layer);
/// Throws FormatError on malformed or version-mismatched documents.
CompiledLayer layer_from_json(const nlohmann::json& document);

std::string serialize_layer(const CompiledLayer& layer);
CompiledLayer deserialize_layer(std::string_view text);

nlohmann::json sat_report_to_json(const SatReport& report, const FeatureSchema& schema);

}  // namespace clayer
