#include "clayer/error.hpp"

namespace clayer {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::duplicate_feature: return "DuplicateFeature";
    case ErrorKind::empty_header: return "EmptyHeader";
    case ErrorKind::invalid_name: return "InvalidName";
    case ErrorKind::unknown_feature: return "UnknownFeature";
    case ErrorKind::categorical_in_constraint: return "CategoricalInConstraint";
    case ErrorKind::syntax_error: return "SyntaxError";
    case ErrorKind::wrong_signs: return "WrongSigns";
    case ErrorKind::blowup_limit_exceeded: return "BlowupLimitExceeded";
    case ErrorKind::unsatisfiable: return "Unsatisfiable";
    case ErrorKind::invalid_ordering: return "InvalidOrdering";
    case ErrorKind::infeasible_bounds: return "InfeasibleBounds";
    case ErrorKind::degenerate_strict_interval: return "DegenerateStrictInterval";
    case ErrorKind::post_check_failed: return "PostCheckFailed";
    case ErrorKind::on_boundary: return "OnBoundary";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::empty_dataset: return "EmptyDataset";
    case ErrorKind::empty_constraint_set: return "EmptyConstraintSet";
    case ErrorKind::not_two_variable: return "NotTwoVariable";
    case ErrorKind::no_categorical_features: return "NoCategoricalFeatures";
    case ErrorKind::schema_mismatch: return "SchemaMismatch";
    case ErrorKind::io_error: return "IOError";
    case ErrorKind::format_error: return "FormatError";
  }
  return "Unknown";
}

}  // namespace clayer
