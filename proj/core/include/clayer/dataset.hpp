#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clayer/schema.hpp"

namespace clayer {

/// RFC-4180 table: a header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Throws FormatError on unterminated quotes or ragged rows.
CsvTable read_csv(std::istream& in);
CsvTable parse_csv(std::string_view text);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

/// Row-major table of feature values.
///
/// Continuous cells hold finite doubles. Categorical cells keep their text
/// label; `value()` is the parsed number when the label is numeric and NaN
/// otherwise. Cells loaded from text remember that text so unchanged values
/// are written back verbatim.
class Dataset {
 public:
  Dataset() = default;
  /// Numeric construction, `values.size()` must be a multiple of the schema
  /// width. Categorical labels are the formatted numbers.
  Dataset(FeatureSchema schema, std::vector<double> values);

  /// Header must equal the schema's feature names in order.
  static Dataset from_table(const CsvTable& table, const FeatureSchema& schema);
  /// Derives the schema from the header plus kind hints.
  static Dataset from_table(const CsvTable& table, const KindHints& hints = {});

  const FeatureSchema& schema() const noexcept { return schema_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t width() const noexcept { return schema_.size(); }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * width(), width()};
  }
  double value(std::size_t r, std::size_t c) const { return values_[r * width() + c]; }
  std::vector<double> column(std::size_t c) const;
  std::string label(std::size_t r, std::size_t c) const;
  const std::vector<double>& values() const noexcept { return values_; }

  /// Replaces a row's numeric values; labels of changed cells are refreshed.
  void set_row(std::size_t r, std::span<const double> values);

  void write_csv(std::ostream& out) const;
  std::string to_csv() const;

 private:
  FeatureSchema schema_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
  std::vector<std::string> labels_;  // empty or rows_ * width() entries
};

}  // namespace clayer
