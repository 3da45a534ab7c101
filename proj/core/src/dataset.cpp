#include "clayer/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "clayer/error.hpp"
#include "clayer/numeric_format.hpp"

namespace clayer {

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw Error(ErrorKind::format_error,
                      "CSV line " + std::to_string(line) + ": quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorKind::format_error, "CSV: unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw Error(ErrorKind::empty_header, "CSV has no header row");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorKind::format_error, "CSV record " + std::to_string(r + 1) + " has " +
                                               std::to_string(records[r].size()) +
                                               " fields, header has " +
                                               std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_csv(text);
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out << ',';
    first = false;
    if (f.find_first_of(",\"\r\n") != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

Dataset::Dataset(FeatureSchema schema, std::vector<double> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (schema_.empty()) throw Error(ErrorKind::empty_header, "dataset schema has no features");
  if (values_.size() % schema_.size() != 0) {
    throw Error(ErrorKind::schema_mismatch, "value count is not a multiple of the schema width");
  }
  rows_ = values_.size() / schema_.size();
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const std::size_t c = i % schema_.size();
    if (schema_.is_continuous(c) && !std::isfinite(values_[i])) {
      throw Error(ErrorKind::invalid_argument,
                  "non-finite value in continuous column '" + schema_[c].name + "'");
    }
  }
}

Dataset Dataset::from_table(const CsvTable& table, const FeatureSchema& schema) {
  if (table.header.size() != schema.size()) {
    throw Error(ErrorKind::schema_mismatch, "CSV header has " +
                                                std::to_string(table.header.size()) +
                                                " columns, schema has " +
                                                std::to_string(schema.size()));
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (table.header[c] != schema[c].name) {
      throw Error(ErrorKind::schema_mismatch, "CSV column " + std::to_string(c + 1) + " is '" +
                                                  table.header[c] + "', schema expects '" +
                                                  schema[c].name + "'");
    }
  }
  Dataset out;
  out.schema_ = schema;
  out.rows_ = table.rows.size();
  out.values_.reserve(out.rows_ * schema.size());
  out.labels_.reserve(out.rows_ * schema.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& cell = table.rows[r][c];
      auto parsed = parse_double(cell);
      if (schema.is_continuous(c) && !parsed) {
        throw Error(ErrorKind::format_error, "row " + std::to_string(r + 1) + ", column '" +
                                                 schema[c].name + "': '" + cell +
                                                 "' is not a finite number");
      }
      out.values_.push_back(parsed ? *parsed : std::numeric_limits<double>::quiet_NaN());
      out.labels_.push_back(cell);
    }
  }
  return out;
}

Dataset Dataset::from_table(const CsvTable& table, const KindHints& hints) {
  return from_table(table, parse_schema(table.header, hints));
}

std::vector<double> Dataset::column(std::size_t c) const {
  std::vector<double> out;
  out.reserve(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out.push_back(value(r, c));
  return out;
}

std::string Dataset::label(std::size_t r, std::size_t c) const {
  if (!labels_.empty()) return labels_[r * width() + c];
  return format_double(value(r, c));
}

void Dataset::set_row(std::size_t r, std::span<const double> row_values) {
  if (row_values.size() != width()) {
    throw Error(ErrorKind::schema_mismatch, "row width does not match the schema");
  }
  for (std::size_t c = 0; c < width(); ++c) {
    double& cell = values_[r * width() + c];
    if (std::bit_cast<std::uint64_t>(cell) == std::bit_cast<std::uint64_t>(row_values[c])) continue;
    cell = row_values[c];
    if (!labels_.empty()) labels_[r * width() + c] = format_double(cell);
  }
}

void Dataset::write_csv(std::ostream& out) const {
  std::vector<std::string> fields;
  fields.reserve(width());
  for (const auto& f : schema_.features()) fields.push_back(f.name);
  write_csv_row(out, fields);
  for (std::size_t r = 0; r < rows_; ++r) {
    fields.clear();
    for (std::size_t c = 0; c < width(); ++c) fields.push_back(label(r, c));
    write_csv_row(out, fields);
  }
}

std::string Dataset::to_csv() const {
  std::ostringstream out;
  write_csv(out);
  return out.str();
}

}  // namespace clayer
