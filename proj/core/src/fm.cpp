#include "clayer/fm.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>

namespace clayer {

VariableOrdering::VariableOrdering(const FeatureSchema& schema, std::vector<std::size_t> columns)
    : columns_(std::move(columns)), rank_of_(schema.size(), 0) {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const std::size_t column = columns_[i];
    if (column >= schema.size()) {
      throw Error(ErrorKind::invalid_ordering,
                  "ordering references column " + std::to_string(column) + " outside the schema");
    }
    if (!schema.is_continuous(column)) {
      throw Error(ErrorKind::invalid_ordering,
                  "ordering ranks categorical feature '" + schema[column].name + "'");
    }
    if (rank_of_[column] != 0) {
      throw Error(ErrorKind::invalid_ordering,
                  "feature '" + schema[column].name + "' ranked twice");
    }
    rank_of_[column] = i + 1;
  }
}

VariableOrdering VariableOrdering::natural(const FeatureSchema& schema) {
  return VariableOrdering(schema, schema.continuous_columns());
}

VariableOrdering VariableOrdering::from_names(const FeatureSchema& schema,
                                              std::span<const std::string> names) {
  std::vector<std::size_t> columns;
  for (const auto& name : names) {
    auto column = schema.find(name);
    if (!column) {
      throw Error(ErrorKind::invalid_ordering, "ordering names unknown feature '" + name + "'");
    }
    if (schema.is_continuous(*column)) columns.push_back(*column);
  }
  return VariableOrdering(schema, std::move(columns));
}

std::optional<Rank> VariableOrdering::rank(std::size_t column) const {
  if (column >= rank_of_.size() || rank_of_[column] == 0) return std::nullopt;
  return rank_of_[column];
}

void VariableOrdering::require_covers(const ConstraintSet& constraints) const {
  for (std::size_t column : constraints.constrained_columns()) {
    if (!rank(column)) {
      throw Error(ErrorKind::invalid_ordering, "constrained feature '" +
                                                   constraints.schema()[column].name +
                                                   "' has no rank in the ordering");
    }
  }
}

BoundExpression make_bound_expression(const LinearConstraint& constraint, std::size_t column,
                                      const VariableOrdering& ordering) {
  const double pivot = constraint.weight(column);
  BoundExpression expr;
  expr.source_rank = ordering.rank(column).value();
  expr.side = pivot > 0 ? BoundSide::lower : BoundSide::upper;
  expr.strict = constraint.strict();
  expr.offset = -constraint.bias() / pivot + 0.0;
  expr.source = constraint;
  for (const auto& term : constraint.terms()) {
    if (term.column == column) continue;
    expr.terms.push_back({ordering.rank(term.column).value(), term.column, -term.weight / pivot});
  }
  std::sort(expr.terms.begin(), expr.terms.end(),
            [](const BoundTerm& a, const BoundTerm& b) { return a.rank < b.rank; });
  return expr;
}

Partition partition(const ConstraintSet& constraints, std::size_t column) {
  Partition out;
  for (const auto& c : constraints) {
    const double w = c.weight(column);
    if (w > 0) {
      out.plus.push_back(c);
    } else if (w < 0) {
      out.minus.push_back(c);
    } else {
      out.rest.push_back(c);
    }
  }
  return out;
}

LinearConstraint reduce_pair(const LinearConstraint& negative, const LinearConstraint& positive,
                             std::size_t column) {
  const double w_neg = negative.weight(column);
  const double w_pos = positive.weight(column);
  if (!(w_neg < 0) || !(w_pos > 0)) {
    throw Error(ErrorKind::wrong_signs,
                "reduction needs a negative and a positive occurrence of the eliminated feature");
  }
  const double scale_neg = std::fabs(w_pos);
  const double scale_pos = std::fabs(w_neg);

  std::vector<Term> terms;
  const auto& a = negative.terms();
  const auto& b = positive.terms();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    std::size_t col;
    double value = 0.0;
    if (j == b.size() || (i < a.size() && a[i].column < b[j].column)) {
      col = a[i].column;
      value = a[i++].weight * scale_neg;
    } else if (i == a.size() || b[j].column < a[i].column) {
      col = b[j].column;
      value = b[j++].weight * scale_pos;
    } else {
      col = a[i].column;
      value = a[i++].weight * scale_neg + b[j++].weight * scale_pos;
    }
    if (col == column) continue;
    if (value != 0.0 && std::fabs(value) < kReductionZeroThreshold) {
      spdlog::debug("dropping near-zero coefficient {} on column {} produced by reduction", value,
                    col);
      continue;
    }
    terms.push_back({col, value});
  }
  const double bias = negative.bias() * scale_neg + positive.bias() * scale_pos;
  return LinearConstraint(std::move(terms), bias, negative.strict() || positive.strict());
}

ConstraintSet eliminate(const ConstraintSet& constraints, std::size_t column, std::size_t cap) {
  Partition parts = partition(constraints, column);
  ConstraintSet out(constraints.schema());
  auto check_cap = [&] {
    if (out.size() > cap) {
      throw Error(ErrorKind::blowup_limit_exceeded,
                  "elimination of '" + constraints.schema()[column].name + "' exceeds " +
                      std::to_string(cap) + " constraints");
    }
  };
  for (auto& c : parts.rest) {
    out.add(std::move(c));
    check_cap();
  }
  for (const auto& neg : parts.minus) {
    for (const auto& pos : parts.plus) {
      out.add(reduce_pair(neg, pos, column));
      check_cap();
    }
  }
  return out;
}

namespace {

SatReport run_chain(const ConstraintSet& constraints, const VariableOrdering& ordering,
                    std::size_t cap, std::vector<RankTable>* tables) {
  ordering.require_covers(constraints);
  SatReport report;
  ConstraintSet current = constraints;
  if (tables) tables->assign(ordering.size(), RankTable{});
  for (Rank r = ordering.size(); r >= 1; --r) {
    const std::size_t column = ordering.column(r);
    report.per_rank_sizes.push_back(current.size());
    if (tables) {
      RankTable& table = (*tables)[r - 1];
      table.chain_size = current.size();
      for (const auto& c : current) {
        const double w = c.weight(column);
        if (w > 0) {
          table.lower.push_back(make_bound_expression(c, column, ordering));
        } else if (w < 0) {
          table.upper.push_back(make_bound_expression(c, column, ordering));
        }
      }
    }
    current = eliminate(current, column, cap);
  }
  report.per_rank_sizes.push_back(current.size());
  if (current.trivially_unsatisfiable()) {
    report.satisfiable = false;
    report.witness = current.contradiction();
  }
  return report;
}

}  // namespace

SatReport check_satisfiable(const ConstraintSet& constraints, const VariableOrdering& ordering,
                            std::size_t cap) {
  return run_chain(constraints, ordering, cap, nullptr);
}

SatReport check_satisfiable(const ConstraintSet& constraints, std::size_t cap) {
  return check_satisfiable(constraints, VariableOrdering::natural(constraints.schema()), cap);
}

CompiledLayer::CompiledLayer(ConstraintSet constraints, VariableOrdering ordering,
                             std::vector<RankTable> ranks, std::size_t residual_size)
    : constraints_(std::move(constraints)),
      ordering_(std::move(ordering)),
      ranks_(std::move(ranks)),
      residual_size_(residual_size) {
  if (ranks_.size() != ordering_.size()) {
    throw Error(ErrorKind::format_error, "rank table count does not match the ordering");
  }
  for (auto& table : ranks_) {
    for (auto* side : {&table.lower, &table.upper}) {
      for (auto& expr : *side) expr.original = constraints_.contains(expr.source);
    }
  }
  for (Rank r = 1; r <= ranks_.size(); ++r) {
    for (const auto* side : {&ranks_[r - 1].lower, &ranks_[r - 1].upper}) {
      for (const auto& expr : *side) {
        if (expr.source_rank != r) {
          throw Error(ErrorKind::format_error, "bound expression filed under the wrong rank");
        }
        for (const auto& term : expr.terms) {
          if (term.rank == 0 || term.rank >= r) {
            throw Error(ErrorKind::format_error,
                        "bound expression at rank " + std::to_string(r) +
                            " references rank " + std::to_string(term.rank));
          }
        }
      }
    }
  }
}

std::vector<std::size_t> CompiledLayer::per_rank_sizes() const {
  std::vector<std::size_t> out;
  for (auto it = ranks_.rbegin(); it != ranks_.rend(); ++it) out.push_back(it->chain_size);
  out.push_back(residual_size_);
  return out;
}

bool CompiledLayer::operator==(const CompiledLayer& other) const {
  return constraints_.schema() == other.constraints_.schema() &&
         constraints_.constraints() == other.constraints_.constraints() &&
         ordering_ == other.ordering_ && ranks_ == other.ranks_ &&
         residual_size_ == other.residual_size_;
}

CompiledLayer compile(const ConstraintSet& constraints, const VariableOrdering& ordering,
                      const CompileOptions& options) {
  std::vector<RankTable> tables;
  SatReport report = run_chain(constraints, ordering, options.cap, &tables);
  if (!report.satisfiable) {
    throw UnsatisfiableError(std::move(report), "constraint set is unsatisfiable");
  }
  const std::size_t residual = report.per_rank_sizes.back();
  return CompiledLayer(constraints, ordering, std::move(tables), residual);
}

}  // namespace clayer
