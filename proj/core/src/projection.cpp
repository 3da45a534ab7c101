#include "clayer/projection.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "clayer/numeric_format.hpp"
#include "clayer/parser.hpp"

namespace clayer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sample(const CompiledLayer& layer, std::span<const double> sample) {
  const FeatureSchema& schema = layer.schema();
  if (sample.size() != schema.size()) {
    throw Error(ErrorKind::schema_mismatch, "sample has " + std::to_string(sample.size()) +
                                                " values, schema has " +
                                                std::to_string(schema.size()));
  }
  for (std::size_t c = 0; c < sample.size(); ++c) {
    if (schema.is_continuous(c) && !std::isfinite(sample[c])) {
      throw Error(ErrorKind::invalid_argument,
                  "non-finite value for feature '" + schema[c].name + "'");
    }
  }
}

struct SideViolations {
  bool lower = false;
  bool upper = false;
};

SideViolations violations_at(const RankTable& table, std::span<const double> row, bool exact) {
  // Derived members only have to hold exactly; the user's own constraints
  // are also checked in floating point afterwards.
  auto violated = [&](const BoundExpression& e) {
    if (!exact) return e.source.violated_by(row);
    return e.original ? e.source.violated_robustly(row) : e.source.violated_exactly(row);
  };
  SideViolations out;
  for (const auto& e : table.lower) {
    if (violated(e)) {
      out.lower = true;
      break;
    }
  }
  for (const auto& e : table.upper) {
    if (violated(e)) {
      out.upper = true;
      break;
    }
  }
  return out;
}

// The bound expressions are rounded, so a clamped value can miss its source
// constraints by a few ulps, either in floating point or over the reals. A
// miss over the reals leaves the next rank's interval empty. Walk the value
// in growing ulp steps towards the violated side as long as the opposite
// side stays satisfied. Floating point comes first; the exact pass only
// moves towards sides it already finds violated, so it cannot undo the first.
void walk(const RankTable& table, std::size_t column, std::vector<double>& row, bool exact) {
  constexpr int kMaxSteps = 200;
  double step = 0.0;
  for (int i = 0; i < kMaxSteps; ++i) {
    const SideViolations now = violations_at(table, row, exact);
    if (now.lower == now.upper) return;  // satisfied, or no room to move
    const double v = row[column];
    const double direction = now.lower ? kInf : -kInf;
    if (step == 0.0) step = std::fabs(std::nextafter(v, direction) - v);
    const double candidate = now.lower ? v + step : v - step;
    if (candidate == v) {
      step *= 2;
      continue;
    }
    row[column] = candidate;
    const SideViolations after = violations_at(table, row, exact);
    if (now.lower ? after.upper : after.lower) {
      row[column] = v;
      step /= 2;
      if (v + step == v || v - step == v) return;
      continue;
    }
    step *= 2;
  }
}

void repair_rank(const RankTable& table, std::size_t column, std::vector<double>& row) {
  walk(table, column, row, false);
  walk(table, column, row, true);
}

double shrink_for_lower(const Bounds& b, double epsilon) {
  double e = epsilon;
  while (!(b.ub_strict ? b.lb + e < b.ub : b.lb + e <= b.ub)) {
    e /= 2;
    if (e == 0.0) {
      throw Error(ErrorKind::degenerate_strict_interval,
                  "no room above strict lower bound " + format_double(b.lb));
    }
  }
  return e;
}

double shrink_for_upper(const Bounds& b, double epsilon) {
  double e = epsilon;
  while (!(b.lb_strict ? b.ub - e > b.lb : b.ub - e >= b.lb)) {
    e /= 2;
    if (e == 0.0) {
      throw Error(ErrorKind::degenerate_strict_interval,
                  "no room below strict upper bound " + format_double(b.ub));
    }
  }
  return e;
}

double lower_step(double v, const Bounds& b, double epsilon) {
  v = std::max(v, b.lb);
  if (b.lb_strict && v == b.lb) v = b.lb + shrink_for_lower(b, epsilon);
  return v;
}

double upper_step(double v, const Bounds& b, double epsilon) {
  v = std::min(v, b.ub);
  if (b.ub_strict && v == b.ub) v = b.ub - shrink_for_upper(b, epsilon);
  return v;
}

}  // namespace

EpsilonPolicy EpsilonPolicy::fixed(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::invalid_argument, "epsilon must be a positive finite number");
  }
  return EpsilonPolicy(Mode::fixed, value);
}

Bounds compute_bounds(const CompiledLayer& layer, Rank rank, std::span<const double> row,
                      double bound_tolerance) {
  const RankTable& table = layer.rank(rank);
  Bounds b;
  for (std::size_t i = 0; i < table.lower.size(); ++i) {
    const auto& expr = table.lower[i];
    const double v = expr.evaluate(row);
    if (v > b.lb || (v == b.lb && expr.strict && !b.lb_strict)) {
      b.lb = v;
      b.lb_strict = expr.strict;
      b.lb_source = i;
    }
  }
  for (std::size_t i = 0; i < table.upper.size(); ++i) {
    const auto& expr = table.upper[i];
    const double v = expr.evaluate(row);
    if (v < b.ub || (v == b.ub && expr.strict && !b.ub_strict)) {
      b.ub = v;
      b.ub_strict = expr.strict;
      b.ub_source = i;
    }
  }
  if (b.lb > b.ub) {
    const double scale = std::max({1.0, std::fabs(b.lb), std::fabs(b.ub)});
    if (b.lb - b.ub > bound_tolerance * scale) {
      throw Error(ErrorKind::infeasible_bounds,
                  "rank " + std::to_string(rank) + ": lower bound " + format_double(b.lb) +
                      " exceeds upper bound " + format_double(b.ub));
    }
    // Crossing within rounding noise: the exact interval is a single point.
    const double mid = b.ub + (b.lb - b.ub) / 2;
    b.lb = b.ub = mid;
    b.lb_strict = b.ub_strict = false;
    b.collapsed = true;
  }
  return b;
}

double clamp(double x, const Bounds& bounds, const EpsilonPolicy& epsilon, ClampOrder order) {
  if (bounds.lb == bounds.ub && (bounds.lb_strict || bounds.ub_strict)) {
    throw Error(ErrorKind::degenerate_strict_interval,
                "strict bound on an empty interval at " + format_double(bounds.lb));
  }
  const double e = epsilon.value();
  if (order == ClampOrder::max_then_min) {
    return upper_step(lower_step(x, bounds, e), bounds, e);
  }
  return lower_step(upper_step(x, bounds, e), bounds, e);
}

namespace {

// Pulls both bounds inside by `ulps` units in the last place of their
// magnitude. The result is non-strict; an interval too narrow for the
// margin shrinks to its midpoint.
Bounds tightened(Bounds b, double ulps) {
  const double scale = std::max({1.0, std::isfinite(b.lb) ? std::fabs(b.lb) : 0.0,
                                 std::isfinite(b.ub) ? std::fabs(b.ub) : 0.0});
  const double margin = ulps * scale * std::numeric_limits<double>::epsilon();
  const double lb = std::isfinite(b.lb) ? b.lb + margin : b.lb;
  const double ub = std::isfinite(b.ub) ? b.ub - margin : b.ub;
  if (lb <= ub) {
    b.lb = lb;
    b.ub = ub;
  } else {
    b.lb = b.ub = b.lb + (b.ub - b.lb) / 2;
  }
  b.lb_strict = b.ub_strict = false;
  return b;
}

void correct(const CompiledLayer& layer, const ApplyOptions& options, double margin_ulps,
             ApplyTrace& trace) {
  const VariableOrdering& ordering = layer.ordering();
  trace.bounds.clear();
  trace.bounds.reserve(ordering.size());
  for (Rank r = 1; r <= ordering.size(); ++r) {
    const std::size_t column = ordering.column(r);
    const RankTable& table = layer.rank(r);
    if (table.lower.empty() && table.upper.empty()) {
      trace.bounds.emplace_back();
      continue;
    }
    const Bounds b = compute_bounds(layer, r, trace.output, options.bound_tolerance);
    const Bounds used = margin_ulps > 0 ? tightened(b, margin_ulps) : b;
    trace.output[column] = clamp(trace.output[column], used, options.epsilon, options.order);
    repair_rank(table, column, trace.output);
    trace.bounds.push_back(b);
  }
}

const LinearConstraint* first_violation(const CompiledLayer& layer, std::span<const double> row,
                                        double slack) {
  for (const auto& c : layer.constraints()) {
    if (c.violated_by(row, slack)) return &c;
  }
  return nullptr;
}

}  // namespace

ApplyTrace apply_traced(const CompiledLayer& layer, std::span<const double> sample,
                        const ApplyOptions& options) {
  check_sample(layer, sample);
  ApplyTrace trace;
  trace.output.assign(sample.begin(), sample.end());
  if (layer.constraints().satisfied_by(sample)) {
    trace.passed_through = true;
    return trace;
  }

  std::optional<Error> first_error;
  for (double ulps = 0; ulps <= options.max_margin_ulps; ulps = ulps == 0 ? 4 : ulps * 4) {
    trace.output.assign(sample.begin(), sample.end());
    try {
      correct(layer, options, ulps, trace);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_strict_interval &&
          e.kind() != ErrorKind::infeasible_bounds) {
        throw;
      }
      if (!first_error) first_error = e;
      continue;
    }
    const LinearConstraint* bad = first_violation(layer, trace.output, options.slack);
    if (!bad) {
      trace.margin_ulps = ulps;
      return trace;
    }
    if (!first_error) {
      first_error = Error(ErrorKind::post_check_failed,
                          "corrected sample violates '" + format_constraint(*bad, layer.schema()) +
                              "' (value " + format_double(bad->evaluate(trace.output)) + ")");
    }
  }
  throw *first_error;
}

std::vector<double> apply(const CompiledLayer& layer, std::span<const double> sample,
                          const ApplyOptions& options) {
  return apply_traced(layer, sample, options).output;
}

DatasetApplyError::DatasetApplyError(std::vector<RowFailure> failures)
    : Error(failures.empty() ? ErrorKind::post_check_failed : failures.front().kind,
            std::to_string(failures.size()) + " row(s) failed; first at row " +
                (failures.empty() ? std::string("?") : std::to_string(failures.front().row)) +
                ": " + (failures.empty() ? std::string() : failures.front().message)),
      failures_(std::move(failures)) {}

Dataset apply_dataset(const CompiledLayer& layer, const Dataset& dataset,
                      const ApplyOptions& options, unsigned parallelism) {
  if (!(dataset.schema() == layer.schema())) {
    throw Error(ErrorKind::schema_mismatch, "dataset schema differs from the layer schema");
  }
  if (parallelism == 0) parallelism = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t rows = dataset.rows();
  const std::size_t width = dataset.width();
  std::vector<double> corrected(dataset.values());
  std::vector<std::vector<RowFailure>> failures(parallelism);

  auto work = [&](unsigned worker, std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      try {
        auto out = apply(layer, dataset.row(r), options);
        std::copy(out.begin(), out.end(), corrected.begin() + static_cast<std::ptrdiff_t>(r * width));
      } catch (const Error& e) {
        failures[worker].push_back({r, e.kind(), e.what()});
      }
    }
  };

  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(parallelism, std::max<std::size_t>(rows, 1)));
  if (workers <= 1) {
    work(0, 0, rows);
  } else {
    std::vector<std::jthread> threads;
    const std::size_t chunk = (rows + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(rows, w * chunk);
      const std::size_t end = std::min(rows, begin + chunk);
      threads.emplace_back(work, w, begin, end);
    }
  }

  std::vector<RowFailure> all;
  for (auto& f : failures) all.insert(all.end(), f.begin(), f.end());
  if (!all.empty()) {
    std::sort(all.begin(), all.end(),
              [](const RowFailure& a, const RowFailure& b) { return a.row < b.row; });
    throw DatasetApplyError(std::move(all));
  }

  Dataset out = dataset;
  for (std::size_t r = 0; r < rows; ++r) {
    out.set_row(r, std::span<const double>(corrected.data() + r * width, width));
  }
  return out;
}

Matrix jacobian(const CompiledLayer& layer, std::span<const double> sample,
                const JacobianOptions& options) {
  check_sample(layer, sample);
  const std::size_t d = sample.size();
  Matrix jac{d, d, std::vector<double>(d * d, 0.0)};
  for (std::size_t c = 0; c < d; ++c) jac(c, c) = 1.0;

  const double tol = options.boundary_tolerance;
  std::vector<double> row(sample.begin(), sample.end());
  const VariableOrdering& ordering = layer.ordering();
  for (Rank r = 1; r <= ordering.size(); ++r) {
    const std::size_t column = ordering.column(r);
    const RankTable& table = layer.rank(r);
    if (table.lower.empty() && table.upper.empty()) continue;
    const Bounds b = compute_bounds(layer, r, row, options.apply.bound_tolerance);
    const double x = row[column];

    // Which expression, if any, determines the output at this rank.
    const BoundExpression* active = nullptr;
    bool near = false;
    if (x < b.lb) {
      active = &table.lower[*b.lb_source];
    } else if (x > b.ub) {
      active = &table.upper[*b.ub_source];
    }
    if (b.lb_source && std::fabs(x - b.lb) < tol) near = true;
    if (b.ub_source && std::fabs(x - b.ub) < tol) near = true;
    if (active) {
      const auto& side = active->side == BoundSide::lower ? table.lower : table.upper;
      const double bound = active->side == BoundSide::lower ? b.lb : b.ub;
      for (const auto& other : side) {
        if (&other != active && std::fabs(other.evaluate(row) - bound) < tol) near = true;
      }
    }
    if (near) {
      if (options.boundary == BoundaryPolicy::error) {
        throw Error(ErrorKind::on_boundary, "feature '" + layer.schema()[column].name +
                                                "' sits on a bound; derivative is one-sided");
      }
      if (options.boundary == BoundaryPolicy::free) {
        active = nullptr;
      } else if (!active) {
        const bool lower_closer =
            b.lb_source && (!b.ub_source || std::fabs(x - b.lb) <= std::fabs(x - b.ub));
        active = lower_closer ? &table.lower[*b.lb_source] : &table.upper[*b.ub_source];
      }
    }

    if (active) {
      std::vector<double> composed(d, 0.0);
      for (const auto& term : active->terms) {
        for (std::size_t k = 0; k < d; ++k) composed[k] += term.coefficient * jac(term.column, k);
      }
      for (std::size_t k = 0; k < d; ++k) jac(column, k) = composed[k];
    }
    row[column] = clamp(x, b, options.apply.epsilon, options.apply.order);
    repair_rank(table, column, row);
  }
  return jac;
}

}  // namespace clayer
