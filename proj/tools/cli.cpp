#include "cli.hpp"

#include <CLI11.hpp>
#include <clayer/dataset.hpp>
#include <clayer/error.hpp>
#include <clayer/fm.hpp>
#include <clayer/layer_io.hpp>
#include <clayer/metrics.hpp>
#include <clayer/numeric_format.hpp>
#include <clayer/orderings.hpp>
#include <clayer/parser.hpp>
#include <clayer/projection.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace clayer::cli {

namespace {

struct RunConfig {
  std::string schema_path;
  std::string header_from;
  std::vector<std::string> categorical;
  std::string constraints_path;
  std::string layer_path;
  std::string input_path;
  std::string output_path;
  std::string real_path;
  std::string synth_path;
  std::string data_path;
  std::string scores_path;
  std::string json_path;
  std::string ordering = "natural";
  std::string ordering_file;
  std::uint64_t seed = 0;
  std::string bandwidth = "scott";
  std::string epsilon = "machine_min";
  double slack = 0.0;
  std::size_t cap = kDefaultBlowupCap;
  unsigned threads = 1;
  std::vector<double> boundary_p;
  std::string model_label;
  std::string dataset_label;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorKind::io_error, "failed writing '" + path + "'");
}

KindHints kind_hints(const RunConfig& config) {
  KindHints hints;
  for (const auto& name : config.categorical) hints[name] = FeatureKind::categorical;
  return hints;
}

/// --schema wins; otherwise the header of --header-from (or `fallback_csv`).
FeatureSchema load_schema(const RunConfig& config, const std::string& fallback_csv = {}) {
  if (!config.schema_path.empty()) {
    FeatureSchema schema = parse_schema_file(read_file(config.schema_path));
    if (config.categorical.empty()) return schema;
    std::vector<Feature> features = schema.features();
    for (const auto& name : config.categorical) {
      features[schema.index_of(name)].kind = FeatureKind::categorical;
    }
    return FeatureSchema(std::move(features));
  }
  const std::string& csv = !config.header_from.empty() ? config.header_from : fallback_csv;
  if (csv.empty()) throw UsageError("a schema is required: pass --schema or --header-from");
  const CsvTable table = parse_csv(read_file(csv));
  return parse_schema(table.header, kind_hints(config));
}

Dataset load_dataset(const std::string& path, const FeatureSchema& schema) {
  return Dataset::from_table(parse_csv(read_file(path)), schema);
}

ConstraintSet load_constraints(const RunConfig& config, const FeatureSchema& schema) {
  if (config.constraints_path.empty()) throw UsageError("--constraints is required");
  return parse_constraints(read_file(config.constraints_path), schema);
}

KdeBandwidth parse_bandwidth(const std::string& text) {
  if (text == "scott") return KdeBandwidth::scott();
  auto value = parse_double(text);
  if (!value) throw UsageError("--bandwidth must be 'scott' or a positive number");
  return KdeBandwidth::fixed(*value);
}

EpsilonPolicy parse_epsilon(const std::string& text) {
  if (text == "machine_min") return EpsilonPolicy::machine_min();
  auto value = parse_double(text);
  if (!value) throw UsageError("--eps must be 'machine_min' or a positive number");
  return EpsilonPolicy::fixed(*value);
}

nlohmann::json scores_to_json(const OrderingResult& result, const FeatureSchema& schema,
                              const RunConfig& config) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [column, score] : result.scores.scores) scores[schema[column].name] = score;
  nlohmann::json order = nlohmann::json::array();
  for (std::size_t column : result.ordering.columns()) order.push_back(schema[column].name);
  nlohmann::json out = {{"method", result.scores.method}, {"ordering", order}, {"scores", scores}};
  if (result.scores.method == "random") out["seed"] = config.seed;
  if (result.scores.method == "kde") out["bandwidth"] = config.bandwidth;
  return out;
}

OrderingResult compute_ordering(const RunConfig& config, const FeatureSchema& schema) {
  const std::string& method = config.ordering;
  if (method == "natural") {
    auto ordering = VariableOrdering::natural(schema);
    return {ordering, {"natural", {}}};
  }
  if (method == "random") {
    return {random_ordering(schema, config.seed), {"random", {}}};
  }
  if (method == "file") {
    if (config.ordering_file.empty()) throw UsageError("--ordering file needs --ordering-file");
    return {parse_ordering_file(read_file(config.ordering_file), schema), {"file", {}}};
  }
  if (method == "corr" || method == "kde" || method == "wasserstein") {
    if (config.real_path.empty() || config.synth_path.empty()) {
      throw UsageError("--ordering " + method + " needs --real and --synth");
    }
    const Dataset real = load_dataset(config.real_path, schema);
    const Dataset synth = load_dataset(config.synth_path, schema);
    if (method == "corr") return corr_ordering(real, synth);
    if (method == "kde") return kde_ordering(real, synth, parse_bandwidth(config.bandwidth));
    return wasserstein_ordering(real, synth);
  }
  throw UsageError("unknown ordering method '" + method + "'");
}

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(sizes[i]);
  }
  return out;
}

int cmd_sat(const RunConfig& config, std::ostream& out) {
  const FeatureSchema schema = load_schema(config);
  const ConstraintSet constraints = load_constraints(config, schema);
  const OrderingResult ordering = compute_ordering(config, schema);
  const SatReport report = check_satisfiable(constraints, ordering.ordering, config.cap);
  out << sat_report_to_json(report, schema).dump(2) << '\n';
  return report.satisfiable ? kOk : kUnsatisfiable;
}

int cmd_compile(const RunConfig& config, std::ostream& out) {
  if (config.output_path.empty()) throw UsageError("--output is required");
  const FeatureSchema schema = load_schema(config);
  const ConstraintSet constraints = load_constraints(config, schema);
  const OrderingResult ordering = compute_ordering(config, schema);
  const CompiledLayer layer = compile(constraints, ordering.ordering, {config.cap});
  write_file(config.output_path, serialize_layer(layer));
  out << "compiled " << constraints.size() << " constraint(s) over " << layer.rank_count()
      << " ranked feature(s); ordering=" << ordering.scores.method;
  if (ordering.scores.method == "random") out << " seed=" << config.seed;
  out << "\nper-rank sizes (rank " << layer.rank_count() << " down to 0): "
      << join_sizes(layer.per_rank_sizes()) << '\n';
  return kOk;
}

int cmd_order(const RunConfig& config, std::ostream& out) {
  if (config.output_path.empty()) throw UsageError("--output is required");
  const FeatureSchema schema =
      load_schema(config, !config.real_path.empty() ? config.real_path : config.synth_path);
  const OrderingResult result = compute_ordering(config, schema);
  write_file(config.output_path, format_ordering_file(result.ordering, schema));
  const std::string scores = scores_to_json(result, schema, config).dump(2) + "\n";
  if (!config.scores_path.empty()) {
    write_file(config.scores_path, scores);
  } else {
    out << scores;
  }
  return kOk;
}

int cmd_apply(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.layer_path.empty()) throw UsageError("--layer is required");
  if (config.input_path.empty()) throw UsageError("--input is required");
  if (config.output_path.empty()) throw UsageError("--output is required");
  const CompiledLayer layer = deserialize_layer(read_file(config.layer_path));
  const Dataset input = load_dataset(config.input_path, layer.schema());
  ApplyOptions options;
  options.epsilon = parse_epsilon(config.epsilon);
  options.slack = config.slack;
  Dataset corrected;
  try {
    corrected = apply_dataset(layer, input, options, config.threads);
  } catch (const DatasetApplyError& e) {
    for (const auto& f : e.failures()) {
      err << "row " << f.row << ": " << to_string(f.kind) << ": " << f.message << '\n';
    }
    return e.kind() == ErrorKind::post_check_failed ? kPostCheck : kUsageOrIo;
  }
  if (config.output_path == "-") {
    corrected.write_csv(out);
  } else {
    write_file(config.output_path, corrected.to_csv());
  }

  std::size_t changed = 0;
  std::vector<double> max_change(layer.schema().size(), 0.0);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    bool row_changed = false;
    for (std::size_t c = 0; c < input.width(); ++c) {
      if (!layer.schema().is_continuous(c)) continue;
      const double delta = std::fabs(corrected.value(r, c) - input.value(r, c));
      if (corrected.value(r, c) != input.value(r, c)) row_changed = true;
      max_change[c] = std::max(max_change[c], delta);
    }
    if (row_changed) ++changed;
  }
  std::ostream& summary = config.output_path == "-" ? err : out;
  summary << "rows=" << input.rows() << " changed=" << changed << " max_abs_change:";
  for (std::size_t c = 0; c < max_change.size(); ++c) {
    if (!layer.schema().is_continuous(c)) continue;
    summary << ' ' << layer.schema()[c].name << '=' << format_double(max_change[c]);
  }
  summary << '\n';
  return kOk;
}

int cmd_metrics(const RunConfig& config, std::ostream& out) {
  if (config.data_path.empty()) throw UsageError("--data is required");
  const FeatureSchema schema = load_schema(config, config.data_path);
  const ConstraintSet constraints = load_constraints(config, schema);
  const Dataset data = load_dataset(config.data_path, schema);
  std::optional<Dataset> real;
  if (!config.real_path.empty()) real = load_dataset(config.real_path, schema);
  ReportOptions options;
  options.slack = config.slack;
  options.model_label = config.model_label;
  options.dataset_label = config.dataset_label;
  options.boundary_p = config.boundary_p;
  const MetricsReport report = build_report(data, constraints, real ? &*real : nullptr, options);
  const std::string json = report_to_json(report).dump(2) + "\n";
  if (!config.json_path.empty()) {
    write_file(config.json_path, json);
    out << report_to_text(report);
  } else {
    out << json << report_to_text(report);
  }
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::unsatisfiable: return kUnsatisfiable;
    case ErrorKind::blowup_limit_exceeded: return kBlowup;
    case ErrorKind::post_check_failed: return kPostCheck;
    default: return kUsageOrIo;
  }
}

void configure_logging() {
  static bool configured = false;
  if (!configured) {
    auto logger = spdlog::stderr_logger_mt("clayer");
    spdlog::set_default_logger(logger);
    configured = true;
  }
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("CLAYER_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  RunConfig config;
  CLI::App app{"Compile linear constraints into a correction layer and apply it to tabular data",
               "clayer"};
  app.set_config("--config", "", "Read options from a key = value file (flags override it)");
  app.require_subcommand(1);

  auto add_schema = [&](CLI::App* cmd) {
    cmd->add_option("--schema", config.schema_path, "Schema file (name [continuous|categorical])");
    cmd->add_option("--header-from", config.header_from, "Take the schema from this CSV header");
    cmd->add_option("--categorical", config.categorical, "Categorical feature names")
        ->delimiter(',');
  };
  auto add_ordering = [&](CLI::App* cmd) {
    cmd->add_option("--ordering", config.ordering,
                    "natural | random | corr | kde | wasserstein | file")
        ->check(CLI::IsMember({"natural", "random", "corr", "kde", "wasserstein", "file"}));
    cmd->add_option("--ordering-file", config.ordering_file, "Ordering file for --ordering file");
    cmd->add_option("--seed", config.seed, "Seed for the random ordering");
    cmd->add_option("--real", config.real_path, "Real data CSV (data-driven orderings)");
    cmd->add_option("--synth", config.synth_path, "Synthetic data CSV (data-driven orderings)");
    cmd->add_option("--bandwidth", config.bandwidth, "KDE bandwidth: scott or a number");
  };
  auto add_cap = [&](CLI::App* cmd) {
    cmd->add_option("--cap", config.cap, "Maximum constraints per elimination step")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* sat = app.add_subcommand("sat", "Decide satisfiability; exit 2 when unsatisfiable");
  add_schema(sat);
  sat->add_option("--constraints", config.constraints_path, "Constraint file")->required();
  add_ordering(sat);
  add_cap(sat);

  CLI::App* compile_cmd = app.add_subcommand("compile", "Compile constraints into a layer file");
  add_schema(compile_cmd);
  compile_cmd->add_option("--constraints", config.constraints_path, "Constraint file")->required();
  compile_cmd->add_option("-o,--output", config.output_path, "Layer JSON to write")->required();
  add_ordering(compile_cmd);
  add_cap(compile_cmd);

  CLI::App* order = app.add_subcommand("order", "Compute a variable ordering from data");
  add_schema(order);
  order->add_option("--method", config.ordering, "random | corr | kde | wasserstein")
      ->check(CLI::IsMember({"random", "corr", "kde", "wasserstein"}))
      ->required();
  order->add_option("--seed", config.seed, "Seed for the random ordering");
  order->add_option("--real", config.real_path, "Real data CSV");
  order->add_option("--synth", config.synth_path, "Synthetic data CSV");
  order->add_option("--bandwidth", config.bandwidth, "KDE bandwidth: scott or a number");
  order->add_option("-o,--output", config.output_path, "Ordering file to write")->required();
  order->add_option("--scores", config.scores_path, "Write the score JSON here instead of stdout");

  CLI::App* apply_cmd = app.add_subcommand("apply", "Correct a CSV with a compiled layer");
  apply_cmd->add_option("--layer", config.layer_path, "Compiled layer JSON")->required();
  apply_cmd->add_option("-i,--input", config.input_path, "Input CSV")->required();
  apply_cmd->add_option("-o,--output", config.output_path, "Output CSV ('-' for stdout)")
      ->required();
  apply_cmd->add_option("--eps", config.epsilon, "machine_min or a positive number");
  apply_cmd->add_option("--slack", config.slack, "Allowed violation in the final check")
      ->check(CLI::NonNegativeNumber);
  apply_cmd->add_option("--threads", config.threads, "Worker threads (0 = all cores)");

  CLI::App* metrics = app.add_subcommand("metrics", "Report CVR, CVC, sCVC and distances");
  add_schema(metrics);
  metrics->add_option("--constraints", config.constraints_path, "Constraint file")->required();
  metrics->add_option("--data", config.data_path, "CSV to evaluate")->required();
  metrics->add_option("--real", config.real_path, "Real data CSV for WD/JSD and band ranges");
  metrics->add_option("--slack", config.slack, "Violation slack")->check(CLI::NonNegativeNumber);
  metrics->add_option("--boundary-p", config.boundary_p, "Band proportions, e.g. 0.01,0.05")
      ->delimiter(',');
  metrics->add_option("--model", config.model_label, "Model label for the table");
  metrics->add_option("--dataset-label", config.dataset_label, "Dataset label for the table");
  metrics->add_option("--json", config.json_path, "Write the JSON report here");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("clayer");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "clayer: " << e.what() << '\n';
    return kUsageOrIo;
  }

  try {
    if (sat->parsed()) return cmd_sat(config, out);
    if (compile_cmd->parsed()) return cmd_compile(config, out);
    if (order->parsed()) return cmd_order(config, out);
    if (apply_cmd->parsed()) return cmd_apply(config, out, err);
    if (metrics->parsed()) return cmd_metrics(config, out);
  } catch (const UnsatisfiableError& e) {
    const auto& schema_source = e.report();
    err << "clayer: " << e.what() << '\n';
    if (schema_source.witness) {
      // The witness is variable-free, so any schema formats it.
      err << "witness: "
          << format_constraint(*schema_source.witness, FeatureSchema({{"_", FeatureKind::continuous}}))
          << '\n';
    }
    return kUnsatisfiable;
  } catch (const Error& e) {
    err << "clayer: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const UsageError& e) {
    err << "clayer: " << e.what() << '\n';
    return kUsageOrIo;
  }
  return kUsageOrIo;
}

}  // namespace clayer::cli
