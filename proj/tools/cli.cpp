#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "permdrift/dataset.hpp"
#include "permdrift/drift.hpp"
#include "permdrift/error.hpp"
#include "permdrift/features.hpp"
#include "permdrift/model.hpp"
#include "permdrift/parallel.hpp"
#include "permdrift/protocol.hpp"
#include "permdrift/report.hpp"
#include "permdrift/rng.hpp"
#include "permdrift/synth.hpp"

namespace permdrift::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_digest(const fs::path& path) { return hex64(fnv1a64(read_file(path))); }

json read_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path absolute_path(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal(); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

// Overlays `src` on `dst`; every key in `src` must already exist in `dst`.
void merge_into(json& dst, const json& src, const std::string& where) {
  if (!src.is_object()) throw UsageError(where + " must be an object");
  for (const auto& [key, value] : src.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!dst.contains(key)) throw UsageError("unknown config key '" + path + "'");
    if (dst[key].is_object()) {
      merge_into(dst[key], value, path);
    } else {
      dst[key] = value;
    }
  }
}

json input_entry(const std::string& path) { return {{"path", path}, {"fnv1a64", file_digest(path)}}; }

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config value '" + where + key + "' is missing or has the wrong type");
  }
}

// ---- eval / train configuration -------------------------------------------

json eval_defaults() {
  const ForestParams rf;
  const MlpParams mlp;
  return {
      {"strategy", "matrix"},
      {"samples", nullptr},
      {"registry", nullptr},
      {"seed", 42},
      {"exclude", "all"},
      {"model", "rf"},
      {"rf",
       {{"n_trees", rf.n_trees},
        {"max_depth", nullptr},
        {"min_leaf", rf.min_leaf},
        {"features_per_split", "sqrt"},
        {"seed", nullptr}}},
      {"mlp",
       {{"hidden_units", mlp.hidden_units},
        {"learning_rate", mlp.learning_rate},
        {"beta1", mlp.beta1},
        {"beta2", mlp.beta2},
        {"epsilon", mlp.epsilon},
        {"epochs", mlp.epochs},
        {"batch_size", mlp.batch_size},
        {"validation_fraction", mlp.validation_fraction},
        {"early_stop", mlp.early_stop},
        {"patience", mlp.patience},
        {"dropout_rate", mlp.dropout_rate},
        {"seed", nullptr}}},
      {"split", {{"train_fraction", 0.8}, {"stratified", true}, {"seed", nullptr}}},
      {"balance", {{"method", "over"}, {"seed", nullptr}}},
      {"pairs", "ordered-all"},
      {"scope", "per-train-year"},
      {"dataset_tag", ""},
  };
}

// Fills every sub-seed left unset with the top-level seed and canonicalizes
// enum spellings, so the manifest holds the fully resolved run.
void normalize_eval(json& cfg) {
  const auto seed = get_as<std::uint64_t>(cfg, "seed", "");
  for (const char* block : {"rf", "mlp", "split", "balance"}) {
    if (cfg[block]["seed"].is_null()) cfg[block]["seed"] = seed;
  }
  if (cfg["samples"].is_null()) throw UsageError("--samples is required");
  if (cfg["registry"].is_null()) throw UsageError("--registry is required");
  cfg["samples"] = absolute_path(get_as<std::string>(cfg, "samples", "")).string();
  cfg["registry"] = absolute_path(get_as<std::string>(cfg, "registry", "")).string();
  if (get_as<std::string>(cfg, "dataset_tag", "").empty()) {
    cfg["dataset_tag"] = fs::path(cfg["samples"].get<std::string>()).stem().string();
  }
  const std::string strategy = get_as<std::string>(cfg, "strategy", "");
  if (strategy != "static" && strategy != "matrix" && strategy != "suite") {
    throw UsageError("strategy must be static, matrix or suite");
  }
  const std::string model = get_as<std::string>(cfg, "model", "");
  if (model != "rf" && model != "mlp") throw UsageError("model must be rf or mlp");
  const auto exclude = ExclusionSpec::parse(get_as<std::string>(cfg, "exclude", ""));
  std::string canonical;
  for (auto [flag, letter] : {std::pair{ExclusionFlag::Deprecated, "d"}, std::pair{ExclusionFlag::Restricted, "r"},
                              std::pair{ExclusionFlag::NotThirdParty, "n"}}) {
    if (exclude.contains(flag)) canonical += canonical.empty() ? letter : std::string(",") + letter;
  }
  cfg["exclude"] = canonical.empty() ? "all" : canonical;
  cfg["balance"]["method"] =
      std::string(to_string(parse_balance_method(get_as<std::string>(cfg["balance"], "method", "balance."))));
  cfg["pairs"] = std::string(to_string(parse_pair_mode(get_as<std::string>(cfg, "pairs", ""))));
  cfg["scope"] = std::string(to_string(parse_balance_scope(get_as<std::string>(cfg, "scope", ""))));
}

ModelParams model_params(const json& cfg) {
  if (cfg.at("model") == "rf") {
    const json& j = cfg.at("rf");
    ForestParams p;
    p.n_trees = get_as<int>(j, "n_trees", "rf.");
    if (!j.at("max_depth").is_null()) p.max_depth = get_as<int>(j, "max_depth", "rf.");
    p.min_leaf = get_as<int>(j, "min_leaf", "rf.");
    const auto fps = get_as<std::string>(j, "features_per_split", "rf.");
    if (fps == "sqrt") {
      p.features_per_split = FeaturesPerSplit::Sqrt;
    } else if (fps == "all") {
      p.features_per_split = FeaturesPerSplit::All;
    } else {
      throw UsageError("rf.features_per_split must be sqrt or all");
    }
    p.seed = get_as<std::uint64_t>(j, "seed", "rf.");
    return p;
  }
  const json& j = cfg.at("mlp");
  MlpParams p;
  p.hidden_units = get_as<int>(j, "hidden_units", "mlp.");
  p.learning_rate = get_as<double>(j, "learning_rate", "mlp.");
  p.beta1 = get_as<double>(j, "beta1", "mlp.");
  p.beta2 = get_as<double>(j, "beta2", "mlp.");
  p.epsilon = get_as<double>(j, "epsilon", "mlp.");
  p.epochs = get_as<int>(j, "epochs", "mlp.");
  p.batch_size = get_as<int>(j, "batch_size", "mlp.");
  p.validation_fraction = get_as<double>(j, "validation_fraction", "mlp.");
  p.early_stop = get_as<bool>(j, "early_stop", "mlp.");
  p.patience = get_as<int>(j, "patience", "mlp.");
  p.dropout_rate = get_as<double>(j, "dropout_rate", "mlp.");
  p.seed = get_as<std::uint64_t>(j, "seed", "mlp.");
  return p;
}

SplitConfig split_config(const json& cfg) {
  const json& j = cfg.at("split");
  return {get_as<double>(j, "train_fraction", "split."), get_as<bool>(j, "stratified", "split."),
          get_as<std::uint64_t>(j, "seed", "split.")};
}

BalanceConfig balance_config(const json& cfg) {
  const json& j = cfg.at("balance");
  return {parse_balance_method(get_as<std::string>(j, "method", "balance.")),
          get_as<std::uint64_t>(j, "seed", "balance.")};
}

// Flags shared by eval and train; applied over the config file when given.
struct ModelFlags {
  std::string samples, registry, model, exclude, balance;
  std::uint64_t seed = 42;
  double train_frac = 0.8;
  int trees = 100, max_depth = 0, hidden = 128, epochs = 15, batch = 15;
  double lr = 0.001;
  std::string config;
  std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> bindings;

  void add(CLI::App& app) {
    bind(app.add_option("--samples", samples, "samples CSV"), [this](json& c) { c["samples"] = samples; });
    bind(app.add_option("--registry", registry, "permission registry CSV"),
         [this](json& c) { c["registry"] = registry; });
    bind(app.add_option("--model", model, "rf or mlp"), [this](json& c) { c["model"] = model; });
    bind(app.add_option("--exclude", exclude, "comma-separated subset of d,r,n"),
         [this](json& c) { c["exclude"] = exclude.empty() ? "all" : exclude; });
    bind(app.add_option("--balance", balance, "none, over or under"),
         [this](json& c) { c["balance"]["method"] = balance; });
    bind(app.add_option("--seed", seed, "top-level seed"), [this](json& c) { c["seed"] = seed; });
    bind(app.add_option("--train-frac", train_frac, "static split train fraction"),
         [this](json& c) { c["split"]["train_fraction"] = train_frac; });
    bind(app.add_option("--trees", trees, "forest size"), [this](json& c) { c["rf"]["n_trees"] = trees; });
    bind(app.add_option("--max-depth", max_depth, "forest depth limit"),
         [this](json& c) { c["rf"]["max_depth"] = max_depth; });
    bind(app.add_option("--hidden", hidden, "MLP hidden units"),
         [this](json& c) { c["mlp"]["hidden_units"] = hidden; });
    bind(app.add_option("--epochs", epochs, "MLP epochs"), [this](json& c) { c["mlp"]["epochs"] = epochs; });
    bind(app.add_option("--batch-size", batch, "MLP batch size"),
         [this](json& c) { c["mlp"]["batch_size"] = batch; });
    bind(app.add_option("--lr", lr, "MLP learning rate"), [this](json& c) { c["mlp"]["learning_rate"] = lr; });
    app.add_option("--config", config, "JSON run configuration");
  }

  void bind(CLI::Option* opt, std::function<void(json&)> apply) { bindings.emplace_back(opt, std::move(apply)); }

  void apply(json& cfg) const {
    if (!config.empty()) merge_into(cfg, read_json_file(config), "");
    for (const auto& [opt, fn] : bindings) {
      if (opt->count() > 0) fn(cfg);
    }
  }
};

struct Inputs {
  PermissionRegistry registry;
  Dataset dataset;
};

Inputs load_inputs(const json& cfg) {
  Inputs in;
  in.registry = load_registry(cfg.at("registry").get<std::string>());
  in.dataset = load_samples(cfg.at("samples").get<std::string>(), in.registry);
  return in;
}

json scores_json(const Scores& s) {
  json j;
  for (auto m : {Metric::Accuracy, Metric::PrecisionBenign, Metric::RecallBenign, Metric::F1Benign,
                 Metric::PrecisionMalware, Metric::RecallMalware, Metric::F1Malware}) {
    j[std::string(to_string(m))] = s.get(m);
  }
  json undefined = json::array();
  for (auto m : {Metric::Accuracy, Metric::PrecisionBenign, Metric::RecallBenign, Metric::F1Benign,
                 Metric::PrecisionMalware, Metric::RecallMalware, Metric::F1Malware}) {
    if (s.is_undefined(m)) undefined.push_back(std::string(to_string(m)));
  }
  j["undefined"] = undefined;
  return j;
}

std::string matrix_file_name(ExclusionSpec spec) {
  std::string label = spec.label();
  for (auto& c : label) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return "matrix_" + label + ".csv";
}

std::string matrix_text(const EvalMatrix& m) {
  std::ostringstream out;
  write_matrix_csv(out, m);
  return out.str();
}

json skipped_json(const EvalMatrix& m) {
  json arr = json::array();
  for (const auto& s : m.skipped) {
    arr.push_back({{"variant", m.variant.label()}, {"year", s.year}, {"reason", s.reason}});
  }
  return arr;
}

void write_output(const fs::path& dir, const std::string& name, const std::string& text, json& outputs) {
  write_text_file(dir / name, text);
  outputs.push_back(name);
}

int execute_eval(const json& cfg, const fs::path& out_dir, int threads, std::ostream& out) {
  const Inputs in = load_inputs(cfg);
  const ModelParams model = model_params(cfg);
  const BalanceConfig balance = balance_config(cfg);
  const ExclusionSpec spec = ExclusionSpec::parse(cfg.at("exclude").get<std::string>());
  ensure_dir(out_dir);

  json manifest;
  manifest["tool"] = "permdrift";
  manifest["version"] = PERMDRIFT_VERSION;
  manifest["command"] = "eval";
  manifest["config"] = cfg;
  manifest["inputs"] = {{"samples", input_entry(cfg.at("samples").get<std::string>())}, {"registry", input_entry(cfg.at("registry").get<std::string>())}};
  manifest["registry_digest"] = hex64(in.registry.digest());
  json outputs = json::array();
  json skipped = json::array();

  const std::string strategy = cfg.at("strategy");
  if (strategy == "static") {
    const StaticResult r = run_static(in.dataset, in.registry, spec, model, split_config(cfg), balance, threads);
    json j = {{"variant", spec.label()},
              {"model", cfg.at("model")},
              {"scores", scores_json(r.scores)},
              {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}}},
              {"n_train", r.n_train},
              {"n_test", r.n_test},
              {"feature_count", r.feature_count}};
    write_output(out_dir, "scores.json", dump(j), outputs);
    out << "static " << spec.label() << ": accuracy " << format_double(r.scores.accuracy) << ", f1_malware "
        << format_double(r.scores.f1_malware) << "\n";
  } else {
    YearMatrixOptions options;
    options.pairs = parse_pair_mode(cfg.at("pairs").get<std::string>());
    options.scope = parse_balance_scope(cfg.at("scope").get<std::string>());
    options.dataset_tag = cfg.at("dataset_tag");
    options.threads = threads;
    std::vector<std::pair<std::string, EvalMatrix>> matrices;
    if (strategy == "matrix") {
      matrices.emplace_back("matrix.csv", run_year_matrix(in.dataset, in.registry, spec, model, balance, options));
    } else {
      for (auto& [variant, m] : run_exclusion_suite(in.dataset, in.registry, model, balance, options)) {
        matrices.emplace_back(matrix_file_name(variant), std::move(m));
      }
    }
    for (const auto& [name, m] : matrices) {
      write_output(out_dir, name, matrix_text(m), outputs);
      for (auto& s : skipped_json(m)) skipped.push_back(s);
      out << name << ": " << m.cells.size() << " cells, " << m.skipped.size() << " skipped train years\n";
    }
  }
  manifest["outputs"] = outputs;
  manifest["skipped"] = skipped;
  write_text_file(out_dir / "manifest.json", dump(manifest));
  return kOk;
}

// ---- synth -----------------------------------------------------------------

int execute_synth(const json& cfg, const fs::path& out_dir, const std::string& out_name, int threads,
                  std::ostream& out) {
  const auto registry = load_registry(cfg.at("registry").get<std::string>());
  const auto schedule = parse_schedule(read_file(cfg.at("schedule").get<std::string>()), registry);
  const auto data = generate(schedule, registry, get_as<std::uint64_t>(cfg, "seed", ""), threads);
  ensure_dir(out_dir);
  save_samples(out_dir / out_name, data);
  json manifest = {{"tool", "permdrift"},
                   {"version", PERMDRIFT_VERSION},
                   {"command", "synth"},
                   {"config", cfg},
                   {"inputs",
                    {{"schedule", input_entry(cfg.at("schedule").get<std::string>())}, {"registry", input_entry(cfg.at("registry").get<std::string>())}}},
                   {"outputs", json::array({out_name})}};
  write_text_file(out_dir / (out_name + ".manifest.json"), dump(manifest));
  out << "wrote " << data.size() << " samples over " << schedule.years.size() << " years to " << out_name << "\n";
  return kOk;
}

// ---- drift -----------------------------------------------------------------

EvalMatrix load_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_matrix_csv(in);
}

PermutationOptions permutation_options(const json& cfg) {
  PermutationOptions o;
  o.exact_limit = get_as<double>(cfg, "exact_limit", "");
  o.monte_carlo_draws = get_as<std::uint64_t>(cfg, "draws", "");
  o.seed = get_as<std::uint64_t>(cfg, "seed", "");
  return o;
}

json ks_summary(const KSMatrix& ks, PValueMethod method) {
  json pairs = json::array();
  for (const auto& [key, r] : ks.results) {
    if (key.first < key.second) {
      pairs.push_back({{"t1", key.first}, {"t2", key.second}, {"d", r.d}, {"p", r.p_value}, {"exact", r.exact}});
    }
  }
  return {{"metric", std::string(to_string(ks.metric))},
          {"alpha", ks.alpha},
          {"method", std::string(to_string(method))},
          {"years", ks.years},
          {"ordered_pairs", ks.results.size()},
          {"significant_count", ks.significant_count},
          {"pairs", pairs}};
}

int execute_drift(const json& cfg, const fs::path& out_dir, int threads, std::ostream& out) {
  const EvalMatrix matrix = load_matrix(cfg.at("matrix").get<std::string>());
  const Metric metric = parse_metric(cfg.at("metric").get<std::string>());
  const PValueMethod method = parse_pvalue_method(cfg.at("method").get<std::string>());
  const double alpha = get_as<double>(cfg, "alpha", "");
  const KSMatrix ks = ks_matrix(matrix, metric, alpha, method, permutation_options(cfg), threads);
  ensure_dir(out_dir);
  std::ostringstream csv;
  write_ks_csv(csv, ks);
  write_text_file(out_dir / "ks.csv", csv.str());
  write_text_file(out_dir / "ks_summary.json", dump(ks_summary(ks, method)));
  json manifest = {{"tool", "permdrift"},
                   {"version", PERMDRIFT_VERSION},
                   {"command", "drift"},
                   {"config", cfg},
                   {"inputs", {{"matrix", input_entry(cfg.at("matrix").get<std::string>())}}},
                   {"outputs", json::array({"ks.csv", "ks_summary.json"})}};
  write_text_file(out_dir / "ks_manifest.json", dump(manifest));
  out << "significant ordered pairs at alpha " << format_double(alpha) << ": " << ks.significant_count << " of "
      << ks.results.size() << "\n";
  return kOk;
}

// ---- report ----------------------------------------------------------------

std::vector<std::string> matrix_files_in(const fs::path& dir) {
  std::vector<std::string> names;
  for (const char* n : {"matrix.csv", "matrix_all.csv", "matrix_d.csv", "matrix_r.csv", "matrix_n.csv"}) {
    if (fs::exists(dir / n)) names.emplace_back(n);
  }
  return names;
}

struct ReportArgs {
  std::string in, style, format = "json", out, matrix, metric = "accuracy", method = "perm";
  double alpha = 0.05;
  std::uint64_t seed = 42;
};

std::string report_text(const ReportArgs& a) {
  const fs::path dir = a.in;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, dir.string() + " is not a directory");
  const Metric metric = parse_metric(a.metric);
  const auto files = matrix_files_in(dir);
  auto pick_matrix = [&]() -> fs::path {
    if (!a.matrix.empty()) return dir / a.matrix;
    if (files.empty()) throw Error(ErrorCode::IoFailure, "no matrix CSV in " + dir.string());
    return dir / files.front();
  };
  PermutationOptions perm;
  perm.seed = a.seed;
  const PValueMethod method = parse_pvalue_method(a.method);
  if (files.empty() && (a.style == "table4" || a.style == "table5")) {
    throw Error(ErrorCode::IoFailure, "no matrix CSV in " + dir.string());
  }

  if (a.style == "table4") {
    if (a.format == "svg") throw UsageError("table4 supports csv and json");
    json rows = json::array();
    std::ostringstream csv;
    csv << "matrix,red,yellow,green,total\n";
    for (const auto& f : files) {
      const auto c = summarize_counts(load_matrix(dir / f), {}, metric);
      rows.push_back({{"matrix", f}, {"red", c.red}, {"yellow", c.yellow}, {"green", c.green}, {"total", c.total()}});
      csv << f << ',' << c.red << ',' << c.yellow << ',' << c.green << ',' << c.total() << '\n';
    }
    return a.format == "csv" ? csv.str() : dump({{"metric", a.metric}, {"rows", rows}});
  }
  if (a.style == "table5") {
    if (a.format == "svg") throw UsageError("table5 supports csv and json");
    json rows = json::array();
    std::ostringstream csv;
    csv << "matrix,accuracy,f1_malware\n";
    for (const auto& f : files) {
      const auto m = load_matrix(dir / f);
      const auto acc = ks_matrix(m, Metric::Accuracy, a.alpha, method, perm);
      const auto f1 = ks_matrix(m, Metric::F1Malware, a.alpha, method, perm);
      rows.push_back({{"matrix", f}, {"accuracy", acc.significant_count}, {"f1_malware", f1.significant_count}});
      csv << f << ',' << acc.significant_count << ',' << f1.significant_count << '\n';
    }
    return a.format == "csv" ? csv.str() : dump({{"alpha", a.alpha}, {"rows", rows}});
  }
  if (a.style == "fig5" || a.style == "fig6") {
    HeatmapSpec spec;
    spec.metric = metric;
    spec.alpha = a.alpha;
    spec.format = a.format == "svg" ? HeatmapFormat::Svg : HeatmapFormat::Csv;
    Heatmap h;
    if (a.style == "fig5") {
      spec.coloring = Coloring::ThresholdClasses;
      spec.title = std::string(to_string(metric));
      h = build_heatmap(load_matrix(pick_matrix()), spec);
    } else {
      spec.coloring = Coloring::SignificanceBinary;
      spec.title = "KS p-values";
      if (a.matrix.empty() && fs::exists(dir / "ks.csv")) {
        std::ifstream in(dir / "ks.csv", std::ios::binary);
        h = build_heatmap(read_ks_csv(in, a.alpha), spec);
      } else {
        h = build_heatmap(ks_matrix(load_matrix(pick_matrix()), metric, a.alpha, method, perm), spec);
      }
    }
    if (a.format == "svg") return render_svg(h, spec);
    if (a.format == "csv") return render_csv(h);
    json cells = json::array();
    for (std::size_t r = 0; r < h.rows.size(); ++r) {
      for (std::size_t c = 0; c < h.cols.size(); ++c) {
        const auto v = h.value(r, c);
        cells.push_back({{"row", h.rows[r]},
                         {"col", h.cols[c]},
                         {"value", v ? json(*v) : json(nullptr)},
                         {"class", std::string(to_string(h.cell_class(r, c)))}});
      }
    }
    return dump({{"rows", h.rows}, {"cols", h.cols}, {"cells", cells}});
  }
  if (a.style == "fig7") {
    const auto averages = train_year_averages(load_matrix(pick_matrix()), metric);
    if (a.format == "svg") return render_bar_svg(averages, "average " + a.metric + " per train year");
    if (a.format == "csv") {
      std::ostringstream csv;
      csv << "train_year," << a.metric << "\n";
      for (const auto& [y, v] : averages) csv << y << ',' << format_double(v) << '\n';
      return csv.str();
    }
    json j = json::object();
    for (const auto& [y, v] : averages) j[std::to_string(y)] = v;
    return dump({{"metric", a.metric}, {"averages", j}});
  }
  throw UsageError("unknown report style '" + a.style + "'");
}

// ---- validate / train ------------------------------------------------------

int execute_validate(const std::string& samples, const std::string& registry_path, bool as_json, std::ostream& out) {
  const auto registry = load_registry(registry_path);
  const auto data = load_samples(samples, registry);
  const auto report = validate(data, registry);
  if (as_json) {
    json years = json::object();
    for (const auto& [y, c] : report.per_year) years[std::to_string(y)] = {{"benign", c.benign}, {"malware", c.malware}};
    json violations = json::array();
    for (const auto& v : report.violations) {
      violations.push_back({{"row", v.row}, {"kind", std::string(to_string(v.kind))}, {"reason", v.reason}});
    }
    out << dump({{"accepted", report.accepted()},
                 {"n_samples", report.n_samples},
                 {"n_features", report.n_features},
                 {"per_year", years},
                 {"per_category", report.per_category},
                 {"violations", violations}});
  } else {
    out << report.n_samples << " samples, " << report.n_features << " features\n";
    for (const auto& [y, c] : report.per_year) {
      out << "  " << y << ": benign " << c.benign << ", malware " << c.malware << "\n";
    }
    for (const auto& [cat, n] : report.per_category) out << "  " << cat << ": " << n << "\n";
    for (const auto& v : report.violations) {
      out << "violation row " << v.row << " " << to_string(v.kind) << ": " << v.reason << "\n";
    }
    out << (report.accepted() ? "accepted\n" : "rejected\n");
  }
  return report.accepted() ? kOk : kDataError;
}

int execute_train(const json& cfg, const std::string& save, bool fingerprint, int threads, std::ostream& out) {
  const Inputs in = load_inputs(cfg);
  const ExclusionSpec spec = ExclusionSpec::parse(cfg.at("exclude").get<std::string>());
  const auto mask = build_mask(in.registry, spec);
  if (mask.kept_count == 0) throw Error(ErrorCode::EmptyFeatureSet, "exclusion removes every permission");
  BalanceConfig balance = balance_config(cfg);
  balance.seed = derive_seed(balance.seed, "balance-train");
  const Dataset data = permdrift::balance(apply_mask(in.dataset, mask), balance);
  const TrainedModel model = train(data, model_params(cfg), threads);
  if (!save.empty()) write_text_file(save, model_to_json(model));
  if (fingerprint) {
    out << model.fingerprint_hex() << "\n";
  } else {
    out << "trained " << to_string(model.kind()) << " on " << data.size() << " samples, " << model.feature_count()
        << " features, fingerprint " << model.fingerprint_hex() << "\n";
  }
  return kOk;
}

// ---- threads / errors ------------------------------------------------------

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("PERMDRIFT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return hardware_threads();
}

void report_error(std::ostream& err, bool as_json, const std::string& kind, const std::string& message,
                  const Error* e = nullptr) {
  if (as_json) {
    json j = {{"error", kind}, {"message", message}};
    if (e && e->row()) j["row"] = *e->row();
    if (e && e->column()) j["column"] = *e->column();
    err << j.dump() << "\n";
  } else {
    err << "permdrift: " << message << "\n";
  }
}

void verify_inputs(const json& manifest) {
  for (const auto& [name, entry] : manifest.at("inputs").items()) {
    const std::string path = entry.at("path");
    if (file_digest(path) != entry.at("fnv1a64").get<std::string>()) {
      throw Error(ErrorCode::IoFailure, "input " + name + " (" + path + ") changed since the manifest was written");
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Permission-based malware classifiers under temporal drift", "permdrift"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_errors = false;
  int threads_flag = 0;
  app.add_flag("--json-errors", json_errors, "machine-readable errors on stderr");
  app.add_option("--threads", threads_flag, "worker threads (default: PERMDRIFT_THREADS or all cores)");
  app.set_version_flag("--version", PERMDRIFT_VERSION);

  auto* validate_cmd = app.add_subcommand("validate", "check a samples CSV against a registry");
  std::string v_samples, v_registry;
  bool v_json = false;
  validate_cmd->add_option("--samples", v_samples)->required();
  validate_cmd->add_option("--registry", v_registry)->required();
  validate_cmd->add_flag("--json", v_json);

  auto* synth_cmd = app.add_subcommand("synth", "generate a drifting synthetic dataset");
  std::string s_schedule, s_registry, s_out;
  std::uint64_t s_seed = 42;
  synth_cmd->add_option("--schedule", s_schedule)->required();
  synth_cmd->add_option("--registry", s_registry)->required();
  synth_cmd->add_option("--seed", s_seed);
  synth_cmd->add_option("--out", s_out)->required();

  auto* eval_cmd = app.add_subcommand("eval", "run an evaluation strategy");
  ModelFlags e_flags;
  e_flags.add(*eval_cmd);
  std::string e_strategy, e_out, e_pairs, e_scope;
  auto* strategy_opt = eval_cmd->add_option("--strategy", e_strategy, "static, matrix or suite");
  auto* pairs_opt = eval_cmd->add_option("--pairs", e_pairs, "ordered-all or forward-only");
  auto* scope_opt = eval_cmd->add_option("--balance-scope", e_scope, "per-train-year or global");
  eval_cmd->add_option("--out", e_out, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train one model on a whole dataset");
  ModelFlags t_flags;
  t_flags.add(*train_cmd);
  std::string t_save;
  bool t_fingerprint = false;
  train_cmd->add_option("--save", t_save, "write the model as JSON");
  train_cmd->add_flag("--dump-fingerprint", t_fingerprint, "print only the model fingerprint");

  auto* drift_cmd = app.add_subcommand("drift", "pairwise KS tests over a year matrix");
  std::string d_matrix, d_metric = "accuracy", d_method = "perm", d_out;
  double d_alpha = 0.05, d_exact_limit = PermutationOptions{}.exact_limit;
  std::uint64_t d_seed = 42, d_draws = PermutationOptions{}.monte_carlo_draws;
  drift_cmd->add_option("--matrix", d_matrix)->required();
  drift_cmd->add_option("--metric", d_metric);
  drift_cmd->add_option("--alpha", d_alpha);
  drift_cmd->add_option("--method", d_method, "perm or asymptotic");
  drift_cmd->add_option("--seed", d_seed);
  drift_cmd->add_option("--exact-limit", d_exact_limit);
  drift_cmd->add_option("--draws", d_draws);
  drift_cmd->add_option("--out", d_out, "output directory (default: the matrix's directory)");

  auto* report_cmd = app.add_subcommand("report", "tables and figures from an output directory");
  ReportArgs r;
  report_cmd->add_option("--in", r.in)->required();
  report_cmd->add_option("--style", r.style)
      ->required()
      ->check(CLI::IsMember({"table4", "table5", "fig5", "fig6", "fig7"}));
  report_cmd->add_option("--format", r.format)->check(CLI::IsMember({"svg", "csv", "json"}));
  report_cmd->add_option("--out", r.out, "output file (default: stdout)");
  report_cmd->add_option("--matrix", r.matrix, "matrix file within --in");
  report_cmd->add_option("--metric", r.metric);
  report_cmd->add_option("--alpha", r.alpha);
  report_cmd->add_option("--method", r.method);
  report_cmd->add_option("--seed", r.seed);

  auto* replay_cmd = app.add_subcommand("replay", "re-run a stage from its manifest");
  std::string p_manifest, p_out;
  replay_cmd->add_option("manifest", p_manifest)->required();
  replay_cmd->add_option("--out", p_out, "output directory (default: the manifest's directory)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << PERMDRIFT_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, json_errors, "Usage", e.what());
    if (!json_errors) err << app.help();
    return kUsageError;
  }

  try {
    const int threads = resolve_threads(threads_flag);
    if (*validate_cmd) return execute_validate(v_samples, v_registry, v_json, out);
    if (*synth_cmd) {
      const fs::path target = absolute_path(s_out);
      json cfg = {{"schedule", absolute_path(s_schedule).string()},
                  {"registry", absolute_path(s_registry).string()},
                  {"seed", s_seed}};
      return execute_synth(cfg, target.parent_path(), target.filename().string(), threads, out);
    }
    if (*eval_cmd) {
      json cfg = eval_defaults();
      e_flags.apply(cfg);
      if (strategy_opt->count()) cfg["strategy"] = e_strategy;
      if (pairs_opt->count()) cfg["pairs"] = e_pairs;
      if (scope_opt->count()) cfg["scope"] = e_scope;
      normalize_eval(cfg);
      return execute_eval(cfg, absolute_path(e_out), threads, out);
    }
    if (*train_cmd) {
      json cfg = eval_defaults();
      t_flags.apply(cfg);
      normalize_eval(cfg);
      return execute_train(cfg, t_save, t_fingerprint, threads, out);
    }
    if (*drift_cmd) {
      const fs::path matrix = absolute_path(d_matrix);
      json cfg = {{"matrix", matrix.string()},
                  {"metric", std::string(to_string(parse_metric(d_metric)))},
                  {"alpha", d_alpha},
                  {"method", std::string(to_string(parse_pvalue_method(d_method)))},
                  {"seed", d_seed},
                  {"exact_limit", d_exact_limit},
                  {"draws", d_draws}};
      return execute_drift(cfg, d_out.empty() ? matrix.parent_path() : absolute_path(d_out), threads, out);
    }
    if (*report_cmd) {
      const std::string text = report_text(r);
      if (r.out.empty()) {
        out << text;
      } else {
        write_text_file(r.out, text);
      }
      return kOk;
    }
    if (*replay_cmd) {
      const fs::path manifest_path = absolute_path(p_manifest);
      const json manifest = read_json_file(manifest_path);
      const fs::path dir = p_out.empty() ? manifest_path.parent_path() : absolute_path(p_out);
      verify_inputs(manifest);
      const std::string command = manifest.at("command");
      const json& cfg = manifest.at("config");
      if (command == "eval") return execute_eval(cfg, dir, threads, out);
      if (command == "drift") return execute_drift(cfg, dir, threads, out);
      if (command == "synth") {
        return execute_synth(cfg, dir, manifest.at("outputs").at(0).get<std::string>(), threads, out);
      }
      throw UsageError("manifest command '" + command + "' cannot be replayed");
    }
  } catch (const UsageError& e) {
    report_error(err, json_errors, "Usage", e.what());
    return kUsageError;
  } catch (const Error& e) {
    report_error(err, json_errors, std::string(to_string(e.code())), e.what(), &e);
    return e.code() == ErrorCode::BadConfig ? kUsageError : kDataError;
  } catch (const json::exception& e) {
    report_error(err, json_errors, "Usage", std::string("malformed manifest or config: ") + e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    report_error(err, json_errors, "IoFailure", e.what());
    return kDataError;
  }
  return kUsageError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace permdrift::cli
