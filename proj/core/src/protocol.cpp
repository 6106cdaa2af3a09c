#include "permdrift/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "permdrift/error.hpp"
#include "permdrift/parallel.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

std::string_view to_string(PairMode m) noexcept {
  return m == PairMode::OrderedAll ? "ordered-all" : "forward-only";
}

PairMode parse_pair_mode(std::string_view text) {
  if (text == "ordered-all") return PairMode::OrderedAll;
  if (text == "forward-only") return PairMode::ForwardOnly;
  throw Error(ErrorCode::BadConfig, "unknown pair mode '" + std::string(text) + "'");
}

std::string_view to_string(BalanceScope s) noexcept {
  return s == BalanceScope::PerTrainYear ? "per-train-year" : "global";
}

BalanceScope parse_balance_scope(std::string_view text) {
  if (text == "per-train-year") return BalanceScope::PerTrainYear;
  if (text == "global") return BalanceScope::Global;
  throw Error(ErrorCode::BadConfig, "unknown balance scope '" + std::string(text) + "'");
}

const EvalCell* EvalMatrix::find(int train_year, int test_year) const noexcept {
  auto it = std::lower_bound(cells.begin(), cells.end(), std::pair{train_year, test_year},
                             [](const EvalCell& c, const std::pair<int, int>& key) {
                               return std::pair{c.train_year, c.test_year} < key;
                             });
  if (it == cells.end() || it->train_year != train_year || it->test_year != test_year) return nullptr;
  return &*it;
}

std::vector<int> EvalMatrix::train_years() const {
  std::vector<int> out;
  for (const auto& c : cells) {
    if (out.empty() || out.back() != c.train_year) out.push_back(c.train_year);
  }
  return out;
}

std::vector<const EvalCell*> EvalMatrix::row(int train_year) const {
  std::vector<const EvalCell*> out;
  for (const auto& c : cells) {
    if (c.train_year == train_year) out.push_back(&c);
  }
  return out;
}

namespace {

Dataset masked_dataset(const Dataset& dataset, const PermissionRegistry& registry, ExclusionSpec spec) {
  if (dataset.registry_hash() != registry.digest()) {
    throw Error(ErrorCode::SchemaMismatch, "dataset columns were not loaded against this registry");
  }
  const FeatureMask mask = build_mask(registry, spec);
  if (mask.kept_count == 0) {
    throw Error(ErrorCode::EmptyFeatureSet, "exclusion " + spec.label() + " removes every permission");
  }
  return apply_mask(dataset, mask);
}

Scores score_on(const TrainedModel& model, const Dataset& test, ConfusionMatrix* cm_out = nullptr) {
  const auto pred = predict(model, test);
  std::vector<Label> truth;
  truth.reserve(test.size());
  for (const auto& s : test.samples()) truth.push_back(s.label);
  const auto cm = confusion(truth, pred.labels);
  if (cm_out) *cm_out = cm;
  return scores(cm);
}

// Everything one train year needs: its (balanced) training data and model.
struct YearContext {
  const Dataset& masked;
  const ModelParams& model;
  const BalanceConfig& balance_cfg;
  const YearMatrixOptions& options;
  std::optional<Dataset> global_pool;

  YearContext(const Dataset& m, const ModelParams& p, const BalanceConfig& b, const YearMatrixOptions& o)
      : masked(m), model(p), balance_cfg(b), options(o) {
    if (o.scope == BalanceScope::Global && b.method != BalanceMethod::None) {
      global_pool = balance(m, {b.method, derive_seed(b.seed, "balance-global")});
    }
  }

  std::optional<std::string> skip_reason(int year) const {
    const auto counts = masked.year_subset(year).class_counts();
    if (!counts.both()) {
      return counts.malware == 0 ? "no malware samples" : "no benign samples";
    }
    return std::nullopt;
  }

  Dataset training_set(int year) const {
    if (global_pool) return global_pool->year_subset(year);
    return balance(masked.year_subset(year),
                   {balance_cfg.method, derive_seed(balance_cfg.seed, "balance", {year})});
  }

  TrainedModel fit(const Dataset& train_set, int year) const {
    const auto seed = derive_seed(seed_of(model), "model", {year});
    return train(train_set, with_seed(model, seed), 1);
  }

  bool wanted(int train_year, int test_year) const {
    if (train_year == test_year) return false;
    return options.pairs == PairMode::OrderedAll || test_year > train_year;
  }
};

}  // namespace

StaticResult run_static(const Dataset& dataset, const PermissionRegistry& registry, ExclusionSpec spec,
                        const ModelParams& model, const SplitConfig& split_cfg,
                        const BalanceConfig& balance_cfg, int threads) {
  const Dataset masked = masked_dataset(dataset, registry, spec);
  auto halves = split(masked, split_cfg);
  Dataset train_set = balance(halves.train, {balance_cfg.method, derive_seed(balance_cfg.seed, "balance-static")});
  const TrainedModel trained = train(train_set, model, threads);
  StaticResult result;
  result.scores = score_on(trained, halves.test, &result.confusion);
  result.n_train = train_set.size();
  result.n_test = halves.test.size();
  result.feature_count = masked.feature_count();
  return result;
}

EvalMatrix run_year_matrix(const Dataset& dataset, const PermissionRegistry& registry, ExclusionSpec spec,
                           const ModelParams& model, const BalanceConfig& balance_cfg,
                           const YearMatrixOptions& options) {
  const Dataset masked = masked_dataset(dataset, registry, spec);
  const auto years = masked.years();
  if (years.size() < 2) {
    throw Error(ErrorCode::TooFewYears, "year-to-year evaluation needs at least two distinct years");
  }
  const YearContext ctx(masked, model, balance_cfg, options);

  EvalMatrix matrix;
  matrix.variant = spec;
  matrix.model_kind = kind_of(model);
  matrix.balance = balance_cfg;
  matrix.dataset_tag = options.dataset_tag;
  matrix.pairs = options.pairs;
  matrix.years = years;

  std::vector<int> usable;
  for (int y : years) {
    if (auto why = ctx.skip_reason(y)) {
      matrix.skipped.push_back({y, *why});
    } else {
      usable.push_back(y);
    }
  }
  if (usable.empty()) throw Error(ErrorCode::TooFewYears, "no year contains both classes");

  std::vector<Dataset> test_sets;
  test_sets.reserve(years.size());
  for (int y : years) test_sets.push_back(masked.year_subset(y));

  std::vector<std::vector<EvalCell>> rows(usable.size());
  parallel_for(usable.size(), options.threads, [&](std::size_t r) {
    const int train_year = usable[r];
    const Dataset train_set = ctx.training_set(train_year);
    const TrainedModel trained = ctx.fit(train_set, train_year);
    for (std::size_t k = 0; k < years.size(); ++k) {
      if (!ctx.wanted(train_year, years[k])) continue;
      rows[r].push_back({train_year, years[k], score_on(trained, test_sets[k]), train_set.size(),
                         test_sets[k].size()});
    }
  });
  for (auto& row : rows) {
    for (auto& cell : row) matrix.cells.push_back(std::move(cell));
  }
  return matrix;
}

EvalCell evaluate_cell(const Dataset& dataset, const PermissionRegistry& registry, ExclusionSpec spec,
                       const ModelParams& model, const BalanceConfig& balance_cfg,
                       const YearMatrixOptions& options, int train_year, int test_year) {
  const Dataset masked = masked_dataset(dataset, registry, spec);
  const YearContext ctx(masked, model, balance_cfg, options);
  if (!ctx.wanted(train_year, test_year)) {
    throw Error(ErrorCode::OutOfRange, "pair is not part of the evaluation grid");
  }
  if (masked.year_samples(test_year).empty()) {
    throw Error(ErrorCode::OutOfRange, "test year " + std::to_string(test_year) + " has no samples");
  }
  if (auto why = ctx.skip_reason(train_year)) {
    throw Error(ErrorCode::MissingClass, "train year " + std::to_string(train_year) + ": " + *why);
  }
  const Dataset train_set = ctx.training_set(train_year);
  const TrainedModel trained = ctx.fit(train_set, train_year);
  const Dataset test_set = masked.year_subset(test_year);
  return {train_year, test_year, score_on(trained, test_set), train_set.size(), test_set.size()};
}

std::vector<ExclusionSpec> exclusion_suite_specs() {
  return {ExclusionSpec{}, ExclusionSpec{ExclusionFlag::Deprecated}, ExclusionSpec{ExclusionFlag::Restricted},
          ExclusionSpec{ExclusionFlag::NotThirdParty}};
}

std::vector<std::pair<ExclusionSpec, EvalMatrix>> run_exclusion_suite(
    const Dataset& dataset, const PermissionRegistry& registry, const ModelParams& model,
    const BalanceConfig& balance_cfg, const YearMatrixOptions& options) {
  std::vector<std::pair<ExclusionSpec, EvalMatrix>> out;
  for (auto spec : exclusion_suite_specs()) {
    out.emplace_back(spec, run_year_matrix(dataset, registry, spec, model, balance_cfg, options));
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

namespace {

constexpr std::string_view kMatrixHeader =
    "train_year,test_year,accuracy,f1_malware,f1_benign,precision_malware,recall_malware,"
    "precision_benign,recall_benign,n_train,n_test,undefined";

}  // namespace

void write_matrix_csv(std::ostream& out, const EvalMatrix& matrix) {
  out << kMatrixHeader << '\n';
  for (const auto& c : matrix.cells) {
    const auto& s = c.scores;
    out << c.train_year << ',' << c.test_year << ',' << format_double(s.accuracy) << ','
        << format_double(s.f1_malware) << ',' << format_double(s.f1_benign) << ','
        << format_double(s.precision_malware) << ',' << format_double(s.recall_malware) << ','
        << format_double(s.precision_benign) << ',' << format_double(s.recall_benign) << ',' << c.n_train
        << ',' << c.n_test << ',' << static_cast<int>(s.undefined) << '\n';
  }
}

EvalMatrix read_matrix_csv(std::istream& in) {
  std::string line;
  std::int64_t line_no = 0;
  if (!detail::next_line(in, line, line_no) || line != kMatrixHeader) {
    throw Error(ErrorCode::SchemaMismatch, "matrix header must be '" + std::string(kMatrixHeader) + "'", 1);
  }
  EvalMatrix m;
  std::set<int> years;
  std::vector<std::string_view> f;
  while (detail::next_line(in, line, line_no)) {
    detail::split_fields(line, f);
    if (f.size() != 12) throw Error(ErrorCode::SchemaMismatch, "expected 12 fields", line_no);
    auto num = [&](std::size_t i) {
      auto v = detail::parse_number<double>(f[i]);
      if (!v) throw Error(ErrorCode::SchemaMismatch, "bad number '" + std::string(f[i]) + "'", line_no);
      return *v;
    };
    auto integer = [&](std::size_t i) {
      auto v = detail::parse_number<long long>(f[i]);
      if (!v) throw Error(ErrorCode::SchemaMismatch, "bad integer '" + std::string(f[i]) + "'", line_no);
      return *v;
    };
    EvalCell c;
    c.train_year = static_cast<int>(integer(0));
    c.test_year = static_cast<int>(integer(1));
    c.scores.accuracy = num(2);
    c.scores.f1_malware = num(3);
    c.scores.f1_benign = num(4);
    c.scores.precision_malware = num(5);
    c.scores.recall_malware = num(6);
    c.scores.precision_benign = num(7);
    c.scores.recall_benign = num(8);
    c.n_train = static_cast<std::size_t>(integer(9));
    c.n_test = static_cast<std::size_t>(integer(10));
    c.scores.undefined = static_cast<std::uint8_t>(integer(11));
    years.insert(c.train_year);
    years.insert(c.test_year);
    m.cells.push_back(c);
  }
  std::sort(m.cells.begin(), m.cells.end(), [](const EvalCell& a, const EvalCell& b) {
    return std::pair{a.train_year, a.test_year} < std::pair{b.train_year, b.test_year};
  });
  for (std::size_t i = 1; i < m.cells.size(); ++i) {
    if (m.cells[i].train_year == m.cells[i - 1].train_year && m.cells[i].test_year == m.cells[i - 1].test_year) {
      throw Error(ErrorCode::SchemaMismatch, "duplicate cell in matrix");
    }
  }
  m.years.assign(years.begin(), years.end());
  return m;
}

}  // namespace permdrift
