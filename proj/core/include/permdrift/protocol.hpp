#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "permdrift/dataset.hpp"
#include "permdrift/features.hpp"
#include "permdrift/metrics.hpp"
#include "permdrift/model.hpp"
#include "permdrift/sampling.hpp"

namespace permdrift {

/// OrderedAll evaluates every (train, test) pair with train != test;
/// ForwardOnly keeps test > train.
enum class PairMode : std::uint8_t { OrderedAll, ForwardOnly };
enum class BalanceScope : std::uint8_t { PerTrainYear, Global };

std::string_view to_string(PairMode m) noexcept;
PairMode parse_pair_mode(std::string_view text);
std::string_view to_string(BalanceScope s) noexcept;
BalanceScope parse_balance_scope(std::string_view text);

struct EvalCell {
  int train_year = 0;
  int test_year = 0;
  Scores scores;
  std::size_t n_train = 0;  // after balancing
  std::size_t n_test = 0;

  bool operator==(const EvalCell&) const = default;
};

struct SkippedYear {
  int year = 0;
  std::string reason;
};

struct EvalMatrix {
  std::vector<EvalCell> cells;  // sorted by (train_year, test_year)
  ExclusionSpec variant;
  ModelKind model_kind = ModelKind::Forest;
  BalanceConfig balance;
  std::string dataset_tag;
  PairMode pairs = PairMode::OrderedAll;
  std::vector<int> years;           // observed years
  std::vector<SkippedYear> skipped;  // train years without both classes

  const EvalCell* find(int train_year, int test_year) const noexcept;
  std::vector<int> train_years() const;
  std::vector<const EvalCell*> row(int train_year) const;
};

struct YearMatrixOptions {
  PairMode pairs = PairMode::OrderedAll;
  BalanceScope scope = BalanceScope::PerTrainYear;
  std::string dataset_tag;
  int threads = 1;
};

struct StaticResult {
  Scores scores;
  ConfusionMatrix confusion;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t feature_count = 0;
};

/// Chronology-agnostic run: mask, stratified split, balance the training
/// half, train, score the held-out half.
StaticResult run_static(const Dataset& dataset, const PermissionRegistry& registry, ExclusionSpec spec,
                        const ModelParams& model, const SplitConfig& split_cfg,
                        const BalanceConfig& balance_cfg, int threads = 1);

/// Year-to-year run. Train year T uses balance stream
/// derive_seed(balance.seed, "balance", {T}) and model seed
/// derive_seed(model seed, "model", {T}); test years are never balanced.
EvalMatrix run_year_matrix(const Dataset& dataset, const PermissionRegistry& registry, ExclusionSpec spec,
                           const ModelParams& model, const BalanceConfig& balance_cfg,
                           const YearMatrixOptions& options = {});

/// Recomputes one cell from scratch; equals the matching matrix cell.
EvalCell evaluate_cell(const Dataset& dataset, const PermissionRegistry& registry, ExclusionSpec spec,
                       const ModelParams& model, const BalanceConfig& balance_cfg,
                       const YearMatrixOptions& options, int train_year, int test_year);

/// All, D, R, N in that order.
std::vector<ExclusionSpec> exclusion_suite_specs();

std::vector<std::pair<ExclusionSpec, EvalMatrix>> run_exclusion_suite(
    const Dataset& dataset, const PermissionRegistry& registry, const ModelParams& model,
    const BalanceConfig& balance_cfg, const YearMatrixOptions& options = {});

/// Shortest round-trip decimal form.
std::string format_double(double value);

/// Columns: train_year,test_year,accuracy,f1_malware,f1_benign,
/// precision_malware,recall_malware,precision_benign,recall_benign,
/// n_train,n_test,undefined.
void write_matrix_csv(std::ostream& out, const EvalMatrix& matrix);
EvalMatrix read_matrix_csv(std::istream& in);

}  // namespace permdrift
