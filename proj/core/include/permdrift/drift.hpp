#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "permdrift/metrics.hpp"
#include "permdrift/protocol.hpp"

namespace permdrift {

struct Thresholds {
  double poor_below = 0.50;
  double baseline_above = 0.94;
};

/// Yellow: below poor_below. Green: above baseline_above. Red: the closed
/// interval in between, so both thresholds themselves classify Red.
enum class CellClass : std::uint8_t { Yellow, Red, Green };

std::string_view to_string(CellClass c) noexcept;
CellClass classify_cell(double value, const Thresholds& t = {});

/// Exact two-sample statistic sup |F_a - F_b| over the pooled breakpoints.
double ks_statistic(std::span<const double> a, std::span<const double> b);

enum class PValueMethod : std::uint8_t { Asymptotic, Permutation };

std::string_view to_string(PValueMethod m) noexcept;
PValueMethod parse_pvalue_method(std::string_view text);

struct PermutationOptions {
  /// Enumerate exactly when C(n+m, n) is at most this; otherwise Monte-Carlo.
  double exact_limit = 200'000;
  std::uint64_t monte_carlo_draws = 100'000;
  std::uint64_t seed = 42;
};

struct KSResult {
  double d = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t m = 0;
  PValueMethod method = PValueMethod::Permutation;
  bool exact = false;  // permutation p from full enumeration
};

/// p-value for a statistic `d` between samples of sizes n and m with no ties.
/// Exact permutation p = #{D* >= d} / C(n+m, n); Monte-Carlo p =
/// (#{D* >= d} + 1) / (draws + 1).
double ks_pvalue(double d, std::size_t n, std::size_t m, PValueMethod method,
                 const PermutationOptions& options = {});

/// Statistic plus p-value; the permutation distribution respects ties in
/// the pooled sample.
KSResult ks_test(std::span<const double> a, std::span<const double> b,
                 PValueMethod method = PValueMethod::Permutation, const PermutationOptions& options = {});

/// c(alpha) * sqrt((n + m) / (n m)) with c(alpha) = sqrt(-ln(alpha / 2) / 2),
/// which gives the tabulated 1.358 at 0.05 and 1.628 at 0.01.
double ks_critical(double alpha, std::size_t n, std::size_t m);

struct KSMatrix {
  std::vector<int> years;                            // train years compared
  std::map<std::pair<int, int>, KSResult> results;  // ordered pairs, no diagonal
  std::size_t significant_count = 0;               // ordered pairs with p <= alpha
  double alpha = 0.05;
  Metric metric = Metric::Accuracy;

  const KSResult* find(int t1, int t2) const noexcept;
};

/// Compares every pair of train years on the vector of `metric` values over
/// their test years. The Monte-Carlo stream for a pair is
/// derive_seed(options.seed, "ks-pair", {min(T1,T2), max(T1,T2)}).
KSMatrix ks_matrix(const EvalMatrix& matrix, Metric metric, double alpha = 0.05,
                   PValueMethod method = PValueMethod::Permutation, const PermutationOptions& options = {},
                   int threads = 1);

/// Columns t1,t2,d,p over ordered pairs.
void write_ks_csv(std::ostream& out, const KSMatrix& ks);
KSMatrix read_ks_csv(std::istream& in, double alpha = 0.05);

}  // namespace permdrift
