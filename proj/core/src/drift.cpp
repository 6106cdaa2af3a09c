#include "permdrift/drift.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "permdrift/error.hpp"
#include "permdrift/parallel.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

std::string_view to_string(CellClass c) noexcept {
  switch (c) {
    case CellClass::Yellow: return "yellow";
    case CellClass::Red: return "red";
    case CellClass::Green: return "green";
  }
  return "red";
}

CellClass classify_cell(double value, const Thresholds& t) {
  if (!(t.poor_below >= 0.0 && t.poor_below < t.baseline_above && t.baseline_above <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "thresholds must satisfy 0 <= poor_below < baseline_above <= 1");
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "cell value " + std::to_string(value) + " outside [0, 1]");
  }
  if (value < t.poor_below) return CellClass::Yellow;
  if (value > t.baseline_above) return CellClass::Green;
  return CellClass::Red;
}

std::string_view to_string(PValueMethod m) noexcept {
  return m == PValueMethod::Asymptotic ? "asymptotic" : "perm";
}

PValueMethod parse_pvalue_method(std::string_view text) {
  if (text == "asymptotic") return PValueMethod::Asymptotic;
  if (text == "perm" || text == "permutation") return PValueMethod::Permutation;
  throw Error(ErrorCode::BadConfig, "unknown p-value method '" + std::string(text) + "'");
}

namespace {

void check_sample(std::span<const double> s) {
  if (s.empty()) throw Error(ErrorCode::Empty, "KS sample is empty");
  for (double v : s) {
    if (std::isnan(v)) throw Error(ErrorCode::OutOfRange, "KS sample contains NaN");
  }
}

double sorted_statistic(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (i == a.size()) {
      x = b[j];
    } else if (j == b.size()) {
      x = a[i];
    } else {
      x = std::min(a[i], b[j]);
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return best;
}

double binomial(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

// boundary[k] is true when a tie group ends after k pooled values.
std::vector<bool> group_boundaries(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<bool> boundary(pooled.size() + 1, false);
  for (std::size_t k = 1; k <= pooled.size(); ++k) {
    boundary[k] = k == pooled.size() || pooled[k] != pooled[k - 1];
  }
  return boundary;
}

// |i/n - j/m| >= d, compared on the integer lattice scale.
struct Reach {
  std::int64_t n, m;
  double threshold;
  Reach(std::size_t n_, std::size_t m_, double d)
      : n(static_cast<std::int64_t>(n_)), m(static_cast<std::int64_t>(m_)),
        threshold(d * static_cast<double>(n_) * static_cast<double>(m_) -
                  1e-9 * static_cast<double>(n_) * static_cast<double>(m_)) {}
  bool operator()(std::int64_t i, std::int64_t j) const noexcept {
    return static_cast<double>(std::llabs(i * m - j * n)) >= threshold;
  }
};

// Probability, over uniformly random assignments of the pooled values to the
// two samples, that the statistic reaches d. Walks the lattice of (i from a,
// j from b) with hypergeometric step probabilities; mass that reaches d at a
// tie-group boundary is absorbed.
double exact_tail(std::size_t n, std::size_t m, double d, const std::vector<bool>& boundary) {
  const Reach reach(n, m, d);
  const std::size_t total = n + m;
  std::vector<double> alive(n + 1, 0.0), next(n + 1, 0.0);
  alive[0] = 1.0;
  double hit = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    const std::size_t remaining = total - k;
    const std::size_t i_lo = k > m ? k - m : 0;
    const std::size_t i_hi = std::min(k, n);
    for (std::size_t i = i_lo; i <= i_hi; ++i) {
      const double mass = alive[i];
      if (mass == 0.0) continue;
      const std::size_t j = k - i;
      const double p_a = static_cast<double>(n - i) / static_cast<double>(remaining);
      if (i < n) next[i + 1] += mass * p_a;
      if (j < m) next[i] += mass * (1.0 - p_a);
    }
    if (boundary[k + 1]) {
      const std::size_t k1 = k + 1;
      const std::size_t lo = k1 > m ? k1 - m : 0;
      const std::size_t hi = std::min(k1, n);
      for (std::size_t i = lo; i <= hi; ++i) {
        if (next[i] != 0.0 && reach(static_cast<std::int64_t>(i), static_cast<std::int64_t>(k1 - i))) {
          hit += next[i];
          next[i] = 0.0;
        }
      }
    }
    std::swap(alive, next);
  }
  return std::clamp(hit, 0.0, 1.0);
}

double monte_carlo_tail(std::size_t n, std::size_t m, double d, const std::vector<bool>& boundary,
                        std::uint64_t draws, std::uint64_t seed) {
  const Reach reach(n, m, d);
  std::vector<std::uint8_t> in_a(n + m, 0);
  std::fill_n(in_a.begin(), n, 1);
  Rng rng(seed);
  std::uint64_t count = 0;
  for (std::uint64_t t = 0; t < draws; ++t) {
    rng.shuffle(std::span(in_a));
    std::int64_t i = 0, j = 0;
    for (std::size_t k = 0; k < in_a.size(); ++k) {
      in_a[k] ? ++i : ++j;
      if (boundary[k + 1] && reach(i, j)) {
        ++count;
        break;
      }
    }
  }
  return static_cast<double>(count + 1) / static_cast<double>(draws + 1);
}

double permutation_p(double d, std::size_t n, std::size_t m, const std::vector<bool>& boundary,
                     const PermutationOptions& opt, bool& exact) {
  exact = binomial(n + m, n) <= opt.exact_limit;
  if (exact) return exact_tail(n, m, d, boundary);
  if (opt.monte_carlo_draws == 0) throw Error(ErrorCode::BadConfig, "monte_carlo_draws must be positive");
  return monte_carlo_tail(n, m, d, boundary, opt.monte_carlo_draws, opt.seed);
}

double asymptotic_p(double d, std::size_t n, std::size_t m) {
  if (d <= 0.0) return 1.0;
  const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  const double root = std::sqrt(ne);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  double p;
  if (lambda < 1.18) {
    // Same Kolmogorov survival function in its Jacobi-theta form; the
    // alternating series does not converge numerically for small lambda.
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double sum = 0.0;
    for (int k = 1; k < 64; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::pow(y, odd * odd);
      sum += term;
      if (term < 1e-16) break;
    }
    p = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
  } else {
    double sum = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += (k % 2 == 1 ? term : -term);
      if (term < 1e-12) break;
    }
    p = 2.0 * sum;
  }
  return std::clamp(p, 0.0, 1.0);
}

void check_sizes(double d, std::size_t n, std::size_t m) {
  if (n < 1 || m < 1) throw Error(ErrorCode::BadSize, "sample sizes must be at least 1");
  if (!(d >= 0.0 && d <= 1.0)) throw Error(ErrorCode::BadSize, "statistic must lie in [0, 1]");
}

}  // namespace

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  check_sample(a);
  check_sample(b);
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sorted_statistic(sa, sb);
}

double ks_pvalue(double d, std::size_t n, std::size_t m, PValueMethod method, const PermutationOptions& options) {
  check_sizes(d, n, m);
  if (d == 0.0) return 1.0;
  if (method == PValueMethod::Asymptotic) return asymptotic_p(d, n, m);
  const std::vector<bool> boundary(n + m + 1, true);
  bool exact = false;
  return permutation_p(d, n, m, boundary, options, exact);
}

KSResult ks_test(std::span<const double> a, std::span<const double> b, PValueMethod method,
                 const PermutationOptions& options) {
  KSResult r;
  r.d = ks_statistic(a, b);
  r.n = a.size();
  r.m = b.size();
  r.method = method;
  if (r.d == 0.0) {
    r.p_value = 1.0;
    r.exact = method == PValueMethod::Permutation;
    return r;
  }
  if (method == PValueMethod::Asymptotic) {
    r.p_value = asymptotic_p(r.d, r.n, r.m);
  } else {
    r.p_value = permutation_p(r.d, r.n, r.m, group_boundaries(a, b), options, r.exact);
  }
  return r;
}

double ks_critical(double alpha, std::size_t n, std::size_t m) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::BadConfig, "alpha must lie in (0, 1)");
  if (n < 1 || m < 1) throw Error(ErrorCode::BadSize, "sample sizes must be at least 1");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

const KSResult* KSMatrix::find(int t1, int t2) const noexcept {
  auto it = results.find({t1, t2});
  return it == results.end() ? nullptr : &it->second;
}

KSMatrix ks_matrix(const EvalMatrix& matrix, Metric metric, double alpha, PValueMethod method,
                   const PermutationOptions& options, int threads) {
  KSMatrix out;
  out.alpha = alpha;
  out.metric = metric;
  out.years = matrix.train_years();
  if (out.years.size() < 2) {
    throw Error(ErrorCode::TooFewYears, "KS comparison needs at least two train years with cells");
  }
  std::vector<std::vector<double>> values;
  for (int y : out.years) {
    std::vector<double> v;
    for (const auto* c : matrix.row(y)) v.push_back(c->scores.get(metric));
    values.push_back(std::move(v));
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < out.years.size(); ++i) {
    for (std::size_t j = i + 1; j < out.years.size(); ++j) pairs.emplace_back(i, j);
  }
  std::vector<KSResult> results(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    PermutationOptions opt = options;
    opt.seed = derive_seed(options.seed, "ks-pair", {out.years[i], out.years[j]});
    results[k] = ks_test(values[i], values[j], method, opt);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    const auto& r = results[k];
    KSResult mirrored = r;
    std::swap(mirrored.n, mirrored.m);
    out.results[{out.years[i], out.years[j]}] = r;
    out.results[{out.years[j], out.years[i]}] = mirrored;
    if (r.p_value <= alpha) out.significant_count += 2;
  }
  return out;
}

void write_ks_csv(std::ostream& out, const KSMatrix& ks) {
  out << "t1,t2,d,p\n";
  for (const auto& [key, r] : ks.results) {
    out << key.first << ',' << key.second << ',' << format_double(r.d) << ',' << format_double(r.p_value) << '\n';
  }
}

KSMatrix read_ks_csv(std::istream& in, double alpha) {
  std::string line;
  std::int64_t line_no = 0;
  if (!detail::next_line(in, line, line_no) || line != "t1,t2,d,p") {
    throw Error(ErrorCode::SchemaMismatch, "KS header must be 't1,t2,d,p'", 1);
  }
  KSMatrix ks;
  ks.alpha = alpha;
  std::set<int> years;
  std::vector<std::string_view> f;
  while (detail::next_line(in, line, line_no)) {
    detail::split_fields(line, f);
    if (f.size() != 4) throw Error(ErrorCode::SchemaMismatch, "expected 4 fields", line_no);
    auto t1 = detail::parse_number<int>(f[0]);
    auto t2 = detail::parse_number<int>(f[1]);
    auto d = detail::parse_number<double>(f[2]);
    auto p = detail::parse_number<double>(f[3]);
    if (!t1 || !t2 || !d || !p) throw Error(ErrorCode::SchemaMismatch, "bad KS row", line_no);
    KSResult r;
    r.d = *d;
    r.p_value = *p;
    ks.results[{*t1, *t2}] = r;
    years.insert(*t1);
    years.insert(*t2);
    if (*p <= alpha) ++ks.significant_count;
  }
  ks.years.assign(years.begin(), years.end());
  return ks;
}

}  // namespace permdrift
