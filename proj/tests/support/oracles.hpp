#pragma once

// Reference computations written independently of the library code paths
// they check. Slow and obvious on purpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

// ECDF of `s` at x: fraction of entries <= x.
inline double ecdf(const std::vector<double>& s, double x) {
  std::size_t k = 0;
  for (double v : s) k += v <= x ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(s.size());
}

// sup |F_a - F_b| by evaluating at every pooled point. Both ECDFs are right
// continuous step functions, so the supremum is attained at a data point.
inline double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
  double best = 0.0;
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double x : pooled) best = std::max(best, std::abs(ecdf(a, x) - ecdf(b, x)));
  return best;
}

// Exact permutation p-value by listing every way of choosing which pooled
// values form the first sample.
inline double enumerate_ks_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  const double d = brute_ks(a, b);
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t total = pooled.size();
  std::vector<bool> pick(total, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(a.size()), true);
  std::sort(pick.begin(), pick.end());  // lexicographically smallest arrangement
  std::uint64_t hits = 0, count = 0;
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < total; ++i) (pick[i] ? x : y).push_back(pooled[i]);
    if (brute_ks(x, y) >= d - 1e-12) ++hits;
    ++count;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return static_cast<double>(hits) / static_cast<double>(count);
}

inline double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Product-Bernoulli class model restricted to a few informative features.
struct BernoulliConcept {
  std::vector<double> benign;   // per-feature P(bit = 1 | benign)
  std::vector<double> malware;  // per-feature P(bit = 1 | malware)
  double prior = 0.5;           // P(malware)
};

inline double likelihood(const std::vector<double>& rates, unsigned mask) {
  double p = 1.0;
  for (std::size_t f = 0; f < rates.size(); ++f) p *= (mask >> f) & 1U ? rates[f] : 1.0 - rates[f];
  return p;
}

// Accuracy on data from `truth` of the Bayes rule derived from `rule`.
// Features outside the listed ones have equal rates in both classes and do
// not change either the rule or the accuracy.
inline double bayes_accuracy(const BernoulliConcept& rule, const BernoulliConcept& truth) {
  double acc = 0.0;
  for (unsigned mask = 0; mask < (1U << rule.benign.size()); ++mask) {
    const double pm = rule.prior * likelihood(rule.malware, mask);
    const double pb = (1.0 - rule.prior) * likelihood(rule.benign, mask);
    const bool says_malware = pm >= pb;
    acc += says_malware ? truth.prior * likelihood(truth.malware, mask)
                        : (1.0 - truth.prior) * likelihood(truth.benign, mask);
  }
  return acc;
}

struct FlagCounts {
  std::size_t total = 0, deprecated = 0, restricted = 0, not_third_party = 0;
  std::size_t keep_all = 0, keep_no_d = 0, keep_no_r = 0, keep_no_n = 0;
  std::map<std::string, std::size_t> protection;
};

// Reads the registry CSV text directly, one permission per line.
inline FlagCounts flag_scan(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  FlagCounts c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 5) f.emplace_back();
    const bool d = !f[3].empty(), r = !f[4].empty(), n = f[1] == "NotThirdParty";
    ++c.total;
    ++c.protection[f[1]];
    c.deprecated += d;
    c.restricted += r;
    c.not_third_party += n;
    c.keep_all += 1;
    c.keep_no_d += !d;
    c.keep_no_r += !r;
    c.keep_no_n += !n;
  }
  return c;
}

// Plain forward pass of the m -> H ReLU -> sigmoid network on the flat layout
// [w1 (input-major), b1, w2, b2], returning mean binary cross-entropy.
inline double mlp_loss(const std::vector<double>& p, std::size_t inputs, std::size_t hidden,
                       const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
  double total = 0.0;
  for (std::size_t r = 0; r < xs.size(); ++r) {
    double z = p[inputs * hidden + 2 * hidden];
    for (std::size_t u = 0; u < hidden; ++u) {
      double a = p[inputs * hidden + u];
      for (std::size_t j = 0; j < inputs; ++j) a += xs[r][j] * p[j * hidden + u];
      z += std::max(a, 0.0) * p[inputs * hidden + hidden + u];
    }
    const double prob = 1.0 / (1.0 + std::exp(-z));
    total += -(ys[r] * std::log(prob) + (1.0 - ys[r]) * std::log(1.0 - prob));
  }
  return total / static_cast<double>(xs.size());
}

// Logistic regression on two features plus intercept by Newton iterations
// with a small ridge; returns training accuracy of the fitted rule.
inline double logistic_fit_accuracy(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
  double w[3] = {0, 0, 0};
  for (int it = 0; it < 50; ++it) {
    double g[3] = {0, 0, 0}, h[3][3] = {{1e-3, 0, 0}, {0, 1e-3, 0}, {0, 0, 1e-3}};
    for (std::size_t r = 0; r < xs.size(); ++r) {
      const double v[3] = {xs[r][0], xs[r][1], 1.0};
      const double p = 1.0 / (1.0 + std::exp(-(w[0] * v[0] + w[1] * v[1] + w[2])));
      for (int i = 0; i < 3; ++i) {
        g[i] += (p - ys[r]) * v[i] + 1e-3 * w[i];
        for (int j = 0; j < 3; ++j) h[i][j] += p * (1 - p) * v[i] * v[j];
      }
    }
    // Cramer's rule for the 3x3 Newton step.
    auto det = [](double m[3][3]) {
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double dh = det(h);
    for (int k = 0; k < 3; ++k) {
      double m[3][3];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = j == k ? g[i] : h[i][j];
      w[k] -= det(m) / dh;
    }
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < xs.size(); ++r) {
    const bool pos = w[0] * xs[r][0] + w[1] * xs[r][1] + w[2] >= 0.0;
    correct += pos == (ys[r] > 0.5);
  }
  return static_cast<double>(correct) / static_cast<double>(xs.size());
}

}  // namespace oracle
