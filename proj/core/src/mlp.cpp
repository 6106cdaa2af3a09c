#include "permdrift/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "permdrift/error.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

namespace {

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log s(z) + (1-y) log(1-s(z))], evaluated without overflow
double bce_from_logit(double z, double y) noexcept {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

MlpNetwork::MlpNetwork(std::size_t inputs, std::size_t hidden)
    : inputs_(inputs), hidden_(hidden), params_(inputs * hidden + 2 * hidden + 1, 0.0) {}

MlpNetwork MlpNetwork::initialize(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  MlpNetwork net(inputs, hidden);
  Rng rng(seed);
  const double limit1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
  for (std::size_t i = 0; i < inputs * hidden; ++i) net.params_[i] = (2.0 * rng.uniform() - 1.0) * limit1;
  const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (std::size_t u = 0; u < hidden; ++u) net.w2(u) = (2.0 * rng.uniform() - 1.0) * limit2;
  return net;
}

double MlpNetwork::logit(std::span<const double> x) const {
  std::vector<double> h(params_.begin() + static_cast<std::ptrdiff_t>(inputs_ * hidden_),
                        params_.begin() + static_cast<std::ptrdiff_t>(inputs_ * hidden_ + hidden_));
  for (std::size_t j = 0; j < inputs_; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* row = &params_[j * hidden_];
    for (std::size_t u = 0; u < hidden_; ++u) h[u] += xj * row[u];
  }
  const double* w2 = &params_[inputs_ * hidden_ + hidden_];
  double z = params_.back();
  for (std::size_t u = 0; u < hidden_; ++u) z += std::max(h[u], 0.0) * w2[u];
  return z;
}

double MlpNetwork::probability(std::span<const double> x) const { return sigmoid(logit(x)); }

double MlpNetwork::probability(std::span<const std::uint8_t> bits) const {
  std::vector<double> x(bits.begin(), bits.end());
  return probability(x);
}

double MlpNetwork::loss_and_gradient(std::span<const double> batch, std::span<const double> targets,
                                     std::span<double> gradient,
                                     std::span<const double> dropout_scale) const {
  const std::size_t rows = targets.size();
  if (batch.size() != rows * inputs_ || gradient.size() != params_.size() || rows == 0 ||
      (!dropout_scale.empty() && dropout_scale.size() != rows * hidden_)) {
    throw Error(ErrorCode::LengthMismatch, "batch, target or gradient size mismatch");
  }
  std::fill(gradient.begin(), gradient.end(), 0.0);
  const std::size_t b1_off = inputs_ * hidden_;
  const std::size_t w2_off = b1_off + hidden_;
  const std::size_t b2_off = w2_off + hidden_;
  std::vector<double> pre(hidden_), act(hidden_);
  double loss = 0.0;
  const double inv_rows = 1.0 / static_cast<double>(rows);

  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = &batch[r * inputs_];
    std::copy_n(&params_[b1_off], hidden_, pre.begin());
    for (std::size_t j = 0; j < inputs_; ++j) {
      if (x[j] == 0.0) continue;
      const double* row = &params_[j * hidden_];
      for (std::size_t u = 0; u < hidden_; ++u) pre[u] += x[j] * row[u];
    }
    double z = params_[b2_off];
    for (std::size_t u = 0; u < hidden_; ++u) {
      double a = pre[u] > 0.0 ? pre[u] : 0.0;
      if (!dropout_scale.empty()) a *= dropout_scale[r * hidden_ + u];
      act[u] = a;
      z += a * params_[w2_off + u];
    }
    loss += bce_from_logit(z, targets[r]);

    const double dz = (sigmoid(z) - targets[r]) * inv_rows;
    gradient[b2_off] += dz;
    for (std::size_t u = 0; u < hidden_; ++u) {
      gradient[w2_off + u] += dz * act[u];
      double dpre = pre[u] > 0.0 ? dz * params_[w2_off + u] : 0.0;
      if (!dropout_scale.empty()) dpre *= dropout_scale[r * hidden_ + u];
      pre[u] = dpre;
      gradient[b1_off + u] += dpre;
    }
    for (std::size_t j = 0; j < inputs_; ++j) {
      if (x[j] == 0.0) continue;
      double* g = &gradient[j * hidden_];
      for (std::size_t u = 0; u < hidden_; ++u) g[u] += x[j] * pre[u];
    }
  }
  return loss * inv_rows;
}

namespace {

void load_batch(const Dataset& d, std::span<const std::size_t> rows, std::vector<double>& x,
                std::vector<double>& y) {
  const std::size_t m = d.feature_count();
  x.assign(rows.size() * m, 0.0);
  y.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& s = d[rows[r]];
    for (std::size_t j = 0; j < m; ++j) x[r * m + j] = s.bits[j];
    y[r] = s.label == Label::Malware ? 1.0 : 0.0;
  }
}

double mean_loss(const MlpNetwork& net, const Dataset& d, std::span<const std::size_t> rows) {
  double total = 0.0;
  std::vector<double> x(d.feature_count());
  for (auto i : rows) {
    const auto& s = d[i];
    std::copy(s.bits.begin(), s.bits.end(), x.begin());
    total += bce_from_logit(net.logit(x), s.label == Label::Malware ? 1.0 : 0.0);
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

MlpNetwork fit_mlp(const Dataset& train, const MlpParams& p) {
  if (p.hidden_units < 1 || p.epochs < 0 || p.batch_size < 1 || p.learning_rate < 0 ||
      p.validation_fraction < 0 || p.validation_fraction >= 1 || p.dropout_rate < 0 ||
      p.dropout_rate >= 1 || p.patience < 0) {
    throw Error(ErrorCode::BadConfig, "invalid MLP parameters");
  }
  if (train.empty()) throw Error(ErrorCode::TooFewSamples, "empty training set");
  if (train.feature_count() == 0) throw Error(ErrorCode::EmptyFeatureSet, "no input features");
  if (!train.class_counts().both()) throw Error(ErrorCode::MissingClass, "training set lacks a class");
  for (const auto& s : train.samples()) {
    if (s.bits.size() != train.feature_count()) {
      throw Error(ErrorCode::LengthMismatch, "sample " + s.id + " has wrong bit length");
    }
  }

  const std::size_t m = train.feature_count();
  const auto hidden = static_cast<std::size_t>(p.hidden_units);
  MlpNetwork net = MlpNetwork::initialize(m, hidden, derive_seed(p.seed, "mlp-init"));
  Rng order_rng(derive_seed(p.seed, "mlp-order"));
  Rng dropout_rng(derive_seed(p.seed, "mlp-dropout"));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  order_rng.shuffle(std::span(order));
  const auto n_fit = static_cast<std::size_t>(
      std::floor(static_cast<double>(order.size()) * (1.0 - p.validation_fraction) + 1e-9));
  std::vector<std::size_t> fit_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_fit));
  std::vector<std::size_t> val_rows(order.begin() + static_cast<std::ptrdiff_t>(n_fit), order.end());
  if (fit_rows.empty()) {
    fit_rows = order;
    val_rows.clear();
  }
  const bool track_validation = p.early_stop && !val_rows.empty();

  const auto n_params = net.parameters().size();
  std::vector<double> grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
  std::vector<double> x, y, drop;
  std::vector<double> best = track_validation ? std::vector<double>(net.parameters().begin(), net.parameters().end())
                                              : std::vector<double>{};
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  double beta1_pow = 1.0, beta2_pow = 1.0;
  const auto batch = static_cast<std::size_t>(p.batch_size);

  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    order_rng.shuffle(std::span(fit_rows));
    for (std::size_t start = 0; start < fit_rows.size(); start += batch) {
      const auto rows = std::span(fit_rows).subspan(start, std::min(batch, fit_rows.size() - start));
      load_batch(train, rows, x, y);
      drop.clear();
      if (p.dropout_rate > 0.0) {
        drop.resize(rows.size() * hidden);
        const double keep_scale = 1.0 / (1.0 - p.dropout_rate);
        for (auto& d : drop) d = dropout_rng.uniform() < p.dropout_rate ? 0.0 : keep_scale;
      }
      const double loss = net.loss_and_gradient(x, y, grad, drop);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "training loss diverged in epoch " + std::to_string(epoch));
      }
      beta1_pow *= p.beta1;
      beta2_pow *= p.beta2;
      auto params = net.parameters();
      for (std::size_t k = 0; k < n_params; ++k) {
        m1[k] = p.beta1 * m1[k] + (1.0 - p.beta1) * grad[k];
        m2[k] = p.beta2 * m2[k] + (1.0 - p.beta2) * grad[k] * grad[k];
        const double m_hat = m1[k] / (1.0 - beta1_pow);
        const double v_hat = m2[k] / (1.0 - beta2_pow);
        params[k] -= p.learning_rate * m_hat / (std::sqrt(v_hat) + p.epsilon);
      }
    }
    if (track_validation) {
      const double val = mean_loss(net, train, val_rows);
      if (!std::isfinite(val)) throw Error(ErrorCode::NonFiniteLoss, "validation loss is not finite");
      if (val < best_loss) {
        best_loss = val;
        std::copy(net.parameters().begin(), net.parameters().end(), best.begin());
        stale = 0;
      } else if (++stale > p.patience) {
        break;
      }
    }
  }
  if (track_validation) std::copy(best.begin(), best.end(), net.parameters().begin());
  return net;
}

}  // namespace permdrift
