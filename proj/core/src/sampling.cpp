#include "permdrift/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "permdrift/error.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

std::string_view to_string(BalanceMethod m) noexcept {
  switch (m) {
    case BalanceMethod::None: return "none";
    case BalanceMethod::OversampleMinority: return "over";
    case BalanceMethod::UndersampleMajority: return "under";
  }
  return "none";
}

BalanceMethod parse_balance_method(std::string_view text) {
  if (text == "none") return BalanceMethod::None;
  if (text == "over" || text == "oversample" || text == "OversampleMinority") {
    return BalanceMethod::OversampleMinority;
  }
  if (text == "under" || text == "undersample" || text == "UndersampleMajority") {
    return BalanceMethod::UndersampleMajority;
  }
  throw Error(ErrorCode::BadConfig, "unknown balance method '" + std::string(text) + "'");
}

namespace {

std::size_t train_share(std::size_t n, double fraction) {
  // The epsilon absorbs representation error such as 5 * 0.8 = 3.9999...
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

}  // namespace

SplitResult split(const Dataset& dataset, const SplitConfig& cfg) {
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw Error(ErrorCode::BadConfig, "train_fraction must lie in (0, 1)");
  }
  if (dataset.size() < 2) throw Error(ErrorCode::TooFewSamples, "split needs at least 2 samples");

  Rng rng(derive_seed(cfg.seed, "split"));
  std::vector<bool> in_train(dataset.size(), false);
  auto assign = [&](std::vector<std::size_t> pool) {
    rng.shuffle(std::span(pool));
    const auto k = train_share(pool.size(), cfg.train_fraction);
    for (std::size_t i = 0; i < k; ++i) in_train[pool[i]] = true;
  };
  if (cfg.stratified) {
    std::vector<std::size_t> benign, malware;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (dataset[i].label == Label::Malware ? malware : benign).push_back(i);
    }
    if (benign.empty() || malware.empty()) {
      throw Error(ErrorCode::MissingClass, "stratified split needs both classes");
    }
    assign(std::move(benign));
    assign(std::move(malware));
  } else {
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), 0);
    assign(std::move(all));
  }

  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < dataset.size(); ++i) (in_train[i] ? train : test).push_back(i);
  if (train.empty() || test.empty()) {
    throw Error(ErrorCode::TooFewSamples, "split leaves an empty partition");
  }
  return {dataset.subset(train), dataset.subset(test)};
}

Dataset balance(const Dataset& dataset, const BalanceConfig& cfg) {
  if (cfg.method == BalanceMethod::None) return dataset;
  std::vector<std::size_t> benign, malware;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset[i].label == Label::Malware ? malware : benign).push_back(i);
  }
  if (benign.empty() || malware.empty()) {
    throw Error(ErrorCode::MissingClass, "balancing needs both classes");
  }
  const bool malware_minority = malware.size() < benign.size();
  auto& minority = malware_minority ? malware : benign;
  auto& majority = malware_minority ? benign : malware;
  Rng rng(cfg.seed);

  std::vector<std::size_t> order;
  if (cfg.method == BalanceMethod::OversampleMinority) {
    order.resize(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t extra = majority.size() - minority.size();
    for (std::size_t k = 0; k < extra; ++k) order.push_back(minority[rng.below(minority.size())]);
  } else {
    // partial Fisher-Yates picks minority.size() majority rows
    for (std::size_t i = 0; i < minority.size(); ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(majority.size() - i));
      std::swap(majority[i], majority[j]);
    }
    majority.resize(minority.size());
    order = minority;
    order.insert(order.end(), majority.begin(), majority.end());
    std::sort(order.begin(), order.end());
  }
  return dataset.subset(order);
}

}  // namespace permdrift
