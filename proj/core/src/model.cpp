#include "permdrift/model.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>

#include "permdrift/error.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

using nlohmann::json;

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::Forest ? "rf" : "mlp";
}

ModelKind kind_of(const ModelParams& params) noexcept {
  return std::holds_alternative<ForestParams>(params) ? ModelKind::Forest : ModelKind::Mlp;
}

std::uint64_t seed_of(const ModelParams& params) noexcept {
  return std::visit([](const auto& p) { return p.seed; }, params);
}

ModelParams with_seed(ModelParams params, std::uint64_t seed) {
  std::visit([&](auto& p) { p.seed = seed; }, params);
  return params;
}

namespace {

void hash_params(Fnv1a64& h, const ForestParams& p) {
  h.update("forest");
  h.update_u64(static_cast<std::uint64_t>(p.n_trees));
  h.update_u64(p.max_depth ? static_cast<std::uint64_t>(*p.max_depth) : ~0ULL);
  h.update_u64(static_cast<std::uint64_t>(p.min_leaf));
  h.update_u64(static_cast<std::uint64_t>(p.features_per_split));
  h.update_u64(p.seed);
}

void hash_params(Fnv1a64& h, const MlpParams& p) {
  h.update("mlp");
  h.update_u64(static_cast<std::uint64_t>(p.hidden_units));
  for (double v : {p.learning_rate, p.beta1, p.beta2, p.epsilon, p.validation_fraction, p.dropout_rate}) {
    h.update_double(v);
  }
  h.update_u64(static_cast<std::uint64_t>(p.epochs));
  h.update_u64(static_cast<std::uint64_t>(p.batch_size));
  h.update_u64(p.early_stop ? 1 : 0);
  h.update_u64(static_cast<std::uint64_t>(p.patience));
  h.update_u64(p.seed);
}

void hash_data(Fnv1a64& h, const Dataset& d) {
  for (const auto& n : d.feature_names()) h.update(n);
  h.update_u64(d.size());
  for (const auto& s : d.samples()) {
    h.update_u64(static_cast<std::uint64_t>(s.label));
    h.update(std::string_view(reinterpret_cast<const char*>(s.bits.data()), s.bits.size()));
  }
}

void hash_forest(Fnv1a64& h, const Forest& f) {
  for (const auto& t : f.trees()) {
    h.update_u64(t.nodes().size());
    for (const auto& n : t.nodes()) {
      h.update_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.feature)));
      h.update_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.left)));
      h.update_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.right)));
      h.update_u64(static_cast<std::uint64_t>(n.label));
    }
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

TrainedModel::TrainedModel(Forest forest, std::uint64_t fingerprint)
    : model_(std::move(forest)), fingerprint_(fingerprint) {}

TrainedModel::TrainedModel(MlpNetwork network, MlpParams params, std::uint64_t fingerprint)
    : model_(std::move(network)), mlp_params_(params), fingerprint_(fingerprint) {}

ModelKind TrainedModel::kind() const noexcept {
  return std::holds_alternative<Forest>(model_) ? ModelKind::Forest : ModelKind::Mlp;
}

std::size_t TrainedModel::feature_count() const noexcept {
  if (auto f = forest()) return f->feature_count();
  return network()->inputs();
}

std::string TrainedModel::fingerprint_hex() const { return hex64(fingerprint_); }

double TrainedModel::score(std::span<const std::uint8_t> bits) const {
  if (bits.size() != feature_count()) {
    throw Error(ErrorCode::LengthMismatch, "input has " + std::to_string(bits.size()) +
                                               " features, model expects " +
                                               std::to_string(feature_count()));
  }
  if (auto f = forest()) return f->score(bits);
  return network()->probability(bits);
}

TrainedModel train_forest(const Dataset& train, const ForestParams& params, int threads) {
  Forest forest = grow_forest(train, params, threads);
  Fnv1a64 h;
  hash_params(h, params);
  hash_data(h, train);
  hash_forest(h, forest);
  return TrainedModel(std::move(forest), h.digest());
}

TrainedModel train_mlp(const Dataset& train, const MlpParams& params) {
  MlpNetwork net = fit_mlp(train, params);
  Fnv1a64 h;
  hash_params(h, params);
  hash_data(h, train);
  for (double w : net.parameters()) h.update_double(w);
  return TrainedModel(std::move(net), params, h.digest());
}

TrainedModel train(const Dataset& train_set, const ModelParams& params, int threads) {
  if (auto f = std::get_if<ForestParams>(&params)) return train_forest(train_set, *f, threads);
  return train_mlp(train_set, std::get<MlpParams>(params));
}

Predictions predict(const TrainedModel& model, const Dataset& samples) {
  Predictions out;
  out.labels.reserve(samples.size());
  out.scores.reserve(samples.size());
  for (const auto& s : samples.samples()) {
    const double score = model.score(s.bits);
    out.scores.push_back(score);
    out.labels.push_back(score >= 0.5 ? Label::Malware : Label::Benign);
  }
  return out;
}

namespace {

json forest_params_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
          {"min_leaf", p.min_leaf},
          {"features_per_split", p.features_per_split == FeaturesPerSplit::Sqrt ? "sqrt" : "all"},
          {"seed", p.seed}};
}

json mlp_params_json(const MlpParams& p) {
  return {{"hidden_units", p.hidden_units}, {"learning_rate", p.learning_rate},
          {"beta1", p.beta1},               {"beta2", p.beta2},
          {"epsilon", p.epsilon},           {"epochs", p.epochs},
          {"batch_size", p.batch_size},     {"validation_fraction", p.validation_fraction},
          {"early_stop", p.early_stop},     {"patience", p.patience},
          {"dropout_rate", p.dropout_rate}, {"seed", p.seed}};
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json doc;
  doc["format"] = "permdrift-model";
  doc["version"] = 1;
  doc["kind"] = to_string(model.kind());
  doc["feature_count"] = model.feature_count();
  doc["fingerprint"] = model.fingerprint_hex();
  if (auto f = model.forest()) {
    doc["params"] = forest_params_json(f->params());
    json trees = json::array();
    for (const auto& t : f->trees()) {
      json nodes = json::array();
      for (const auto& n : t.nodes()) {
        nodes.push_back({n.feature, n.left, n.right, static_cast<int>(n.label)});
      }
      trees.push_back(std::move(nodes));
    }
    doc["trees"] = std::move(trees);
  } else {
    MlpNetwork net = *model.network();
    doc["params"] = mlp_params_json(model.mlp_params());
    json w1 = json::array();
    for (std::size_t j = 0; j < net.inputs(); ++j) {
      json row = json::array();
      for (std::size_t u = 0; u < net.hidden(); ++u) row.push_back(net.w1(j, u));
      w1.push_back(std::move(row));
    }
    json b1 = json::array(), w2 = json::array();
    for (std::size_t u = 0; u < net.hidden(); ++u) {
      b1.push_back(net.b1(u));
      w2.push_back(net.w2(u));
    }
    doc["weights"] = {{"w1", std::move(w1)}, {"b1", std::move(b1)}, {"w2", std::move(w2)}, {"b2", net.b2()}};
  }
  return doc.dump(1);
}

TrainedModel model_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "permdrift-model" || doc.at("version") != 1) {
      throw Error(ErrorCode::BadModel, "not a permdrift model document");
    }
    const auto fingerprint = std::stoull(doc.at("fingerprint").get<std::string>(), nullptr, 16);
    const auto features = doc.at("feature_count").get<std::size_t>();
    const auto& params = doc.at("params");
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "rf") {
      ForestParams p;
      p.n_trees = params.at("n_trees").get<int>();
      if (!params.at("max_depth").is_null()) p.max_depth = params.at("max_depth").get<int>();
      p.min_leaf = params.at("min_leaf").get<int>();
      p.features_per_split = params.at("features_per_split") == "all" ? FeaturesPerSplit::All
                                                                        : FeaturesPerSplit::Sqrt;
      p.seed = params.at("seed").get<std::uint64_t>();
      std::vector<DecisionTree> trees;
      for (const auto& t : doc.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& n : t) {
          TreeNode node{n.at(0).get<std::int32_t>(), n.at(1).get<std::int32_t>(),
                        n.at(2).get<std::int32_t>(), n.at(3).get<int>() ? Label::Malware : Label::Benign};
          const auto limit = static_cast<std::int32_t>(t.size());
          if (!node.leaf() && (node.feature >= static_cast<std::int32_t>(features) || node.left <= 0 ||
                               node.right <= 0 || node.left >= limit || node.right >= limit)) {
            throw Error(ErrorCode::BadModel, "tree node out of range");
          }
          nodes.push_back(node);
        }
        if (nodes.empty()) throw Error(ErrorCode::BadModel, "empty tree");
        trees.emplace_back(std::move(nodes));
      }
      return TrainedModel(Forest(p, features, std::move(trees)), fingerprint);
    }
    if (kind == "mlp") {
      MlpParams p;
      p.hidden_units = params.at("hidden_units").get<int>();
      p.learning_rate = params.at("learning_rate").get<double>();
      p.beta1 = params.at("beta1").get<double>();
      p.beta2 = params.at("beta2").get<double>();
      p.epsilon = params.at("epsilon").get<double>();
      p.epochs = params.at("epochs").get<int>();
      p.batch_size = params.at("batch_size").get<int>();
      p.validation_fraction = params.at("validation_fraction").get<double>();
      p.early_stop = params.at("early_stop").get<bool>();
      p.patience = params.at("patience").get<int>();
      p.dropout_rate = params.at("dropout_rate").get<double>();
      p.seed = params.at("seed").get<std::uint64_t>();
      const auto& w = doc.at("weights");
      const auto hidden = static_cast<std::size_t>(p.hidden_units);
      MlpNetwork net(features, hidden);
      const auto& w1 = w.at("w1");
      if (w1.size() != features || w.at("b1").size() != hidden || w.at("w2").size() != hidden) {
        throw Error(ErrorCode::BadModel, "weight shapes do not match feature_count/hidden_units");
      }
      for (std::size_t j = 0; j < features; ++j) {
        if (w1[j].size() != hidden) throw Error(ErrorCode::BadModel, "w1 row has wrong width");
        for (std::size_t u = 0; u < hidden; ++u) net.w1(j, u) = w1[j][u].get<double>();
      }
      for (std::size_t u = 0; u < hidden; ++u) {
        net.b1(u) = w.at("b1")[u].get<double>();
        net.w2(u) = w.at("w2")[u].get<double>();
      }
      net.b2() = w.at("b2").get<double>();
      return TrainedModel(std::move(net), p, fingerprint);
    }
    throw Error(ErrorCode::BadModel, "unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadModel, e.what());
  }
}

}  // namespace permdrift
