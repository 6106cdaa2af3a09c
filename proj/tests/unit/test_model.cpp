#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "permdrift/error.hpp"
#include "permdrift/model.hpp"

using namespace permdrift;

namespace {

Dataset separable(std::size_t n) {
  const auto reg = fixture::toy_registry(5);
  std::mt19937_64 gen(n);
  std::vector<fixture::Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<std::uint8_t> bits(5);
    for (auto& b : bits) b = gen() & 1U;
    bits[3] = static_cast<std::uint8_t>(label);
    rows.push_back({label, 2010, bits});
  }
  return fixture::toy_dataset(reg, rows);
}

// A stump voting Malware when `feature` is set, else Benign; -1 votes Malware.
DecisionTree stump(int feature) {
  if (feature < 0) return DecisionTree({TreeNode{-1, -1, -1, Label::Malware}});
  return DecisionTree({TreeNode{feature, 1, 2, Label::Benign}, TreeNode{-1, -1, -1, Label::Benign},
                       TreeNode{-1, -1, -1, Label::Malware}});
}

}  // namespace

TEST(Predict, VoteArithmetic) {
  Forest f(ForestParams{}, 2, {stump(-1), stump(-1), stump(-1), stump(0)});
  TrainedModel m(f, 1);
  const auto d = fixture::toy_dataset(fixture::toy_registry(2), {{0, 2010, {0, 0}}, {0, 2010, {1, 0}}});
  const auto p = predict(m, d);
  EXPECT_EQ(p.scores[0], 0.75);
  EXPECT_EQ(p.labels[0], Label::Malware);
  EXPECT_EQ(p.scores[1], 1.0);
}

TEST(Predict, ZeroWeightMlpScoresHalfAndLabelsMalware) {
  MlpNetwork net(3, 2);
  for (auto& w : net.parameters()) w = 0.0;
  TrainedModel m(net, MlpParams{}, 1);
  const auto d = fixture::toy_dataset(fixture::toy_registry(3), {{0, 2010, {1, 1, 0}}, {1, 2011, {0, 0, 0}}});
  const auto p = predict(m, d);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(p.scores[i], 0.5);
    EXPECT_EQ(p.labels[i], Label::Malware);
  }
}

TEST(Predict, ForestReproducesSeparableTrainingLabels) {
  const auto d = separable(60);
  ForestParams fp;
  fp.n_trees = 10;
  const auto m = train_forest(d, fp);
  const auto p = predict(m, d);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(p.labels[i], d[i].label);
}

TEST(Predict, LengthMismatch) {
  const auto m = train_forest(separable(20), ForestParams{});
  const auto wrong = fixture::toy_dataset(fixture::toy_registry(4), {{0, 2010, {0, 0, 0, 0}}});
  try {
    predict(m, wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(Fingerprint, FixedInputsGiveFixedFingerprint) {
  const auto d = separable(40);
  ForestParams fp;
  fp.n_trees = 5;
  const auto a = train(d, fp);
  EXPECT_EQ(a.fingerprint(), train(d, fp).fingerprint());
  EXPECT_EQ(a.fingerprint(), train(d, fp, 3).fingerprint());
  EXPECT_EQ(a.fingerprint_hex().size(), 16U);
  fp.seed = 1;
  EXPECT_NE(a.fingerprint(), train(d, fp).fingerprint());
  MlpParams mp;
  mp.hidden_units = 4;
  mp.epochs = 2;
  EXPECT_EQ(train(d, mp).fingerprint(), train(d, mp).fingerprint());
  EXPECT_NE(train(d, mp).fingerprint(), a.fingerprint());
}

TEST(Serialization, ForestRoundTrip) {
  const auto d = separable(40);
  ForestParams fp;
  fp.n_trees = 4;
  fp.max_depth = 3;
  const auto m = train(d, fp);
  const auto back = model_from_json(model_to_json(m));
  EXPECT_EQ(back.kind(), ModelKind::Forest);
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  EXPECT_EQ(*back.forest(), *m.forest());
  EXPECT_EQ(model_to_json(back), model_to_json(m));
}

TEST(Serialization, MlpRoundTrip) {
  const auto d = separable(40);
  MlpParams mp;
  mp.hidden_units = 3;
  mp.epochs = 2;
  const auto m = train(d, mp);
  const auto back = model_from_json(model_to_json(m));
  EXPECT_EQ(back.kind(), ModelKind::Mlp);
  EXPECT_EQ(*back.network(), *m.network());
  EXPECT_EQ(back.mlp_params(), m.mlp_params());
  const auto p1 = predict(m, d), p2 = predict(back, d);
  EXPECT_EQ(p1.scores, p2.scores);
}

TEST(Serialization, RejectsForeignDocuments) {
  EXPECT_THROW(model_from_json("{}"), Error);
  EXPECT_THROW(model_from_json("not json"), Error);
  EXPECT_THROW(model_from_json(R"({"format":"permdrift-model","version":1,"kind":"svm"})"), Error);
}

TEST(Params, SeedHelpers) {
  ModelParams p = ForestParams{};
  EXPECT_EQ(kind_of(p), ModelKind::Forest);
  EXPECT_EQ(seed_of(with_seed(p, 9)), 9U);
  ModelParams q = MlpParams{};
  EXPECT_EQ(kind_of(q), ModelKind::Mlp);
  EXPECT_EQ(to_string(ModelKind::Mlp), "mlp");
}
