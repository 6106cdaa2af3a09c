#include "permdrift/metrics.hpp"

#include <string>

#include "permdrift/error.hpp"

namespace permdrift {

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "label vectors differ in length");
  }
  if (truth.empty()) throw Error(ErrorCode::Empty, "no labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == Label::Malware;
    const bool guess = predicted[i] == Label::Malware;
    if (actual && guess) {
      ++cm.tp;
    } else if (actual) {
      ++cm.fn;
    } else if (guess) {
      ++cm.fp;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::Accuracy: return "accuracy";
    case Metric::PrecisionBenign: return "precision_benign";
    case Metric::RecallBenign: return "recall_benign";
    case Metric::F1Benign: return "f1_benign";
    case Metric::PrecisionMalware: return "precision_malware";
    case Metric::RecallMalware: return "recall_malware";
    case Metric::F1Malware: return "f1_malware";
  }
  return "accuracy";
}

Metric parse_metric(std::string_view text) {
  for (auto m : {Metric::Accuracy, Metric::PrecisionBenign, Metric::RecallBenign, Metric::F1Benign,
                 Metric::PrecisionMalware, Metric::RecallMalware, Metric::F1Malware}) {
    if (text == to_string(m)) return m;
  }
  if (text == "f1") return Metric::F1Malware;
  throw Error(ErrorCode::BadConfig, "unknown metric '" + std::string(text) + "'");
}

double Scores::get(Metric m) const noexcept {
  switch (m) {
    case Metric::Accuracy: return accuracy;
    case Metric::PrecisionBenign: return precision_benign;
    case Metric::RecallBenign: return recall_benign;
    case Metric::F1Benign: return f1_benign;
    case Metric::PrecisionMalware: return precision_malware;
    case Metric::RecallMalware: return recall_malware;
    case Metric::F1Malware: return f1_malware;
  }
  return 0.0;
}

namespace {

struct Ratio {
  double value;
  bool undefined;
};

Ratio ratio(double num, double den) {
  if (den == 0.0) return {0.0, true};
  return {num / den, false};
}

void fill_class(double tp, double fp, double fn, Scores& s, Metric p_key, Metric r_key, Metric f_key,
                double& p_out, double& r_out, double& f_out) {
  auto flag = [&](Metric m) { s.undefined |= static_cast<std::uint8_t>(1U << static_cast<unsigned>(m)); };
  const auto p = ratio(tp, tp + fp);
  const auto r = ratio(tp, tp + fn);
  if (p.undefined) flag(p_key);
  if (r.undefined) flag(r_key);
  p_out = p.value;
  r_out = r.value;
  const auto f = ratio(2.0 * p.value * r.value, p.value + r.value);
  if (f.undefined) flag(f_key);
  f_out = f.value;
}

}  // namespace

Scores scores(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::Empty, "confusion matrix has no samples");
  Scores s;
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto fn = static_cast<double>(cm.fn);
  const auto tn = static_cast<double>(cm.tn);
  fill_class(tp, fp, fn, s, Metric::PrecisionMalware, Metric::RecallMalware, Metric::F1Malware,
             s.precision_malware, s.recall_malware, s.f1_malware);
  fill_class(tn, fn, fp, s, Metric::PrecisionBenign, Metric::RecallBenign, Metric::F1Benign,
             s.precision_benign, s.recall_benign, s.f1_benign);
  s.accuracy = (tp + tn) / static_cast<double>(cm.total());
  return s;
}

}  // namespace permdrift
