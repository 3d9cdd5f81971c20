#include <nlohmann/json.hpp>

#include "uqbot/error.hpp"
#include "uqbot/eval.hpp"

namespace uqbot {

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth) {
  if (preds.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                               std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
      throw Error(ErrorCode::NonBinaryLabel, "position " + std::to_string(i));
    }
    if (p == 1) {
      (t == 1 ? cm.tp : cm.fp) += 1;
    } else {
      (t == 0 ? cm.tn : cm.fn) += 1;
    }
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "no evaluated samples");
  MetricsReport m;
  auto ratio = [&m](double num, double den, const char* name) {
    if (den == 0.0) {
      m.degenerate_flags.emplace_back(name);
      return 0.0;
    }
    return num / den;
  };
  const double tp = double(cm.tp), tn = double(cm.tn), fp = double(cm.fp), fn = double(cm.fn);
  m.accuracy = (tp + tn) / double(cm.total());
  m.precision = ratio(tp, tp + fp, "precision");
  m.recall = ratio(tp, tp + fn, "recall");
  m.fpr = ratio(fp, fp + tn, "fpr");
  m.tpr = ratio(tp, tp + fn, "tpr");
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall, "f1");
  return m;
}

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
                   {"fpr", m.fpr},           {"tpr", m.tpr},             {"f1", m.f1}};
  if (!m.degenerate_flags.empty()) j["degenerate_flags"] = m.degenerate_flags;
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.fpr = j.at("fpr").get<double>();
  m.tpr = j.at("tpr").get<double>();
  m.f1 = j.at("f1").get<double>();
  if (j.contains("degenerate_flags")) {
    m.degenerate_flags = j.at("degenerate_flags").get<std::vector<std::string>>();
  }
  return m;
}

}  // namespace uqbot
