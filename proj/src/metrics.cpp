#include "symbiotic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "symbiotic/errors.hpp"

namespace symbiotic {

namespace {
double round5(double v) { return std::round(v * 1e5) / 1e5; }
}  // namespace

double average_precision(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels,
                         const std::vector<std::uint8_t>& present) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (present[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double positives = 0.0, ap_sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]]) {
      positives += 1.0;
      ap_sum += positives / static_cast<double>(rank + 1);
    }
  }
  if (positives == 0.0) {
    throw UndefinedMetricError("average precision needs at least one positive");
  }
  return ap_sum / positives;
}

double classification_error(const std::vector<double>& scores,
                            const std::vector<std::uint8_t>& labels,
                            const std::vector<std::uint8_t>& present,
                            double threshold) {
  std::size_t n = 0, wrong = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!present[i]) continue;
    ++n;
    bool pred = scores[i] > threshold;
    if (pred != (labels[i] != 0)) ++wrong;
  }
  if (n == 0) {
    throw UndefinedMetricError("classification error needs a present label");
  }
  return static_cast<double>(wrong) / static_cast<double>(n);
}

double balanced_accuracy(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels,
                         const std::vector<std::uint8_t>& present,
                         double threshold) {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!present[i]) continue;
    bool pred = scores[i] > threshold;
    if (labels[i]) {
      pred ? ++tp : ++fn;
    } else {
      pred ? ++fp : ++tn;
    }
  }
  if (tp + fn == 0 || tn + fp == 0) {
    throw UndefinedMetricError("balanced accuracy needs both classes present");
  }
  double tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  double tnr = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return 0.5 * (tpr + tnr);
}

std::vector<std::size_t> seg_confusion(const LabelMap& pred, const LabelMap& gt,
                                       std::size_t num_labels) {
  if (pred.batch != gt.batch || pred.h != gt.h || pred.w != gt.w) {
    throw ShapeError("seg_confusion maps differ in shape");
  }
  std::vector<std::size_t> conf(num_labels * num_labels, 0);
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    std::uint8_t g = gt.labels[i];
    if (g == LabelMap::kIgnore) continue;
    std::uint8_t p = pred.labels[i];
    if (g >= num_labels || p >= num_labels) {
      throw LabelRangeError("confusion label " +
                            std::to_string(std::max(g, p)) + " >= " +
                            std::to_string(num_labels));
    }
    ++conf[g * num_labels + p];
  }
  return conf;
}

IouAccuracy iou_and_class_accuracy(const std::vector<std::size_t>& conf,
                                   std::size_t num_labels) {
  if (conf.size() != num_labels * num_labels) {
    throw ShapeError("confusion matrix must be square");
  }
  IouAccuracy out;
  out.iou.assign(num_labels, 0.0);
  out.class_acc.assign(num_labels, 0.0);
  out.valid.assign(num_labels, false);
  double iou_sum = 0.0, acc_sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t c = 0; c < num_labels; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < num_labels; ++j) {
      row += conf[c * num_labels + j];
      col += conf[j * num_labels + c];
    }
    if (row == 0) continue;  // class absent from ground truth
    std::size_t diag = conf[c * num_labels + c];
    std::size_t uni = row + col - diag;
    out.iou[c] = uni == 0 ? 0.0
                          : static_cast<double>(diag) / static_cast<double>(uni);
    out.class_acc[c] = static_cast<double>(diag) / static_cast<double>(row);
    out.valid[c] = true;
    iou_sum += out.iou[c];
    acc_sum += out.class_acc[c];
    ++valid;
  }
  if (valid > 0) {
    out.mean_iou = iou_sum / static_cast<double>(valid);
    out.mean_class_acc = acc_sum / static_cast<double>(valid);
  }
  return out;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  if (has_attr) {
    auto attrs = nlohmann::ordered_json::array();
    for (const auto& a : per_attribute) {
      attrs.push_back({{"name", a.name},
                       {"ap", round5(a.ap)},
                       {"classification_error", round5(a.classification_error)},
                       {"balanced_accuracy", round5(a.balanced_accuracy)}});
    }
    j["per_attribute"] = attrs;
    j["macro_ap"] = round5(macro_ap);
    j["macro_classification_error"] = round5(macro_classification_error);
    j["macro_balanced_accuracy"] = round5(macro_balanced_accuracy);
  }
  if (has_seg) {
    auto classes = nlohmann::ordered_json::array();
    for (const auto& c : per_class_seg) {
      nlohmann::ordered_json e;
      e["name"] = c.name;
      if (c.valid) {
        e["iou"] = round5(c.iou);
        e["class_accuracy"] = round5(c.class_accuracy);
      } else {
        e["iou"] = nullptr;
        e["class_accuracy"] = nullptr;
      }
      classes.push_back(e);
    }
    j["per_class_seg"] = classes;
    j["mean_iou"] = round5(mean_iou);
    j["mean_class_accuracy"] = round5(mean_class_accuracy);
  }
  return j;
}

}  // namespace symbiotic
