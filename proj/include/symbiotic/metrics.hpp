#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "symbiotic/layers.hpp"

namespace symbiotic {

// Mean precision at the ranks of present positives, scores sorted
// descending with a stable tie-break on original order. Missing entries are
// excluded before ranking.
double average_precision(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels,
                         const std::vector<std::uint8_t>& present);

double classification_error(const std::vector<double>& scores,
                            const std::vector<std::uint8_t>& labels,
                            const std::vector<std::uint8_t>& present,
                            double threshold = 0.0);

double balanced_accuracy(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels,
                         const std::vector<std::uint8_t>& present,
                         double threshold = 0.0);

// conf[g * num_labels + p] = pixels with ground truth g predicted p;
// ignore-index pixels in gt are skipped.
std::vector<std::size_t> seg_confusion(const LabelMap& pred, const LabelMap& gt,
                                       std::size_t num_labels);

struct IouAccuracy {
  std::vector<double> iou;        // per class, 0 where invalid
  std::vector<double> class_acc;  // per class
  std::vector<bool> valid;        // classes with ground-truth pixels
  double mean_iou = 0.0;          // over valid classes
  double mean_class_acc = 0.0;
};

IouAccuracy iou_and_class_accuracy(const std::vector<std::size_t>& conf,
                                   std::size_t num_labels);

struct AttributeMetrics {
  std::string name;
  double ap = 0.0;
  double classification_error = 0.0;
  double balanced_accuracy = 0.0;
};

struct SegClassMetrics {
  std::string name;
  double iou = 0.0;
  double class_accuracy = 0.0;
  bool valid = true;
};

struct EvalReport {
  bool has_attr = false;
  bool has_seg = false;
  std::vector<AttributeMetrics> per_attribute;
  double macro_ap = 0.0;
  double macro_classification_error = 0.0;
  double macro_balanced_accuracy = 0.0;
  std::vector<SegClassMetrics> per_class_seg;
  double mean_iou = 0.0;
  double mean_class_accuracy = 0.0;

  // Fixed key order, values rounded to 5 decimals.
  nlohmann::ordered_json to_json() const;
};

}  // namespace symbiotic
