#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace termgnn::metrics {

/// A ROC or precision-recall curve for one positive class. Points are listed
/// from the highest threshold down; for ROC x = FPR, y = TPR, for PR
/// x = recall, y = precision.
struct CurveReport {
  std::string kind;  // "roc" or "pr"
  int positive_class = 1;
  std::vector<double> thresholds;
  std::vector<double> x;
  std::vector<double> y;
  double area = 0.0;  // AUC for ROC, AP for PR
};

/// labels[i] is 1 when sample i belongs to the positive class and scores[i]
/// is its positive-class score. Throws std::invalid_argument unless both
/// classes occur.
CurveReport roc(std::span<const double> scores, std::span<const int> labels, int positive_class = 1);
CurveReport precision_recall(std::span<const double> scores, std::span<const int> labels, int positive_class = 1);

/// Mean of exactly two per-class areas.
double mean_area(std::span<const CurveReport> per_class);

/// Binary report from terminating-class probabilities and 0/1 labels
/// (1 = terminating). Class 0 is evaluated on 1 - p.
struct ClassificationReport {
  CurveReport roc[2];
  CurveReport pr[2];
  double roc_auc = 0.0;  // positive class = terminating
  double roc_map = 0.0;
  double pr_map = 0.0;
  double accuracy = 0.0;
};

ClassificationReport classification_report(std::span<const double> p_term, std::span<const int> labels);

struct SegReport {
  double dice = 0.0;
  double iou = 0.0;
  double node_accuracy = 0.0;
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Node-level overlap of two 0/1 masks. Two empty masks give Dice = IoU = 1.
SegReport seg_scores(std::span<const int> pred, std::span<const int> truth);

/// Adds counts of another report and recomputes the ratios (micro average).
SegReport merge(const SegReport& a, const SegReport& b);

std::string to_json(const CurveReport& r);
std::string to_json(const SegReport& r);
/// CSV with header threshold,x,y.
std::string to_csv(const CurveReport& r);

}  // namespace termgnn::metrics
