#include "termgnn/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace termgnn::metrics {

namespace {

struct Sweep {
  std::vector<double> thresholds;
  std::vector<std::uint64_t> tp, fp;  // counts at score >= threshold
  std::uint64_t pos = 0, neg = 0;
};

Sweep sweep(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  Sweep s;
  for (int l : labels) (l == 1 ? s.pos : s.neg)++;
  if (s.pos == 0 || s.neg == 0) throw std::invalid_argument("both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (labels[order[k]] == 1 ? tp : fp)++;
    bool last_of_tie = k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]];
    if (last_of_tie) {
      s.thresholds.push_back(scores[order[k]]);
      s.tp.push_back(tp);
      s.fp.push_back(fp);
    }
  }
  return s;
}

}  // namespace

CurveReport roc(std::span<const double> scores, std::span<const int> labels, int positive_class) {
  Sweep s = sweep(scores, labels);
  CurveReport r{"roc", positive_class, {std::numeric_limits<double>::infinity()}, {0.0}, {0.0}, 0.0};
  double P = static_cast<double>(s.pos), N = static_cast<double>(s.neg);
  for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
    double fpr = static_cast<double>(s.fp[k]) / N;
    double tpr = static_cast<double>(s.tp[k]) / P;
    r.area += (fpr - r.x.back()) * (tpr + r.y.back()) / 2.0;
    r.thresholds.push_back(s.thresholds[k]);
    r.x.push_back(fpr);
    r.y.push_back(tpr);
  }
  return r;
}

CurveReport precision_recall(std::span<const double> scores, std::span<const int> labels, int positive_class) {
  Sweep s = sweep(scores, labels);
  CurveReport r{"pr", positive_class, {}, {}, {}, 0.0};
  double P = static_cast<double>(s.pos);
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
    double recall = static_cast<double>(s.tp[k]) / P;
    double precision = static_cast<double>(s.tp[k]) / static_cast<double>(s.tp[k] + s.fp[k]);
    r.area += (recall - prev_recall) * precision;
    prev_recall = recall;
    r.thresholds.push_back(s.thresholds[k]);
    r.x.push_back(recall);
    r.y.push_back(precision);
  }
  return r;
}

double mean_area(std::span<const CurveReport> per_class) {
  if (per_class.size() != 2) throw std::invalid_argument("mean_area expects exactly two class reports");
  return (per_class[0].area + per_class[1].area) / 2.0;
}

ClassificationReport classification_report(std::span<const double> p_term, std::span<const int> labels) {
  std::vector<double> p_non(p_term.size());
  std::vector<int> flipped(labels.size());
  for (std::size_t i = 0; i < p_term.size(); ++i) p_non[i] = 1.0 - p_term[i];
  for (std::size_t i = 0; i < labels.size(); ++i) flipped[i] = labels[i] == 1 ? 0 : 1;

  ClassificationReport r;
  r.roc[0] = roc(p_non, flipped, 0);
  r.roc[1] = roc(p_term, labels, 1);
  r.pr[0] = precision_recall(p_non, flipped, 0);
  r.pr[1] = precision_recall(p_term, labels, 1);
  r.roc_auc = r.roc[1].area;
  r.roc_map = mean_area(r.roc);
  r.pr_map = mean_area(r.pr);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += (p_term[i] >= 0.5 ? 1 : 0) == labels[i];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return r;
}

namespace {

SegReport finish(SegReport r) {
  std::uint64_t union_size = r.tp + r.fp + r.fn;
  if (union_size == 0) {
    r.dice = r.iou = 1.0;
  } else {
    r.iou = static_cast<double>(r.tp) / static_cast<double>(union_size);
    r.dice = 2.0 * static_cast<double>(r.tp) / static_cast<double>(2 * r.tp + r.fp + r.fn);
  }
  std::uint64_t total = r.tp + r.fp + r.tn + r.fn;
  r.node_accuracy = total == 0 ? 1.0 : static_cast<double>(r.tp + r.tn) / static_cast<double>(total);
  return r;
}

}  // namespace

SegReport seg_scores(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("masks differ in length");
  SegReport r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    bool p = pred[i] != 0, t = truth[i] != 0;
    if (p && t) ++r.tp;
    else if (p) ++r.fp;
    else if (t) ++r.fn;
    else ++r.tn;
  }
  return finish(r);
}

SegReport merge(const SegReport& a, const SegReport& b) {
  SegReport r;
  r.tp = a.tp + b.tp;
  r.fp = a.fp + b.fp;
  r.tn = a.tn + b.tn;
  r.fn = a.fn + b.fn;
  return finish(r);
}

std::string to_json(const CurveReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["positive_class"] = r.positive_class;
  j["area"] = r.area;
  // JSON has no infinity; the leading ROC threshold is written as null.
  nlohmann::ordered_json th = nlohmann::ordered_json::array();
  for (double t : r.thresholds) th.push_back(std::isfinite(t) ? nlohmann::ordered_json(t) : nlohmann::ordered_json());
  j["thresholds"] = th;
  j["x"] = r.x;
  j["y"] = r.y;
  return j.dump();
}

std::string to_json(const SegReport& r) {
  nlohmann::ordered_json j;
  j["dice"] = r.dice;
  j["iou"] = r.iou;
  j["node_accuracy"] = r.node_accuracy;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["tn"] = r.tn;
  j["fn"] = r.fn;
  return j.dump();
}

std::string to_csv(const CurveReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold,x,y\n";
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    if (std::isfinite(r.thresholds[i])) out << r.thresholds[i];
    else out << "inf";
    out << ',' << r.x[i] << ',' << r.y[i] << '\n';
  }
  return out.str();
}

}  // namespace termgnn::metrics
