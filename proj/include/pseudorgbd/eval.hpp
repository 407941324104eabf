#pragma once

#include <Eigen/Core>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pseudorgbd/fusion.hpp"
#include "pseudorgbd/places.hpp"

namespace pseudorgbd {

/// Fraction of predictions whose argmax equals the ground-truth label. The two
/// inputs must cover the same non-empty set of sample ids.
double top1_accuracy(const std::vector<Prediction>& predictions, const std::vector<LabeledSample>& ground_truth);

struct ClassAccuracy {
  int samples{0};
  int correct{0};
  double accuracy() const { return samples > 0 ? static_cast<double>(correct) / samples : 0.0; }
};

struct MethodResult {
  std::string name;
  double top1{0};
  double gain{0};  // primary method's top1 minus this one; 0 for the primary itself
};

struct SubsetAccuracy {
  int samples{0};
  int correct{0};
  double top1() const { return samples > 0 ? static_cast<double>(correct) / samples : 0.0; }
};

struct EvalReport {
  double top1{0};                         // primary method
  std::vector<ClassAccuracy> per_class;   // primary method, indexed by ground-truth class
  Eigen::MatrixXi confusion;              // rows: ground truth, cols: predicted
  std::vector<MethodResult> comparisons;  // primary first
  // Filled when training class counts are known: samples whose class had no
  // training examples versus the rest.
  std::optional<SubsetAccuracy> seen;
  std::optional<SubsetAccuracy> unseen;
};

struct NamedPredictions {
  std::string name;
  std::vector<Prediction> predictions;
};

/// `methods[0]` is the primary method ("Ours"); every other method gets a gain
/// relative to it. `train_histogram`, when non-empty, enables the seen/unseen split.
EvalReport ablation_report(const std::vector<NamedPredictions>& methods, const std::vector<LabeledSample>& ground_truth,
                           int num_classes, const std::vector<int>& train_histogram = {});

/// Runs both heads and the fusion model on a joined test set and compares
/// fusion against RGB-Net, HHA-Net and their equal-weight average.
template <typename Scalar>
EvalReport ablation_report(const MlpModel<Scalar>& rgb_head, const MlpModel<Scalar>& hha_head,
                           const MlpModel<Scalar>& fusion, const JoinedEmbeddings& test,
                           const std::vector<LabeledSample>& ground_truth,
                           const std::vector<int>& train_histogram = {}) {
  const int classes = fusion.num_classes();
  if (rgb_head.num_classes() != classes || hha_head.num_classes() != classes) {
    throw ContractError("ablation_report: models disagree on the number of classes");
  }
  const Eigen::Index rgb_dim = test.rgb_dim;
  const Eigen::Index hha_dim = test.vectors.rows() - rgb_dim;
  const typename MlpModel<Scalar>::Matrix all = test.vectors.cast<Scalar>();
  auto rgb = predict_batch<Scalar>(rgb_head, all.topRows(rgb_dim), test.ids);
  auto hha = predict_batch<Scalar>(hha_head, all.bottomRows(hha_dim), test.ids);
  auto ours = predict_batch<Scalar>(fusion, all, test.ids);
  auto naive = naive_average(rgb, hha);
  return ablation_report({{"Ours", std::move(ours)},
                          {"RGB-Net", std::move(rgb)},
                          {"HHA-Net", std::move(hha)},
                          {"Naive-Avg", std::move(naive)}},
                         ground_truth, classes, train_histogram);
}

/// One-row table in the layout "Ours  RGB-Net (gain)  HHA-Net (gain) ...",
/// percentages with one decimal.
std::string render_table(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);
std::string confusion_to_csv(const EvalReport& report);

}  // namespace pseudorgbd
