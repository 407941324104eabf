#include "pseudorgbd/eval.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace pseudorgbd {

using nlohmann::json;

namespace {

std::unordered_map<std::string, int> truth_lookup(const std::vector<LabeledSample>& ground_truth) {
  std::unordered_map<std::string, int> lookup;
  for (const auto& l : ground_truth) {
    if (!lookup.emplace(l.sample_id, l.label).second) {
      throw DataError("duplicate ground-truth sample '" + l.sample_id + "'");
    }
  }
  return lookup;
}

int truth_for(const std::unordered_map<std::string, int>& lookup, const std::string& id) {
  const auto it = lookup.find(id);
  if (it == lookup.end()) throw DataError("prediction for '" + id + "' has no ground-truth label");
  return it->second;
}

void check_same_ids(const std::vector<Prediction>& predictions, const std::vector<LabeledSample>& ground_truth,
                    const std::unordered_map<std::string, int>& lookup) {
  if (predictions.empty()) throw DataError("top-1 accuracy of an empty prediction set");
  if (predictions.size() != ground_truth.size()) {
    throw DataError("prediction count " + std::to_string(predictions.size()) + " differs from ground-truth count " +
                    std::to_string(ground_truth.size()));
  }
  std::unordered_map<std::string, int> seen;
  for (const auto& p : predictions) {
    truth_for(lookup, p.sample_id);
    if (++seen[p.sample_id] > 1) throw DataError("duplicate prediction for '" + p.sample_id + "'");
  }
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

std::string signed_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "(%+.1f)", 100.0 * fraction);
  return buf;
}

}  // namespace

double top1_accuracy(const std::vector<Prediction>& predictions, const std::vector<LabeledSample>& ground_truth) {
  const auto lookup = truth_lookup(ground_truth);
  check_same_ids(predictions, ground_truth, lookup);
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.argmax_class == truth_for(lookup, p.sample_id) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

EvalReport ablation_report(const std::vector<NamedPredictions>& methods, const std::vector<LabeledSample>& ground_truth,
                           int num_classes, const std::vector<int>& train_histogram) {
  if (methods.empty()) throw ContractError("ablation_report: no methods");
  if (num_classes < 1) throw ContractError("ablation_report: num_classes must be positive");
  if (!train_histogram.empty() && static_cast<int>(train_histogram.size()) != num_classes) {
    throw ContractError("ablation_report: training histogram does not match the class space");
  }
  const auto lookup = truth_lookup(ground_truth);
  for (const auto& m : methods) {
    check_same_ids(m.predictions, ground_truth, lookup);
    for (const auto& p : m.predictions) {
      if (p.class_probabilities.size() != num_classes || p.argmax_class < 0 || p.argmax_class >= num_classes) {
        throw ContractError("ablation_report: method '" + m.name + "' uses a different class space");
      }
    }
  }
  for (const auto& l : ground_truth) {
    if (l.label < 0 || l.label >= num_classes) {
      throw ContractError("ablation_report: ground-truth label out of range for '" + l.sample_id + "'");
    }
  }

  EvalReport report;
  report.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
  report.per_class.assign(static_cast<std::size_t>(num_classes), {});
  if (!train_histogram.empty()) {
    report.seen = SubsetAccuracy{};
    report.unseen = SubsetAccuracy{};
  }
  for (const auto& p : methods.front().predictions) {
    const int truth = truth_for(lookup, p.sample_id);
    const bool ok = p.argmax_class == truth;
    ++report.confusion(truth, p.argmax_class);
    auto& cls = report.per_class[static_cast<std::size_t>(truth)];
    ++cls.samples;
    cls.correct += ok ? 1 : 0;
    if (!train_histogram.empty()) {
      auto& subset = train_histogram[static_cast<std::size_t>(truth)] > 0 ? *report.seen : *report.unseen;
      ++subset.samples;
      subset.correct += ok ? 1 : 0;
    }
  }
  report.top1 = static_cast<double>(report.confusion.trace()) / static_cast<double>(report.confusion.sum());

  for (const auto& m : methods) {
    const double acc = top1_accuracy(m.predictions, ground_truth);
    report.comparisons.push_back({m.name, acc, 0.0});
  }
  report.comparisons.front().top1 = report.top1;
  for (std::size_t i = 1; i < report.comparisons.size(); ++i) {
    report.comparisons[i].gain = report.top1 - report.comparisons[i].top1;
  }
  return report;
}

std::string render_table(const EvalReport& report) {
  std::ostringstream header;
  std::ostringstream row;
  char buf[64];
  for (std::size_t i = 0; i < report.comparisons.size(); ++i) {
    const auto& m = report.comparisons[i];
    const int width = std::max<int>(8, static_cast<int>(m.name.size()));
    std::snprintf(buf, sizeof buf, "%*s", width + 2, m.name.c_str());
    header << buf;
    std::snprintf(buf, sizeof buf, "%*s", width + 2, percent(m.top1).c_str());
    row << buf;
    if (i > 0) {
      std::snprintf(buf, sizeof buf, "%10s", "(gain)");
      header << buf;
      std::snprintf(buf, sizeof buf, "%10s", signed_percent(m.gain).c_str());
      row << buf;
    }
  }
  std::ostringstream out;
  out << "Top-1 accuracy [%]\n" << header.str() << "\n" << row.str() << "\n";
  if (report.seen && report.unseen) {
    out << "seen-class samples:   " << report.seen->samples << ", top-1 " << percent(report.seen->top1()) << "\n";
    out << "unseen-class samples: " << report.unseen->samples << ", top-1 " << percent(report.unseen->top1()) << "\n";
  }
  return out.str();
}

json report_to_json(const EvalReport& report) {
  json methods = json::array();
  for (const auto& m : report.comparisons) methods.push_back({{"name", m.name}, {"top1", m.top1}, {"gain", m.gain}});
  json per_class = json::array();
  for (const auto& c : report.per_class) per_class.push_back({{"samples", c.samples}, {"correct", c.correct}});
  json confusion = json::array();
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
    std::vector<int> row(static_cast<std::size_t>(report.confusion.cols()));
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
      row[static_cast<std::size_t>(c)] = report.confusion(r, c);
    confusion.push_back(row);
  }
  json doc{{"top1", report.top1}, {"methods", methods}, {"per_class", per_class}, {"confusion", confusion}};
  if (report.seen && report.unseen) {
    doc["seen"] = {{"samples", report.seen->samples}, {"correct", report.seen->correct}, {"top1", report.seen->top1()}};
    doc["unseen"] = {
        {"samples", report.unseen->samples}, {"correct", report.unseen->correct}, {"top1", report.unseen->top1()}};
  }
  return doc;
}

std::string confusion_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "truth";
  for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) out << ",pred_" << c;
  out << "\n";
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) out << "," << report.confusion(r, c);
    out << "\n";
  }
  return out.str();
}

}  // namespace pseudorgbd
