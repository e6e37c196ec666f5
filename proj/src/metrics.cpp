#include "ssagait/eval/metrics.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ssagait::eval {

ConfusionMatrix::ConfusionMatrix(int classes) {
  if (classes < 1) throw std::invalid_argument("confusion matrix needs at least one class");
  counts_.setZero(classes, classes);
}

ConfusionMatrix::ConfusionMatrix(Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts)
    : counts_(std::move(counts)) {
  if (counts_.rows() < 1 || counts_.rows() != counts_.cols())
    throw std::invalid_argument("confusion matrix must be square and nonempty");
  if ((counts_.array() < 0).any()) throw std::invalid_argument("confusion counts must be nonnegative");
}

void ConfusionMatrix::add(int truth, int predicted, std::int64_t n) {
  if (truth < 0 || truth >= classes() || predicted < 0 || predicted >= classes())
    throw std::out_of_range("class index outside the confusion matrix");
  if (n < 0) throw std::invalid_argument("confusion counts must be nonnegative");
  counts_(truth, predicted) += n;
}

ConfusionMatrix ConfusionMatrix::from_predictions(const std::vector<int>& truth, const std::vector<int>& predicted,
                                                  int classes) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("truth and prediction counts differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

namespace {
double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }
}  // namespace

MetricsReport compute_metrics(const ConfusionMatrix& cm, F1Mode f1_mode) {
  const auto total = static_cast<double>(cm.total());
  if (!(total > 0)) throw std::invalid_argument("cannot compute metrics of an empty confusion matrix");
  const int k = cm.classes();
  const auto& c = cm.counts();

  MetricsReport r;
  r.confusion = cm;
  r.f1_mode = f1_mode;
  r.accuracy = static_cast<double>(c.trace()) / total;
  for (int i = 0; i < k; ++i) {
    const auto tp = static_cast<double>(c(i, i));
    const auto support = static_cast<double>(c.row(i).sum());
    const auto predicted = static_cast<double>(c.col(i).sum());
    const double p = ratio(tp, predicted);
    const double rc = ratio(tp, support);
    const double f = ratio(2.0 * p * rc, p + rc);
    const double w = support / total;
    r.class_precision.push_back(p);
    r.class_recall.push_back(rc);
    r.class_f1.push_back(f);
    r.weights.push_back(w);
    r.precision += w * p;
    r.recall += w * rc;
    r.f1 += f1_mode == F1Mode::kWeighted ? w * f : f;
  }
  return r;
}

std::string to_text(const MetricsReport& r) {
  std::ostringstream out;
  out << std::setprecision(6) << std::fixed;
  out << "accuracy " << r.accuracy << "\n";
  out << "precision " << r.precision << "\n";
  out << "recall " << r.recall << "\n";
  out << "f1 " << r.f1 << (r.f1_mode == F1Mode::kWeighted ? "" : " (unweighted sum)") << "\n";
  out << "\nclass\tweight\tprecision\trecall\tf1\n";
  const int k = r.confusion.classes();
  auto name = [&](int i) {
    return k == kNumEmotions ? std::string(emotion_name(static_cast<Emotion>(i))) : std::to_string(i);
  };
  for (int i = 0; i < k; ++i)
    out << name(i) << "\t" << r.weights[i] << "\t" << r.class_precision[i] << "\t" << r.class_recall[i] << "\t"
        << r.class_f1[i] << "\n";
  out << "\nconfusion (rows = true, columns = predicted)\n";
  for (int i = 0; i < k; ++i) {
    out << name(i);
    for (int j = 0; j < k; ++j) out << "\t" << r.confusion(i, j);
    out << "\n";
  }
  return out.str();
}

}  // namespace ssagait::eval
