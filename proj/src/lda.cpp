#include "ssagait/eval/lda.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ssagait::eval {

namespace {

struct Scatter {
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
  std::map<int, Eigen::VectorXd> means;
};

Scatter scatter(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.cols()) throw std::invalid_argument("lda: one label per column");
  std::map<int, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < x.cols(); ++i) groups[labels[i]].push_back(i);
  const Eigen::VectorXd mean = x.rowwise().mean();
  Scatter s;
  s.within = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  s.between = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  for (const auto& [label, idx] : groups) {
    Eigen::MatrixXd g(x.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) g.col(static_cast<Eigen::Index>(j)) = x.col(idx[j]);
    const Eigen::VectorXd m = g.rowwise().mean();
    const Eigen::MatrixXd centered = g.colwise() - m;
    s.within.noalias() += centered * centered.transpose();
    s.between.noalias() += static_cast<double>(idx.size()) * (m - mean) * (m - mean).transpose();
    s.means[label] = m;
  }
  return s;
}

}  // namespace

LdaResult lda_projection(const Eigen::MatrixXd& x, const std::vector<int>& labels, int dims, double eps) {
  if (dims < 1 || dims > x.rows()) throw std::invalid_argument("lda: invalid output dimension");
  if (!(eps > 0)) throw std::invalid_argument("lda: regularizer must be positive");
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw std::invalid_argument("lda: at least two classes are required");
  for (const auto& [label, n] : counts)
    if (n < 3) throw std::invalid_argument("lda: every class needs at least three samples");

  const Scatter s = scatter(x, labels);
  const Eigen::MatrixXd sw = s.within + eps * Eigen::MatrixXd::Identity(x.rows(), x.rows());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.between, sw);
  if (solver.info() != Eigen::Success) throw std::runtime_error("lda: within-class scatter is singular");

  // Eigenvalues ascend; keep the largest `dims`.
  LdaResult r;
  r.basis = solver.eigenvectors().rightCols(dims).rowwise().reverse();
  r.points = x.transpose() * r.basis;
  r.labels = labels;
  r.class_means.resize(static_cast<Eigen::Index>(s.means.size()), dims);
  Eigen::Index row = 0;
  for (const auto& [label, m] : s.means) {
    r.class_means.row(row++) = (r.basis.transpose() * m).transpose();
    r.classes.push_back(label);
  }
  return r;
}

double fisher_ratio(const Eigen::MatrixXd& x, const std::vector<int>& labels, const Eigen::MatrixXd& p) {
  const Scatter s = scatter(x, labels);
  const Eigen::MatrixXd w = p.transpose() * s.within * p;
  const Eigen::MatrixXd b = p.transpose() * s.between * p;
  return w.ldlt().solve(b).trace();
}

void write_points_tsv(const LdaResult& lda, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x\ty\tlabel\n" << std::setprecision(9);
  for (Eigen::Index i = 0; i < lda.points.rows(); ++i) {
    out << lda.points(i, 0) << "\t" << (lda.points.cols() > 1 ? lda.points(i, 1) : 0.0) << "\t" << lda.labels[i]
        << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace ssagait::eval
