#pragma once

#include <filesystem>
#include <vector>

#include "ssagait/core.hpp"

namespace ssagait::eval {

struct LdaResult {
  Eigen::MatrixXd basis;        // D x dims discriminant directions
  Eigen::MatrixXd points;       // N x dims projected samples
  Eigen::MatrixXd class_means;  // classes x dims, projected
  std::vector<int> classes;     // class label of each class_means row
  std::vector<int> labels;      // label of each point
};

/// Fisher discriminant projection of the columns of `x` (D x N). The
/// directions solve Sb v = lambda (Sw + eps I) v for the largest lambda.
/// Needs >= 2 classes with >= 3 samples each.
LdaResult lda_projection(const Eigen::MatrixXd& x, const std::vector<int>& labels, int dims = 2, double eps = 1e-6);

/// Fisher ratio trace((P' Sw P)^-1 (P' Sb P)) of projection P (D x dims).
double fisher_ratio(const Eigen::MatrixXd& x, const std::vector<int>& labels, const Eigen::MatrixXd& projection);

/// Tab-separated "x y label" table, one line per point after a header.
void write_points_tsv(const LdaResult& lda, const std::filesystem::path& path);

}  // namespace ssagait::eval
