// Copyright 2026 The repmatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REPMATCH_STATDIST_HPP
#define REPMATCH_STATDIST_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace repmatch::statdist {

enum class Role { Template, Treated, Control };

std::string role_name(Role r);

/// Unit records for one matching problem. `shared` holds the covariates
/// observed in both the template source and the observational data;
/// `extended` holds observational-only covariates and is NaN on template
/// rows (they are never read there). String-valued columns used for exact
/// matching and fine balance live in `categorical`.
struct CovariateTable {
  std::vector<std::string> unit_ids;
  std::vector<Role> roles;
  std::vector<std::string> shared_names;
  std::vector<std::string> extended_names;
  Eigen::MatrixXd shared;    // units x d1
  Eigen::MatrixXd extended;  // units x d2, d2 >= 0
  std::vector<std::string> categorical_names;
  std::vector<std::vector<std::string>> categorical;  // units x |names|

  int unit_count() const { return int(unit_ids.size()); }
  std::vector<int> rows_of(Role r) const;
  int count_of(Role r) const;

  /// [shared | extended] block for the given rows.
  Eigen::MatrixXd observational_rows(const std::vector<int>& rows) const;
  Eigen::MatrixXd shared_rows(const std::vector<int>& rows) const;

  /// Numeric covariate column by name (shared or extended). Throws on
  /// unknown names.
  Eigen::VectorXd covariate_column(const std::string& name) const;
  bool has_covariate(const std::string& name) const;
  int categorical_index(const std::string& name) const;  // -1 if absent

  /// Checks structural invariants (sizes agree, no NaN outside template
  /// extended cells). Throws std::invalid_argument on violation.
  void validate() const;
};

struct LogisticModel {
  Eigen::VectorXd coefficients;  // intercept first
  bool converged = false;
  int iterations = 0;
  bool regularized = false;

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const;
};

/// IRLS fit of intercept + coefficients. Converged when every score
/// equation residual is below `tol`. If any coefficient passes 15 in
/// absolute value mid-fit (quasi-separation), refits with ridge 1e-4 on
/// the non-intercept coefficients and sets `regularized`.
LogisticModel fit_logistic(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& labels, int max_iter = 100,
                           double tol = 1e-8);

/// Treated-vs-control logistic on shared + extended covariates. Returns a
/// vector over all table rows with the fitted probability for treated and
/// control units and NaN elsewhere.
Eigen::VectorXd propensity_scores(const CovariateTable& table);

/// Template-vs-treated logistic on shared covariates only (the
/// generalizability score). NaN on control rows.
Eigen::VectorXd participation_scores(const CovariateTable& table);

/// Squared Mahalanobis distances between the rows of `rows_a` and
/// `rows_b`, with the covariance estimated from `covariance_from` and
/// inverted by pseudo-inverse (relative cutoff 1e-10).
Eigen::MatrixXd mahalanobis_matrix(const Eigen::MatrixXd& rows_a,
                                   const Eigen::MatrixXd& rows_b,
                                   const Eigen::MatrixXd& covariance_from);

/// Rank-based (robust) variant: every column is replaced by average ranks
/// within the covariance pool, rescaled to the untied-rank variance
/// (n^2 - 1)/12, and the Mahalanobis distance is taken on the transformed
/// coordinates. Invariant under strictly increasing per-column transforms.
Eigen::MatrixXd robust_mahalanobis_matrix(const Eigen::MatrixXd& rows_a,
                                          const Eigen::MatrixXd& rows_b,
                                          const Eigen::MatrixXd& covariance_from);

/// Distance matrix with removable entries; `present(i, j) == false` means
/// the corresponding edge does not exist.
struct DistanceMatrix {
  Eigen::MatrixXd value;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> present;

  static DistanceMatrix dense(Eigen::MatrixXd values);
  long rows() const { return value.rows(); }
  long cols() const { return value.cols(); }
  int present_in_row(long i) const;
};

/// The two cost matrices of the tripartite match: template-to-treated
/// (delta, R x T) and treated-to-control (Delta, T x C). The fitted
/// scores ride along for calipers and sparsification.
struct DistanceMatrices {
  DistanceMatrix delta;
  DistanceMatrix Delta;
  Eigen::VectorXd template_participation;  // size R, may be empty
  Eigen::VectorXd treated_participation;   // size T, may be empty
  Eigen::VectorXd treated_propensity;      // size T, may be empty
  Eigen::VectorXd control_propensity;      // size C, may be empty
};

enum class CaliperMode { Hard, Penalty };

struct CaliperResult {
  DistanceMatrix distances;
  std::vector<int> empty_rows;  // rows left with no present entry (hard mode)
};

/// Hard mode removes entries whose score gap exceeds `width`; penalty
/// mode adds penalty_weight * (gap - width) instead. Never creates
/// entries absent in the input.
CaliperResult apply_caliper(const DistanceMatrix& distances,
                            const Eigen::VectorXd& score_rows,
                            const Eigen::VectorXd& score_cols, double width,
                            CaliperMode mode, double penalty_weight);

/// First-order Wasserstein distance between the empirical distributions
/// of two samples (integral of the gap between quantile functions).
double wasserstein_1d(const std::vector<double>& sample_a,
                      const std::vector<double>& sample_b);

struct BalanceRecord {
  std::string name;
  double mean_a = 0;
  double mean_b = 0;
  double pooled_sd = 0;
  double smd = 0;
  bool degenerate = false;  // zero pooled SD with unequal means
};

struct BalanceReport {
  std::string group_a;
  std::string group_b;
  std::vector<BalanceRecord> records;
};

/// Per-covariate standardized mean differences between two disjoint row
/// groups: (mean_a - mean_b) / sqrt((var_a + var_b) / 2) with unbiased
/// group variances.
BalanceReport standardized_mean_differences(
    const CovariateTable& table, const std::vector<int>& group_a_rows,
    const std::vector<int>& group_b_rows,
    const std::vector<std::string>& covariates, const std::string& label_a,
    const std::string& label_b);

}  // namespace repmatch::statdist

#endif  // REPMATCH_STATDIST_HPP
