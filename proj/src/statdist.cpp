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

#include "repmatch/statdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace repmatch::statdist {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m,
                            const std::vector<int>& rows) {
  Eigen::MatrixXd out(long(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(long(i)) = m.row(rows[i]);
  return out;
}

// Pseudo-inverse of a symmetric PSD matrix, dropping eigenvalues below
// 1e-10 of the largest.
Eigen::MatrixXd pinv_psd(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(0.0, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (long i = 0; i < ev.size(); ++i)
    if (ev[i] > cutoff && ev[i] > 0) inv[i] = 1.0 / ev[i];
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Unbiased sample covariance, rows as observations.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  if (x.rows() < 2)
    throw std::invalid_argument("covariance needs at least 2 rows");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return centered.transpose() * centered / double(x.rows() - 1);
}

// Pairwise squared quadratic form (a_i - b_j)' M (a_i - b_j), computed
// via one GEMM; tiny negative round-off is clamped to zero.
Eigen::MatrixXd pairwise_quadform(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b,
                                  const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd am = a * m;
  const Eigen::VectorXd alpha = (am.array() * a.array()).rowwise().sum();
  const Eigen::MatrixXd bm = b * m;
  const Eigen::VectorXd beta = (bm.array() * b.array()).rowwise().sum();
  Eigen::MatrixXd out = -2.0 * (am * b.transpose());
  out.colwise() += alpha;
  out.rowwise() += beta.transpose();
  return out.cwiseMax(0.0);
}

// Average rank of `v` within the sorted pool column: (#less) + (#eq+1)/2.
// Values outside the pool land halfway between their neighbours' ranks.
double rank_within(const std::vector<double>& sorted_pool, double v) {
  const auto lo = std::lower_bound(sorted_pool.begin(), sorted_pool.end(), v);
  const auto hi = std::upper_bound(lo, sorted_pool.end(), v);
  const double less = double(lo - sorted_pool.begin());
  const double eq = double(hi - lo);
  return less + (eq + 1.0) / 2.0;
}

void check_columns(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                   const Eigen::MatrixXd& pool) {
  if (a.cols() != b.cols() || a.cols() != pool.cols())
    throw std::invalid_argument("distance inputs disagree on column count");
}

}  // namespace

std::string role_name(Role r) {
  switch (r) {
    case Role::Template: return "template";
    case Role::Treated: return "treated";
    case Role::Control: return "control";
  }
  return "?";
}

std::vector<int> CovariateTable::rows_of(Role r) const {
  std::vector<int> out;
  for (int i = 0; i < unit_count(); ++i)
    if (roles[i] == r) out.push_back(i);
  return out;
}

int CovariateTable::count_of(Role r) const {
  int n = 0;
  for (Role x : roles) n += (x == r);
  return n;
}

Eigen::MatrixXd CovariateTable::observational_rows(
    const std::vector<int>& rows) const {
  Eigen::MatrixXd out(long(rows.size()), shared.cols() + extended.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(long(i)).head(shared.cols()) = shared.row(rows[i]);
    if (extended.cols() > 0)
      out.row(long(i)).tail(extended.cols()) = extended.row(rows[i]);
  }
  return out;
}

Eigen::MatrixXd CovariateTable::shared_rows(const std::vector<int>& rows) const {
  return select_rows(shared, rows);
}

bool CovariateTable::has_covariate(const std::string& name) const {
  return std::find(shared_names.begin(), shared_names.end(), name) !=
             shared_names.end() ||
         std::find(extended_names.begin(), extended_names.end(), name) !=
             extended_names.end();
}

Eigen::VectorXd CovariateTable::covariate_column(const std::string& name) const {
  for (std::size_t j = 0; j < shared_names.size(); ++j)
    if (shared_names[j] == name) return shared.col(long(j));
  for (std::size_t j = 0; j < extended_names.size(); ++j)
    if (extended_names[j] == name) return extended.col(long(j));
  throw std::invalid_argument("unknown covariate: " + name);
}

int CovariateTable::categorical_index(const std::string& name) const {
  for (std::size_t j = 0; j < categorical_names.size(); ++j)
    if (categorical_names[j] == name) return int(j);
  return -1;
}

void CovariateTable::validate() const {
  const int n = unit_count();
  if (int(roles.size()) != n || shared.rows() != n)
    throw std::invalid_argument("table arrays disagree on unit count");
  if (extended.size() > 0 && extended.rows() != n)
    throw std::invalid_argument("extended block has wrong row count");
  if (int(shared_names.size()) != shared.cols())
    throw std::invalid_argument("shared covariate names mismatch");
  if (int(extended_names.size()) != extended.cols())
    throw std::invalid_argument("extended covariate names mismatch");
  if (int(categorical.size()) != (categorical_names.empty() ? 0 : n) &&
      !categorical.empty())
    throw std::invalid_argument("categorical block has wrong row count");
  for (int i = 0; i < n; ++i) {
    if (!shared.row(i).allFinite())
      throw std::invalid_argument("missing shared covariate for unit " +
                                  unit_ids[i]);
    if (roles[i] != Role::Template && extended.cols() > 0 &&
        !extended.row(i).allFinite())
      throw std::invalid_argument("missing extended covariate for unit " +
                                  unit_ids[i]);
  }
}

Eigen::VectorXd LogisticModel::predict(const Eigen::MatrixXd& features) const {
  if (features.cols() + 1 != coefficients.size())
    throw std::invalid_argument("feature count does not match model");
  Eigen::VectorXd eta =
      (features * coefficients.tail(coefficients.size() - 1)).array() +
      coefficients[0];
  return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
}

namespace {

LogisticModel irls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                   int max_iter, double tol, double ridge) {
  const long p = design.cols();
  LogisticModel model;
  model.coefficients = Eigen::VectorXd::Zero(p);
  model.regularized = ridge > 0;

  // Ridge is applied to non-intercept coefficients only.
  Eigen::VectorXd penalty_mask = Eigen::VectorXd::Ones(p);
  penalty_mask[0] = 0.0;

  for (int iter = 1; iter <= max_iter; ++iter) {
    model.iterations = iter;
    const Eigen::VectorXd eta = design * model.coefficients;
    const Eigen::VectorXd prob = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd score =
        design.transpose() * (y - prob) -
        ridge * penalty_mask.cwiseProduct(model.coefficients);
    if (score.cwiseAbs().maxCoeff() < tol) {
      model.converged = true;
      return model;
    }
    const Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    hess += ridge * Eigen::MatrixXd(penalty_mask.asDiagonal());
    model.coefficients += pinv_psd(hess) * score;
    if (ridge == 0 && model.coefficients.cwiseAbs().maxCoeff() > 15.0) {
      // Quasi-separation: hand over to the ridged fit.
      model.converged = false;
      model.regularized = false;
      return model;
    }
  }
  // One last convergence check after the final step.
  const Eigen::VectorXd eta = design * model.coefficients;
  const Eigen::VectorXd prob = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
  const Eigen::VectorXd score =
      design.transpose() * (y - prob) -
      ridge * penalty_mask.cwiseProduct(model.coefficients);
  model.converged = score.cwiseAbs().maxCoeff() < tol;
  return model;
}

}  // namespace

LogisticModel fit_logistic(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& labels, int max_iter,
                           double tol) {
  if (features.rows() != labels.size())
    throw std::invalid_argument("features and labels disagree on row count");
  int ones = 0;
  for (long i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw std::invalid_argument("labels must be 0 or 1");
    ones += labels[i] == 1.0;
  }
  if (ones == 0 || ones == labels.size())
    throw std::invalid_argument("labels contain a single class");

  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(features.cols()) = features;

  LogisticModel model = irls(design, labels, max_iter, tol, 0.0);
  const bool separated =
      !model.converged && model.coefficients.cwiseAbs().maxCoeff() > 15.0;
  if (separated) {
    model = irls(design, labels, max_iter, tol, 1e-4);
    model.regularized = true;
  }
  return model;
}

Eigen::VectorXd propensity_scores(const CovariateTable& table) {
  const std::vector<int> treated = table.rows_of(Role::Treated);
  const std::vector<int> control = table.rows_of(Role::Control);
  if (treated.empty() || control.empty())
    throw std::invalid_argument("propensity needs treated and control rows");
  std::vector<int> rows(treated);
  rows.insert(rows.end(), control.begin(), control.end());
  const Eigen::MatrixXd x = table.observational_rows(rows);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(long(rows.size()));
  y.head(long(treated.size())).setOnes();
  const LogisticModel model = fit_logistic(x, y);
  const Eigen::VectorXd fitted = model.predict(x);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(table.unit_count(), kNaN);
  for (std::size_t i = 0; i < rows.size(); ++i) out[rows[i]] = fitted[long(i)];
  return out;
}

Eigen::VectorXd participation_scores(const CovariateTable& table) {
  const std::vector<int> tmpl = table.rows_of(Role::Template);
  const std::vector<int> treated = table.rows_of(Role::Treated);
  if (tmpl.empty() || treated.empty())
    throw std::invalid_argument("participation needs template and treated rows");
  std::vector<int> rows(tmpl);
  rows.insert(rows.end(), treated.begin(), treated.end());
  const Eigen::MatrixXd x = table.shared_rows(rows);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(long(rows.size()));
  y.head(long(tmpl.size())).setOnes();
  const LogisticModel model = fit_logistic(x, y);
  const Eigen::VectorXd fitted = model.predict(x);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(table.unit_count(), kNaN);
  for (std::size_t i = 0; i < rows.size(); ++i) out[rows[i]] = fitted[long(i)];
  return out;
}

Eigen::MatrixXd mahalanobis_matrix(const Eigen::MatrixXd& rows_a,
                                   const Eigen::MatrixXd& rows_b,
                                   const Eigen::MatrixXd& covariance_from) {
  check_columns(rows_a, rows_b, covariance_from);
  return pairwise_quadform(rows_a, rows_b,
                           pinv_psd(sample_covariance(covariance_from)));
}

Eigen::MatrixXd robust_mahalanobis_matrix(const Eigen::MatrixXd& rows_a,
                                          const Eigen::MatrixXd& rows_b,
                                          const Eigen::MatrixXd& covariance_from) {
  check_columns(rows_a, rows_b, covariance_from);
  const long n = covariance_from.rows();
  if (n < 2) throw std::invalid_argument("covariance needs at least 2 rows");
  const long d = covariance_from.cols();
  const double target_var = (double(n) * double(n) - 1.0) / 12.0;

  Eigen::MatrixXd pool_t(n, d);
  Eigen::MatrixXd a_t(rows_a.rows(), d);
  Eigen::MatrixXd b_t(rows_b.rows(), d);
  std::vector<double> sorted(static_cast<std::size_t>(n), 0.0);

  for (long j = 0; j < d; ++j) {
    for (long i = 0; i < n; ++i) sorted[std::size_t(i)] = covariance_from(i, j);
    std::sort(sorted.begin(), sorted.end());
    for (long i = 0; i < n; ++i)
      pool_t(i, j) = rank_within(sorted, covariance_from(i, j));
    const double mean = pool_t.col(j).mean();
    const double pop_var =
        (pool_t.col(j).array() - mean).square().sum() / double(n);
    const double scale = pop_var > 0 ? std::sqrt(target_var / pop_var) : 1.0;
    pool_t.col(j) *= scale;
    for (long i = 0; i < rows_a.rows(); ++i)
      a_t(i, j) = rank_within(sorted, rows_a(i, j)) * scale;
    for (long i = 0; i < rows_b.rows(); ++i)
      b_t(i, j) = rank_within(sorted, rows_b(i, j)) * scale;
  }
  return pairwise_quadform(a_t, b_t, pinv_psd(sample_covariance(pool_t)));
}

DistanceMatrix DistanceMatrix::dense(Eigen::MatrixXd values) {
  DistanceMatrix d;
  d.present.setConstant(values.rows(), values.cols(), true);
  d.value = std::move(values);
  return d;
}

int DistanceMatrix::present_in_row(long i) const {
  int n = 0;
  for (long j = 0; j < cols(); ++j) n += present(i, j);
  return n;
}

CaliperResult apply_caliper(const DistanceMatrix& distances,
                            const Eigen::VectorXd& score_rows,
                            const Eigen::VectorXd& score_cols, double width,
                            CaliperMode mode, double penalty_weight) {
  if (width <= 0) throw std::invalid_argument("caliper width must be positive");
  if (score_rows.size() != distances.rows() ||
      score_cols.size() != distances.cols())
    throw std::invalid_argument("caliper scores do not match matrix shape");

  CaliperResult out;
  out.distances = distances;
  for (long i = 0; i < distances.rows(); ++i) {
    for (long j = 0; j < distances.cols(); ++j) {
      if (!out.distances.present(i, j)) continue;
      const double gap = std::abs(score_rows[i] - score_cols[j]);
      if (gap <= width) continue;
      if (mode == CaliperMode::Hard)
        out.distances.present(i, j) = false;
      else
        out.distances.value(i, j) += penalty_weight * (gap - width);
    }
    if (mode == CaliperMode::Hard && out.distances.present_in_row(i) == 0)
      out.empty_rows.push_back(int(i));
  }
  return out;
}

double wasserstein_1d(const std::vector<double>& sample_a,
                      const std::vector<double>& sample_b) {
  if (sample_a.empty() || sample_b.empty())
    throw std::invalid_argument("wasserstein_1d needs non-empty samples");
  std::vector<double> a(sample_a), b(sample_b);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::int64_t n = std::int64_t(a.size());
  const std::int64_t m = std::int64_t(b.size());

  // Walk the merged quantile breakpoints in exact units of 1/(n*m).
  double total = 0.0;
  std::int64_t pos = 0;
  std::int64_t i = 0, j = 0;
  while (i < n && j < m) {
    const std::int64_t next_a = (i + 1) * m;
    const std::int64_t next_b = (j + 1) * n;
    const std::int64_t next = std::min(next_a, next_b);
    total += double(next - pos) * std::abs(a[std::size_t(i)] - b[std::size_t(j)]);
    pos = next;
    if (next == next_a) ++i;
    if (next == next_b) ++j;
  }
  return total / (double(n) * double(m));
}

BalanceReport standardized_mean_differences(
    const CovariateTable& table, const std::vector<int>& group_a_rows,
    const std::vector<int>& group_b_rows,
    const std::vector<std::string>& covariates, const std::string& label_a,
    const std::string& label_b) {
  if (group_a_rows.empty() || group_b_rows.empty())
    throw std::invalid_argument("balance groups must be non-empty");
  for (int r : group_a_rows)
    if (std::find(group_b_rows.begin(), group_b_rows.end(), r) !=
        group_b_rows.end())
      throw std::invalid_argument("balance groups must be disjoint");

  auto moments = [](const Eigen::VectorXd& col, const std::vector<int>& rows) {
    double mean = 0;
    for (int r : rows) {
      if (std::isnan(col[r]))
        throw std::invalid_argument("covariate undefined for selected rows");
      mean += col[r];
    }
    mean /= double(rows.size());
    double var = 0;
    for (int r : rows) var += (col[r] - mean) * (col[r] - mean);
    var = rows.size() > 1 ? var / double(rows.size() - 1) : 0.0;
    return std::pair<double, double>(mean, var);
  };

  BalanceReport report;
  report.group_a = label_a;
  report.group_b = label_b;
  for (const std::string& name : covariates) {
    const Eigen::VectorXd col = table.covariate_column(name);
    const auto [mean_a, var_a] = moments(col, group_a_rows);
    const auto [mean_b, var_b] = moments(col, group_b_rows);
    BalanceRecord rec;
    rec.name = name;
    rec.mean_a = mean_a;
    rec.mean_b = mean_b;
    rec.pooled_sd = std::sqrt((var_a + var_b) / 2.0);
    if (rec.pooled_sd > 0) {
      rec.smd = (mean_a - mean_b) / rec.pooled_sd;
    } else {
      rec.smd = 0.0;
      rec.degenerate = mean_a != mean_b;
    }
    report.records.push_back(rec);
  }
  return report;
}

}  // namespace repmatch::statdist
