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

#include "repmatch/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "repmatch/flownet.hpp"
#include "repmatch/pairmatch.hpp"

namespace repmatch::cli {

using statdist::CovariateTable;
using statdist::DistanceMatrices;
using statdist::DistanceMatrix;
using statdist::Role;

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (const std::string& tok : split(s, ',')) {
    const std::string t = trim(tok);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse " + what + " value: '" + s + "'");
  }
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse " + what + " value: '" + s + "'");
  }
}

statdist::CaliperMode parse_caliper_mode(const std::string& s) {
  if (s == "hard") return statdist::CaliperMode::Hard;
  if (s == "penalty") return statdist::CaliperMode::Penalty;
  throw std::invalid_argument("caliper mode must be hard, penalty or none");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> read_key_values(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    out.emplace_back(trim(stripped.substr(0, eq)),
                     trim(stripped.substr(eq + 1)));
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

}  // namespace

std::vector<std::string> RunConfig::categorical_columns() const {
  std::vector<std::string> out = exact_match_columns;
  if (fine_balance.enabled &&
      std::find(out.begin(), out.end(), fine_balance.column) == out.end())
    out.push_back(fine_balance.column);
  return out;
}

void apply_override(RunConfig& c, const std::string& key,
                    const std::string& value) {
  if (key == "input") c.input = value;
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "id_column") c.id_column = value;
  else if (key == "role_column") c.role_column = value;
  else if (key == "shared_covariates") c.shared_covariates = split_list(value);
  else if (key == "extended_covariates") c.extended_covariates = split_list(value);
  else if (key == "k") c.k = int(parse_int(value, key));
  else if (key == "lambda") c.lambda = parse_double(value, key);
  else if (key == "cost_scale") c.cost_scale = parse_int(value, key);
  else if (key == "seed") c.seed = std::uint64_t(parse_int(value, key));
  else if (key == "delta_kind") c.delta_kind = value;
  else if (key == "Delta_kind") c.Delta_kind = value;
  else if (key == "caliper_width") {
    c.Delta_caliper.width = parse_double(value, key);
    c.Delta_caliper.enabled = true;
  } else if (key == "caliper_mode") {
    if (value == "none") c.Delta_caliper.enabled = false;
    else c.Delta_caliper.mode = parse_caliper_mode(value);
  } else if (key == "caliper_penalty_weight") {
    c.Delta_caliper.penalty_weight = parse_double(value, key);
  } else if (key == "delta_caliper_width") {
    c.delta_caliper.width = parse_double(value, key);
    c.delta_caliper.enabled = true;
  } else if (key == "delta_caliper_mode") {
    if (value == "none") c.delta_caliper.enabled = false;
    else c.delta_caliper.mode = parse_caliper_mode(value);
  } else if (key == "delta_caliper_penalty_weight") {
    c.delta_caliper.penalty_weight = parse_double(value, key);
  } else if (key == "sparsify") {
    c.sparsify = int(parse_int(value, key));
  } else if (key == "exact_match_columns") {
    c.exact_match_columns = split_list(value);
  } else if (key == "fine_balance_column") {
    c.fine_balance.column = value;
    c.fine_balance.enabled = !value.empty();
  } else if (key == "fine_balance_targets") {
    c.fine_balance.target_counts.clear();
    for (const std::string& item : split_list(value)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument(
            "fine_balance_targets items must be category:count");
      c.fine_balance.target_counts[trim(item.substr(0, colon))] =
          parse_int(trim(item.substr(colon + 1)), key);
    }
  } else if (key == "fine_balance_overflow_penalty") {
    c.fine_balance.overflow_penalty = parse_double(value, key);
  } else if (key == "forced_include_ids") {
    c.forced_include_ids = split_list(value);
  } else if (key == "forced_include_penalty") {
    c.forced_include_penalty = parse_double(value, key);
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

RunConfig parse_run_config(const std::string& path) {
  RunConfig config;
  for (const auto& [key, value] : read_key_values(path))
    apply_override(config, key, value);
  return config;
}

statdist::CovariateTable load_units_csv(const std::string& path,
                                        const RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open cohort file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ": empty file (header required)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, ',');
  auto column_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return int(i);
    throw std::invalid_argument(path + ": missing column '" + name + "'");
  };

  const int id_col = column_of(config.id_column);
  const int role_col = column_of(config.role_column);
  std::vector<int> shared_cols, extended_cols, cat_cols;
  for (const std::string& n : config.shared_covariates)
    shared_cols.push_back(column_of(n));
  for (const std::string& n : config.extended_covariates)
    extended_cols.push_back(column_of(n));
  const std::vector<std::string> cat_names = config.categorical_columns();
  for (const std::string& n : cat_names) cat_cols.push_back(column_of(n));
  if (shared_cols.empty())
    throw std::invalid_argument(path + ": no shared covariates configured");

  CovariateTable table;
  table.shared_names = config.shared_covariates;
  table.extended_names = config.extended_covariates;
  table.categorical_names = cat_names;

  std::vector<std::vector<double>> shared_rows, extended_rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(fields.size()));
    const std::string id = trim(fields[std::size_t(id_col)]);
    if (id.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": missing id");
    const std::string role_str = trim(fields[std::size_t(role_col)]);
    Role role;
    if (role_str == "template") role = Role::Template;
    else if (role_str == "treated") role = Role::Treated;
    else if (role_str == "control") role = Role::Control;
    else
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": unknown role '" + role_str + "'");

    auto numeric = [&](int col, const std::string& name, bool optional) {
      const std::string tok = trim(fields[std::size_t(col)]);
      if (tok.empty()) {
        if (optional) return std::numeric_limits<double>::quiet_NaN();
        throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                    ": missing value in column '" + name + "'");
      }
      try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
      } catch (const std::exception&) {
        throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                    ": cannot parse '" + tok +
                                    "' in column '" + name + "'");
      }
    };

    std::vector<double> srow, erow;
    for (std::size_t j = 0; j < shared_cols.size(); ++j)
      srow.push_back(numeric(shared_cols[j], config.shared_covariates[j], false));
    for (std::size_t j = 0; j < extended_cols.size(); ++j)
      erow.push_back(numeric(extended_cols[j], config.extended_covariates[j],
                             role == Role::Template));

    table.unit_ids.push_back(id);
    table.roles.push_back(role);
    shared_rows.push_back(std::move(srow));
    extended_rows.push_back(std::move(erow));
    std::vector<std::string> cats;
    for (int col : cat_cols) cats.push_back(trim(fields[std::size_t(col)]));
    table.categorical.push_back(std::move(cats));
  }

  const int n = table.unit_count();
  table.shared.resize(n, long(shared_cols.size()));
  table.extended.resize(n, long(extended_cols.size()));
  for (int i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < shared_cols.size(); ++j)
      table.shared(i, long(j)) = shared_rows[std::size_t(i)][j];
    for (std::size_t j = 0; j < extended_cols.size(); ++j)
      table.extended(i, long(j)) = extended_rows[std::size_t(i)][j];
  }
  if (table.categorical_names.empty()) table.categorical.clear();
  table.validate();
  return table;
}

templatematch::TemplateMatchSpec to_match_spec(const RunConfig& config) {
  templatematch::TemplateMatchSpec spec;
  spec.k = config.k;
  spec.lambda = config.lambda;
  spec.cost_scale = config.cost_scale;
  spec.delta_caliper = config.delta_caliper;
  spec.Delta_caliper = config.Delta_caliper;
  spec.exact_match_columns = config.exact_match_columns;
  spec.fine_balance = config.fine_balance;
  spec.sparsify_count = config.sparsify;
  spec.forced_include_ids = config.forced_include_ids;
  spec.forced_include_penalty = config.forced_include_penalty;
  return spec;
}

statdist::DistanceMatrices build_distances(const CovariateTable& table,
                                           const RunConfig& config) {
  const std::vector<int> tmpl = table.rows_of(Role::Template);
  const std::vector<int> trt = table.rows_of(Role::Treated);
  const std::vector<int> ctl = table.rows_of(Role::Control);
  if (tmpl.empty() || trt.empty() || ctl.empty())
    throw std::invalid_argument("cohort needs template, treated and control rows");

  DistanceMatrices dist;
  const Eigen::VectorXd participation = statdist::participation_scores(table);
  const Eigen::VectorXd propensity = statdist::propensity_scores(table);
  dist.template_participation.resize(long(tmpl.size()));
  for (std::size_t i = 0; i < tmpl.size(); ++i)
    dist.template_participation[long(i)] = participation[tmpl[i]];
  dist.treated_participation.resize(long(trt.size()));
  for (std::size_t i = 0; i < trt.size(); ++i)
    dist.treated_participation[long(i)] = participation[trt[i]];
  dist.treated_propensity.resize(long(trt.size()));
  for (std::size_t i = 0; i < trt.size(); ++i)
    dist.treated_propensity[long(i)] = propensity[trt[i]];
  dist.control_propensity.resize(long(ctl.size()));
  for (std::size_t i = 0; i < ctl.size(); ++i)
    dist.control_propensity[long(i)] = propensity[ctl[i]];

  if (config.delta_kind == "participation_abs_diff") {
    Eigen::MatrixXd delta(long(tmpl.size()), long(trt.size()));
    for (long i = 0; i < delta.rows(); ++i)
      for (long j = 0; j < delta.cols(); ++j)
        delta(i, j) = std::abs(dist.template_participation[i] -
                               dist.treated_participation[j]);
    dist.delta = DistanceMatrix::dense(std::move(delta));
  } else if (config.delta_kind == "mahalanobis_shared") {
    const Eigen::MatrixXd a = table.shared_rows(tmpl);
    const Eigen::MatrixXd b = table.shared_rows(trt);
    Eigen::MatrixXd pool(a.rows() + b.rows(), a.cols());
    pool << a, b;
    dist.delta =
        DistanceMatrix::dense(statdist::mahalanobis_matrix(a, b, pool));
  } else {
    throw std::invalid_argument("unknown delta_kind: " + config.delta_kind);
  }

  if (config.Delta_kind == "propensity_abs_diff") {
    Eigen::MatrixXd D(long(trt.size()), long(ctl.size()));
    for (long i = 0; i < D.rows(); ++i)
      for (long j = 0; j < D.cols(); ++j)
        D(i, j) =
            std::abs(dist.treated_propensity[i] - dist.control_propensity[j]);
    dist.Delta = DistanceMatrix::dense(std::move(D));
  } else if (config.Delta_kind == "robust_mahalanobis" ||
             config.Delta_kind == "mahalanobis") {
    const Eigen::MatrixXd a = table.observational_rows(trt);
    const Eigen::MatrixXd b = table.observational_rows(ctl);
    Eigen::MatrixXd pool(a.rows() + b.rows(), a.cols());
    pool << a, b;
    dist.Delta = DistanceMatrix::dense(
        config.Delta_kind == "robust_mahalanobis"
            ? statdist::robust_mahalanobis_matrix(a, b, pool)
            : statdist::mahalanobis_matrix(a, b, pool));
  } else {
    throw std::invalid_argument("unknown Delta_kind: " + config.Delta_kind);
  }
  return dist;
}

namespace {

void write_balance_csv(std::ostream& out, const CovariateTable& table,
                       const std::vector<int>& matched_treated_rows,
                       const std::vector<int>& matched_control_rows) {
  std::vector<std::string> all_covs = table.shared_names;
  all_covs.insert(all_covs.end(), table.extended_names.begin(),
                  table.extended_names.end());
  const std::vector<int> treated = table.rows_of(Role::Treated);
  const std::vector<int> control = table.rows_of(Role::Control);
  const std::vector<int> tmpl = table.rows_of(Role::Template);

  out << "comparison,covariate,mean_a,mean_b,pooled_sd,smd,degenerate\n";
  auto emit = [&](const std::string& comparison,
                  const statdist::BalanceReport& report) {
    for (const statdist::BalanceRecord& rec : report.records)
      out << comparison << ',' << rec.name << ',' << fmt(rec.mean_a) << ','
          << fmt(rec.mean_b) << ',' << fmt(rec.pooled_sd) << ','
          << fmt(rec.smd) << ',' << (rec.degenerate ? 1 : 0) << '\n';
  };
  emit("matched_treated_vs_matched_control",
       statdist::standardized_mean_differences(table, matched_treated_rows,
                                               matched_control_rows, all_covs,
                                               "matched_treated",
                                               "matched_control"));
  if (!tmpl.empty())
    emit("matched_treated_vs_template",
         statdist::standardized_mean_differences(
             table, matched_treated_rows, tmpl, table.shared_names,
             "matched_treated", "template"));
  emit("before_treated_vs_control",
       statdist::standardized_mean_differences(table, treated, control,
                                               all_covs, "treated", "control"));
}

}  // namespace

int cmd_match(const RunConfig& config) {
  const CovariateTable table = load_units_csv(config.input, config);
  const DistanceMatrices dist = build_distances(table, config);
  const templatematch::TemplateMatchSpec spec = to_match_spec(config);
  const templatematch::TemplateNetwork tn =
      templatematch::build_template_network(table, dist, spec);
  const templatematch::MatchedSample sample =
      templatematch::solve_template_match(tn, spec);

  {
    std::ofstream out = open_output(config.output_dir + "/summary.txt");
    out << "k = " << spec.k << '\n';
    out << "lambda = " << fmt(spec.lambda) << '\n';
    out << "pairs = " << sample.pairs.size() << '\n';
    out << "s1_template_cost = " << fmt(sample.s1_template_cost) << '\n';
    out << "s2_pairing_cost = " << fmt(sample.s2_pairing_cost) << '\n';
    out << "objective = " << fmt(sample.objective) << '\n';
    out << "feasible = " << (sample.feasible ? "true" : "false") << '\n';
    for (const std::string& w : sample.warnings) out << "warning = " << w << '\n';
    if (!sample.diagnostic.empty())
      out << "diagnostic = " << sample.diagnostic << '\n';
  }

  if (!sample.feasible) {
    std::cerr << sample.diagnostic << '\n';
    return kExitInfeasible;
  }

  const std::vector<int> trt = table.rows_of(Role::Treated);
  const std::vector<int> ctl = table.rows_of(Role::Control);
  const std::vector<int> tmpl = table.rows_of(Role::Template);

  {
    std::vector<int> template_of(trt.size(), -1);
    for (const auto& [r, t] : sample.template_assignment) template_of[t] = r;
    std::ofstream out = open_output(config.output_dir + "/pairs.csv");
    out << "pair_index,treated_id,control_id,template_id\n";
    int index = 1;
    for (const auto& [t, c] : sample.pairs) {
      out << index++ << ',' << table.unit_ids[trt[t]] << ','
          << table.unit_ids[ctl[c]] << ','
          << (template_of[t] >= 0 ? table.unit_ids[tmpl[template_of[t]]] : "")
          << '\n';
    }
  }

  {
    std::vector<int> matched_treated, matched_control;
    for (const auto& [t, c] : sample.pairs) {
      matched_treated.push_back(trt[t]);
      matched_control.push_back(ctl[c]);
    }
    std::ofstream out = open_output(config.output_dir + "/balance.csv");
    write_balance_csv(out, table, matched_treated, matched_control);
  }
  return kExitOk;
}

int cmd_balance(const std::string& pairs_path, const std::string& cohort_path,
                const RunConfig& config) {
  RunConfig cfg = config;
  cfg.input = cohort_path;
  const CovariateTable table = load_units_csv(cohort_path, cfg);

  std::ifstream in(pairs_path);
  if (!in) throw std::invalid_argument("cannot open pairs file: " + pairs_path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(pairs_path + ": empty file");
  std::vector<int> matched_treated, matched_control;
  auto row_of = [&](const std::string& id) {
    for (int i = 0; i < table.unit_count(); ++i)
      if (table.unit_ids[std::size_t(i)] == id) return i;
    throw std::invalid_argument("pairs reference unknown id: " + id);
  };
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() < 3)
      throw std::invalid_argument(pairs_path + ":" + std::to_string(lineno) +
                                  ": expected at least 3 fields");
    matched_treated.push_back(row_of(trim(fields[1])));
    matched_control.push_back(row_of(trim(fields[2])));
  }
  if (matched_treated.empty())
    throw std::invalid_argument(pairs_path + ": no pairs");

  std::ofstream out = open_output(config.output_dir + "/balance.csv");
  write_balance_csv(out, table, matched_treated, matched_control);
  return kExitOk;
}

int cmd_dump_network(const RunConfig& config, const std::string& out_path) {
  const CovariateTable table = load_units_csv(config.input, config);
  const DistanceMatrices dist = build_distances(table, config);
  const templatematch::TemplateMatchSpec spec = to_match_spec(config);
  const templatematch::TemplateNetwork tn =
      templatematch::build_template_network(table, dist, spec);
  std::ofstream out = open_output(out_path);
  flownet::write_dimacs(tn.net, out);
  return kExitOk;
}

std::vector<simlab::SimConfig> parse_simulation_grid(const std::string& path) {
  std::vector<int> ds = {10};
  std::vector<double> thetas = {0.5};
  std::vector<double> nus = {0.0};
  std::vector<simlab::Effect> effects = {simlab::Effect::Constant};
  simlab::SimConfig base;

  for (const auto& [key, value] : read_key_values(path)) {
    if (key == "d") {
      ds.clear();
      for (const std::string& v : split_list(value))
        ds.push_back(int(parse_int(v, key)));
    } else if (key == "theta") {
      thetas.clear();
      for (const std::string& v : split_list(value))
        thetas.push_back(parse_double(v, key));
    } else if (key == "nu") {
      nus.clear();
      for (const std::string& v : split_list(value))
        nus.push_back(parse_double(v, key));
    } else if (key == "effect") {
      effects.clear();
      for (const std::string& v : split_list(value))
        effects.push_back(simlab::effect_from_name(v));
    } else if (key == "replicates") {
      base.replicates = int(parse_int(value, key));
    } else if (key == "seed" || key == "master_seed") {
      base.master_seed = std::uint64_t(parse_int(value, key));
    } else if (key == "template_size") {
      base.template_size = int(parse_int(value, key));
    } else if (key == "treated_size") {
      base.treated_size = int(parse_int(value, key));
    } else if (key == "control_size") {
      base.control_size = int(parse_int(value, key));
    } else if (key == "caliper_width") {
      base.caliper_width = parse_double(value, key);
    } else if (key == "algorithms") {
      base.algorithms.clear();
      for (const std::string& item : split_list(value)) {
        simlab::AlgorithmSpec alg;
        const std::vector<std::string> parts = split(item, ':');
        const std::string head = trim(parts[0]);
        if (head == "m_opt") {
          if (parts.size() != 1)
            throw std::invalid_argument("m_opt takes no parameters");
          alg.is_template = false;
        } else if (head == "m_template") {
          alg.is_template = true;
          for (std::size_t i = 1; i < parts.size(); ++i) {
            const auto eq = parts[i].find('=');
            if (eq == std::string::npos)
              throw std::invalid_argument("algorithm parameters are key=value: " +
                                          item);
            const std::string pk = trim(parts[i].substr(0, eq));
            const std::string pv = trim(parts[i].substr(eq + 1));
            if (pk == "k") alg.k = int(parse_int(pv, pk));
            else if (pk == "lambda") alg.lambda = parse_double(pv, pk);
            else throw std::invalid_argument("unknown algorithm parameter: " + pk);
          }
        } else {
          throw std::invalid_argument("unknown algorithm: " + head);
        }
        base.algorithms.push_back(alg);
      }
    } else {
      throw std::invalid_argument("unknown grid key: " + key);
    }
  }
  if (base.algorithms.empty())
    throw std::invalid_argument("no algorithms configured");

  std::vector<simlab::SimConfig> grid;
  for (int d : ds)
    for (double theta : thetas)
      for (double nu : nus)
        for (simlab::Effect effect : effects) {
          simlab::SimConfig cfg = base;
          cfg.d = d;
          cfg.theta = theta;
          cfg.nu = nu;
          cfg.effect = effect;
          grid.push_back(cfg);
        }
  return grid;
}

int cmd_simulate(const std::string& grid_path, const std::string& out_path) {
  const std::vector<simlab::SimConfig> grid = parse_simulation_grid(grid_path);
  const simlab::BiasReport report = simlab::run_factorial(grid);
  std::ofstream out = open_output(out_path);
  simlab::write_bias_csv(report, out);
  return kExitOk;
}

}  // namespace repmatch::cli
