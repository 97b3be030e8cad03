#include "benefitmark/trial_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "benefitmark/errors.hpp"

namespace benefitmark {

namespace {

bool is_binary_value(double v) { return v == 0.0 || v == 1.0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, Eigen::Index row,
                    const std::string& column) {
  field = trim(field);
  if (field.empty()) {
    throw ValidationError("missing value in column '" + column + "', row " +
                          std::to_string(row + 1));
  }
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ValidationError("non-numeric value '" + std::string(field) +
                          "' in column '" + column + "', row " +
                          std::to_string(row + 1));
  }
  return value;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.emplace_back(trim(std::string_view(line).substr(start)));
      break;
    }
    fields.emplace_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

int evaluate_benefit(double y0, double y1, const BenefitDefinition& def) {
  switch (def.kind) {
    case BenefitKind::binary_leq:
    case BenefitKind::binary_lt:
      if (!is_binary_value(y0) || !is_binary_value(y1)) {
        throw ValidationError(
            "benefit kind requires binary outcome values in {0,1}");
      }
      return def.kind == BenefitKind::binary_leq ? (y0 <= y1 ? 1 : 0)
                                                 : (y0 < y1 ? 1 : 0);
    case BenefitKind::continuous_gap:
      return (y1 - y0 > def.delta) ? 1 : 0;
  }
  throw ValidationError("unknown benefit kind");
}

Eigen::Index TrialTable::column_index(const std::string& name) const {
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(column_names.size()); ++j) {
    if (column_names[j] == name) return j;
  }
  return -1;
}

Eigen::Index TrialDataset::arm_size(int arm) const {
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < n(); ++i) count += (treatment[i] == arm);
  return count;
}

std::vector<Eigen::Index> TrialDataset::arm_indices(int arm) const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (treatment[i] == arm) idx.push_back(i);
  }
  return idx;
}

void TrialDataset::validate() const {
  const Eigen::Index m = n();
  if (m < 2) throw ValidationError("dataset needs at least two subjects");
  if (outcome.size() != m || static_cast<Eigen::Index>(ids.size()) != m ||
      x.rows() != m) {
    throw ValidationError("dataset field lengths disagree");
  }
  if (x.cols() < 1) throw ValidationError("dataset lacks a marker column");
  if (static_cast<Eigen::Index>(x_names.size()) != x.cols()) {
    throw ValidationError("covariate names do not match matrix width");
  }
  Eigen::Index n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (treatment[i] != 0 && treatment[i] != 1) {
      throw ValidationError("invalid treatment value for subject '" + ids[i] + "'");
    }
    (treatment[i] == 0 ? n0 : n1) += 1;
    if (!std::isfinite(outcome[i])) {
      throw ValidationError("non-finite outcome for subject '" + ids[i] + "'");
    }
    if (outcome_kind == OutcomeKind::binary && !is_binary_value(outcome[i])) {
      throw ValidationError("invalid binary outcome for subject '" + ids[i] +
                            "' (must be 0 or 1)");
    }
    if (marker_kind == MarkerKind::binary && !is_binary_value(x(i, 0))) {
      throw ValidationError("invalid binary marker for subject '" + ids[i] + "'");
    }
  }
  if (n0 == 0 || n1 == 0) throw ValidationError("empty treatment arm");
  if (!x.allFinite()) throw ValidationError("non-finite covariate value");
}

void AnalysisConfig::validate() const {
  if (marker_columns.empty()) throw ValidationError("no marker column declared");
  std::set<std::string> seen;
  for (const auto& name : marker_columns) {
    if (!seen.insert(name).second) {
      throw ValidationError("duplicate marker column '" + name + "'");
    }
  }
  for (const auto& name : covariate_columns) {
    if (!seen.insert(name).second) {
      throw ValidationError("column '" + name +
                            "' declared as both marker and covariate");
    }
  }
  for (double g : gamma_grid) {
    if (!(g > kGammaLowerBound)) {
      throw ValidationError("gamma below identifiability bound: gamma must exceed 2^{-1/2}");
    }
  }
  if (gamma_grid.empty() && (approach == ApproachKind::direct ||
                             approach == ApproachKind::both)) {
    throw ValidationError("empty gamma grid");
  }
  if (theta_u_grid.empty() && (approach == ApproachKind::indirect ||
                               approach == ApproachKind::both)) {
    throw ValidationError("empty theta_u grid");
  }
  for (double t : theta_u_grid) {
    if (!(t >= 0.0)) throw ValidationError("theta_u values must be nonnegative");
  }
  if (!(pair_fraction > 0.0 && pair_fraction <= 1.0)) {
    throw ValidationError("pair_fraction must lie in (0,1]");
  }
  if (bandwidth_exponent_lo > bandwidth_exponent_hi) {
    throw ValidationError("empty bandwidth exponent range");
  }
  if (!(cv_split_fraction > 0.0 && cv_split_fraction < 1.0)) {
    throw ValidationError("cv_split_fraction must lie in (0,1)");
  }
  if (bootstrap_replicates < 0) {
    throw ValidationError("bootstrap_replicates must be nonnegative");
  }
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw ValidationError("ci_level must lie in (0,1)");
  }
  if (link != "logit" && link != "probit") {
    throw ValidationError("link must be 'logit' or 'probit'");
  }
  if (benefit.kind == BenefitKind::continuous_gap && !std::isfinite(benefit.delta)) {
    throw ValidationError("continuous_gap benefit needs a finite delta");
  }
}

namespace {

BenefitKind parse_benefit_kind(const std::string& s) {
  if (s == "binary_leq") return BenefitKind::binary_leq;
  if (s == "binary_lt") return BenefitKind::binary_lt;
  if (s == "continuous_gap") return BenefitKind::continuous_gap;
  throw ValidationError("unknown benefit kind '" + s + "'");
}

ApproachKind parse_approach(const std::string& s) {
  if (s == "direct") return ApproachKind::direct;
  if (s == "indirect") return ApproachKind::indirect;
  if (s == "both") return ApproachKind::both;
  throw ValidationError("unknown approach '" + s + "'");
}

}  // namespace

AnalysisConfig parse_config_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  AnalysisConfig config;
  try {
    if (!doc.contains("benefit")) throw ValidationError("config lacks 'benefit'");
    config.benefit.kind = parse_benefit_kind(doc["benefit"].at("kind"));
    if (doc["benefit"].contains("delta")) {
      config.benefit.delta = doc["benefit"]["delta"].get<double>();
    }
    if (!doc.contains("marker_column")) {
      throw ValidationError("config lacks 'marker_column'");
    }
    if (doc["marker_column"].is_array()) {
      config.marker_columns = doc["marker_column"].get<std::vector<std::string>>();
    } else {
      config.marker_columns = {doc["marker_column"].get<std::string>()};
    }
    if (doc.contains("covariate_columns")) {
      config.covariate_columns =
          doc["covariate_columns"].get<std::vector<std::string>>();
    }
    if (doc.contains("approach")) {
      config.approach = parse_approach(doc["approach"].get<std::string>());
    }
    if (doc.contains("gamma_grid")) {
      config.gamma_grid = doc["gamma_grid"].get<std::vector<double>>();
    }
    if (doc.contains("theta_u_grid")) {
      config.theta_u_grid = doc["theta_u_grid"].get<std::vector<double>>();
    }
    if (doc.contains("pair_fraction")) {
      config.pair_fraction = doc["pair_fraction"].get<double>();
    }
    if (doc.contains("bandwidth_exponents")) {
      const auto& range = doc["bandwidth_exponents"];
      if (!range.is_array() || range.size() != 2) {
        throw ValidationError("bandwidth_exponents must be [lo, hi]");
      }
      config.bandwidth_exponent_lo = range[0].get<int>();
      config.bandwidth_exponent_hi = range[1].get<int>();
    }
    if (doc.contains("cv_split_fraction")) {
      config.cv_split_fraction = doc["cv_split_fraction"].get<double>();
    }
    if (doc.contains("bootstrap_replicates")) {
      config.bootstrap_replicates = doc["bootstrap_replicates"].get<int>();
    }
    if (doc.contains("ci_level")) {
      config.ci_level = doc["ci_level"].get<double>();
    }
    if (doc.contains("seed")) {
      config.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("link")) {
      config.link = doc["link"].get<std::string>();
    }
    if (doc.contains("interaction_columns")) {
      config.interaction_columns =
          doc["interaction_columns"].get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config field: ") + e.what());
  }
  if (config.interaction_columns.empty()) {
    config.interaction_columns = config.marker_columns;
  }
  config.validate();
  return config;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

TrialTable parse_trial_csv(const std::string& path, const AnalysisConfig& config) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty data file");
  const auto header = split_line(line);

  auto find_column = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<Eigen::Index>(j);
    }
    throw ValidationError("column not found: '" + name + "'");
  };

  const Eigen::Index id_col = find_column("id");
  const Eigen::Index treatment_col = find_column("treatment");
  const Eigen::Index outcome_col = find_column("outcome");

  std::vector<std::string> wanted = config.marker_columns;
  wanted.insert(wanted.end(), config.covariate_columns.begin(),
                config.covariate_columns.end());
  std::vector<Eigen::Index> wanted_cols;
  wanted_cols.reserve(wanted.size());
  for (const auto& name : wanted) wanted_cols.push_back(find_column(name));

  TrialTable table;
  table.column_names = wanted;
  std::vector<double> treatment_raw, outcome_raw;
  std::vector<std::vector<double>> values(wanted.size());

  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("row " + std::to_string(row + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    if (fields[id_col].empty()) {
      throw ValidationError("missing value in column 'id', row " +
                            std::to_string(row + 1));
    }
    table.ids.push_back(fields[id_col]);
    const double t = parse_number(fields[treatment_col], row, "treatment");
    if (t != 0.0 && t != 1.0) {
      throw ValidationError("invalid treatment value '" + fields[treatment_col] +
                            "' in row " + std::to_string(row + 1));
    }
    treatment_raw.push_back(t);
    outcome_raw.push_back(parse_number(fields[outcome_col], row, "outcome"));
    for (std::size_t j = 0; j < wanted.size(); ++j) {
      values[j].push_back(parse_number(fields[wanted_cols[j]], row, wanted[j]));
    }
    ++row;
  }
  if (row == 0) throw ValidationError("data file has no subject rows");

  table.treatment.resize(row);
  table.outcome.resize(row);
  table.columns.resize(row, static_cast<Eigen::Index>(wanted.size()));
  for (Eigen::Index i = 0; i < row; ++i) {
    table.treatment[i] = static_cast<int>(treatment_raw[i]);
    table.outcome[i] = outcome_raw[i];
    for (std::size_t j = 0; j < wanted.size(); ++j) {
      table.columns(i, static_cast<Eigen::Index>(j)) = values[j][i];
    }
  }
  return table;
}

TrialDataset make_dataset(const TrialTable& table, const AnalysisConfig& config,
                          const std::string& marker) {
  const Eigen::Index marker_col = table.column_index(marker);
  if (marker_col < 0) throw ValidationError("column not found: '" + marker + "'");

  TrialDataset data;
  data.ids = table.ids;
  data.treatment = table.treatment;
  data.outcome = table.outcome;
  data.outcome_kind = config.benefit.outcome_kind();

  std::vector<Eigen::Index> order;
  order.push_back(marker_col);
  for (const auto& name : config.marker_columns) {
    if (name == marker) continue;
    order.push_back(table.column_index(name));
  }
  for (const auto& name : config.covariate_columns) {
    order.push_back(table.column_index(name));
  }

  data.x.resize(table.n(), static_cast<Eigen::Index>(order.size()));
  data.x_names.reserve(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    data.x.col(static_cast<Eigen::Index>(j)) = table.columns.col(order[j]);
    data.x_names.push_back(table.column_names[static_cast<std::size_t>(order[j])]);
  }

  bool all_binary = true;
  for (Eigen::Index i = 0; i < table.n() && all_binary; ++i) {
    all_binary = is_binary_value(data.x(i, 0));
  }
  data.marker_kind = all_binary ? MarkerKind::binary : MarkerKind::continuous;

  data.validate();
  return data;
}

TrialDataset load_trial(const std::string& path, const AnalysisConfig& config) {
  config.validate();
  const TrialTable table = parse_trial_csv(path, config);
  return make_dataset(table, config, config.marker_columns.front());
}

}  // namespace benefitmark
