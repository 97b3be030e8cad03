#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace benefitmark {

enum class OutcomeKind { binary, continuous };
enum class MarkerKind { binary, continuous };
enum class BenefitKind { binary_leq, binary_lt, continuous_gap };
enum class ApproachKind { direct, indirect, both };

/// Lower bound of the identifiable range for the direct-approach sensitivity
/// scalar gamma (exclusive).
inline constexpr double kGammaLowerBound = 0.7071067811865476;  // 2^{-1/2}

/// Defines which potential-outcome pairs (y0, y1) count as a treatment
/// benefit. binary_leq / binary_lt apply to binary outcomes; continuous_gap
/// requires y1 - y0 > delta on a continuous outcome.
struct BenefitDefinition {
  BenefitKind kind = BenefitKind::binary_leq;
  double delta = 0.0;

  OutcomeKind outcome_kind() const {
    return kind == BenefitKind::continuous_gap ? OutcomeKind::continuous
                                               : OutcomeKind::binary;
  }
};

/// Indicator that (y0, y1) lies in the desirable set.
/// Throws ValidationError when the outcome values do not match the
/// definition's outcome kind.
int evaluate_benefit(double y0, double y1, const BenefitDefinition& def);

/// Raw trial table as read from CSV: ids, arms, outcome, and every declared
/// numeric column by name. Marker/covariate roles are assigned later when a
/// per-marker dataset view is built.
struct TrialTable {
  std::vector<std::string> ids;
  Eigen::VectorXi treatment;
  Eigen::VectorXd outcome;
  std::vector<std::string> column_names;
  Eigen::MatrixXd columns;  // n x m, one column per name

  Eigen::Index n() const { return treatment.size(); }
  Eigen::Index column_index(const std::string& name) const;  // -1 if absent
};

/// Observed-data substrate for all estimators. The covariate matrix x holds
/// the full vector X = (Z, W) with the marker in column 0 and the remaining
/// covariates in declared order. Immutable after construction.
struct TrialDataset {
  std::vector<std::string> ids;
  Eigen::VectorXi treatment;  // in {0,1}
  Eigen::VectorXd outcome;
  Eigen::MatrixXd x;  // n x d, column 0 = marker
  std::vector<std::string> x_names;
  OutcomeKind outcome_kind = OutcomeKind::binary;
  MarkerKind marker_kind = MarkerKind::continuous;

  Eigen::Index n() const { return treatment.size(); }
  Eigen::Index dim() const { return x.cols(); }
  double z(Eigen::Index i) const { return x(i, 0); }
  Eigen::Index arm_size(int arm) const;
  std::vector<Eigen::Index> arm_indices(int arm) const;

  /// Checks the dataset invariants; throws ValidationError on violation.
  void validate() const;
};

/// Analysis knobs. Defaults follow the reference analysis: gamma grid with
/// the open lower bound nudged above 2^{-1/2}, theta_U* grid {0,1.8,4,8},
/// 1% closest pairs, bandwidth grid 2^l*sd(Z) for l in -5..5, a 1:1
/// cross-validation split, 200 bootstrap replicates, and 90% intervals.
struct AnalysisConfig {
  BenefitDefinition benefit;
  std::vector<std::string> marker_columns;
  std::vector<std::string> covariate_columns;
  ApproachKind approach = ApproachKind::both;
  std::vector<double> gamma_grid = {kGammaLowerBound + 1e-6, 1.0, 2.0, 4.0};
  std::vector<double> theta_u_grid = {0.0, 1.8, 4.0, 8.0};
  double pair_fraction = 0.01;
  int bandwidth_exponent_lo = -5;
  int bandwidth_exponent_hi = 5;
  double cv_split_fraction = 0.5;
  int bootstrap_replicates = 200;
  double ci_level = 0.90;
  std::uint64_t seed = 0;
  /// Link for the benefit, helper, and outcome models ("logit" or "probit"
  /// for binary outcomes; continuous outcomes use the identity link).
  std::string link = "logit";
  /// Covariates interacted with treatment in the outcome model; defaults to
  /// the marker columns when empty at load time.
  std::vector<std::string> interaction_columns;

  void validate() const;
};

/// Parses a JSON config document (field names in snake_case, mirroring
/// AnalysisConfig; marker_column accepts a string or an array of strings).
AnalysisConfig load_config(const std::string& path);
AnalysisConfig parse_config_json(const std::string& text);

/// Reads the trial CSV. Required columns: id, treatment, outcome, plus every
/// marker and covariate column named in the config. Extra columns are
/// ignored. Rows with missing or non-numeric values are rejected.
TrialTable parse_trial_csv(const std::string& path, const AnalysisConfig& config);

/// Builds the per-marker dataset view: X = (marker, other markers in declared
/// order, covariates in declared order).
TrialDataset make_dataset(const TrialTable& table, const AnalysisConfig& config,
                          const std::string& marker);

/// Loads and validates a trial file for the first declared marker.
TrialDataset load_trial(const std::string& path, const AnalysisConfig& config);

}  // namespace benefitmark
