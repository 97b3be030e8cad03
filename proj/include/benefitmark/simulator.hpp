#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "benefitmark/glm.hpp"
#include "benefitmark/metrics.hpp"
#include "benefitmark/trial_data.hpp"

namespace benefitmark {

enum class CovariateDistribution { normal, bernoulli };
enum class LatentKind { normal, uniform };

struct CovariateSpec {
  std::string name;
  CovariateDistribution distribution = CovariateDistribution::normal;
  double mean = 0.0;
  double sd = 1.0;
  double p = 0.5;
};

/// Generative model for a synthetic randomized trial. Both potential
/// outcomes are drawn from
///   Y(t) ~ family(psi(eta_1 + eta_T t + eta_X' X + eta_TX'(tX) + eta_U U))
/// with one latent U per subject shared across arms, so the potential
/// outcomes are conditionally independent given X exactly when eta_U = 0 and
/// conditionally independent given (X, U) by construction otherwise.
struct Scenario {
  std::vector<CovariateSpec> covariates;
  int marker_index = 0;
  OutcomeKind outcome_kind = OutcomeKind::binary;
  LinkKind link = LinkKind::logit;
  double eta_intercept = 0.0;
  double eta_treatment = 0.0;
  Eigen::VectorXd eta_x;   // one per covariate
  Eigen::VectorXd eta_tx;  // one per covariate
  double eta_u = 0.0;
  double dispersion = 1.0;  // gaussian outcome variance
  double randomization_p = 0.5;
  BenefitDefinition benefit;
  LatentKind latent = LatentKind::normal;

  void validate() const;
  double linear_predictor(int arm, const Eigen::VectorXd& x, double u) const;
};

Scenario parse_scenario_json(const std::string& text);
Scenario load_scenario(const std::string& path);

/// A simulated trial with the counterfactual side materialized.
struct FullTrial {
  Scenario scenario;
  std::vector<std::string> ids;
  Eigen::VectorXi treatment;
  Eigen::MatrixXd x;  // scenario covariate order
  Eigen::VectorXd u;
  Eigen::VectorXd y0, y1;
  Eigen::VectorXi b;

  Eigen::Index n() const { return treatment.size(); }
  Eigen::VectorXd observed_outcome() const;
  /// Masked observed-data view with the marker moved to column 0.
  TrialDataset masked() const;
};

/// Deterministic given the seed. Treatment is Bernoulli(randomization_p)
/// independent of covariates and the latent effect.
FullTrial simulate_trial(const Scenario& scenario, Eigen::Index n,
                         std::uint64_t seed);

/// True benefit probability given the marker value, by Monte-Carlo averaging
/// the closed-form benefit probability given (z, W, U) over draws of (W, U).
std::vector<double> oracle_pi_z(const Scenario& scenario,
                                std::span<const double> z_grid,
                                Eigen::Index mc_draws, std::uint64_t seed);

/// Closed-form benefit probability at a full covariate vector and latent
/// value (no Monte Carlo).
double true_pi_given_xu(const Scenario& scenario, const Eigen::VectorXd& x,
                        double u);

/// Empirical ROC of scores against known binary labels, by threshold sweep
/// with tied scores grouped. The area is accumulated in exact pair counts, so
/// it equals the Mann-Whitney statistic (ties counted 1/2) exactly.
RocCurve empirical_roc(std::span<const double> scores,
                       std::span<const int> labels);

/// ROC of the marker against the known benefit indicator.
RocCurve oracle_roc(const FullTrial& trial);

/// CSV export. The full file carries id, treatment, outcome, y0, y1, u, b,
/// then the covariate columns; the masked file drops the counterfactuals.
void write_full_csv(const FullTrial& trial, const std::string& path);
void write_masked_csv(const FullTrial& trial, const std::string& path);

}  // namespace benefitmark
