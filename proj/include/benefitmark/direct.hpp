#pragma once

#include <Eigen/Core>
#include <vector>

#include "benefitmark/glm.hpp"
#include "benefitmark/trial_data.hpp"

namespace benefitmark {

/// One cross-treatment subject pair: control index i, treated index j, the
/// Euclidean distance of their standardized covariate vectors, and the
/// observed pair benefit B_ij.
struct SubjectPair {
  Eigen::Index control;
  Eigen::Index treated;
  double distance;
  int benefit;
};

struct PairSet {
  std::vector<SubjectPair> pairs;
  double fraction_kept = 1.0;
};

/// Helper-model coefficients: intercept, mean-covariate slopes, and
/// difference slopes.
struct DirectCoefficients {
  double intercept = 0.0;
  Eigen::VectorXd x;   // beta_X, one per covariate
  Eigen::VectorXd dx;  // beta_dX, one per covariate
};

/// Benefit-model parameters obtained by scaling the helper fit with the
/// sensitivity scalar gamma: alpha = gamma * (beta_1, beta_X). gamma = 1
/// recovers the conditional-independence reduction unchanged.
struct DirectBenefitFit {
  DirectCoefficients beta;
  double gamma = 1.0;
  double alpha_intercept = 0.0;
  Eigen::VectorXd alpha_x;
  LinkKind link = LinkKind::logit;

  /// Throws ValidationError when gamma is at or below the 2^{-1/2} bound.
  static DirectBenefitFit make(const DirectCoefficients& beta, double gamma,
                               LinkKind link);
};

/// Builds all cross-treatment pairs, keeping the ceil(fraction * n0 * n1)
/// closest by standardized covariate distance (ties broken by (control,
/// treated) index order). Covariates are scaled to unit sample standard
/// deviation for the distance only; constant covariates drop out of it.
PairSet build_pairs(const TrialDataset& data, const BenefitDefinition& benefit,
                    double fraction);

/// Fits the expanded pairwise model on the raw covariate scale with design
/// rows [1, (X_i + X_j)/2, X_j - X_i] via the estimating-equation solver.
DirectCoefficients fit_direct(const PairSet& pairs, const TrialDataset& data,
                              const LinkFamily& link);

/// Benefit probability psi(alpha_1 + alpha_X' x) at a full covariate vector.
double direct_pi_x(const DirectBenefitFit& fit, const Eigen::VectorXd& x);

}  // namespace benefitmark
