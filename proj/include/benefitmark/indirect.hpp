#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "benefitmark/glm.hpp"
#include "benefitmark/trial_data.hpp"

namespace benefitmark {

/// Outcome-regression coefficients in the flat layout
/// [intercept, treatment, x_1..x_d, tx_1..tx_k], where the tx block holds one
/// slope per declared treatment-by-covariate interaction.
struct OutcomeModelFit {
  Eigen::VectorXd theta;
  Eigen::Index x_dim = 0;
  std::vector<Eigen::Index> interactions;  // covariate indices interacted with T
  LinkFamily family;
  double dispersion = 1.0;  // gaussian only
  double log_likelihood = 0.0;

  /// Linear predictor for arm t at covariate vector x.
  double arm_eta(int arm, const Eigen::VectorXd& x) const;
};

/// Mixed-model coefficients (same layout) with the latent-effect coefficient
/// theta_U* held fixed and U marginalized by Gauss-Hermite quadrature.
struct MixedModelFit {
  Eigen::VectorXd theta_star;
  Eigen::Index x_dim = 0;
  std::vector<Eigen::Index> interactions;
  LinkFamily family;
  double theta_u_star = 0.0;
  int quadrature_nodes = 32;
  double dispersion = 1.0;  // gaussian only: within-u residual variance
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;

  double arm_eta(int arm, const Eigen::VectorXd& x) const;
};

/// Maximum-likelihood outcome regression E(Y|T,X) with treatment
/// interactions restricted to the given covariate indices.
OutcomeModelFit fit_outcome_model(const TrialDataset& data,
                                  const LinkFamily& family,
                                  std::span<const Eigen::Index> interactions);

/// Benefit probability under conditional independence: the two fitted arm
/// distributions at x are combined as if independent.
double ci_pi_x(const OutcomeModelFit& fit, const Eigen::VectorXd& x,
               const BenefitDefinition& benefit);

/// Marginal maximum likelihood for the latent-effect outcome model with
/// U ~ N(0,1) and fixed coefficient theta_u_star >= 0; the marginal
/// likelihood integral is evaluated by Gauss-Hermite quadrature.
MixedModelFit fit_mixed_model(const TrialDataset& data, const LinkFamily& family,
                              std::span<const Eigen::Index> interactions,
                              double theta_u_star, int quadrature_nodes = 32);

/// Benefit probability under residual dependence: within-u independence
/// combined across the latent distribution by quadrature. Uses |theta_U*|,
/// so the result is invariant to the sign of the latent coefficient.
double mixed_pi_x(const MixedModelFit& fit, const Eigen::VectorXd& x,
                  const BenefitDefinition& benefit);

}  // namespace benefitmark
