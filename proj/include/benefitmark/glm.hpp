#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>

#include "benefitmark/errors.hpp"

namespace benefitmark {

enum class LinkKind { logit, probit, identity };
enum class FamilyKind { bernoulli, gaussian };

/// Link/family pair. logit and probit pair with bernoulli; identity with
/// gaussian.
struct LinkFamily {
  LinkKind link = LinkKind::logit;
  FamilyKind family = FamilyKind::bernoulli;

  void validate() const {
    const bool ok = (link == LinkKind::identity)
                        ? family == FamilyKind::gaussian
                        : family == FamilyKind::bernoulli;
    if (!ok) throw ValidationError("incompatible link/family combination");
  }
};

inline LinkFamily logit_bernoulli() { return {LinkKind::logit, FamilyKind::bernoulli}; }
inline LinkFamily probit_bernoulli() { return {LinkKind::probit, FamilyKind::bernoulli}; }
inline LinkFamily identity_gaussian() { return {LinkKind::identity, FamilyKind::gaussian}; }

inline double norm_pdf(double x) {
  return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

/// log(1/(1+exp(-eta))), stable over the whole real line.
inline double log_sigmoid(double eta) {
  return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

/// log Phi(eta) with an asymptotic branch for the deep lower tail.
double norm_logcdf(double eta);

double inverse_link(double eta, const LinkFamily& family);

/// Per-observation log-likelihood and its first two derivatives in the
/// linear predictor, for a Bernoulli response under a logit or probit link.
struct BernoulliTerms {
  double loglik;
  double g;
  double h;
};
BernoulliTerms bernoulli_terms(double y, double eta, LinkKind link);

/// Result of a maximum-likelihood GLM fit.
struct GlmFit {
  Eigen::VectorXd coefficients;
  double dispersion = 1.0;  // gaussian only: ML estimate of the variance
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
};

struct GlmOptions {
  double score_tolerance = 1e-8;
  double coef_tolerance = 1e-10;  // relative coefficient change
  int max_iterations = 100;
  double separation_limit = 30.0;  // |coefficient| bound on the link scale
  double ridge = 1e-8;  // added to the Hessian diagonal for the step only
};

/// Maximum-likelihood fit by Newton iteration with step-halving. The design
/// must have full column rank (checked). Optional nonnegative prior weights
/// multiply each observation's likelihood contribution.
///
/// Throws RankDeficientError, SeparationError, or ConvergenceError.
GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
               const LinkFamily& family,
               const std::optional<Eigen::VectorXd>& weights = std::nullopt,
               const GlmOptions& options = {});

/// Score (gradient of the log-likelihood) at the given coefficients; lets
/// callers verify stationarity independently of the solver path.
Eigen::VectorXd glm_score(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response,
                          const LinkFamily& family,
                          const Eigen::VectorXd& coefficients,
                          const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                          double dispersion = 1.0);

/// Solves the pairwise estimating equation over cross-treatment pairs. The
/// equation has the score form of a Bernoulli GLM on the pair table, so the
/// root coincides with the fit_glm solution; pair dependence is left to the
/// bootstrap.
Eigen::VectorXd solve_estimating_equation(const Eigen::MatrixXd& pairs_design,
                                          const Eigen::VectorXd& pair_responses,
                                          const LinkFamily& link);

}  // namespace benefitmark
