#include "benefitmark/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace benefitmark {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Mills-ratio expansion of phi(eta)/Phi(eta) for eta far in the lower tail.
double mills_ratio_lower(double eta) {
  const double inv = 1.0 / eta;
  return -eta - inv + 2.0 * inv * inv * inv;
}

using ObsTerms = BernoulliTerms;

ObsTerms gaussian_identity(double y, double eta) {
  ObsTerms t;
  const double r = y - eta;
  t.loglik = -0.5 * r * r;  // unit dispersion during iteration
  t.g = r;
  t.h = -1.0;
  return t;
}

ObsTerms obs_terms(double y, double eta, const LinkFamily& family) {
  if (family.link == LinkKind::identity) return gaussian_identity(y, eta);
  return bernoulli_terms(y, eta, family.link);
}

double negative_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, const LinkFamily& family,
                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    nll -= w[i] * obs_terms(y[i], eta[i], family).loglik;
  }
  return nll;
}

}  // namespace

double norm_logcdf(double eta) {
  if (eta > -8.0) return std::log(norm_cdf(eta));
  const double inv2 = 1.0 / (eta * eta);
  return -0.5 * eta * eta - kHalfLog2Pi - std::log(-eta) +
         std::log1p(-inv2 + 3.0 * inv2 * inv2);
}

BernoulliTerms bernoulli_terms(double y, double eta, LinkKind link) {
  BernoulliTerms t;
  if (link == LinkKind::logit) {
    const double p = sigmoid(eta);
    t.loglik = y > 0.5 ? log_sigmoid(eta) : log_sigmoid(-eta);
    t.g = y - p;
    t.h = -p * (1.0 - p);
    return t;
  }
  if (link != LinkKind::probit) {
    throw ValidationError("bernoulli terms require a logit or probit link");
  }
  // For both response values the curvature satisfies h = -s*(eta + s).
  const double signed_eta = y > 0.5 ? eta : -eta;
  const double tail = norm_cdf(signed_eta);
  double s;
  if (tail > 1e-280) {
    s = norm_pdf(signed_eta) / tail;
  } else {
    s = mills_ratio_lower(signed_eta);
  }
  if (y <= 0.5) s = -s;
  t.loglik = norm_logcdf(signed_eta);
  t.g = s;
  t.h = -s * (eta + s);
  return t;
}

double inverse_link(double eta, const LinkFamily& family) {
  switch (family.link) {
    case LinkKind::logit:
      return sigmoid(eta);
    case LinkKind::probit:
      return norm_cdf(eta);
    case LinkKind::identity:
      return eta;
  }
  throw ValidationError("unknown link");
}

Eigen::VectorXd glm_score(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response,
                          const LinkFamily& family,
                          const Eigen::VectorXd& coefficients,
                          const std::optional<Eigen::VectorXd>& weights,
                          double dispersion) {
  const Eigen::VectorXd eta = design * coefficients;
  Eigen::VectorXd g(response.size());
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    g[i] = obs_terms(response[i], eta[i], family).g;
    if (weights) g[i] *= (*weights)[i];
  }
  if (family.family == FamilyKind::gaussian) g /= dispersion;
  return design.transpose() * g;
}

GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
               const LinkFamily& family,
               const std::optional<Eigen::VectorXd>& weights,
               const GlmOptions& options) {
  family.validate();
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (n != response.size()) throw ValidationError("design/response size mismatch");
  if (p == 0) throw ValidationError("empty design matrix");
  if (n < p) throw ValidationError("fewer observations than parameters");
  if (family.family == FamilyKind::bernoulli) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (response[i] != 0.0 && response[i] != 1.0) {
        throw ValidationError("bernoulli response must lie in {0,1}");
      }
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (weights) {
    if (weights->size() != n) throw ValidationError("weight vector size mismatch");
    if ((weights->array() < 0.0).any()) {
      throw ValidationError("weights must be nonnegative");
    }
    w = *weights;
  }

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) {
      throw RankDeficientError("design matrix is rank deficient (rank " +
                               std::to_string(qr.rank()) + " of " +
                               std::to_string(p) + ")");
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double nll = negative_loglik(design, response, w, family, beta);
  bool last_step_improved = false;

  GlmFit fit;
  Eigen::VectorXd g(n), h(n);
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const ObsTerms t = obs_terms(response[i], eta[i], family);
      g[i] = w[i] * t.g;
      h[i] = w[i] * t.h;
    }
    const Eigen::VectorXd score = design.transpose() * g;
    if (score.lpNorm<Eigen::Infinity>() <= options.score_tolerance) {
      fit.converged = true;
      fit.iterations = iter;
      break;
    }
    if (iter == options.max_iterations) break;

    Eigen::MatrixXd neg_hessian = design.transpose() * (-h).asDiagonal() * design;
    neg_hessian.diagonal().array() += options.ridge;
    Eigen::VectorXd step = neg_hessian.ldlt().solve(score);
    if (!step.allFinite()) {
      throw ConvergenceError("Newton step is not finite");
    }

    double scale = 1.0;
    Eigen::VectorXd candidate;
    double candidate_nll = 0.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      candidate = beta + scale * step;
      candidate_nll = negative_loglik(design, response, w, family, candidate);
      if (candidate_nll <= nll) {
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      throw ConvergenceError("step-halving failed to reduce the deviance");
    }

    // Once the relative coefficient change drops below tolerance the loop
    // head re-checks the score, so `converged` always implies a small score.
    last_step_improved = candidate_nll < nll;
    beta = candidate;
    nll = candidate_nll;

    if (family.family == FamilyKind::bernoulli &&
        beta.lpNorm<Eigen::Infinity>() > options.separation_limit &&
        last_step_improved) {
      throw SeparationError(
          "complete separation: coefficients diverging on the link scale");
    }
  }
  if (!fit.converged) {
    throw ConvergenceError("no convergence after " +
                           std::to_string(options.max_iterations) + " iterations");
  }

  fit.coefficients = beta;
  if (family.family == FamilyKind::gaussian) {
    const Eigen::VectorXd resid = response - design * beta;
    const double wsum = w.sum();
    fit.dispersion = (w.array() * resid.array().square()).sum() / wsum;
    fit.log_likelihood = -0.5 * (w.array() * resid.array().square()).sum() /
                             fit.dispersion -
                         0.5 * wsum * std::log(fit.dispersion) - wsum * kHalfLog2Pi;
  } else {
    fit.dispersion = 1.0;
    fit.log_likelihood = -nll;
  }
  return fit;
}

Eigen::VectorXd solve_estimating_equation(const Eigen::MatrixXd& pairs_design,
                                          const Eigen::VectorXd& pair_responses,
                                          const LinkFamily& link) {
  if (link.link == LinkKind::identity || link.family != FamilyKind::bernoulli) {
    throw ValidationError("pairwise estimating equation requires a logit or probit link");
  }
  return fit_glm(pairs_design, pair_responses, link).coefficients;
}

}  // namespace benefitmark
