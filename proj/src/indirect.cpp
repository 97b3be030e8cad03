#include "benefitmark/indirect.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "benefitmark/errors.hpp"
#include "benefitmark/quadrature.hpp"

namespace benefitmark {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kInvSqrt2 = 0.7071067811865475244;

Eigen::MatrixXd outcome_design(const TrialDataset& data,
                               std::span<const Eigen::Index> interactions) {
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.dim();
  const auto k = static_cast<Eigen::Index>(interactions.size());
  for (const Eigen::Index c : interactions) {
    if (c < 0 || c >= d) throw ValidationError("interaction index out of range");
  }
  Eigen::MatrixXd design(n, 2 + d + k);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = static_cast<double>(data.treatment[i]);
    for (Eigen::Index c = 0; c < d; ++c) design(i, 2 + c) = data.x(i, c);
    for (Eigen::Index j = 0; j < k; ++j) {
      design(i, 2 + d + j) =
          static_cast<double>(data.treatment[i]) * data.x(i, interactions[j]);
    }
  }
  return design;
}

double arm_eta_impl(const Eigen::VectorXd& theta, Eigen::Index d,
                    std::span<const Eigen::Index> interactions, int arm,
                    const Eigen::VectorXd& x) {
  if (x.size() != d) throw ValidationError("covariate vector length mismatch");
  double eta = theta[0] + theta[1] * static_cast<double>(arm);
  for (Eigen::Index c = 0; c < d; ++c) eta += theta[2 + c] * x[c];
  if (arm == 1) {
    for (std::size_t j = 0; j < interactions.size(); ++j) {
      eta += theta[2 + d + static_cast<Eigen::Index>(j)] * x[interactions[j]];
    }
  }
  return eta;
}

void check_benefit_family(const BenefitDefinition& benefit,
                          const LinkFamily& family) {
  const bool continuous = benefit.kind == BenefitKind::continuous_gap;
  if (continuous != (family.family == FamilyKind::gaussian)) {
    throw ValidationError("benefit kind incompatible with the outcome family");
  }
}

/// Benefit probability when the two arms are independent with the given
/// bernoulli means or gaussian means/SD.
double combine_binary(double p0, double p1, BenefitKind kind) {
  if (kind == BenefitKind::binary_leq) return 1.0 - p0 * (1.0 - p1);
  return p1 * (1.0 - p0);  // binary_lt
}

double combine_gaussian(double mu0, double mu1, double sigma, double delta) {
  return norm_cdf((mu1 - mu0 - delta) / (sigma * std::sqrt(2.0)));
}

// Marginal-likelihood Newton solver. Parameters are theta for bernoulli
// outcomes and (theta, log sigma) for gaussian outcomes. Per-observation
// node sums use the max-log trick so extreme residuals cannot underflow the
// mixture weights.
class MixedObjective {
 public:
  MixedObjective(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                 const LinkFamily& family, double theta_u,
                 const Eigen::VectorXd& nodes, const Eigen::VectorXd& weights)
      : design_(design),
        response_(response),
        family_(family),
        offsets_(theta_u * nodes),
        weights_(weights) {}

  bool gaussian() const { return family_.family == FamilyKind::gaussian; }
  Eigen::Index n_params() const {
    return design_.cols() + (gaussian() ? 1 : 0);
  }

  double loglik(const Eigen::VectorXd& params) const {
    const Eigen::VectorXd eta = design_ * params.head(design_.cols());
    const double sigma = gaussian() ? std::exp(params[params.size() - 1]) : 1.0;
    double total = 0.0;
    std::vector<double> lf(static_cast<std::size_t>(weights_.size()));
    for (Eigen::Index i = 0; i < response_.size(); ++i) {
      total += obs_loglik(response_[i], eta[i], sigma, lf);
    }
    return total;
  }

  void derivatives(const Eigen::VectorXd& params, double& loglik_out,
                   Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const Eigen::Index p = design_.cols();
    const Eigen::Index q = n_params();
    const Eigen::VectorXd eta = design_ * params.head(p);
    const double sigma = gaussian() ? std::exp(params[params.size() - 1]) : 1.0;

    loglik_out = 0.0;
    grad.setZero(q);
    hess.setZero(q, q);
    const auto nodes = static_cast<std::size_t>(weights_.size());
    std::vector<double> lf(nodes), fw(nodes);

    for (Eigen::Index i = 0; i < response_.size(); ++i) {
      const double y = response_[i];
      // Per-node log densities, shifted by their maximum.
      double lmax = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nodes; ++k) {
        lf[k] = node_loglik(y, eta[i] + offsets_[static_cast<Eigen::Index>(k)],
                            sigma);
        lmax = std::max(lmax, lf[k]);
      }
      double L = 0.0;
      for (std::size_t k = 0; k < nodes; ++k) {
        fw[k] = weights_[static_cast<Eigen::Index>(k)] * std::exp(lf[k] - lmax);
        L += fw[k];
      }
      loglik_out += lmax + std::log(L);

      double s1 = 0.0, s2 = 0.0, t1 = 0.0, t2 = 0.0, cross = 0.0;
      for (std::size_t k = 0; k < nodes; ++k) {
        const double m = eta[i] + offsets_[static_cast<Eigen::Index>(k)];
        if (gaussian()) {
          const double r = (y - m) / sigma;
          const double dm = r / sigma;
          const double ds = r * r - 1.0;
          s1 += fw[k] * dm;
          s2 += fw[k] * (dm * dm - 1.0 / (sigma * sigma));
          t1 += fw[k] * ds;
          t2 += fw[k] * (ds * ds - 2.0 * r * r);
          cross += fw[k] * (dm * ds - 2.0 * r / sigma);
        } else {
          const BernoulliTerms terms = bernoulli_terms(y, m, family_.link);
          s1 += fw[k] * terms.g;
          s2 += fw[k] * (terms.g * terms.g + terms.h);
        }
      }
      const double gs = s1 / L;
      grad.head(p) += gs * design_.row(i).transpose();
      hess.topLeftCorner(p, p) += (s2 / L - gs * gs) *
                                  (design_.row(i).transpose() * design_.row(i));
      if (gaussian()) {
        const double gt = t1 / L;
        grad[q - 1] += gt;
        hess.topRightCorner(p, 1) +=
            (cross / L - gs * gt) * design_.row(i).transpose();
        hess(q - 1, q - 1) += t2 / L - gt * gt;
      }
    }
    if (gaussian()) {
      hess.bottomLeftCorner(1, design_.cols()) =
          hess.topRightCorner(design_.cols(), 1).transpose();
    }
  }

 private:
  double node_loglik(double y, double m, double sigma) const {
    if (gaussian()) {
      const double r = (y - m) / sigma;
      return -0.5 * r * r - std::log(sigma) - kHalfLog2Pi;
    }
    return bernoulli_terms(y, m, family_.link).loglik;
  }

  double obs_loglik(double y, double eta, double sigma,
                    std::vector<double>& lf) const {
    double lmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < weights_.size(); ++k) {
      lf[static_cast<std::size_t>(k)] = node_loglik(y, eta + offsets_[k], sigma);
      lmax = std::max(lmax, lf[static_cast<std::size_t>(k)]);
    }
    double L = 0.0;
    for (Eigen::Index k = 0; k < weights_.size(); ++k) {
      L += weights_[k] * std::exp(lf[static_cast<std::size_t>(k)] - lmax);
    }
    return lmax + std::log(L);
  }

  const Eigen::MatrixXd& design_;
  const Eigen::VectorXd& response_;
  LinkFamily family_;
  Eigen::VectorXd offsets_;  // theta_u * nodes
  Eigen::VectorXd weights_;
};

}  // namespace

double OutcomeModelFit::arm_eta(int arm, const Eigen::VectorXd& x) const {
  return arm_eta_impl(theta, x_dim, interactions, arm, x);
}

double MixedModelFit::arm_eta(int arm, const Eigen::VectorXd& x) const {
  return arm_eta_impl(theta_star, x_dim, interactions, arm, x);
}

OutcomeModelFit fit_outcome_model(const TrialDataset& data,
                                  const LinkFamily& family,
                                  std::span<const Eigen::Index> interactions) {
  family.validate();
  const bool gaussian = family.family == FamilyKind::gaussian;
  if (gaussian != (data.outcome_kind == OutcomeKind::continuous)) {
    throw ValidationError("outcome family incompatible with the outcome kind");
  }
  const Eigen::MatrixXd design = outcome_design(data, interactions);
  const GlmFit glm = fit_glm(design, data.outcome, family);

  OutcomeModelFit fit;
  fit.theta = glm.coefficients;
  fit.x_dim = data.dim();
  fit.interactions.assign(interactions.begin(), interactions.end());
  fit.family = family;
  fit.dispersion = glm.dispersion;
  fit.log_likelihood = glm.log_likelihood;
  return fit;
}

double ci_pi_x(const OutcomeModelFit& fit, const Eigen::VectorXd& x,
               const BenefitDefinition& benefit) {
  check_benefit_family(benefit, fit.family);
  const double eta0 = fit.arm_eta(0, x);
  const double eta1 = fit.arm_eta(1, x);
  if (fit.family.family == FamilyKind::gaussian) {
    return combine_gaussian(eta0, eta1, std::sqrt(fit.dispersion), benefit.delta);
  }
  const double p0 = inverse_link(eta0, fit.family);
  const double p1 = inverse_link(eta1, fit.family);
  return combine_binary(p0, p1, benefit.kind);
}

MixedModelFit fit_mixed_model(const TrialDataset& data, const LinkFamily& family,
                              std::span<const Eigen::Index> interactions,
                              double theta_u_star, int quadrature_nodes) {
  family.validate();
  if (!(theta_u_star >= 0.0)) {
    throw ValidationError("theta_u_star must be nonnegative");
  }
  if (quadrature_nodes < 2) {
    throw ValidationError("quadrature needs at least two nodes");
  }
  const bool gaussian = family.family == FamilyKind::gaussian;
  if (gaussian != (data.outcome_kind == OutcomeKind::continuous)) {
    throw ValidationError("outcome family incompatible with the outcome kind");
  }

  const Eigen::MatrixXd design = outcome_design(data, interactions);
  const GlmFit glm = fit_glm(design, data.outcome, family);

  const GaussHermiteRule rule = gauss_hermite(quadrature_nodes);
  MixedObjective objective(design, data.outcome, family, theta_u_star,
                           rule.nodes, rule.weights);

  const Eigen::Index q = objective.n_params();
  Eigen::VectorXd params(q);
  params.head(design.cols()) = glm.coefficients;
  if (gaussian) {
    const double floor = 0.05 * glm.dispersion;
    const double init_var =
        std::max(glm.dispersion - theta_u_star * theta_u_star, floor);
    params[q - 1] = 0.5 * std::log(init_var);
  }

  const GlmOptions options;
  double loglik = objective.loglik(params);
  Eigen::VectorXd grad(q);
  Eigen::MatrixXd hess(q, q);

  MixedModelFit fit;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    double check = 0.0;
    objective.derivatives(params, check, grad, hess);
    if (grad.lpNorm<Eigen::Infinity>() <= options.score_tolerance) {
      fit.converged = true;
      fit.iterations = iter;
      loglik = check;
      break;
    }
    if (iter == options.max_iterations) break;

    Eigen::MatrixXd neg_hess = -hess;
    neg_hess.diagonal().array() += options.ridge;
    Eigen::VectorXd step = neg_hess.ldlt().solve(grad);
    if (!step.allFinite()) throw ConvergenceError("Newton step is not finite");

    double scale = 1.0;
    bool improved = false;
    Eigen::VectorXd candidate;
    double candidate_loglik = 0.0;
    for (int halving = 0; halving < 30; ++halving) {
      candidate = params + scale * step;
      candidate_loglik = objective.loglik(candidate);
      if (std::isfinite(candidate_loglik) && candidate_loglik >= loglik) {
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      throw ConvergenceError("step-halving failed to improve the marginal likelihood");
    }
    const bool strictly_better = candidate_loglik > loglik;
    params = candidate;
    loglik = candidate_loglik;

    if (!gaussian &&
        params.head(design.cols()).lpNorm<Eigen::Infinity>() >
            options.separation_limit &&
        strictly_better) {
      throw SeparationError(
          "complete separation: coefficients diverging on the link scale");
    }
    if (gaussian && params[q - 1] < -15.0) {
      throw ConvergenceError("dispersion collapsed toward the boundary");
    }
  }
  if (!fit.converged) {
    throw ConvergenceError("no convergence after " +
                           std::to_string(options.max_iterations) + " iterations");
  }

  fit.theta_star = params.head(design.cols());
  fit.x_dim = data.dim();
  fit.interactions.assign(interactions.begin(), interactions.end());
  fit.family = family;
  fit.theta_u_star = theta_u_star;
  fit.quadrature_nodes = quadrature_nodes;
  fit.dispersion = gaussian ? std::exp(2.0 * params[q - 1]) : 1.0;
  fit.log_likelihood = loglik;
  return fit;
}

double mixed_pi_x(const MixedModelFit& fit, const Eigen::VectorXd& x,
                  const BenefitDefinition& benefit) {
  check_benefit_family(benefit, fit.family);
  const double eta0 = fit.arm_eta(0, x);
  const double eta1 = fit.arm_eta(1, x);
  const bool gaussian = fit.family.family == FamilyKind::gaussian;
  const double sigma = gaussian ? std::sqrt(fit.dispersion) : 1.0;
  const double theta_u = std::abs(fit.theta_u_star);

  if (theta_u == 0.0) {
    if (gaussian) return combine_gaussian(eta0, eta1, sigma, benefit.delta);
    return combine_binary(inverse_link(eta0, fit.family),
                          inverse_link(eta1, fit.family), benefit.kind);
  }

  const GaussHermiteRule rule = gauss_hermite(fit.quadrature_nodes);
  double total = 0.0;
  for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
    const double shift = theta_u * rule.nodes[k];
    double b;
    if (gaussian) {
      // A shared additive latent shift cancels in the arm difference; the
      // node loop is kept for uniformity with the binary case.
      b = combine_gaussian(eta0 + shift, eta1 + shift, sigma, benefit.delta);
    } else {
      b = combine_binary(inverse_link(eta0 + shift, fit.family),
                         inverse_link(eta1 + shift, fit.family), benefit.kind);
    }
    total += rule.weights[k] * b;
  }
  return total;
}

}  // namespace benefitmark
