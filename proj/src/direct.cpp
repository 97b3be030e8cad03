#include "benefitmark/direct.hpp"

#include <algorithm>
#include <cmath>

#include "benefitmark/errors.hpp"

namespace benefitmark {

namespace {

bool pair_less(const SubjectPair& a, const SubjectPair& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.control != b.control) return a.control < b.control;
  return a.treated < b.treated;
}

}  // namespace

DirectBenefitFit DirectBenefitFit::make(const DirectCoefficients& beta,
                                        double gamma, LinkKind link) {
  if (!(gamma > kGammaLowerBound)) {
    throw ValidationError(
        "gamma below identifiability bound: gamma must exceed 2^{-1/2}");
  }
  if (link == LinkKind::identity) {
    throw ValidationError("benefit model requires a logit or probit link");
  }
  DirectBenefitFit fit;
  fit.beta = beta;
  fit.gamma = gamma;
  fit.link = link;
  fit.alpha_intercept = gamma * beta.intercept;
  fit.alpha_x = gamma * beta.x;
  return fit;
}

PairSet build_pairs(const TrialDataset& data, const BenefitDefinition& benefit,
                    double fraction) {
  data.validate();
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("pair fraction must lie in (0,1]");
  }
  const auto controls = data.arm_indices(0);
  const auto treated = data.arm_indices(1);
  const std::size_t total = controls.size() * treated.size();
  const auto keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(total)));
  if (keep == 0) throw ValidationError("pair fraction yields zero pairs");

  // Unit-variance scaling per covariate for the distance; constant columns
  // carry no information about closeness and are skipped.
  const Eigen::Index d = data.dim();
  Eigen::VectorXd inv_scale(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double mean = data.x.col(c).mean();
    const double ss = (data.x.col(c).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(data.n() - 1));
    inv_scale[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? 1.0 / sd : 0.0;
  }

  PairSet set;
  set.fraction_kept = fraction;
  set.pairs.reserve(total);
  for (const Eigen::Index i : controls) {
    for (const Eigen::Index j : treated) {
      double dist2 = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double gap = (data.x(j, c) - data.x(i, c)) * inv_scale[c];
        dist2 += gap * gap;
      }
      set.pairs.push_back({i, j, std::sqrt(dist2),
                           evaluate_benefit(data.outcome[i], data.outcome[j],
                                            benefit)});
    }
  }
  if (keep < total) {
    std::nth_element(set.pairs.begin(), set.pairs.begin() + keep - 1,
                     set.pairs.end(), pair_less);
    set.pairs.resize(keep);
  }
  std::sort(set.pairs.begin(), set.pairs.end(), pair_less);
  return set;
}

DirectCoefficients fit_direct(const PairSet& pairs, const TrialDataset& data,
                              const LinkFamily& link) {
  if (pairs.pairs.empty()) throw ValidationError("empty pair set");
  const Eigen::Index d = data.dim();
  const auto m = static_cast<Eigen::Index>(pairs.pairs.size());

  Eigen::MatrixXd design(m, 1 + 2 * d);
  Eigen::VectorXd response(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const SubjectPair& p = pairs.pairs[static_cast<std::size_t>(r)];
    design(r, 0) = 1.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      design(r, 1 + c) = 0.5 * (data.x(p.control, c) + data.x(p.treated, c));
      design(r, 1 + d + c) = data.x(p.treated, c) - data.x(p.control, c);
    }
    response[r] = static_cast<double>(p.benefit);
  }

  const Eigen::VectorXd solution = solve_estimating_equation(design, response, link);
  DirectCoefficients beta;
  beta.intercept = solution[0];
  beta.x = solution.segment(1, d);
  beta.dx = solution.segment(1 + d, d);
  return beta;
}

double direct_pi_x(const DirectBenefitFit& fit, const Eigen::VectorXd& x) {
  if (!(fit.gamma > kGammaLowerBound)) {
    throw ValidationError(
        "gamma below identifiability bound: gamma must exceed 2^{-1/2}");
  }
  if (x.size() != fit.alpha_x.size()) {
    throw ValidationError("covariate vector length mismatch");
  }
  double eta = fit.alpha_intercept;
  for (Eigen::Index c = 0; c < x.size(); ++c) eta += fit.alpha_x[c] * x[c];
  return fit.link == LinkKind::logit ? sigmoid(eta) : norm_cdf(eta);
}

}  // namespace benefitmark
