#include "benefitmark/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "benefitmark/errors.hpp"

namespace benefitmark {

double StepCdf::operator()(double z0) const {
  const auto it = std::upper_bound(z.begin(), z.end(), z0);
  if (it == z.begin()) return 0.0;
  return f[static_cast<std::size_t>(it - z.begin()) - 1];
}

BinaryRates binary_rates(const MarkerCurve& curve) {
  if (curve.marker_kind != MarkerKind::binary || curve.size() != 2) {
    throw ValidationError("binary rates require a binary marker curve");
  }
  const double pi0 = curve.pi[0];
  const double pi1 = curve.pi[1];
  const double tau = curve.tau;
  const double benefit_mass = tau * pi1 + (1.0 - tau) * pi0;
  const double nonbenefit_mass = tau * (1.0 - pi1) + (1.0 - tau) * (1.0 - pi0);
  if (benefit_mass <= 0.0) {
    throw DegenerateError("no estimated benefit mass: TPR undefined");
  }
  if (nonbenefit_mass <= 0.0) {
    throw DegenerateError("no estimated non-benefit mass: FPR undefined");
  }
  return {tau * pi1 / benefit_mass, tau * (1.0 - pi1) / nonbenefit_mass};
}

std::pair<StepCdf, StepCdf> conditional_cdfs(const TrialDataset& data,
                                             const MarkerCurve& curve) {
  if (curve.marker_kind != MarkerKind::continuous) {
    throw ValidationError("conditional CDFs require a continuous marker curve");
  }
  // One jump per distinct observed value; subjects with tied markers pool
  // their weights into that jump.
  std::vector<double> w1(curve.size(), 0.0), w0(curve.size(), 0.0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double z0 = data.z(i);
    const auto it = std::lower_bound(curve.z.begin(), curve.z.end(), z0);
    if (it == curve.z.end() || *it != z0) {
      throw ValidationError("marker value missing from the fitted curve");
    }
    const auto k = static_cast<std::size_t>(it - curve.z.begin());
    w1[k] += curve.pi[k];
    w0[k] += 1.0 - curve.pi[k];
  }
  double total1 = 0.0, total0 = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    total1 += w1[k];
    total0 += w0[k];
  }
  if (total1 <= 0.0) throw DegenerateError("no estimated benefit mass");
  if (total0 <= 0.0) throw DegenerateError("no estimated non-benefit mass");

  StepCdf f1, f0;
  f1.z = curve.z;
  f0.z = curve.z;
  f1.f.resize(curve.size());
  f0.f.resize(curve.size());
  double c1 = 0.0, c0 = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    c1 += w1[k];
    c0 += w0[k];
    f1.f[k] = c1 / total1;
    f0.f[k] = c0 / total0;
  }
  return {f1, f0};
}

RocCurve roc_from_cdfs(const StepCdf& f1, const StepCdf& f0) {
  if (f1.z != f0.z || f1.z.empty()) {
    throw ValidationError("conditional CDFs must share their jump points");
  }
  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  for (std::size_t k = f1.z.size(); k-- > 0;) {
    const RocPoint p{1.0 - f0.f[k], 1.0 - f1.f[k]};
    const RocPoint& last = curve.points.back();
    if (p.fpr != last.fpr || p.tpr != last.tpr) curve.points.push_back(p);
  }
  if (curve.points.back().fpr != 1.0 || curve.points.back().tpr != 1.0) {
    curve.points.push_back({1.0, 1.0});
  }
  curve.auc = auc(curve);
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    area += (b.fpr - a.fpr) * (b.tpr + a.tpr) * 0.5;
  }
  return area;
}

}  // namespace benefitmark
