#pragma once

#include <vector>

#include "benefitmark/smoother.hpp"
#include "benefitmark/trial_data.hpp"

namespace benefitmark {

struct RocPoint {
  double fpr;
  double tpr;
};

/// ROC curve as a list of (fpr, tpr) points from (0,0) to (1,1), both
/// coordinates nondecreasing, with the trapezoidal area attached.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

struct BinaryRates {
  double tpr;
  double fpr;
};

/// Right-continuous step CDF with jumps at the distinct observed values.
struct StepCdf {
  std::vector<double> z;  // ascending
  std::vector<double> f;  // cumulative value at each z

  double operator()(double z0) const;
};

/// Plug-in TPR/FPR for a binary marker from pi_Z(0), pi_Z(1), and tau.
/// Throws DegenerateError when a denominator vanishes (no benefit mass for
/// TPR, or no non-benefit mass for FPR).
BinaryRates binary_rates(const MarkerCurve& curve);

/// Weighted conditional CDFs of Z given benefit status: F1 weights each
/// observation by pi_Z(Z_i), F0 by 1 - pi_Z(Z_i); tied marker values share a
/// single jump.
std::pair<StepCdf, StepCdf> conditional_cdfs(const TrialDataset& data,
                                             const MarkerCurve& curve);

/// ROC curve traced at the distinct observed thresholds: one point
/// (1 - F0(z), 1 - F1(z)) per threshold plus the (0,0) and (1,1) endpoints.
RocCurve roc_from_cdfs(const StepCdf& f1, const StepCdf& f0);

/// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

/// Signed difference auc_a - auc_b, full precision.
inline double compare_aucs(double auc_a, double auc_b) { return auc_a - auc_b; }

}  // namespace benefitmark
