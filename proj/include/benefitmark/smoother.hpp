#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "benefitmark/trial_data.hpp"

namespace benefitmark {

/// Benefit probability as a function of the marker alone, evaluated at the
/// distinct observed marker values.
struct MarkerCurve {
  MarkerKind marker_kind = MarkerKind::continuous;
  std::vector<double> z;   // ascending, one entry per distinct observed value
  std::vector<double> pi;  // pi_Z at each z
  double bandwidth = 0.0;  // continuous markers only
  double tau = 0.0;        // binary markers only: P(Z = 1)
  int underflow_fallbacks = 0;  // evaluation points rescued by the nearest
                                // subject when all kernel weights underflow

  std::size_t size() const { return z.size(); }
  /// pi_Z at an observed marker value; throws if z0 is not a curve point.
  double pi_at(double z0) const;
};

/// Fitted benefit surface pi_X(x) exposed to the smoother. `at(z, row)`
/// evaluates the surface with the marker component replaced by z and the
/// remaining covariates taken from the given subject row.
class PiXEvaluator {
 public:
  virtual ~PiXEvaluator() = default;
  virtual double at(double z, Eigen::Index row) const = 0;
  /// Batch evaluation at one marker value over many subjects; the default
  /// forwards to `at`, implementations may precompute per-subject offsets.
  virtual void at_many(double z, std::span<const Eigen::Index> rows,
                       std::span<double> out) const {
    for (std::size_t k = 0; k < rows.size(); ++k) out[k] = at(z, rows[k]);
  }
};

/// Nadaraya-Watson estimate of pi_Z on the distinct observed marker values,
/// with a Gaussian kernel over the marker and the full sample's covariates:
/// pi_Z(z) = sum_i K((Z_i - z)/h) pi_X(z, W_i) / sum_i K((Z_i - z)/h).
MarkerCurve smooth_pi_z(const TrialDataset& data, const PiXEvaluator& surface,
                        double bandwidth);

/// Exact grouped estimate for a binary marker, plus tau = mean(Z).
MarkerCurve binary_pi_z(const TrialDataset& data, const PiXEvaluator& surface);

/// Bandwidth grid {2^l * sd(Z) : l = lo..hi}.
std::vector<double> bandwidth_grid(const TrialDataset& data, int lo_exponent,
                                   int hi_exponent);

/// Single-split cross-validation over the given bandwidth grid: smooth on the
/// training half, predict pi_Z at the validation subjects' marker values, and
/// score the mean squared gap to their fitted pi_X. Ties take the smaller
/// bandwidth. Deterministic given (data, grid, seed).
double select_bandwidth(const TrialDataset& data, const PiXEvaluator& surface,
                        std::span<const double> grid, double split_fraction,
                        std::uint64_t seed);

}  // namespace benefitmark
