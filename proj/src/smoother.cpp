#include "benefitmark/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "benefitmark/errors.hpp"
#include "benefitmark/rng.hpp"

namespace benefitmark {

namespace {

std::vector<double> distinct_sorted(const Eigen::VectorXd& values) {
  std::vector<double> out(values.data(), values.data() + values.size());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct KernelAverage {
  double value;
  bool fallback;
};

// Weighted average of vals with Gaussian kernel weights in (zs - z)/lambda,
// centered at the nearest subject's value. Centering keeps the average exact
// for constant vals and returns the nearest value when every weight
// underflows.
KernelAverage kernel_average(std::span<const double> zs,
                             std::span<const double> vals, double z,
                             double lambda) {
  std::size_t nearest = 0;
  double nearest_gap = std::abs(zs[0] - z);
  for (std::size_t j = 1; j < zs.size(); ++j) {
    const double gap = std::abs(zs[j] - z);
    if (gap < nearest_gap) {
      nearest_gap = gap;
      nearest = j;
    }
  }
  const double ref = vals[nearest];
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < zs.size(); ++j) {
    const double t = (zs[j] - z) / lambda;
    const double w = std::exp(-0.5 * t * t);
    num += w * (vals[j] - ref);
    den += w;
  }
  if (den < 1e-300) return {ref, true};
  return {ref + num / den, false};
}

}  // namespace

double MarkerCurve::pi_at(double z0) const {
  const auto it = std::lower_bound(z.begin(), z.end(), z0);
  if (it == z.end() || *it != z0) {
    throw ValidationError("marker value not on the fitted curve");
  }
  return pi[static_cast<std::size_t>(it - z.begin())];
}

MarkerCurve smooth_pi_z(const TrialDataset& data, const PiXEvaluator& surface,
                        double bandwidth) {
  if (data.marker_kind != MarkerKind::continuous) {
    throw ValidationError("kernel smoothing applies to continuous markers");
  }
  if (!(bandwidth > 0.0)) throw ValidationError("bandwidth must be positive");

  const Eigen::Index n = data.n();
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  std::vector<double> zs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) zs[static_cast<std::size_t>(i)] = data.z(i);

  MarkerCurve curve;
  curve.marker_kind = MarkerKind::continuous;
  curve.bandwidth = bandwidth;
  curve.z = distinct_sorted(data.x.col(0));
  curve.pi.resize(curve.z.size());

  std::vector<double> vals(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < curve.z.size(); ++k) {
    surface.at_many(curve.z[k], rows, vals);
    const auto avg = kernel_average(zs, vals, curve.z[k], bandwidth);
    curve.pi[k] = avg.value;
    curve.underflow_fallbacks += avg.fallback ? 1 : 0;
  }
  return curve;
}

MarkerCurve binary_pi_z(const TrialDataset& data, const PiXEvaluator& surface) {
  if (data.marker_kind != MarkerKind::binary) {
    throw ValidationError("grouped estimate applies to binary markers");
  }
  const Eigen::Index n = data.n();
  double sum[2] = {0.0, 0.0};
  Eigen::Index count[2] = {0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int group = data.z(i) == 1.0 ? 1 : 0;
    sum[group] += surface.at(static_cast<double>(group), i);
    count[group] += 1;
  }
  if (count[0] == 0 || count[1] == 0) throw DegenerateError("empty marker group");

  MarkerCurve curve;
  curve.marker_kind = MarkerKind::binary;
  curve.z = {0.0, 1.0};
  curve.pi = {sum[0] / static_cast<double>(count[0]),
              sum[1] / static_cast<double>(count[1])};
  curve.tau = static_cast<double>(count[1]) / static_cast<double>(n);
  return curve;
}

std::vector<double> bandwidth_grid(const TrialDataset& data, int lo_exponent,
                                   int hi_exponent) {
  if (lo_exponent > hi_exponent) throw ValidationError("empty bandwidth range");
  const Eigen::Index n = data.n();
  const double mean = data.x.col(0).mean();
  const double ss = (data.x.col(0).array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw ValidationError("marker has zero variance");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(hi_exponent - lo_exponent + 1));
  for (int l = lo_exponent; l <= hi_exponent; ++l) grid.push_back(std::ldexp(sd, l));
  return grid;
}

double select_bandwidth(const TrialDataset& data, const PiXEvaluator& surface,
                        std::span<const double> grid, double split_fraction,
                        std::uint64_t seed) {
  if (grid.empty()) throw ValidationError("empty bandwidth grid");
  for (double lambda : grid) {
    if (!(lambda > 0.0)) throw ValidationError("bandwidth must be positive");
  }
  const Eigen::Index n = data.n();
  const auto n_train = static_cast<Eigen::Index>(
      std::llround(split_fraction * static_cast<double>(n)));
  if (n_train < 2 || n - n_train < 2) {
    throw DegenerateError("degenerate split: need at least two subjects per side");
  }

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  std::vector<Eigen::Index> train(perm.begin(), perm.begin() + n_train);
  std::vector<Eigen::Index> valid(perm.begin() + n_train, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());

  std::vector<double> train_z(train.size());
  for (std::size_t j = 0; j < train.size(); ++j) train_z[j] = data.z(train[j]);

  // Validation subjects grouped by distinct marker value, so the surface is
  // batch-evaluated once per (value, training set) and reused for every
  // bandwidth.
  std::vector<std::pair<double, Eigen::Index>> valid_by_z;
  valid_by_z.reserve(valid.size());
  for (Eigen::Index i : valid) valid_by_z.emplace_back(data.z(i), i);
  std::sort(valid_by_z.begin(), valid_by_z.end());

  std::vector<double> score(grid.size(), 0.0);
  std::vector<double> vals(train.size());
  std::size_t k = 0;
  while (k < valid_by_z.size()) {
    const double z0 = valid_by_z[k].first;
    std::size_t end = k;
    while (end < valid_by_z.size() && valid_by_z[end].first == z0) ++end;

    surface.at_many(z0, train, vals);
    std::vector<double> targets(end - k);
    for (std::size_t m = k; m < end; ++m) {
      targets[m - k] = surface.at(z0, valid_by_z[m].second);
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double predicted = kernel_average(train_z, vals, z0, grid[g]).value;
      for (const double target : targets) {
        const double gap = target - predicted;
        score[g] += gap * gap;
      }
    }
    k = end;
  }

  double best_lambda = grid[0];
  double best_score = score[0];
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (score[g] < best_score ||
        (score[g] == best_score && grid[g] < best_lambda)) {
      best_score = score[g];
      best_lambda = grid[g];
    }
  }
  return best_lambda;
}

}  // namespace benefitmark
