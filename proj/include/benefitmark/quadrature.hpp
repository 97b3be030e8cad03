#pragma once

#include <Eigen/Core>

namespace benefitmark {

/// Gauss-Hermite rule rewritten for standard-normal expectations:
///   integral g(u) phi(u) du  ~=  sum_k weights[k] * g(nodes[k]).
/// Nodes are ascending and symmetric about zero; weights sum to one.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Builds an n-point rule via the Golub-Welsch eigenvalue method.
/// Throws ValidationError for n < 1.
GaussHermiteRule gauss_hermite(int n);

}  // namespace benefitmark
