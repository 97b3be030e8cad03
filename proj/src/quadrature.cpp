#include "benefitmark/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "benefitmark/errors.hpp"

namespace benefitmark {

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw ValidationError("quadrature needs at least one node");

  // Jacobi matrix of the (physicists') Hermite recurrence: zero diagonal,
  // off-diagonal sqrt(k/2). Eigenvalues are the nodes; the squared first
  // eigenvector components give the weights up to the total mass sqrt(pi),
  // which cancels when normalizing to a probabilist rule.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);

  GaussHermiteRule rule;
  rule.nodes = std::sqrt(2.0) * solver.eigenvalues();
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = solver.eigenvectors()(0, k);
    rule.weights[k] = v0 * v0;
  }
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace benefitmark
