#pragma once

#include "wrl/types.hpp"

#include <vector>

namespace wrl {

// Ground metric d(x, y) on the embedding space.
//   Euclidean         sqrt(sum (x_i - y_i)^2)
//   SquaredEuclidean  sum (x_i - y_i)^2
//   L1                sum |x_i - y_i|
// Throws std::invalid_argument on dimension mismatch.
double ground_cost(const Point& x, const Point& y, CostKind kind);

// Weighted atoms over points of a metric space. Weights are normalised to
// sum 1 on construction; construction rejects negative, non-finite or
// all-zero weights, so every instance is a probability measure.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Point> atoms, Vector weights);

  static DiscreteMeasure dirac(Point atom);

  const std::vector<Point>& atoms() const { return atoms_; }
  const Vector& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }
  Eigen::Index dim() const { return atoms_.empty() ? 0 : atoms_.front().size(); }

 private:
  std::vector<Point> atoms_;
  Vector weights_;
};

// Pairwise transport costs between two supports. Entries must be
// non-negative and finite.
struct CostMatrix {
  Matrix entries;
  explicit CostMatrix(Matrix m);
};

// Joint mass matrix over two supports. Entries non-negative, total mass 1
// within 1e-9. Marginal agreement is a property of the pair (coupling,
// measures) and is checked separately by check_marginals.
struct Coupling {
  Matrix mass;
  explicit Coupling(Matrix m);
};

CostMatrix build_cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             CostKind kind);

// True iff the max row-sum deviation from mu and max column-sum deviation
// from nu are both <= tol. Throws on shape mismatch.
bool check_marginals(const Coupling& kappa, const DiscreteMeasure& mu,
                     const DiscreteMeasure& nu, double tol);

// Relative frequencies over the distinct points (exact coordinate match).
// Atom order is first occurrence. Throws on empty input.
DiscreteMeasure empirical_measure(const std::vector<Point>& points);

// Shannon entropy -sum w log w with 0 log 0 = 0.
double entropy(const Vector& weights);

}  // namespace wrl
