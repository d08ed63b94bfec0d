#include "wrl/measures.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace wrl {

CostKind cost_kind_from_string(const std::string& name) {
  if (name == "euclidean") return CostKind::Euclidean;
  if (name == "sqeuclidean") return CostKind::SquaredEuclidean;
  if (name == "l1") return CostKind::L1;
  throw std::invalid_argument("unknown cost kind: " + name);
}

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::Euclidean: return "euclidean";
    case CostKind::SquaredEuclidean: return "sqeuclidean";
    case CostKind::L1: return "l1";
  }
  return "?";
}

double ground_cost(const Point& x, const Point& y, CostKind kind) {
  if (x.size() != y.size())
    throw std::invalid_argument("ground_cost: dimension mismatch");
  switch (kind) {
    case CostKind::Euclidean: return (x - y).norm();
    case CostKind::SquaredEuclidean: return (x - y).squaredNorm();
    case CostKind::L1: return (x - y).lpNorm<1>();
  }
  return 0.0;
}

DiscreteMeasure::DiscreteMeasure(std::vector<Point> atoms, Vector weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty() || static_cast<Eigen::Index>(atoms_.size()) != weights_.size())
    throw std::invalid_argument("DiscreteMeasure: atoms and weights must have equal length >= 1");
  const Eigen::Index d = atoms_.front().size();
  if (d < 1) throw std::invalid_argument("DiscreteMeasure: atom dimension must be >= 1");
  for (const Point& a : atoms_) {
    if (a.size() != d) throw std::invalid_argument("DiscreteMeasure: mixed atom dimensions");
    if (!a.allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite atom coordinates");
  }
  if (!weights_.allFinite() || weights_.minCoeff() < 0.0)
    throw std::invalid_argument("DiscreteMeasure: weights must be finite and non-negative");
  const double total = weights_.sum();
  if (total <= 0.0)
    throw std::invalid_argument("DiscreteMeasure: weights must have positive total mass");
  weights_ /= total;
}

DiscreteMeasure DiscreteMeasure::dirac(Point atom) {
  Vector w(1);
  w << 1.0;
  return DiscreteMeasure({std::move(atom)}, w);
}

CostMatrix::CostMatrix(Matrix m) : entries(std::move(m)) {
  if (!entries.allFinite() || entries.minCoeff() < 0.0)
    throw std::invalid_argument("CostMatrix: entries must be finite and non-negative");
}

Coupling::Coupling(Matrix m) : mass(std::move(m)) {
  if (!mass.allFinite() || mass.minCoeff() < 0.0)
    throw std::invalid_argument("Coupling: entries must be finite and non-negative");
  if (std::abs(mass.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("Coupling: total mass must be 1 within 1e-9");
}

CostMatrix build_cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             CostKind kind) {
  Matrix c(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = 0; j < nu.size(); ++j)
      c(i, j) = ground_cost(mu.atoms()[i], nu.atoms()[j], kind);
  return CostMatrix(std::move(c));
}

bool check_marginals(const Coupling& kappa, const DiscreteMeasure& mu,
                     const DiscreteMeasure& nu, double tol) {
  if (kappa.mass.rows() != mu.size() || kappa.mass.cols() != nu.size())
    throw std::invalid_argument("check_marginals: shape mismatch");
  const double row_dev = (kappa.mass.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff();
  const double col_dev =
      (kappa.mass.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff();
  return row_dev <= tol && col_dev <= tol;
}

DiscreteMeasure empirical_measure(const std::vector<Point>& points) {
  if (points.empty()) throw std::invalid_argument("empirical_measure: empty input");
  struct LexLess {
    bool operator()(const Point& a, const Point& b) const {
      if (a.size() != b.size()) return a.size() < b.size();
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (a(i) > b(i)) return false;
      }
      return false;
    }
  };
  std::map<Point, Eigen::Index, LexLess> index;
  std::vector<Point> atoms;
  std::vector<double> counts;
  for (const Point& p : points) {
    auto [it, inserted] = index.try_emplace(p, static_cast<Eigen::Index>(atoms.size()));
    if (inserted) {
      atoms.push_back(p);
      counts.push_back(0.0);
    }
    counts[static_cast<std::size_t>(it->second)] += 1.0;
  }
  Vector w = Eigen::Map<Vector>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

double entropy(const Vector& weights) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights(i) > 0.0) h -= weights(i) * std::log(weights(i));
  return h;
}

}  // namespace wrl
