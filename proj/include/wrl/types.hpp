#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A point of the embedding space M. Dimension is fixed per measure, not globally.
using Point = Eigen::VectorXd;

enum class CostKind { Euclidean, SquaredEuclidean, L1 };

CostKind cost_kind_from_string(const std::string& name);
std::string to_string(CostKind kind);

inline Point point1(double x) {
  Point p(1);
  p << x;
  return p;
}

inline Point point2(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

}  // namespace wrl
