#include "wrl/dual_stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wrl {

double clamped_exp(double arg, ExpClampStats* stats) {
  if (arg > 30.0) {
    if (stats) ++stats->high;
    arg = 30.0;
  } else if (arg < -30.0) {
    if (stats) ++stats->low;
    arg = -30.0;
  }
  return std::exp(arg);
}

double kernel_eval(const Kernel& k, const Point& x, const Point& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  if (k.bandwidth <= 0.0) throw std::invalid_argument("kernel_eval: bandwidth must be > 0");
  return std::exp(-(x - y).squaredNorm() / (2.0 * k.bandwidth * k.bandwidth));
}

double median_heuristic_bandwidth(const std::vector<Point>& points, std::size_t max_points) {
  const std::size_t n = std::min(points.size(), max_points);
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dists.push_back((points[i] - points[j]).norm());
  if (dists.empty()) return 1.0;
  auto mid = dists.begin() + dists.size() / 2;
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid > 0.0 ? *mid : 1.0;
}

RkhsFunction::RkhsFunction(Kernel kernel, std::size_t cap) : kernel_(kernel), cap_(cap) {
  if (cap_ < 1) throw std::invalid_argument("RkhsFunction: cap must be >= 1");
}

double RkhsFunction::operator()(const Point& x) const {
  double value = 0.0;
  for (std::size_t i = 0; i < centers_.size(); ++i)
    value += coefficients_[i] * kernel_eval(kernel_, x, centers_[i]);
  return value;
}

void RkhsFunction::append(Point center, double coefficient) {
  centers_.push_back(std::move(center));
  coefficients_.push_back(coefficient);
  if (centers_.size() <= cap_) return;
  // Drop the smallest-|alpha| term. O(k), but only runs once per append
  // beyond the cap.
  std::size_t drop = 0;
  for (std::size_t i = 1; i < coefficients_.size(); ++i)
    if (std::abs(coefficients_[i]) < std::abs(coefficients_[drop])) drop = i;
  centers_.erase(centers_.begin() + static_cast<std::ptrdiff_t>(drop));
  coefficients_.erase(coefficients_.begin() + static_cast<std::ptrdiff_t>(drop));
  ++pruned_;
}

void RkhsFunction::clear() {
  centers_.clear();
  coefficients_.clear();
}

double f_rho(const Point& x, const Point& y, double u_val, double v_val,
             const FOperands& ops, ExpClampStats* stats) {
  if (ops.rho <= 0.0) throw std::invalid_argument("f_rho: rho must be > 0");
  const double c = ground_cost(x, y, ops.cost_kind);
  return u_val + v_val - ops.rho * clamped_exp((u_val + v_val - c) / ops.rho, stats);
}

double prop2_alpha(double u_prev_at_x, double v_prev_at_y, double c_xy, double rho,
                   double step, double radius, ExpClampStats* stats) {
  if (step <= 0.0 || radius <= 0.0)
    throw std::invalid_argument("prop2_alpha: step and radius must be > 0");
  const double raw =
      step * (1.0 - clamped_exp((u_prev_at_x + v_prev_at_y - c_xy) / rho, stats));
  return std::clamp(raw, -radius, radius);
}

BDual b_dual(const DualVectors& uv, const CostMatrix& c, double rho, ExpClampStats* stats) {
  if (uv.u.size() != c.entries.rows() || uv.v.size() != c.entries.cols())
    throw std::invalid_argument("b_dual: shape mismatch");
  BDual out;
  out.grad_u = Vector::Zero(uv.u.size());
  out.grad_v = Vector::Zero(uv.v.size());
  for (Eigen::Index i = 0; i < uv.u.size(); ++i) {
    for (Eigen::Index j = 0; j < uv.v.size(); ++j) {
      const double e = clamped_exp((uv.u(i) + uv.v(j) - c.entries(i, j)) / rho, stats);
      out.grad_u(i) += e;
      out.grad_v(j) += e;
    }
  }
  out.value = out.grad_u.sum();
  return out;
}

namespace {

// Shared log-sum-exp over the nu-weighted terms; returns (lse, weights) where
// weights are the softmax masses (zero for zero-weight atoms).
double weighted_lse(const Point& x, const Vector& v, const DiscreteMeasure& nu, double rho,
                    CostKind cost_kind, Vector* softmax) {
  if (v.size() != nu.size())
    throw std::invalid_argument("semidiscrete_h: v length must match nu support");
  if (rho <= 0.0) throw std::invalid_argument("semidiscrete_h: rho must be > 0");
  const Eigen::Index m = nu.size();
  Vector exponent(m);
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (nu.weights()(j) <= 0.0) {
      exponent(j) = -std::numeric_limits<double>::infinity();
      continue;
    }
    exponent(j) = std::log(nu.weights()(j)) +
                  (v(j) - ground_cost(x, nu.atoms()[j], cost_kind)) / rho;
    hi = std::max(hi, exponent(j));
  }
  double total = 0.0;
  Vector w = Vector::Zero(m);
  for (Eigen::Index j = 0; j < m; ++j)
    if (nu.weights()(j) > 0.0) {
      w(j) = std::exp(exponent(j) - hi);
      total += w(j);
    }
  if (softmax) *softmax = w / total;
  return hi + std::log(total);
}

}  // namespace

double semidiscrete_h(const Point& x, const Vector& v, const DiscreteMeasure& nu,
                      double rho, CostKind cost_kind) {
  return nu.weights().dot(v) - rho * weighted_lse(x, v, nu, rho, cost_kind, nullptr);
}

Vector grad_v_h(const Point& x, const Vector& v, const DiscreteMeasure& nu, double rho,
                CostKind cost_kind) {
  Vector softmax;
  weighted_lse(x, v, nu, rho, cost_kind, &softmax);
  return nu.weights() - softmax;
}

}  // namespace wrl
