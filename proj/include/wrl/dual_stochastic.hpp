#pragma once

#include "wrl/measures.hpp"

#include <cstdint>
#include <vector>

namespace wrl {

// Every exp() in this module clamps its argument to [-30, 30]; clamp events
// are counted here and surfaced through trainer diagnostics.
struct ExpClampStats {
  long long high = 0;
  long long low = 0;
  long long total() const { return high + low; }
};

double clamped_exp(double arg, ExpClampStats* stats = nullptr);

enum class KernelKind { Gaussian };

struct Kernel {
  KernelKind kind = KernelKind::Gaussian;
  double bandwidth = 1.0;  // sigma, in embedding-space units, > 0
};

// Gaussian: exp(-|x - y|^2 / (2 sigma^2)), in (0, 1], equal to 1 at x = y.
double kernel_eval(const Kernel& k, const Point& x, const Point& y);

// Median pairwise distance over (at most max_points of) the given points.
// Falls back to 1 when every distance is zero.
double median_heuristic_bandwidth(const std::vector<Point>& points,
                                  std::size_t max_points = 100);

// Kernel expansion sum_i alpha_i k(., x_i) representing a dual test
// function. Grows by one term per append; past `cap` terms the smallest-|alpha|
// terms are dropped (greedy pruning), counted in pruned().
class RkhsFunction {
 public:
  explicit RkhsFunction(Kernel kernel, std::size_t cap = 5000);

  double operator()(const Point& x) const;
  void append(Point center, double coefficient);
  void clear();

  const Kernel& kernel() const { return kernel_; }
  std::size_t size() const { return centers_.size(); }
  long long pruned() const { return pruned_; }

 private:
  Kernel kernel_;
  std::size_t cap_;
  std::vector<Point> centers_;
  std::vector<double> coefficients_;
  long long pruned_ = 0;
};

inline double rkhs_eval(const RkhsFunction& f, const Point& x) { return f(x); }

struct DualVectors {
  Vector u, v;
};

struct FOperands {
  double rho = 1.0;  // > 0
  CostKind cost_kind = CostKind::L1;
};

// F(x, y, u, v) = u(x) + v(y) - rho * exp((u(x) + v(y) - c(x, y)) / rho),
// the integrand of the smoothed dual, evaluated at scalar function values.
double f_rho(const Point& x, const Point& y, double u_val, double v_val,
             const FOperands& ops, ExpClampStats* stats = nullptr);

// Dual-ascent coefficient for one sampled pair:
//   clamp(step * (1 - exp((u(x) + v(y) - c(x, y)) / rho)), -radius, +radius).
// The same scalar is appended to both expansions (centers x and y).
double prop2_alpha(double u_prev_at_x, double v_prev_at_y, double c_xy, double rho,
                   double step, double radius, ExpClampStats* stats = nullptr);

// B(u, v) = sum_ij exp((u_i + v_j - c_ij) / rho) together with the row and
// column sums of the exponential matrix; (mu_i - grad_u_i) is then exactly
// the u-gradient of the dual objective <u,mu> + <v,nu> - rho B(u,v).
struct BDual {
  double value = 0.0;
  Vector grad_u;  // row sums
  Vector grad_v;  // column sums
};

BDual b_dual(const DualVectors& uv, const CostMatrix& c, double rho,
             ExpClampStats* stats = nullptr);

// Semi-discrete potential
//   h(x, v) = <v, nu> - rho log sum_j nu_j exp((v_j - c(x, y_j)) / rho),
// computed via log-sum-exp; zero-weight atoms are excluded from the sum.
double semidiscrete_h(const Point& x, const Vector& v, const DiscreteMeasure& nu,
                      double rho, CostKind cost_kind);

// Analytic gradient of h in v: nu - softmax of (v_j - c(x, y_j))/rho over the
// nu-weighted terms. Components for zero-weight atoms are zero.
Vector grad_v_h(const Point& x, const Vector& v, const DiscreteMeasure& nu, double rho,
                CostKind cost_kind);

}  // namespace wrl
