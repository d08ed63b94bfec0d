#include "wrl/entropic_ot.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

namespace wrl {

namespace {

double median_entry(const Matrix& c) {
  std::vector<double> v(c.data(), c.data() + c.size());
  auto mid = v.begin() + v.size() / 2;
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

void require_ot_inputs(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const CostMatrix& c) {
  if (c.entries.rows() != mu.size() || c.entries.cols() != nu.size())
    throw std::invalid_argument("cost matrix shape does not match measure supports");
}

// ---------------------------------------------------------------------------
// Transportation simplex. Only used at oracle scale (<= 8x8), so clarity wins
// over pivot-selection heuristics: Bland's rule on the entering cell, which
// also rules out cycling under degeneracy.
// ---------------------------------------------------------------------------

struct BasisCell {
  int i, j;
  double mass;
};

// North-west corner rule; always yields exactly n + m - 1 cells (zero-mass
// cells mark degeneracy).
std::vector<BasisCell> northwest_corner(Vector a, Vector b) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  std::vector<BasisCell> basis;
  basis.reserve(n + m - 1);
  int i = 0, j = 0;
  while (true) {
    const double x = std::min(a(i), b(j));
    basis.push_back({i, j, x});
    a(i) -= x;
    b(j) -= x;
    if (i == n - 1 && j == m - 1) break;
    if (i < n - 1 && (a(i) < b(j) || j == m - 1))
      ++i;
    else
      ++j;
  }
  return basis;
}

struct SimplexState {
  int n, m;
  std::vector<BasisCell> basis;

  // Tree adjacency over bipartite nodes: rows 0..n-1, cols n..n+m-1.
  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(n + m);
    for (int k = 0; k < static_cast<int>(basis.size()); ++k) {
      adj[basis[k].i].push_back(k);
      adj[n + basis[k].j].push_back(k);
    }
    return adj;
  }

  // Solve p_i + q_j = c_ij over the basis tree, p_0 = 0.
  void potentials(const Matrix& c, Vector& p, Vector& q) const {
    p.setConstant(n, std::numeric_limits<double>::quiet_NaN());
    q.setConstant(m, std::numeric_limits<double>::quiet_NaN());
    auto adj = adjacency();
    std::vector<int> stack{0};
    p(0) = 0.0;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int k : adj[node]) {
        const auto& cell = basis[k];
        if (node < n && std::isnan(q(cell.j))) {
          q(cell.j) = c(cell.i, cell.j) - p(cell.i);
          stack.push_back(n + cell.j);
        } else if (node >= n && std::isnan(p(cell.i))) {
          p(cell.i) = c(cell.i, cell.j) - q(cell.j);
          stack.push_back(cell.i);
        }
      }
    }
  }

  // Unique alternating cycle created by adding cell (ei, ej): path in the
  // basis tree from row ei to col ej, as basis indices.
  std::vector<int> cycle_path(int ei, int ej) const {
    auto adj = adjacency();
    std::vector<int> parent_edge(n + m, -1), parent_node(n + m, -1);
    std::vector<char> seen(n + m, 0);
    std::vector<int> queue{ei};
    seen[ei] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int node = queue[head];
      if (node == n + ej) break;
      for (int k : adj[node]) {
        const int other = node < n ? n + basis[k].j : basis[k].i;
        if (!seen[other]) {
          seen[other] = 1;
          parent_edge[other] = k;
          parent_node[other] = node;
          queue.push_back(other);
        }
      }
    }
    std::vector<int> path;
    for (int node = n + ej; node != ei; node = parent_node[node])
      path.push_back(parent_edge[node]);
    std::reverse(path.begin(), path.end());
    return path;
  }
};

ExactEmdResult transportation_simplex(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const Matrix& c) {
  const int n = static_cast<int>(mu.size()), m = static_cast<int>(nu.size());
  SimplexState state{n, m, northwest_corner(mu.weights(), nu.weights())};
  Vector p(n), q(m);

  const int max_pivots = 100000;
  int pivots = 0;
  for (;; ++pivots) {
    if (pivots > max_pivots)
      throw std::runtime_error("exact_emd: pivot limit exceeded");
    state.potentials(c, p, q);

    // Entering cell: first (row-major) non-basic cell with negative reduced
    // cost (Bland's rule).
    int ei = -1, ej = -1;
    for (int i = 0; i < n && ei < 0; ++i) {
      for (int j = 0; j < m; ++j) {
        if (c(i, j) - p(i) - q(j) < -1e-12) {
          bool in_basis = false;
          for (const auto& cell : state.basis)
            if (cell.i == i && cell.j == j) { in_basis = true; break; }
          if (!in_basis) { ei = i; ej = j; break; }
        }
      }
    }
    if (ei < 0) break;  // optimal

    // Path edges alternate -,+,-,... after the (+) entering edge.
    auto path = state.cycle_path(ei, ej);
    double delta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const double mass = state.basis[path[t]].mass;
      if (mass < delta) { delta = mass; leave = path[t]; }
    }
    for (std::size_t t = 0; t < path.size(); ++t) {
      auto& cell = state.basis[path[t]];
      cell.mass += (t % 2 == 0) ? -delta : delta;
      if (t % 2 == 0) cell.mass = std::max(cell.mass, 0.0);
    }
    state.basis[leave] = {ei, ej, delta};
  }

  Matrix mass = Matrix::Zero(n, m);
  double value = 0.0;
  for (const auto& cell : state.basis) {
    mass(cell.i, cell.j) += cell.mass;
    value += cell.mass * c(cell.i, cell.j);
  }
  return {Coupling(std::move(mass)), value, std::move(p), std::move(q)};
}

}  // namespace

ExactEmdResult exact_emd_full(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const CostMatrix& c) {
  require_ot_inputs(mu, nu, c);
  if (mu.size() > 8 || nu.size() > 8)
    throw std::invalid_argument(
        "exact_emd: supports above 8 atoms per side are out of oracle scale; use sinkhorn()");
  return transportation_simplex(mu, nu, c.entries);
}

std::pair<Coupling, double> exact_emd(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const CostMatrix& c) {
  ExactEmdResult r = exact_emd_full(mu, nu, c);
  return {std::move(r.coupling), r.value};
}

// ---------------------------------------------------------------------------
// Sinkhorn
// ---------------------------------------------------------------------------

namespace {

struct ScalingOutcome {
  Vector u, v;
  Matrix coupling;
  int iterations = 0;
  bool converged = false;
};

double l1_residuals(const Matrix& k, const Vector& mu_w, const Vector& nu_w) {
  const double row = (k.rowwise().sum() - mu_w).cwiseAbs().sum();
  const double col = (k.colwise().sum().transpose() - nu_w).cwiseAbs().sum();
  return std::max(row, col);
}

#ifndef NDEBUG
// Sinkhorn is exact block-coordinate ascent on the dual, so the dual value
// must never decrease between sweeps.
struct DualAscentCheck {
  double last = -std::numeric_limits<double>::infinity();
  void observe(double value) {
    assert(value >= last - 1e-9 && "sinkhorn dual objective decreased");
    last = value;
  }
};
#endif

ScalingOutcome sinkhorn_plain(const Vector& mu_w, const Vector& nu_w, const Matrix& c,
                              const OtConfig& cfg) {
  const Eigen::Index n = mu_w.size(), m = nu_w.size();
  const Matrix gibbs =
      (mu_w * nu_w.transpose()).array() * (-c / cfg.rho).array().exp();
  Vector a = Vector::Ones(n), b = Vector::Ones(m);
  ScalingOutcome out;
#ifndef NDEBUG
  DualAscentCheck ascent;
#endif
  for (out.iterations = 1; out.iterations <= cfg.max_iters; ++out.iterations) {
    a = mu_w.cwiseQuotient(gibbs * b);
    b = nu_w.cwiseQuotient(gibbs.transpose() * a);
    // Scaling vectors beyond ~e^690 mean the potentials have left the range
    // plain scaling can represent, even if no IEEE overflow happened yet.
    if (!a.allFinite() || !b.allFinite() || a.minCoeff() <= 0.0 || b.minCoeff() <= 0.0 ||
        a.maxCoeff() > 1e300 || b.maxCoeff() > 1e300)
      throw std::runtime_error(
          "sinkhorn: numerical overflow in scaling; enable log-domain mode "
          "(OtConfig::log_domain = On)");
    out.coupling = a.asDiagonal() * gibbs * b.asDiagonal();
#ifndef NDEBUG
    ascent.observe(mu_w.dot(cfg.rho * a.array().log().matrix()) +
                   nu_w.dot(cfg.rho * b.array().log().matrix()) +
                   cfg.rho * (1.0 - out.coupling.sum()));
#endif
    if (l1_residuals(out.coupling, mu_w, nu_w) <= cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, cfg.max_iters);
  out.u = cfg.rho * a.array().log();
  out.v = cfg.rho * b.array().log();
  return out;
}

ScalingOutcome sinkhorn_log_domain(const Vector& mu_w, const Vector& nu_w, const Matrix& c,
                                   const OtConfig& cfg) {
  const Eigen::Index n = mu_w.size(), m = nu_w.size();
  const Vector log_mu = mu_w.array().log(), log_nu = nu_w.array().log();
  ScalingOutcome out;
  out.u = Vector::Zero(n);
  out.v = Vector::Zero(m);
#ifndef NDEBUG
  DualAscentCheck ascent;
#endif
  Matrix exponents(n, m);
  Eigen::ArrayXd row(m), col(n);
  for (out.iterations = 1; out.iterations <= cfg.max_iters; ++out.iterations) {
    for (Eigen::Index i = 0; i < n; ++i) {
      row = log_nu.array() + (out.v - c.row(i).transpose()).array() / cfg.rho;
      const double hi = row.maxCoeff();
      out.u(i) = -cfg.rho * (hi + std::log((row - hi).exp().sum()));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      col = log_mu.array() + (out.u - c.col(j)).array() / cfg.rho;
      const double hi = col.maxCoeff();
      out.v(j) = -cfg.rho * (hi + std::log((col - hi).exp().sum()));
    }
    exponents = ((out.u * Vector::Ones(m).transpose() + Vector::Ones(n) * out.v.transpose() - c) /
                 cfg.rho);
    exponents.colwise() += log_mu;
    exponents.rowwise() += log_nu.transpose();
    out.coupling = exponents.array().exp();
#ifndef NDEBUG
    ascent.observe(mu_w.dot(out.u) + nu_w.dot(out.v) + cfg.rho * (1.0 - out.coupling.sum()));
#endif
    if (l1_residuals(out.coupling, mu_w, nu_w) <= cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, cfg.max_iters);
  return out;
}

}  // namespace

SinkhornResult sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const CostMatrix& c, const OtConfig& cfg) {
  require_ot_inputs(mu, nu, c);
  if (cfg.rho <= 0.0) throw std::invalid_argument("sinkhorn: rho must be > 0");
  if (cfg.tol <= 0.0 || cfg.max_iters < 1)
    throw std::invalid_argument("sinkhorn: tol must be > 0 and max_iters >= 1");
  if (mu.weights().minCoeff() <= 0.0 || nu.weights().minCoeff() <= 0.0)
    throw std::invalid_argument(
        "sinkhorn: weights must be strictly positive (floor zero-weight atoms first)");

  const bool log_domain = cfg.log_domain == LogDomainMode::On ||
                          (cfg.log_domain == LogDomainMode::Auto &&
                           cfg.rho < 0.05 * median_entry(c.entries));
  ScalingOutcome out = log_domain ? sinkhorn_log_domain(mu.weights(), nu.weights(), c.entries, cfg)
                                  : sinkhorn_plain(mu.weights(), nu.weights(), c.entries, cfg);

  // The converged iterate satisfies the marginals to cfg.tol but its total
  // mass is only that accurate; rescale so the Coupling invariant holds.
  out.coupling /= out.coupling.sum();
  SinkhornResult result{Coupling(std::move(out.coupling)), std::move(out.u), std::move(out.v),
                        0.0, out.iterations, out.converged};
  result.primal_value = entropic_value(result.coupling, c, cfg.rho, cfg.convention);
  return result;
}

double entropic_value(const Coupling& kappa, const CostMatrix& c, double rho,
                      ValueConvention convention) {
  const Matrix& k = kappa.mass;
  if (k.rows() != c.entries.rows() || k.cols() != c.entries.cols())
    throw std::invalid_argument("entropic_value: shape mismatch");
  const double transport = (k.array() * c.entries.array()).sum();
  if (convention == ValueConvention::EntropyH) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      for (Eigen::Index j = 0; j < k.cols(); ++j)
        if (k(i, j) > 0.0) h -= k(i, j) * std::log(k(i, j));
    return transport - rho * h;
  }
  const Vector row = k.rowwise().sum();
  const Vector col = k.colwise().sum();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      if (k(i, j) > 0.0) kl += k(i, j) * std::log(k(i, j) / (row(i) * col(j)));
  return transport + rho * kl;
}

Vector grad_wrt_left_marginal(const SinkhornResult& result) {
  if (!result.converged)
    throw std::invalid_argument("grad_wrt_left_marginal: solver did not converge");
  return result.dual_u.array() - result.dual_u.mean();
}

double dual_objective(const Vector& u, const Vector& v, const DiscreteMeasure& mu,
                      const DiscreteMeasure& nu, const CostMatrix& c, double rho,
                      ValueConvention convention) {
  if (u.size() != mu.size() || v.size() != nu.size())
    throw std::invalid_argument("dual_objective: potential lengths do not match supports");
  Matrix exponents = (u * Vector::Ones(v.size()).transpose() +
                      Vector::Ones(u.size()) * v.transpose() - c.entries) /
                     rho;
  if (convention == ValueConvention::KlProduct) {
    exponents.colwise() += mu.weights().array().log().matrix();
    exponents.rowwise() += nu.weights().array().log().matrix().transpose();
  }
  const double hi = exponents.maxCoeff();
  const double total = std::exp(hi) * (exponents.array() - hi).exp().sum();
  return mu.weights().dot(u) + nu.weights().dot(v) + rho * (1.0 - total);
}

std::pair<Vector, Vector> entropy_form_potentials(const Vector& u, const Vector& v,
                                                  const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu, double rho) {
  return {u + rho * mu.weights().array().log().matrix(),
          v + rho * nu.weights().array().log().matrix()};
}

}  // namespace wrl
