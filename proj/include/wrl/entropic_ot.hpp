#pragma once

#include "wrl/measures.hpp"

#include <utility>

namespace wrl {

// Which objective the reported value refers to. Both conventions share the
// same minimising coupling for fixed marginals; they differ by the constant
// rho * (H(mu) + H(nu)).
//   EntropyH    <kappa, C> - rho * H(kappa)
//   KlProduct   <kappa, C> + rho * KL(kappa || mu (x) nu)
enum class ValueConvention { EntropyH, KlProduct };

enum class LogDomainMode { Auto, On, Off };

struct OtConfig {
  double rho = 1.0;       // entropy regularisation, > 0
  int max_iters = 10000;  // full scaling sweeps
  double tol = 1e-8;      // L1 marginal residual threshold
  ValueConvention convention = ValueConvention::EntropyH;
  // Auto switches to log-domain scaling when rho < 0.05 * median(C).
  LogDomainMode log_domain = LogDomainMode::Auto;
};

// Converged output of sinkhorn(). The potentials reconstruct the coupling as
//   kappa_ij = mu_i * nu_j * exp((u_i + v_j - c_ij) / rho)
// and primal_value is the coupling's objective under the configured
// convention (recomputable via entropic_value).
struct SinkhornResult {
  Coupling coupling;
  Vector dual_u;
  Vector dual_v;
  double primal_value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Exact (unregularised) optimal transport for small supports, solved with
// the transportation simplex. Returns the optimal coupling and its cost.
// Intended as an oracle: supports above 8 atoms per side are rejected with
// an error that points at sinkhorn().
std::pair<Coupling, double> exact_emd(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const CostMatrix& c);

// exact_emd plus the optimal basis potentials (LP dual variables, row
// potential gauge-fixed to p_0 = 0).
struct ExactEmdResult {
  Coupling coupling;
  double value = 0.0;
  Vector potential_u;
  Vector potential_v;
};
ExactEmdResult exact_emd_full(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const CostMatrix& c);

// Alternating marginal-scaling iterations until both L1 marginal residuals
// fall below cfg.tol or cfg.max_iters is reached. Plain scaling overflow
// raises std::runtime_error suggesting log-domain mode; log-domain scaling
// is auto-enabled for small rho (see OtConfig).
SinkhornResult sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const CostMatrix& c, const OtConfig& cfg);

// Objective value of a coupling under the given convention. KlProduct reads
// the marginals off the coupling itself. Throws on negative entries;
// 0 log 0 is treated as 0.
double entropic_value(const Coupling& kappa, const CostMatrix& c, double rho,
                      ValueConvention convention);

// Subgradient of the regularised transport value with respect to the left
// marginal: the converged dual_u centered to sum zero (potentials are
// defined up to an additive constant; centering fixes the gauge so the
// result lives in the simplex tangent space). Throws on non-converged input.
Vector grad_wrt_left_marginal(const SinkhornResult& result);

// Tight Fenchel dual of the entropic problem, equal to the primal value at
// the optimum:
//   KlProduct:  <u,mu> + <v,nu> + rho * (1 - sum_ij mu_i nu_j e^{(u_i+v_j-c_ij)/rho})
//   EntropyH:   <u,mu> + <v,nu> + rho * (1 - sum_ij e^{(u_i+v_j-c_ij)/rho})
// Each convention expects potentials in the matching parametrisation;
// sinkhorn() returns KlProduct-form potentials (convert with
// entropy_form_potentials for the EntropyH dual).
double dual_objective(const Vector& u, const Vector& v, const DiscreteMeasure& mu,
                      const DiscreteMeasure& nu, const CostMatrix& c, double rho,
                      ValueConvention convention);

// Convert KlProduct-form potentials (kappa = mu nu e^{(u+v-c)/rho}) to
// EntropyH-form ones (kappa = e^{(u+v-c)/rho}): u_i + rho log mu_i, etc.
std::pair<Vector, Vector> entropy_form_potentials(const Vector& u, const Vector& v,
                                                  const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu, double rho);

}  // namespace wrl
