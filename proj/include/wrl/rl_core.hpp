#pragma once

#include "wrl/rng.hpp"
#include "wrl/types.hpp"

#include <functional>
#include <variant>
#include <vector>

namespace wrl {

// Discrete actions carry an id; continuous ones a displacement vector.
struct Action {
  int id = -1;
  Vector vec;
};

struct TimeStep {
  Point state;
  Action action;
  double reward = 0.0;
};

// State/action/reward sequence of one episode. `steps[t].state` is the state
// the action was taken from; `final_state` is the state reached by the last
// action, so the visited-state path is steps[0].state, ..., final_state.
struct Trajectory {
  std::vector<TimeStep> steps;
  Point final_state;
  bool terminated = false;  // absorbing state reached (vs. time-out)
};

struct StepResult {
  Point state;
  double reward = 0.0;
  bool absorbing = false;
};

struct DiscreteActions {
  int count = 0;
};
struct BoxActions {
  int dim = 0;
};
using ActionSpace = std::variant<DiscreteActions, BoxActions>;

// Environment contract. step() must be a pure function of (state, action);
// all stochasticity lives in the policy. Absorbing states self-loop with
// reward 0 if stepped.
class Mdp {
 public:
  virtual ~Mdp() = default;
  virtual Point reset() const = 0;
  virtual StepResult step(const Point& state, const Action& action) const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual int horizon() const = 0;
  virtual double discount() const = 0;
  // Added to the final reward by rollout() when the horizon is hit without
  // reaching an absorbing state.
  virtual double timeout_penalty() const { return 0.0; }
};

enum class PolicyFamily { RbfSoftmax, MlpGaussian };

// Softmax over action logits theta(f, a) . phi_f(state), with phi a
// normalised Gaussian bump per feature center.
struct RbfSoftmaxShape {
  std::vector<Point> centers;
  double bandwidth = 1.0;
  int actions = 0;
};

// Diagonal-Gaussian policy whose mean is a tanh MLP of the state; the
// standard deviation is fixed, not learned.
struct MlpGaussianShape {
  int input = 0;
  std::vector<int> hidden = {15, 15};
  int output = 0;
  double stddev = 0.3;
};

struct PolicyParams {
  PolicyFamily family = PolicyFamily::RbfSoftmax;
  Vector theta;
  RbfSoftmaxShape rbf;
  MlpGaussianShape mlp;

  static PolicyParams rbf_softmax(RbfSoftmaxShape shape);
  static PolicyParams mlp_gaussian(MlpGaussianShape shape);
  Eigen::Index size() const { return theta.size(); }
};

Eigen::Index param_count(const RbfSoftmaxShape& shape);
Eigen::Index param_count(const MlpGaussianShape& shape);

// Normalised RBF feature vector for a state (sums to 1).
Vector rbf_features(const RbfSoftmaxShape& shape, const Point& state);

struct ActionDistribution {
  PolicyFamily family;
  Vector probs;   // RbfSoftmax: one probability per action, each > 0
  Vector mean;    // MlpGaussian: Gaussian mean
  double stddev = 0.0;
};

// Throws if theta contains NaN.
ActionDistribution policy_distribution(const PolicyParams& params, const Point& state);

// Optional per-draw transform of the Gaussian action noise (dimension index,
// raw standard-normal draw) -> draw actually used. Hook for symmetry
// harnesses; identity when empty.
using NoiseTransform = std::function<double(int, double)>;

Action sample_action(const PolicyParams& params, const Point& state, Rng& rng,
                     const NoiseTransform& noise = {});
double log_prob(const PolicyParams& params, const Point& state, const Action& action);
// d/dtheta log pi(action | state), analytic per family.
Vector grad_log_prob(const PolicyParams& params, const Point& state, const Action& action);

// Alternates policy sampling and mdp.step() until an absorbing state or the
// horizon; identical rng stream implies an identical trajectory.
Trajectory rollout(const Mdp& mdp, const PolicyParams& params, Rng& rng,
                   const NoiseTransform& noise = {});
Trajectory rollout(const Mdp& mdp, const PolicyParams& params, std::uint64_t seed);

// sum_t gamma^t r_t.
double trajectory_return(const Trajectory& tau, double gamma);

// sum_t grad log pi(a_t | s_t); the shared core of the score-function
// estimators below.
Vector sum_grad_log_prob(const Trajectory& tau, const PolicyParams& params);

// scalar_weight * sum_t grad log pi(a_t | s_t).
Vector score_function_grad(const Trajectory& tau, const PolicyParams& params,
                           double scalar_weight);

// Batch-mean score-function estimate of d/dtheta E[g(tau)].
Vector grad_of_expectation_estimate(const std::vector<Trajectory>& taus,
                                    const PolicyParams& params,
                                    const std::function<double(const Trajectory&)>& g);

}  // namespace wrl
