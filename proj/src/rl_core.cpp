#include "wrl/rl_core.hpp"

#include <cmath>

namespace wrl {

Eigen::Index param_count(const RbfSoftmaxShape& shape) {
  return static_cast<Eigen::Index>(shape.centers.size()) * shape.actions;
}

Eigen::Index param_count(const MlpGaussianShape& shape) {
  Eigen::Index count = 0;
  int prev = shape.input;
  for (int width : shape.hidden) {
    count += static_cast<Eigen::Index>(width) * prev + width;
    prev = width;
  }
  return count + static_cast<Eigen::Index>(shape.output) * prev + shape.output;
}

PolicyParams PolicyParams::rbf_softmax(RbfSoftmaxShape shape) {
  if (shape.centers.empty() || shape.actions < 1 || shape.bandwidth <= 0.0)
    throw std::invalid_argument("rbf_softmax: invalid shape");
  PolicyParams p;
  p.family = PolicyFamily::RbfSoftmax;
  p.rbf = std::move(shape);
  p.theta = Vector::Zero(param_count(p.rbf));
  return p;
}

PolicyParams PolicyParams::mlp_gaussian(MlpGaussianShape shape) {
  if (shape.input < 1 || shape.output < 1 || shape.stddev <= 0.0)
    throw std::invalid_argument("mlp_gaussian: invalid shape");
  PolicyParams p;
  p.family = PolicyFamily::MlpGaussian;
  p.mlp = std::move(shape);
  p.theta = Vector::Zero(param_count(p.mlp));
  return p;
}

Vector rbf_features(const RbfSoftmaxShape& shape, const Point& state) {
  const Eigen::Index f = static_cast<Eigen::Index>(shape.centers.size());
  Vector phi(f);
  const double denom = 2.0 * shape.bandwidth * shape.bandwidth;
  for (Eigen::Index k = 0; k < f; ++k)
    phi(k) = std::exp(-(state - shape.centers[k]).squaredNorm() / denom);
  return phi / phi.sum();
}

namespace {

// Forward pass caching every layer's post-activation output; index 0 is the
// input itself, the last entry is the linear output (the Gaussian mean).
std::vector<Vector> mlp_forward(const MlpGaussianShape& shape, const Vector& theta,
                                const Point& state) {
  std::vector<Vector> acts;
  acts.reserve(shape.hidden.size() + 2);
  acts.push_back(state);
  Eigen::Index offset = 0;
  int prev = shape.input;
  for (std::size_t layer = 0; layer <= shape.hidden.size(); ++layer) {
    const bool last = layer == shape.hidden.size();
    const int width = last ? shape.output : shape.hidden[layer];
    Eigen::Map<const Matrix> w(theta.data() + offset, width, prev);
    offset += static_cast<Eigen::Index>(width) * prev;
    Eigen::Map<const Vector> b(theta.data() + offset, width);
    offset += width;
    Vector z = w * acts.back() + b;
    acts.push_back(last ? z : z.array().tanh().matrix());
    prev = width;
  }
  return acts;
}

// Backpropagates d logpi / d mean through the cached activations.
Vector mlp_backward(const MlpGaussianShape& shape, const Vector& theta,
                    const std::vector<Vector>& acts, Vector delta) {
  Vector grad = Vector::Zero(theta.size());
  Eigen::Index offset = theta.size();
  for (std::size_t layer = shape.hidden.size() + 1; layer-- > 0;) {
    const bool last = layer == shape.hidden.size();
    const int width = last ? shape.output : shape.hidden[layer];
    const Vector& below = acts[layer];
    if (!last) delta = delta.cwiseProduct(Vector::Ones(width) - acts[layer + 1].cwiseAbs2());
    offset -= width;
    grad.segment(offset, width) = delta;
    offset -= width * below.size();
    Eigen::Map<Matrix>(grad.data() + offset, width, below.size()) = delta * below.transpose();
    Eigen::Map<const Matrix> w(theta.data() + offset, width, below.size());
    delta = w.transpose() * delta;
  }
  return grad;
}

void require_state(const PolicyParams& params, const Point& state) {
  const Eigen::Index want = params.family == PolicyFamily::RbfSoftmax
                                ? params.rbf.centers.front().size()
                                : params.mlp.input;
  if (state.size() != want)
    throw std::invalid_argument("policy: state dimension does not match shape");
}

}  // namespace

ActionDistribution policy_distribution(const PolicyParams& params, const Point& state) {
  if (params.theta.hasNaN()) throw std::invalid_argument("policy: NaN in theta");
  require_state(params, state);
  ActionDistribution dist;
  dist.family = params.family;
  if (params.family == PolicyFamily::RbfSoftmax) {
    const Vector phi = rbf_features(params.rbf, state);
    Eigen::Map<const Matrix> weights(params.theta.data(), params.rbf.actions,
                                     static_cast<Eigen::Index>(params.rbf.centers.size()));
    Vector logits = weights * phi;
    logits.array() -= logits.maxCoeff();
    dist.probs = logits.array().exp();
    dist.probs /= dist.probs.sum();
  } else {
    dist.mean = mlp_forward(params.mlp, params.theta, state).back();
    dist.stddev = params.mlp.stddev;
  }
  return dist;
}

Action sample_action(const PolicyParams& params, const Point& state, Rng& rng,
                     const NoiseTransform& noise) {
  const ActionDistribution dist = policy_distribution(params, state);
  Action a;
  if (params.family == PolicyFamily::RbfSoftmax) {
    a.id = rng.categorical(dist.probs);
  } else {
    a.vec.resize(dist.mean.size());
    for (Eigen::Index d = 0; d < dist.mean.size(); ++d) {
      const double xi = noise ? noise(static_cast<int>(d), rng.normal()) : rng.normal();
      a.vec(d) = dist.mean(d) + dist.stddev * xi;
    }
  }
  return a;
}

double log_prob(const PolicyParams& params, const Point& state, const Action& action) {
  const ActionDistribution dist = policy_distribution(params, state);
  if (params.family == PolicyFamily::RbfSoftmax) {
    if (action.id < 0 || action.id >= dist.probs.size() || dist.probs(action.id) <= 0.0)
      throw std::invalid_argument("log_prob: action outside policy support");
    return std::log(dist.probs(action.id));
  }
  const Vector diff = action.vec - dist.mean;
  const double s2 = dist.stddev * dist.stddev;
  return -0.5 * diff.squaredNorm() / s2 -
         0.5 * static_cast<double>(diff.size()) *
             std::log(2.0 * 3.141592653589793238462643383279502884 * s2);
}

Vector grad_log_prob(const PolicyParams& params, const Point& state, const Action& action) {
  if (params.theta.hasNaN()) throw std::invalid_argument("policy: NaN in theta");
  require_state(params, state);
  if (params.family == PolicyFamily::RbfSoftmax) {
    const ActionDistribution dist = policy_distribution(params, state);
    if (action.id < 0 || action.id >= dist.probs.size() || dist.probs(action.id) <= 0.0)
      throw std::invalid_argument("grad_log_prob: action outside policy support");
    const Vector phi = rbf_features(params.rbf, state);
    // d logpi / d theta(a', f) = phi_f (1{a' = a} - p_a')
    Vector indicator = -dist.probs;
    indicator(action.id) += 1.0;
    Vector grad(params.theta.size());
    Eigen::Map<Matrix>(grad.data(), params.rbf.actions,
                       static_cast<Eigen::Index>(params.rbf.centers.size())) =
        indicator * phi.transpose();
    return grad;
  }
  const auto acts = mlp_forward(params.mlp, params.theta, state);
  const Vector delta = (action.vec - acts.back()) / (params.mlp.stddev * params.mlp.stddev);
  return mlp_backward(params.mlp, params.theta, acts, delta);
}

Trajectory rollout(const Mdp& mdp, const PolicyParams& params, Rng& rng,
                   const NoiseTransform& noise) {
  Trajectory tau;
  Point state = mdp.reset();
  tau.final_state = state;
  const int horizon = mdp.horizon();
  for (int t = 0; t < horizon; ++t) {
    const Action action = sample_action(params, state, rng, noise);
    StepResult step = mdp.step(state, action);
    if (t == horizon - 1 && !step.absorbing) step.reward += mdp.timeout_penalty();
    tau.steps.push_back({state, action, step.reward});
    tau.final_state = step.state;
    state = step.state;
    if (step.absorbing) {
      tau.terminated = true;
      break;
    }
  }
  return tau;
}

Trajectory rollout(const Mdp& mdp, const PolicyParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return rollout(mdp, params, rng);
}

double trajectory_return(const Trajectory& tau, double gamma) {
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("trajectory_return: gamma must be in (0, 1]");
  double total = 0.0, scale = 1.0;
  for (const TimeStep& step : tau.steps) {
    total += scale * step.reward;
    scale *= gamma;
  }
  return total;
}

Vector sum_grad_log_prob(const Trajectory& tau, const PolicyParams& params) {
  Vector grad = Vector::Zero(params.theta.size());
  for (const TimeStep& step : tau.steps)
    grad += grad_log_prob(params, step.state, step.action);
  return grad;
}

Vector score_function_grad(const Trajectory& tau, const PolicyParams& params,
                           double scalar_weight) {
  return scalar_weight * sum_grad_log_prob(tau, params);
}

Vector grad_of_expectation_estimate(const std::vector<Trajectory>& taus,
                                    const PolicyParams& params,
                                    const std::function<double(const Trajectory&)>& g) {
  if (taus.empty())
    throw std::invalid_argument("grad_of_expectation_estimate: empty batch");
  Vector total = Vector::Zero(params.theta.size());
  for (const Trajectory& tau : taus) total += score_function_grad(tau, params, g(tau));
  return total / static_cast<double>(taus.size());
}

}  // namespace wrl
