#include "wrl/rl_core.hpp"

#include "oracles.hpp"
#include "test_mdps.hpp"

#include "doctest.h"

#include <cmath>

using namespace wrl;
using namespace testmdp;

TEST_CASE("softmax policy distribution") {
  PolicyParams params = line_policy(1, 4);
  const ActionDistribution dist = policy_distribution(params, point1(0));
  for (int a = 0; a < 4; ++a) CHECK(dist.probs(a) == doctest::Approx(0.25));
  CHECK(std::abs(dist.probs.sum() - 1.0) < 1e-12);

  // A +10 logit on the state's own feature saturates the softmax.
  PolicyParams sharp = line_policy(3, 4, 0.1);
  sharp.theta(0 * 4 + 2) = 10.0;  // feature of state 0, action 2
  CHECK(policy_distribution(sharp, point1(0)).probs(2) > 0.99);

  params.theta(0) = std::nan("");
  CHECK_THROWS_AS(policy_distribution(params, point1(0)), std::invalid_argument);
}

TEST_CASE("softmax probabilities sum to one everywhere") {
  Rng rng(4);
  PolicyParams params = line_policy(5, 3);
  for (Eigen::Index i = 0; i < params.theta.size(); ++i)
    params.theta(i) = 4.0 * (rng.uniform01() - 0.5);
  for (int t = 0; t < 200; ++t) {
    const Point s = point1(rng.uniform_int(5));
    CHECK(std::abs(policy_distribution(params, s).probs.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("gaussian policy mean and sampling") {
  MlpGaussianShape shape;
  shape.input = 2;
  shape.output = 2;
  shape.stddev = 0.1;
  PolicyParams params = PolicyParams::mlp_gaussian(shape);
  const ActionDistribution dist = policy_distribution(params, point2(0.3, -0.7));
  CHECK(dist.mean(0) == doctest::Approx(0.0));
  CHECK(dist.mean(1) == doctest::Approx(0.0));

  const int n = 10000;
  Rng rng(14);
  Vector mean = Vector::Zero(2);
  for (int i = 0; i < n; ++i) mean += sample_action(params, point2(0, 0), rng).vec;
  mean /= n;
  const double band = 3.0 * 0.1 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean(0)) < band);
  CHECK(std::abs(mean(1)) < band);
}

TEST_CASE("analytic grad log pi matches finite differences, both families") {
  Rng rng(77);

  PolicyParams softmax = line_policy(3, 2);
  MlpGaussianShape shape;
  shape.input = 2;
  shape.output = 2;
  PolicyParams gaussian = PolicyParams::mlp_gaussian(shape);

  for (int probe = 0; probe < 100; ++probe) {
    // Softmax probe.
    {
      PolicyParams p = softmax;
      for (Eigen::Index i = 0; i < p.theta.size(); ++i)
        p.theta(i) = 2.0 * (rng.uniform01() - 0.5);
      const Point s = point1(rng.uniform_int(3));
      Action a;
      a.id = rng.uniform_int(2);
      const Vector grad = grad_log_prob(p, s, a);
      auto log_pi = [&](const Vector& th) {
        PolicyParams q = p;
        q.theta = th;
        return log_prob(q, s, a);
      };
      const Vector fd = oracles::central_gradient(log_pi, p.theta, 1e-6);
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK((grad - fd).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
    // Gaussian-MLP probe.
    {
      PolicyParams p = gaussian;
      for (Eigen::Index i = 0; i < p.theta.size(); ++i)
        p.theta(i) = 1.0 * (rng.uniform01() - 0.5);
      const Point s = point2(rng.uniform01() * 2 - 1, rng.uniform01() * 2 - 1);
      Action a;
      a.vec = point2(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
      const Vector grad = grad_log_prob(p, s, a);
      auto log_pi = [&](const Vector& th) {
        PolicyParams q = p;
        q.theta = th;
        return log_prob(q, s, a);
      };
      const Vector fd = oracles::central_gradient(log_pi, p.theta, 1e-6);
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK((grad - fd).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
  }
}

TEST_CASE("rollout on a deterministic chain") {
  const ChainMdp chain({-1, -1, -1});
  const PolicyParams params = line_policy(4, 1);
  const Trajectory tau = rollout(chain, params, 123u);
  REQUIRE(tau.steps.size() == 3);
  CHECK(tau.terminated);
  for (const TimeStep& step : tau.steps) CHECK(step.reward == -1.0);
  CHECK(tau.final_state(0) == 3.0);
  CHECK(trajectory_return(tau, 1.0) == doctest::Approx(-3.0));
}

TEST_CASE("rollout determinism") {
  const TwoStepMdp mdp;
  PolicyParams params = line_policy(3, 2);
  params.theta(1) = 0.3;
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    const Trajectory a = rollout(mdp, params, seed);
    const Trajectory b = rollout(mdp, params, seed);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t t = 0; t < a.steps.size(); ++t) {
      CHECK(a.steps[t].action.id == b.steps[t].action.id);
      CHECK(a.steps[t].state == b.steps[t].state);
      CHECK(a.steps[t].reward == b.steps[t].reward);
    }
  }
}

TEST_CASE("trajectory returns") {
  Trajectory tau;
  tau.final_state = point1(0);
  for (double r : {1.0, 1.0, 1.0}) tau.steps.push_back({point1(0), Action{0, {}}, r});
  CHECK(trajectory_return(tau, 0.5) == doctest::Approx(1.75));
  Trajectory empty;
  empty.final_state = point1(0);
  CHECK(trajectory_return(empty, 1.0) == 0.0);
  CHECK_THROWS_AS(trajectory_return(tau, 0.0), std::invalid_argument);
}

TEST_CASE("score function gradient basics") {
  const BanditMdp bandit({0.0, 1.0});
  const PolicyParams params = line_policy(1, 2);
  const Trajectory tau = rollout(bandit, params, 5u);
  CHECK(score_function_grad(tau, params, 0.0).cwiseAbs().maxCoeff() == 0.0);

  // E[grad log pi] = 0 at theta = 0, by enumeration over both actions.
  const auto [grad, expectation] =
      enumerate_grad(bandit, params, [](const Trajectory&) { return 1.0; });
  CHECK(grad.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(expectation == doctest::Approx(1.0));

  Action outside;
  outside.id = 5;
  CHECK_THROWS_AS(grad_log_prob(params, point1(0), outside), std::invalid_argument);
}

TEST_CASE("bandit estimator matches the enumerated gradient") {
  const BanditMdp bandit({0.0, 1.0});
  PolicyParams params = line_policy(1, 2);
  params.theta(0) = 0.2;
  params.theta(1) = -0.1;
  auto g = [](const Trajectory& tau) { return tau.steps[0].action.id == 1 ? 1.0 : 0.0; };
  const auto [exact, expectation] = enumerate_grad(bandit, params, g);

  const int n = 100000;
  Rng rng(1234);
  Vector mean = Vector::Zero(params.theta.size());
  Vector second = Vector::Zero(params.theta.size());
  for (int i = 0; i < n; ++i) {
    const Trajectory tau = rollout(bandit, params, rng);
    const Vector sample = score_function_grad(tau, params, g(tau));
    mean += sample;
    second += sample.cwiseAbs2();
  }
  mean /= n;
  second /= n;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double se = std::sqrt(std::max(second(k) - mean(k) * mean(k), 0.0) / n);
    CHECK(std::abs(mean(k) - exact(k)) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("batch estimator reductions") {
  const TwoStepMdp mdp;
  PolicyParams params = line_policy(3, 2);
  params.theta(2) = 0.4;

  // A batch of identical trajectories with fixed g equals the single-sample
  // estimate.
  const Trajectory tau = rollout(mdp, params, 3u);
  auto g_const = [](const Trajectory&) { return 2.5; };
  const std::vector<Trajectory> batch{tau, tau, tau};
  const Vector batched = grad_of_expectation_estimate(batch, params, g_const);
  const Vector single = score_function_grad(tau, params, 2.5);
  CHECK((batched - single).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(grad_of_expectation_estimate({}, params, g_const), std::invalid_argument);

  // Constant g: the estimator's expectation is the zero vector.
  const int n = 100000;
  Rng rng(555);
  Vector mean = Vector::Zero(params.theta.size());
  Vector second = Vector::Zero(params.theta.size());
  for (int i = 0; i < n; ++i) {
    const Trajectory sample_tau = rollout(mdp, params, rng);
    const Vector sample = score_function_grad(sample_tau, params, g_const(sample_tau));
    mean += sample;
    second += sample.cwiseAbs2();
  }
  mean /= n;
  second /= n;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double se = std::sqrt(std::max(second(k) - mean(k) * mean(k), 0.0) / n);
    CHECK(std::abs(mean(k)) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("two-step estimator is unbiased for the return") {
  const TwoStepMdp mdp;
  PolicyParams params = line_policy(3, 2);
  params.theta(0) = 0.15;
  params.theta(3) = -0.25;
  auto g_return = [](const Trajectory& tau) { return trajectory_return(tau, 1.0); };
  const auto [exact, value] = enumerate_grad(mdp, params, g_return);

  const int n = 100000;
  Rng rng(777);
  Vector mean = Vector::Zero(params.theta.size());
  Vector second = Vector::Zero(params.theta.size());
  for (int i = 0; i < n; ++i) {
    const Trajectory tau = rollout(mdp, params, rng);
    const Vector sample = score_function_grad(tau, params, g_return(tau));
    mean += sample;
    second += sample.cwiseAbs2();
  }
  mean /= n;
  second /= n;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double se = std::sqrt(std::max(second(k) - mean(k) * mean(k), 0.0) / n);
    CHECK(std::abs(mean(k) - exact(k)) <= 3.0 * se + 1e-12);
  }
}
