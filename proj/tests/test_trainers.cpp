#include "wrl/trainers.hpp"

#include "oracles.hpp"
#include "test_mdps.hpp"

#include "doctest.h"

#include <cmath>
#include <cstring>

using namespace wrl;
using namespace testmdp;

namespace {

bool bit_identical(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

// One state, n actions; the chosen action becomes the final state. Rewards
// are all zero, so only the transport term can move the policy.
class SelectorMdp : public Mdp {
 public:
  explicit SelectorMdp(int actions) : actions_(actions) {}
  Point reset() const override { return point1(0); }
  StepResult step(const Point&, const Action& action) const override {
    return {point1(action.id), 0.0, true};
  }
  ActionSpace action_space() const override { return DiscreteActions{actions_}; }
  int horizon() const override { return 1; }
  double discount() const override { return 1.0; }

 private:
  int actions_;
};

EmbeddingSpec mean_x_l1() {
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::MeanX;
  spec.cost_kind = CostKind::L1;
  return spec;
}

WrlConfig base_config(long iterations, std::uint64_t seed) {
  WrlConfig cfg;
  cfg.iterations = iterations;
  cfg.seed = seed;
  cfg.embedding = mean_x_l1();
  cfg.checkpoint_every = 1000000;  // logging not under test here
  return cfg;
}

Vector selector_probs(const PolicyParams& params) {
  return policy_distribution(params, point1(0)).probs;
}

// x-mirror of an MLP policy: negate the x-input column of the first layer
// and the dx output row (weights and bias) of the last. Relies on the
// column-major per-layer flat layout.
PolicyParams mirror_mlp_x(const PolicyParams& params) {
  PolicyParams out = params;
  const int h1 = params.mlp.hidden.front();
  for (int r = 0; r < h1; ++r) out.theta(r) = -out.theta(r);  // W1 column 0
  const int h_last = params.mlp.hidden.back();
  const Eigen::Index out_block = 2 * h_last + 2;  // W3 + b3
  const Eigen::Index off = params.theta.size() - out_block;
  for (int c = 0; c < h_last; ++c) out.theta(off + 2 * c) = -out.theta(off + 2 * c);
  out.theta(params.theta.size() - 2) = -out.theta(params.theta.size() - 2);  // dx bias
  return out;
}

}  // namespace

TEST_CASE("train log enforces monotone finite rows") {
  TrainLog log;
  log.columns = {"iteration", "x"};
  log.append({1.0, 0.5});
  CHECK_THROWS_AS(log.append({1.0, 0.7}), std::logic_error);
  CHECK_THROWS_AS(log.append({2.0}), std::logic_error);
  CHECK_THROWS_AS(log.append({2.0, std::nan("")}), std::logic_error);
  log.append({2.0, 0.7});
  CHECK(log.rows.size() == 2);
}

TEST_CASE("bin_to_support picks the nearest atom") {
  const std::vector<Point> support{point1(0), point1(0.5), point1(1.0)};
  CHECK(bin_to_support(point1(0.1), support, CostKind::L1) == 0);
  CHECK(bin_to_support(point1(0.6), support, CostKind::L1) == 1);
  CHECK(bin_to_support(point1(5.0), support, CostKind::L1) == 2);
  // Ties resolve to the lowest index.
  CHECK(bin_to_support(point1(0.25), support, CostKind::L1) == 0);
}

TEST_CASE("lambda = 0 reduces every single-policy trainer to the reference loop") {
  const TwoStepMdp mdp;
  PolicyParams params0 = line_policy(3, 2);
  params0.theta(1) = 0.2;
  params0.theta(4) = -0.3;

  WrlConfig cfg = base_config(60, 91);
  cfg.lambda = 0.0;
  cfg.rho = 0.5;

  const TrainResult reference = train_reinforce(mdp, params0, cfg);

  const NuSampler nu_sampler = [](Rng&) { return point1(0.3); };
  const TrainResult alg1 = train_alg1_continuous(mdp, params0, nu_sampler, cfg);
  CHECK(bit_identical(alg1.params.theta, reference.params.theta));

  const std::vector<Point> support{point1(0), point1(0.5), point1(1.0)};
  Vector nw(3);
  nw << 0.2, 0.5, 0.3;
  const DiscreteMeasure nu({point1(0), point1(0.5), point1(1.0)}, nw);
  const TrainResult alg2 = train_alg2_discrete(mdp, params0, nu, support, cfg);
  CHECK(bit_identical(alg2.params.theta, reference.params.theta));

  const TrainResult alg3 = train_alg3_dual_discrete(mdp, params0, nu, support, cfg);
  CHECK(bit_identical(alg3.params.theta, reference.params.theta));

  const TrainResult alg4 = train_alg4_semidiscrete(mdp, params0, nu, cfg);
  CHECK(bit_identical(alg4.params.theta, reference.params.theta));

  // Baseline flag on: still identical across trainers, and different from
  // the baseline-off run.
  cfg.baseline = true;
  const TrainResult ref_base = train_reinforce(mdp, params0, cfg);
  const TrainResult alg4_base = train_alg4_semidiscrete(mdp, params0, nu, cfg);
  CHECK(bit_identical(alg4_base.params.theta, ref_base.params.theta));
  CHECK_FALSE(bit_identical(ref_base.params.theta, reference.params.theta));
}

TEST_CASE("lambda = 0 repulsive pair equals two independent batch loops") {
  TwoGoalSpec spec;
  const TwoGoalMdp mdp(spec);
  MlpGaussianShape shape;
  shape.input = 2;
  shape.output = 2;
  shape.hidden = {8, 8};
  PolicyParams a0 = PolicyParams::mlp_gaussian(shape);
  PolicyParams b0 = a0;
  Rng init(404);
  for (Eigen::Index i = 0; i < a0.theta.size(); ++i) a0.theta(i) = 0.1 * init.normal();
  for (Eigen::Index i = 0; i < b0.theta.size(); ++i) b0.theta(i) = 0.1 * init.normal();

  WrlConfig cfg = base_config(12, 7);
  cfg.lambda = 0.0;
  cfg.rho = 0.01;
  cfg.batch_size = 16;
  cfg.checkpoint_every = 1;

  const PairTrainResult pair = train_repulsive_pair(mdp, a0, b0, cfg);

  // Reference: plain batch policy gradient per policy on the documented
  // streams, weight = return.
  auto batch_reference = [&](PolicyParams params, std::uint64_t stream) {
    Rng roll(stream_seed(cfg.seed, stream));
    for (long iter = 1; iter <= cfg.iterations; ++iter) {
      std::vector<Trajectory> taus(cfg.batch_size);
      std::vector<double> rets(cfg.batch_size);
      for (int k = 0; k < cfg.batch_size; ++k) {
        taus[k] = rollout(mdp, params, roll);
        rets[k] = trajectory_return(taus[k], mdp.discount());
      }
      Vector grad = Vector::Zero(params.theta.size());
      for (int k = 0; k < cfg.batch_size; ++k)
        grad += score_function_grad(taus[k], params, rets[k]);
      params.theta += cfg.steps.theta * (grad / static_cast<double>(cfg.batch_size));
    }
    return params;
  };
  const PolicyParams ref_a = batch_reference(a0, streams::kRolloutA);
  const PolicyParams ref_b = batch_reference(b0, streams::kRolloutB);
  CHECK(bit_identical(pair.params_a.theta, ref_a.theta));
  CHECK(bit_identical(pair.params_b.theta, ref_b.theta));
}

TEST_CASE("alg2 on a single-atom support is plain policy gradient") {
  const TwoStepMdp mdp;
  PolicyParams params0 = line_policy(3, 2);
  WrlConfig cfg = base_config(40, 17);
  cfg.lambda = -1.0;
  const std::vector<Point> support{point1(0.5)};
  const DiscreteMeasure nu = DiscreteMeasure::dirac(point1(0.5));
  const TrainResult reference = train_reinforce(mdp, params0, cfg);
  const TrainResult alg2 = train_alg2_discrete(mdp, params0, nu, support, cfg);
  CHECK(bit_identical(alg2.params.theta, reference.params.theta));
}

TEST_CASE("alg2 attraction pulls the selector onto the target atom") {
  const SelectorMdp mdp(2);  // embeddings {0, 0.5}
  const std::vector<Point> support{point1(0), point1(0.5)};
  const DiscreteMeasure nu = DiscreteMeasure::dirac(point1(0.5));
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    WrlConfig cfg = base_config(2000, seed);
    cfg.lambda = -1.0;
    cfg.rho = 0.3;
    cfg.steps.theta = 0.5;
    const TrainResult result =
        train_alg2_discrete(mdp, line_policy(1, 2), nu, support, cfg);
    CHECK(selector_probs(result.params)(1) > 0.9);
  }
}

TEST_CASE("binned-embedding gradient estimator matches enumeration") {
  // The finite-support trainer estimates each column of the embedding
  // distribution's parameter gradient with the indicator weight
  // 1{bin(f(tau)) = i}; on the enumerable MDP the Monte-Carlo mean must sit
  // within 3 standard errors of the exact gradient.
  const TwoStepMdp mdp;
  PolicyParams params = line_policy(3, 2);
  params.theta(0) = 0.2;
  params.theta(5) = -0.15;
  const EmbeddingSpec emb = mean_x_l1();
  const std::vector<Point> support{point1(0.5), point1(1.25), point1(2.0)};

  for (int bin = 0; bin < 3; ++bin) {
    auto g = [&](const Trajectory& tau) {
      return bin_to_support(embed(emb, tau), support, CostKind::L1) == bin ? 1.0 : 0.0;
    };
    const auto [exact, mass] = enumerate_grad(mdp, params, g);

    const int n = 100000;
    Rng rng(9000 + bin);
    Vector mean = Vector::Zero(params.theta.size());
    Vector second = Vector::Zero(params.theta.size());
    for (int i = 0; i < n; ++i) {
      const Trajectory tau = rollout(mdp, params, rng);
      const Vector sample = score_function_grad(tau, params, g(tau));
      mean += sample;
      second += sample.cwiseAbs2();
    }
    mean /= n;
    second /= n;
    for (Eigen::Index k = 0; k < mean.size(); ++k) {
      const double se = std::sqrt(std::max(second(k) - mean(k) * mean(k), 1e-30) / n);
      CHECK(std::abs(mean(k) - exact(k)) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("alg3 dual ascent reaches the transport value with a frozen policy") {
  const SelectorMdp mdp(3);  // embeddings {0, 0.5, 1}
  PolicyParams params = line_policy(1, 3);
  // Single feature, logits = theta: softmax(log p) = p.
  params.theta << std::log(0.5), std::log(0.3), std::log(0.2);
  const Vector mu_w = selector_probs(params);

  const std::vector<Point> support{point1(0), point1(0.5), point1(1.0)};
  Vector nw(3);
  nw << 0.2, 0.3, 0.5;
  const DiscreteMeasure nu({point1(0), point1(0.5), point1(1.0)}, nw);
  const DiscreteMeasure mu(support, mu_w);
  const CostMatrix cost = build_cost_matrix(mu, nu, CostKind::L1);
  const double rho = 0.7;

  OtConfig ot;
  ot.rho = rho;
  ot.tol = 1e-12;
  ot.max_iters = 100000;
  const SinkhornResult reference = sinkhorn(mu, nu, cost, ot);
  REQUIRE(reference.converged);
  const double target = entropic_value(reference.coupling, cost, rho,
                                       ValueConvention::EntropyH);

  WrlConfig cfg = base_config(300000, 5);
  cfg.lambda = 1.0;
  cfg.rho = rho;
  cfg.freeze_theta = true;
  cfg.steps.u = cfg.steps.v = 0.5;

  // Polyak-average the dual iterates over the last half of the run, then
  // evaluate the exact dual objective at the average.
  Vector u_bar = Vector::Zero(3), v_bar = Vector::Zero(3);
  long samples = 0;
  const IterationProbe probe = [&](const IterationState& state) {
    if (state.iteration <= cfg.iterations / 2) return;
    u_bar += *state.dual_u;
    v_bar += *state.dual_v;
    ++samples;
  };
  (void)train_alg3_dual_discrete(mdp, params, nu, support, cfg, probe);
  u_bar /= static_cast<double>(samples);
  v_bar /= static_cast<double>(samples);

  const double dual = dual_objective(u_bar, v_bar, mu, nu, cost, rho,
                                     ValueConvention::EntropyH);
  CHECK(std::abs(dual - target) < 1e-3);
}

TEST_CASE("alg3 sign test: attraction vs repulsion") {
  const SelectorMdp mdp(2);
  const std::vector<Point> support{point1(0), point1(0.5)};
  const DiscreteMeasure nu = DiscreteMeasure::dirac(point1(0.5));
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    WrlConfig cfg = base_config(3000, seed);
    cfg.rho = 0.3;
    cfg.steps.theta = 0.5;
    cfg.lambda = -1.0;
    const TrainResult attract =
        train_alg3_dual_discrete(mdp, line_policy(1, 2), nu, support, cfg);
    cfg.lambda = 1.0;
    const TrainResult repel =
        train_alg3_dual_discrete(mdp, line_policy(1, 2), nu, support, cfg);
    CHECK(selector_probs(attract.params)(1) > selector_probs(repel.params)(1));
  }
}

TEST_CASE("alg4 with a Dirac target is reward shaping by the ground cost") {
  const TwoStepMdp mdp;
  PolicyParams params0 = line_policy(3, 2);
  const Point target_point = point1(0.75);
  const DiscreteMeasure nu = DiscreteMeasure::dirac(target_point);

  WrlConfig cfg = base_config(50, 23);
  cfg.lambda = -1.0;
  cfg.rho = 1.0;  // exact algebraic collapse of h to the ground cost
  const TrainResult alg4 = train_alg4_semidiscrete(mdp, params0, nu, cfg);

  // Hand-shaped reference: weight = lambda * c(f(tau), y*) + R on the same
  // rollout stream.
  PolicyParams params = params0;
  Rng roll(stream_seed(cfg.seed, streams::kRollout));
  for (long i = 1; i <= cfg.iterations; ++i) {
    const Trajectory tau = rollout(mdp, params, roll);
    const Point x = embed(cfg.embedding, tau);
    const double shaped = cfg.lambda * ground_cost(x, target_point, CostKind::L1) +
                          trajectory_return(tau, mdp.discount());
    params.theta += cfg.steps.theta * score_function_grad(tau, params, shaped);
  }
  CHECK(bit_identical(alg4.params.theta, params.theta));
}

TEST_CASE("alg4 dual ascent reaches the semi-dual value with a frozen policy") {
  const SelectorMdp mdp(3);
  PolicyParams params = line_policy(1, 3);
  params.theta << std::log(0.4), std::log(0.35), std::log(0.25);
  const Vector mu_w = selector_probs(params);

  Vector nw(2);
  nw << 0.6, 0.4;
  const DiscreteMeasure nu({point1(0.25), point1(0.9)}, nw);
  const std::vector<Point> support{point1(0), point1(0.5), point1(1.0)};
  const DiscreteMeasure mu(support, mu_w);
  const CostMatrix cost = build_cost_matrix(mu, nu, CostKind::L1);
  const double rho = 0.6;

  OtConfig ot;
  ot.rho = rho;
  ot.tol = 1e-12;
  ot.max_iters = 100000;
  ot.convention = ValueConvention::KlProduct;
  const SinkhornResult reference = sinkhorn(mu, nu, cost, ot);
  REQUIRE(reference.converged);

  WrlConfig cfg = base_config(300000, 9);
  cfg.lambda = 1.0;
  cfg.rho = rho;
  cfg.freeze_theta = true;
  cfg.steps.v = 0.5;

  Vector v_bar = Vector::Zero(2);
  long samples = 0;
  const IterationProbe probe = [&](const IterationState& state) {
    if (state.iteration <= cfg.iterations / 2) return;
    v_bar += *state.dual_v;
    ++samples;
  };
  (void)train_alg4_semidiscrete(mdp, params, nu, cfg, probe);
  v_bar /= static_cast<double>(samples);

  double expected_h = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    expected_h += mu_w(i) * semidiscrete_h(mu.atoms()[i], v_bar, nu, rho, CostKind::L1);
  CHECK(std::abs(expected_h - reference.primal_value) < 1e-3);
}

TEST_CASE("alg1 self-target run shows no transport trend") {
  // The target is the policy's own embedding distribution and rewards are
  // zero, so there is no signal to move: the transport estimate settles at
  // the self-distance of the initial policy and the policy stays put.
  const SelectorMdp selector(3);
  PolicyParams params0 = line_policy(1, 3);
  params0.theta << 0.3, -0.1, 0.2;
  const Vector initial_probs = selector_probs(params0);

  // Reference: the regularised self-distance of the initial distribution.
  const std::vector<Point> atoms{point1(0), point1(0.5), point1(1.0)};
  const DiscreteMeasure mu0(atoms, initial_probs);
  OtConfig ot;
  ot.rho = 0.5;
  ot.tol = 1e-12;
  ot.max_iters = 100000;
  ot.convention = ValueConvention::KlProduct;
  const double self_distance =
      sinkhorn(mu0, mu0, build_cost_matrix(mu0, mu0, CostKind::L1), ot).primal_value;

  for (std::uint64_t seed : {21u, 22u, 23u, 24u, 25u}) {
    WrlConfig cfg = base_config(4000, seed);
    cfg.lambda = -1.0;
    cfg.rho = 0.5;
    cfg.checkpoint_every = 1;
    cfg.steps.rkhs_constant = 0.5;
    const PolicyParams frozen = params0;
    const NuSampler self_sampler = [&](Rng& rng) {
      return embed(mean_x_l1(), rollout(selector, frozen, rng));
    };
    const TrainResult result =
        train_alg1_continuous(selector, params0, self_sampler, cfg);
    const auto& rows = result.log.rows;
    const std::size_t n = rows.size();
    double head = 0, tail = 0;
    for (std::size_t i = 0; i < 200; ++i) {
      head += rows[i][2];
      tail += rows[n - 1 - i][2];
    }
    head /= 200.0;
    tail /= 200.0;
    CHECK(std::abs(tail - self_distance) < 0.05);
    CHECK(std::abs(tail - head) < 0.1);
    CHECK((selector_probs(result.params) - initial_probs).cwiseAbs().maxCoeff() < 0.15);
  }
}

TEST_CASE("mirrored repulsive pair stays mirror-symmetric") {
  TwoGoalSpec spec;
  const TwoGoalMdp mdp(spec);
  MlpGaussianShape shape;
  shape.input = 2;
  shape.output = 2;
  PolicyParams a0 = PolicyParams::mlp_gaussian(shape);
  Rng init(2718);
  for (Eigen::Index i = 0; i < a0.theta.size(); ++i) a0.theta(i) = 0.1 * init.normal();
  const PolicyParams b0 = mirror_mlp_x(a0);

  WrlConfig cfg = base_config(10, 33);
  cfg.lambda = 1.0;
  cfg.rho = 0.01;
  cfg.batch_size = 20;
  cfg.checkpoint_every = 1;
  RepulsiveHooks hooks;
  hooks.mirror_noise_b = true;

  const PairTrainResult pair = train_repulsive_pair(mdp, a0, b0, cfg, {}, hooks);
  REQUIRE(pair.log.rows.size() == 10);
  for (const auto& row : pair.log.rows) {
    CHECK(std::abs(row[4] + row[5]) < 1e-6);  // mean_x_a == -mean_x_b
    CHECK(std::abs(row[1] - row[2]) < 1e-6);  // identical returns
  }
  // The parameters themselves stay exact mirrors.
  CHECK(bit_identical(mirror_mlp_x(pair.params_a).theta, pair.params_b.theta));
}

TEST_CASE("repulsive transport estimate trends upward") {
  // Shipped two-goal setup at 100 iterations: the logged estimate of the
  // distance between the two policies' embedding distributions should rise
  // as they separate (median Spearman over 5 seeds).
  TwoGoalSpec spec;
  const TwoGoalMdp mdp(spec);
  MlpGaussianShape shape;
  shape.input = 2;
  shape.output = 2;
  shape.stddev = 0.3;

  std::vector<double> rhos;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    WrlConfig cfg = base_config(100, seed);
    cfg.lambda = 0.5;
    cfg.rho = 0.01;
    cfg.batch_size = 100;
    cfg.checkpoint_every = 1;
    cfg.baseline = true;
    cfg.warm_start_duals = false;
    cfg.steps.theta = 0.01;
    cfg.steps.rkhs_constant = 0.02;
    cfg.steps.rkhs_radius = 0.05;

    PolicyParams a = PolicyParams::mlp_gaussian(shape);
    PolicyParams b = PolicyParams::mlp_gaussian(shape);
    Rng init_a(stream_seed(seed, 31)), init_b(stream_seed(seed, 32));
    for (Eigen::Index i = 0; i < a.theta.size(); ++i) a.theta(i) = 0.1 * init_a.normal();
    for (Eigen::Index i = 0; i < b.theta.size(); ++i) b.theta(i) = 0.1 * init_b.normal();

    const PairTrainResult result = train_repulsive_pair(mdp, a, b, cfg);
    std::vector<double> iters, west;
    for (const auto& row : result.log.rows) {
      iters.push_back(row[0]);
      west.push_back(row[3]);
    }
    rhos.push_back(oracles::spearman_rank_correlation(iters, west));
  }
  std::sort(rhos.begin(), rhos.end());
  CHECK(rhos[2] > 0.5);
}

TEST_CASE("nan abort carries a snapshot") {
  const TwoStepMdp mdp;
  PolicyParams params0 = line_policy(3, 2);
  WrlConfig cfg = base_config(10, 3);
  cfg.lambda = 0.0;
  cfg.steps.theta = std::numeric_limits<double>::infinity();
  try {
    (void)train_reinforce(mdp, params0, cfg);
    FAIL("expected NanAbort");
  } catch (const NanAbort& e) {
    CHECK(e.iteration() >= 1);
    CHECK(e.snapshot().find("theta") != std::string::npos);
  }
}

TEST_CASE("trainer config validation") {
  WrlConfig cfg = base_config(10, 1);
  cfg.rho = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config(0, 1);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config(10, 1);
  cfg.steps.theta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
