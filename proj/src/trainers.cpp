#include "wrl/trainers.hpp"

#include "wrl/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace wrl {

void WrlConfig::validate() const {
  if (rho <= 0.0) throw std::invalid_argument("config: rho must be > 0");
  if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("config: checkpoint_every must be >= 1");
  if (steps.theta <= 0.0 || steps.u <= 0.0 || steps.v <= 0.0 || steps.rkhs_constant <= 0.0 ||
      steps.rkhs_radius <= 0.0)
    throw std::invalid_argument("config: step schedules must be positive");
  if (baseline_rate <= 0.0 || baseline_rate > 1.0 || diag_ema <= 0.0 || diag_ema > 1.0 ||
      mu_ema <= 0.0 || mu_ema > 1.0)
    throw std::invalid_argument("config: EMA rates must be in (0, 1]");
  if (rkhs_cap < 1) throw std::invalid_argument("config: rkhs_cap must be >= 1");
}

void TrainLog::append(std::vector<double> row) {
  if (row.size() != columns.size())
    throw std::logic_error("TrainLog: row width does not match columns");
  if (!rows.empty() && row.front() <= rows.back().front())
    throw std::logic_error("TrainLog: iteration indices must be strictly increasing");
  for (double v : row)
    if (!std::isfinite(v)) throw std::logic_error("TrainLog: non-finite log value");
  rows.push_back(std::move(row));
}

int bin_to_support(const Point& x, const std::vector<Point>& support, CostKind kind) {
  if (support.empty()) throw std::invalid_argument("bin_to_support: empty support");
  int best = 0;
  double best_cost = ground_cost(x, support[0], kind);
  for (std::size_t k = 1; k < support.size(); ++k) {
    const double cost = ground_cost(x, support[k], kind);
    if (cost < best_cost) {
      best_cost = cost;
      best = static_cast<int>(k);
    }
  }
  return best;
}

namespace {

constexpr const char* kAttractColumns[4] = {"episode", "return", "w_estimate",
                                            "dual_diag_saturations"};

TrainLog attract_log() {
  TrainLog log;
  log.columns.assign(kAttractColumns, kAttractColumns + 4);
  return log;
}

// Optional running-mean control variate, applied to the full scalar weight
// (transport term plus return). Shared by every trainer so the lambda = 0
// reductions stay bit-identical to the reference loop.
struct ReturnBaseline {
  bool enabled = false;
  double rate = 0.05;
  double value = 0.0;
  bool initialised = false;

  double shift(double r) {
    if (!enabled) return r;
    if (!initialised) {
      value = r;
      initialised = true;
    }
    const double shifted = r - value;
    value += rate * (r - value);
    return shifted;
  }
};

struct Ema {
  double rate = 0.05;
  double value = 0.0;
  bool initialised = false;
  double update(double x) {
    if (!initialised) {
      value = x;
      initialised = true;
    } else {
      value += rate * (x - value);
    }
    return value;
  }
};

void check_finite(const PolicyParams& params, long iteration) {
  if (!params.theta.allFinite()) throw NanAbort(iteration, to_json(params).dump());
}

// The single shared theta update; every trainer funnels through this so the
// floating-point op order is identical everywhere.
void policy_gradient_step(PolicyParams& params, double alpha, const Trajectory& tau,
                          double weight) {
  params.theta += alpha * score_function_grad(tau, params, weight);
}

Kernel make_kernel(double bandwidth) {
  Kernel k;
  k.kind = KernelKind::Gaussian;
  k.bandwidth = bandwidth;
  return k;
}

}  // namespace

TrainResult train_reinforce(const Mdp& mdp, PolicyParams params, const WrlConfig& cfg) {
  cfg.validate();
  Rng roll(stream_seed(cfg.seed, streams::kRollout));
  ReturnBaseline baseline{cfg.baseline, cfg.baseline_rate};
  TrainLog log = attract_log();
  for (long i = 1; i <= cfg.iterations; ++i) {
    const Trajectory tau = rollout(mdp, params, roll);
    const double ret = trajectory_return(tau, mdp.discount());
    const double weight = baseline.shift(ret);
    if (!cfg.freeze_theta) policy_gradient_step(params, cfg.steps.theta, tau, weight);
    check_finite(params, i);
    if (i % cfg.checkpoint_every == 0)
      log.append({static_cast<double>(i), ret, 0.0, 0.0});
  }
  return {std::move(params), std::move(log)};
}

TrainResult train_alg1_continuous(const Mdp& mdp, PolicyParams params,
                                  const NuSampler& nu_sampler, const WrlConfig& cfg,
                                  const IterationProbe& probe) {
  cfg.validate();
  Rng roll(stream_seed(cfg.seed, streams::kRollout));
  Rng nu_rng(stream_seed(cfg.seed, streams::kNu));

  double bandwidth = cfg.kernel_bandwidth;
  if (bandwidth <= 0.0) {
    // Median heuristic over a pre-pass of sampled embeddings; separate
    // streams so the training rollouts are unaffected.
    Rng bw_roll(stream_seed(cfg.seed, streams::kBandwidthRollout));
    Rng bw_nu(stream_seed(cfg.seed, streams::kBandwidthNu));
    std::vector<Point> probe_points;
    for (int k = 0; k < 50; ++k) {
      probe_points.push_back(embed(cfg.embedding, rollout(mdp, params, bw_roll)));
      probe_points.push_back(nu_sampler(bw_nu));
    }
    bandwidth = median_heuristic_bandwidth(probe_points);
  }
  RkhsFunction u(make_kernel(bandwidth), cfg.rkhs_cap);
  RkhsFunction v(make_kernel(bandwidth), cfg.rkhs_cap);

  ExpClampStats stats;
  ReturnBaseline baseline{cfg.baseline, cfg.baseline_rate};
  Ema w_estimate{cfg.diag_ema};
  TrainLog log = attract_log();

  for (long i = 1; i <= cfg.iterations; ++i) {
    const Trajectory tau = rollout(mdp, params, roll);
    const Point x = embed(cfg.embedding, tau);
    const Point y = nu_sampler(nu_rng);
    const double u_x = u(x);
    const double v_y = v(y);
    const double c = ground_cost(x, y, cfg.embedding.cost_kind);
    const double z = clamped_exp((u_x + v_y - c) / cfg.rho, &stats);
    const double ret = trajectory_return(tau, mdp.discount());
    const double weight =
        baseline.shift(cfg.lambda * u_x - cfg.lambda * (cfg.rho * z) + ret);
    if (!cfg.freeze_theta) policy_gradient_step(params, cfg.steps.theta, tau, weight);
    check_finite(params, i);

    // Dual ascent is independent of lambda's sign; the coefficient line
    // carries no lambda.
    const double alpha = prop2_alpha(u_x, v_y, c, cfg.rho,
                                     cfg.steps.rkhs_constant / std::sqrt(static_cast<double>(i)),
                                     cfg.steps.rkhs_radius, &stats);
    u.append(x, alpha);
    v.append(y, alpha);

    const double west = w_estimate.update(u_x + v_y + cfg.rho * (1.0 - z));
    if (probe) {
      IterationState state;
      state.iteration = i;
      state.params_a = &params;
      state.w_estimate = west;
      state.return_a = ret;
      probe(state);
    }
    if (i % cfg.checkpoint_every == 0)
      log.append({static_cast<double>(i), ret, west, static_cast<double>(stats.total())});
  }
  return {std::move(params), std::move(log)};
}

TrainResult train_alg2_discrete(const Mdp& mdp, PolicyParams params,
                                const DiscreteMeasure& nu, const std::vector<Point>& support,
                                const WrlConfig& cfg, const IterationProbe& probe) {
  cfg.validate();
  if (support.empty()) throw std::invalid_argument("train_alg2: empty support");
  Rng roll(stream_seed(cfg.seed, streams::kRollout));

  std::vector<Point> support_atoms = support;
  const Eigen::Index n = static_cast<Eigen::Index>(support.size());
  Vector mu_hat = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const DiscreteMeasure support_measure(support_atoms, Vector::Ones(n));
  const CostMatrix cost = build_cost_matrix(support_measure, nu, cfg.embedding.cost_kind);

  OtConfig ot = cfg.ot;
  ot.rho = cfg.rho;
  ot.convention = cfg.convention;

  ReturnBaseline baseline{cfg.baseline, cfg.baseline_rate};
  Ema w_estimate{cfg.diag_ema};
  TrainLog log = attract_log();

  for (long i = 1; i <= cfg.iterations; ++i) {
    const Trajectory tau = rollout(mdp, params, roll);
    const Point x = embed(cfg.embedding, tau);
    const int bin = bin_to_support(x, support_atoms, cfg.embedding.cost_kind);
    mu_hat *= (1.0 - cfg.mu_ema);
    mu_hat(bin) += cfg.mu_ema;

    // Zero-mass atoms break the scaling iterations; floor and renormalise.
    Vector floored = mu_hat.cwiseMax(1e-12);
    const SinkhornResult sol =
        sinkhorn(DiscreteMeasure(support_atoms, floored), nu, cost, ot);
    const Vector grad_w = grad_wrt_left_marginal(sol);

    const double ret = trajectory_return(tau, mdp.discount());
    const double weight = baseline.shift(cfg.lambda * grad_w(bin) + ret);
    if (!cfg.freeze_theta) policy_gradient_step(params, cfg.steps.theta, tau, weight);
    check_finite(params, i);

    const double west = w_estimate.update(sol.primal_value);
    if (probe) {
      IterationState state;
      state.iteration = i;
      state.params_a = &params;
      state.dual_u = &sol.dual_u;
      state.dual_v = &sol.dual_v;
      state.w_estimate = west;
      state.return_a = ret;
      probe(state);
    }
    if (i % cfg.checkpoint_every == 0)
      log.append({static_cast<double>(i), ret, west, 0.0});
  }
  return {std::move(params), std::move(log)};
}

TrainResult train_alg3_dual_discrete(const Mdp& mdp, PolicyParams params,
                                     const DiscreteMeasure& nu,
                                     const std::vector<Point>& support, const WrlConfig& cfg,
                                     const IterationProbe& probe) {
  cfg.validate();
  if (support.empty()) throw std::invalid_argument("train_alg3: empty support");
  Rng roll(stream_seed(cfg.seed, streams::kRollout));
  Rng nu_rng(stream_seed(cfg.seed, streams::kNu));

  const Eigen::Index n = static_cast<Eigen::Index>(support.size());
  const DiscreteMeasure support_measure(support, Vector::Ones(n));
  const CostMatrix cost = build_cost_matrix(support_measure, nu, cfg.embedding.cost_kind);

  DualVectors uv{Vector::Zero(n), Vector::Zero(nu.size())};
  const double ascent_scale = std::abs(cfg.lambda);

  ExpClampStats stats;
  ReturnBaseline baseline{cfg.baseline, cfg.baseline_rate};
  Ema w_estimate{cfg.diag_ema};
  TrainLog log = attract_log();

  for (long i = 1; i <= cfg.iterations; ++i) {
    const Trajectory tau = rollout(mdp, params, roll);
    const Point x = embed(cfg.embedding, tau);
    const int bin = bin_to_support(x, support, cfg.embedding.cost_kind);

    const double ret = trajectory_return(tau, mdp.discount());
    const double weight = baseline.shift(cfg.lambda * uv.u(bin) + ret);
    if (!cfg.freeze_theta) policy_gradient_step(params, cfg.steps.theta, tau, weight);
    check_finite(params, i);

    // Stochastic dual ascent from one-hot samples of each marginal. The
    // lambda sign is carried by the theta step alone; the duals always
    // ascend (|lambda| scale, frozen at lambda = 0).
    const BDual b = b_dual(uv, cost, cfg.rho, &stats);
    const double root = std::sqrt(static_cast<double>(i));
    const double alpha_u = cfg.steps.u / root;
    const double alpha_v = cfg.steps.v / root;
    uv.u -= alpha_u * ascent_scale * b.grad_u;
    uv.u(bin) += alpha_u * ascent_scale;
    const int y_index = nu_rng.categorical(nu.weights());
    uv.v -= alpha_v * ascent_scale * b.grad_v;
    uv.v(y_index) += alpha_v * ascent_scale;

    const double west =
        w_estimate.update(uv.u(bin) + nu.weights().dot(uv.v) + cfg.rho * (1.0 - b.value));
    if (probe) {
      IterationState state;
      state.iteration = i;
      state.params_a = &params;
      state.dual_u = &uv.u;
      state.dual_v = &uv.v;
      state.w_estimate = west;
      state.return_a = ret;
      probe(state);
    }
    if (i % cfg.checkpoint_every == 0)
      log.append({static_cast<double>(i), ret, west, static_cast<double>(stats.total())});
  }
  return {std::move(params), std::move(log)};
}

TrainResult train_alg4_semidiscrete(const Mdp& mdp, PolicyParams params,
                                    const DiscreteMeasure& nu, const WrlConfig& cfg,
                                    const IterationProbe& probe) {
  cfg.validate();
  Rng roll(stream_seed(cfg.seed, streams::kRollout));
  Vector v = Vector::Zero(nu.size());
  const double ascent_scale = std::abs(cfg.lambda);

  ReturnBaseline baseline{cfg.baseline, cfg.baseline_rate};
  Ema w_estimate{cfg.diag_ema};
  TrainLog log = attract_log();

  for (long i = 1; i <= cfg.iterations; ++i) {
    const Trajectory tau = rollout(mdp, params, roll);
    const Point x = embed(cfg.embedding, tau);
    const double h = semidiscrete_h(x, v, nu, cfg.rho, cfg.embedding.cost_kind);

    const double ret = trajectory_return(tau, mdp.discount());
    const double weight = baseline.shift(cfg.lambda * h + ret);
    if (!cfg.freeze_theta) policy_gradient_step(params, cfg.steps.theta, tau, weight);
    check_finite(params, i);

    const double alpha_v = cfg.steps.v / std::sqrt(static_cast<double>(i));
    v += alpha_v * ascent_scale * grad_v_h(x, v, nu, cfg.rho, cfg.embedding.cost_kind);

    const double west = w_estimate.update(h);
    if (probe) {
      IterationState state;
      state.iteration = i;
      state.params_a = &params;
      state.dual_v = &v;
      state.w_estimate = west;
      state.return_a = ret;
      probe(state);
    }
    if (i % cfg.checkpoint_every == 0)
      log.append({static_cast<double>(i), ret, west, 0.0});
  }
  return {std::move(params), std::move(log)};
}

PairTrainResult train_repulsive_pair(const Mdp& mdp, PolicyParams params_a,
                                     PolicyParams params_b, const WrlConfig& cfg,
                                     const IterationProbe& probe,
                                     const RepulsiveHooks& hooks) {
  cfg.validate();
  const int batch = cfg.batch_size;
  Rng roll_a(stream_seed(cfg.seed, streams::kRolloutA));
  Rng roll_b(stream_seed(cfg.seed, hooks.mirror_noise_b ? streams::kRolloutA
                                                        : streams::kRolloutB));
  NoiseTransform noise_b;
  if (hooks.mirror_noise_b)
    noise_b = [](int dim, double draw) { return dim == 0 ? -draw : draw; };
  Rng pair_rng(stream_seed(cfg.seed, streams::kPairing));

  ExpClampStats stats;
  ReturnBaseline baseline_a{cfg.baseline, cfg.baseline_rate};
  ReturnBaseline baseline_b{cfg.baseline, cfg.baseline_rate};
  Ema w_between{cfg.diag_ema};
  TrainLog log;
  log.columns = {"iteration", "return_a",  "return_b",
                 "w_between_estimate", "mean_x_a", "mean_x_b"};

  double bandwidth = cfg.kernel_bandwidth;  // resolved from the first batch if <= 0
  RkhsFunction* duals[4] = {nullptr, nullptr, nullptr, nullptr};
  std::unique_ptr<RkhsFunction> u_a, v_a, u_b, v_b;
  long pair_step_a = 0, pair_step_b = 0;

  std::vector<Trajectory> taus_a(batch), taus_b(batch);
  std::vector<Point> xs_a(batch), xs_b(batch);
  std::vector<double> ret_a(batch), ret_b(batch);

  for (long iter = 1; iter <= cfg.iterations; ++iter) {
    for (int k = 0; k < batch; ++k) {
      taus_a[k] = rollout(mdp, params_a, roll_a);
      xs_a[k] = embed(cfg.embedding, taus_a[k]);
      ret_a[k] = trajectory_return(taus_a[k], mdp.discount());
    }
    for (int k = 0; k < batch; ++k) {
      taus_b[k] = rollout(mdp, params_b, roll_b, noise_b);
      xs_b[k] = embed(cfg.embedding, taus_b[k]);
      ret_b[k] = trajectory_return(taus_b[k], mdp.discount());
    }

    if (!u_a) {
      if (bandwidth <= 0.0) {
        std::vector<Point> pool(xs_a.begin(), xs_a.end());
        pool.insert(pool.end(), xs_b.begin(), xs_b.end());
        bandwidth = median_heuristic_bandwidth(pool);
      }
      const Kernel kernel = make_kernel(bandwidth);
      u_a = std::make_unique<RkhsFunction>(kernel, cfg.rkhs_cap);
      v_a = std::make_unique<RkhsFunction>(kernel, cfg.rkhs_cap);
      u_b = std::make_unique<RkhsFunction>(kernel, cfg.rkhs_cap);
      v_b = std::make_unique<RkhsFunction>(kernel, cfg.rkhs_cap);
      duals[0] = u_a.get(); duals[1] = v_a.get();
      duals[2] = u_b.get(); duals[3] = v_b.get();
    }
    if (!cfg.warm_start_duals && iter > 1) {
      for (RkhsFunction* f : duals) f->clear();
      pair_step_a = pair_step_b = 0;
    }

    // One shared pairing permutation keeps the two sweeps symmetric.
    std::vector<int> perm(batch);
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = batch - 1; k > 0; --k)
      std::swap(perm[k], perm[pair_rng.uniform_int(k + 1)]);

    // Dual sweep for one policy: sequential kernel-expansion ascent over the
    // sampled pairs (own embedding, other policy's embedding).
    auto dual_sweep = [&](RkhsFunction& u, RkhsFunction& v, const std::vector<Point>& own,
                          const std::vector<Point>& other, long& pair_step,
                          std::vector<double>& u_vals, double& z_bar, double& dual_est) {
      z_bar = 0.0;
      dual_est = 0.0;
      for (int k = 0; k < batch; ++k) {
        const Point& x = own[k];
        const Point& y = other[perm[k]];
        const double u_x = u(x);
        const double v_y = v(y);
        const double c = ground_cost(x, y, cfg.embedding.cost_kind);
        const double z = clamped_exp((u_x + v_y - c) / cfg.rho, &stats);
        u_vals[k] = u_x;
        z_bar += z;
        dual_est += u_x + v_y + cfg.rho * (1.0 - z);
        ++pair_step;
        const double alpha = prop2_alpha(
            u_x, v_y, c, cfg.rho,
            cfg.steps.rkhs_constant / std::sqrt(static_cast<double>(pair_step)),
            cfg.steps.rkhs_radius, &stats);
        u.append(x, alpha);
        v.append(y, alpha);
      }
      z_bar /= static_cast<double>(batch);
      dual_est /= static_cast<double>(batch);
    };

    std::vector<double> u_vals_a(batch), u_vals_b(batch);
    double z_bar_a = 0, z_bar_b = 0, dual_a = 0, dual_b = 0;
    dual_sweep(*u_a, *v_a, xs_a, xs_b, pair_step_a, u_vals_a, z_bar_a, dual_a);
    dual_sweep(*u_b, *v_b, xs_b, xs_a, pair_step_b, u_vals_b, z_bar_b, dual_b);

    // Batch-averaged policy step per policy, weights from the pre-update
    // dual values collected during the sweep.
    auto policy_step = [&](PolicyParams& params, const std::vector<Trajectory>& taus,
                           const std::vector<double>& rets, const std::vector<double>& u_vals,
                           double z_bar, ReturnBaseline& baseline) {
      Vector grad = Vector::Zero(params.theta.size());
      for (int k = 0; k < batch; ++k) {
        const double weight = baseline.shift(
            cfg.lambda * u_vals[k] - cfg.lambda * (cfg.rho * z_bar) + rets[k]);
        grad += score_function_grad(taus[k], params, weight);
      }
      params.theta += cfg.steps.theta * (grad / static_cast<double>(batch));
    };
    if (!cfg.freeze_theta) {
      policy_step(params_a, taus_a, ret_a, u_vals_a, z_bar_a, baseline_a);
      policy_step(params_b, taus_b, ret_b, u_vals_b, z_bar_b, baseline_b);
    }
    check_finite(params_a, iter);
    check_finite(params_b, iter);

    const double mean_ret_a =
        std::accumulate(ret_a.begin(), ret_a.end(), 0.0) / static_cast<double>(batch);
    const double mean_ret_b =
        std::accumulate(ret_b.begin(), ret_b.end(), 0.0) / static_cast<double>(batch);
    double mean_x_a = 0, mean_x_b = 0;
    for (int k = 0; k < batch; ++k) {
      mean_x_a += xs_a[k](0);
      mean_x_b += xs_b[k](0);
    }
    mean_x_a /= static_cast<double>(batch);
    mean_x_b /= static_cast<double>(batch);

    const double west = w_between.update(0.5 * (dual_a + dual_b));
    log.append({static_cast<double>(iter), mean_ret_a, mean_ret_b, west, mean_x_a,
                mean_x_b});
    if (probe) {
      IterationState state;
      state.iteration = iter;
      state.params_a = &params_a;
      state.params_b = &params_b;
      state.w_estimate = west;
      state.return_a = mean_ret_a;
      state.return_b = mean_ret_b;
      probe(state);
    }
  }
  return {std::move(params_a), std::move(params_b), std::move(log)};
}

}  // namespace wrl
