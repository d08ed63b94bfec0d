#pragma once

#include "wrl/dual_stochastic.hpp"
#include "wrl/embeddings.hpp"
#include "wrl/entropic_ot.hpp"
#include "wrl/rl_core.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wrl {

// Learning-rate schedules. theta is a constant step; the dual steps decay as
// u / sqrt(i); the kernel-expansion coefficients use rkhs_constant / sqrt(i)
// projected onto [-rkhs_radius, rkhs_radius].
struct StepSchedules {
  double theta = 0.01;
  double u = 0.1;
  double v = 0.1;
  double rkhs_constant = 1.0;
  double rkhs_radius = 1.0;
};

struct WrlConfig {
  // Sign selects the direction: lambda < 0 attracts the policy's embedding
  // distribution toward the target, lambda > 0 repels, 0 reduces every
  // trainer to the plain policy-gradient loop.
  double lambda = -1.0;
  double rho = 1.0;
  EmbeddingSpec embedding;
  StepSchedules steps;
  long iterations = 1000;  // episodes for the single-trajectory trainers
  int batch_size = 100;    // rollouts per policy per iteration (pair trainer)
  std::uint64_t seed = 1;
  int checkpoint_every = 100;
  bool baseline = false;  // subtract a running-mean return baseline
  double baseline_rate = 0.05;
  double diag_ema = 0.05;  // smoothing for the logged transport estimate
  double mu_ema = 0.05;    // EMA rate for the embedding-distribution estimate
  ValueConvention convention = ValueConvention::KlProduct;
  OtConfig ot;                    // inner solver settings (rho is taken from above)
  bool warm_start_duals = true;   // pair trainer: keep u, v across iterations
  double kernel_bandwidth = 0.0;  // <= 0 selects the median heuristic
  std::size_t rkhs_cap = 5000;
  bool freeze_theta = false;  // diagnostic: run dual ascent only

  void validate() const;
};

// Per-checkpoint records; the first column is the iteration index and must
// be strictly increasing. Appending a non-finite value throws.
struct TrainLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  void append(std::vector<double> row);
};

struct TrainResult {
  PolicyParams params;
  TrainLog log;
};

struct PairTrainResult {
  PolicyParams params_a;
  PolicyParams params_b;
  TrainLog log;
};

// Raised when theta picks up a NaN or infinity; carries a JSON snapshot of
// the policy at the failing iteration for post-mortem dumps.
class NanAbort : public std::runtime_error {
 public:
  NanAbort(long iteration, std::string snapshot)
      : std::runtime_error("non-finite policy parameters at iteration " +
                           std::to_string(iteration)),
        iteration_(iteration),
        snapshot_(std::move(snapshot)) {}
  long iteration() const { return iteration_; }
  const std::string& snapshot() const { return snapshot_; }

 private:
  long iteration_;
  std::string snapshot_;
};

// Draws one target-measure sample in embedding space.
using NuSampler = std::function<Point(Rng&)>;

// Observation hook, called once per iteration after the updates. Pointers are
// only valid during the call.
struct IterationState {
  long iteration = 0;
  const PolicyParams* params_a = nullptr;
  const PolicyParams* params_b = nullptr;
  const Vector* dual_u = nullptr;
  const Vector* dual_v = nullptr;
  double w_estimate = 0.0;
  double return_a = 0.0;
  double return_b = 0.0;
};
using IterationProbe = std::function<void(const IterationState&)>;

struct RepulsiveHooks {
  // Policy B consumes a stream seeded like policy A's with the first action
  // dimension's noise negated; used by mirror-symmetry harnesses.
  bool mirror_noise_b = false;
};

// Fixed sub-stream ids so that, e.g., target sampling never perturbs the
// rollout stream (the lambda = 0 reductions compare bit-for-bit).
namespace streams {
inline constexpr std::uint64_t kRollout = 1;
inline constexpr std::uint64_t kNu = 2;
inline constexpr std::uint64_t kRolloutA = 11;
inline constexpr std::uint64_t kRolloutB = 12;
inline constexpr std::uint64_t kPairing = 13;
inline constexpr std::uint64_t kBandwidthRollout = 22;
inline constexpr std::uint64_t kBandwidthNu = 23;
}  // namespace streams

// Index of the nearest support atom under the given ground cost (lowest
// index wins ties).
int bin_to_support(const Point& x, const std::vector<Point>& support, CostKind kind);

// Plain episodic policy gradient; the reference the regularised trainers
// reduce to at lambda = 0.
TrainResult train_reinforce(const Mdp& mdp, PolicyParams params, const WrlConfig& cfg);

// Sampled-target trainer: kernel-expansion test functions u, v ascend the
// smoothed dual from one (embedding, target) sample per episode, and the
// policy steps along the score-function gradient weighted by
// lambda u(x) - lambda rho Z + R.
TrainResult train_alg1_continuous(const Mdp& mdp, PolicyParams params,
                                  const NuSampler& nu_sampler, const WrlConfig& cfg,
                                  const IterationProbe& probe = {});

// Finite-support trainer: maintains an EMA estimate of the policy's
// embedding distribution over `support`, re-solves the entropic transport
// problem each episode, and uses the centered left potential as the
// transport gradient.
TrainResult train_alg2_discrete(const Mdp& mdp, PolicyParams params,
                                const DiscreteMeasure& nu, const std::vector<Point>& support,
                                const WrlConfig& cfg, const IterationProbe& probe = {});

// Finite-support trainer, dual form: explicit dual vectors ascend from
// one-hot samples; the embedding distribution itself is never represented.
TrainResult train_alg3_dual_discrete(const Mdp& mdp, PolicyParams params,
                                     const DiscreteMeasure& nu,
                                     const std::vector<Point>& support, const WrlConfig& cfg,
                                     const IterationProbe& probe = {});

// Semi-discrete trainer for discrete targets with modest support: one dual
// vector v, updated with the analytic gradient of h.
TrainResult train_alg4_semidiscrete(const Mdp& mdp, PolicyParams params,
                                    const DiscreteMeasure& nu, const WrlConfig& cfg,
                                    const IterationProbe& probe = {});

// Two policies repel each other: each iteration rolls a batch per policy,
// takes the other policy's empirical embedded batch as the target, runs
// kernel-expansion dual ascent over sampled pairs, and steps both policies
// with batch-averaged weights. Requires lambda >= 0 intent (lambda < 0 would
// attract the policies to each other, which is allowed but unusual).
PairTrainResult train_repulsive_pair(const Mdp& mdp, PolicyParams params_a,
                                     PolicyParams params_b, const WrlConfig& cfg,
                                     const IterationProbe& probe = {},
                                     const RepulsiveHooks& hooks = {});

}  // namespace wrl
