#pragma once

#include "wrl/envs.hpp"
#include "wrl/measures.hpp"
#include "wrl/rl_core.hpp"

#include <utility>
#include <vector>

namespace wrl {

enum class EmbeddingKind { VisitDistribution, MeanX, FinalX };

EmbeddingKind embedding_kind_from_string(const std::string& name);
std::string to_string(EmbeddingKind kind);

// Trajectory-to-point mapping into the metric space the transport cost lives
// on. VisitDistribution needs the grid geometry (cells are indexed row-major
// from the top row, matching the terrain file).
struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::MeanX;
  CostKind cost_kind = CostKind::L1;
  int grid_width = 0;
  int grid_height = 0;

  int dim() const {
    return kind == EmbeddingKind::VisitDistribution ? grid_width * grid_height : 1;
  }
};

EmbeddingSpec visit_distribution_spec(const GridworldSpec& grid,
                                      CostKind cost = CostKind::L1);

// VisitDistribution: per-cell visit counts over the full state path
// (including the final state), normalised by the path length -- a point on
// the probability simplex. MeanX: mean x-coordinate over the path. FinalX:
// x-coordinate of the last state.
Point embed(const EmbeddingSpec& spec, const Trajectory& tau);

struct ShortestPathInfo {
  long long cost = 0;                     // sum of 1 + z(destination), exact integers
  long long count = 0;                    // number of distinct optimal paths
  std::vector<std::pair<int, int>> path;  // one optimal path as (x, y) cells
};

// Cheapest start-to-goal path over the grid graph with edge cost
// 1 + z(destination), plus the number of ties (exact integer arithmetic).
ShortestPathInfo grid_shortest_path(const GridworldSpec& spec);

// Dirac measure on the VisitDistribution embedding of the unique optimal
// path. Throws when several paths tie, listing a few of them -- the target
// would be ambiguous.
DiscreteMeasure target_measure_from_optimal_path(const GridworldSpec& spec);

}  // namespace wrl
