#include "wrl/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace wrl {

EmbeddingKind embedding_kind_from_string(const std::string& name) {
  if (name == "visit_distribution") return EmbeddingKind::VisitDistribution;
  if (name == "mean_x") return EmbeddingKind::MeanX;
  if (name == "final_x") return EmbeddingKind::FinalX;
  throw std::invalid_argument("unknown embedding kind: " + name);
}

std::string to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::VisitDistribution: return "visit_distribution";
    case EmbeddingKind::MeanX: return "mean_x";
    case EmbeddingKind::FinalX: return "final_x";
  }
  return "?";
}

EmbeddingSpec visit_distribution_spec(const GridworldSpec& grid, CostKind cost) {
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::VisitDistribution;
  spec.cost_kind = cost;
  spec.grid_width = grid.width;
  spec.grid_height = grid.height;
  return spec;
}

namespace {

int cell_of_state(const EmbeddingSpec& spec, const Point& state) {
  if (state.size() != 2)
    throw std::invalid_argument("embed: visit distribution needs 2-d grid states");
  const double xr = std::round(state(0)), yr = std::round(state(1));
  if (std::abs(state(0) - xr) > 1e-9 || std::abs(state(1) - yr) > 1e-9)
    throw std::invalid_argument("embed: state is not a grid cell");
  const int x = static_cast<int>(xr), y = static_cast<int>(yr);
  if (x < 0 || x >= spec.grid_width || y < 0 || y >= spec.grid_height)
    throw std::invalid_argument("embed: state outside the grid");
  return (spec.grid_height - 1 - y) * spec.grid_width + x;
}

}  // namespace

Point embed(const EmbeddingSpec& spec, const Trajectory& tau) {
  if (tau.steps.empty()) throw std::invalid_argument("embed: empty trajectory");
  switch (spec.kind) {
    case EmbeddingKind::VisitDistribution: {
      if (spec.grid_width < 1 || spec.grid_height < 1)
        throw std::invalid_argument("embed: visit distribution needs grid geometry");
      Point visits = Point::Zero(spec.grid_width * spec.grid_height);
      for (const TimeStep& step : tau.steps) visits(cell_of_state(spec, step.state)) += 1.0;
      visits(cell_of_state(spec, tau.final_state)) += 1.0;
      return visits / visits.sum();
    }
    case EmbeddingKind::MeanX: {
      double total = tau.final_state(0);
      for (const TimeStep& step : tau.steps) total += step.state(0);
      return point1(total / static_cast<double>(tau.steps.size() + 1));
    }
    case EmbeddingKind::FinalX:
      return point1(tau.final_state(0));
  }
  throw std::logic_error("embed: unknown kind");
}

ShortestPathInfo grid_shortest_path(const GridworldSpec& spec) {
  spec.validate();
  const int cells = spec.cells();
  const long long inf = std::numeric_limits<long long>::max() / 4;
  const int start = spec.cell_index(0, 0);
  const int goal = spec.cell_index(spec.width - 1, spec.height - 1);

  auto neighbours = [&](int cell) {
    const int row = cell / spec.width, col = cell % spec.width;
    std::vector<int> out;
    if (row > 0) out.push_back(cell - spec.width);
    if (row < spec.height - 1) out.push_back(cell + spec.width);
    if (col > 0) out.push_back(cell - 1);
    if (col < spec.width - 1) out.push_back(cell + 1);
    return out;
  };
  auto edge_cost = [&](int to) {
    const int row = to / spec.width, col = to % spec.width;
    return 1LL + spec.heights(row, col);
  };

  std::vector<long long> dist(cells, inf);
  dist[start] = 0;
  using Entry = std::pair<long long, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  heap.push({0, start});
  while (!heap.empty()) {
    auto [d, cell] = heap.top();
    heap.pop();
    if (d > dist[cell]) continue;
    for (int next : neighbours(cell)) {
      const long long nd = d + edge_cost(next);
      if (nd < dist[next]) {
        dist[next] = nd;
        heap.push({nd, next});
      }
    }
  }

  // Count optimal paths over the shortest-path DAG (edge costs are >= 1, so
  // ordering nodes by distance is a topological order). Saturating adds: we
  // only need 1 vs. many.
  const long long cap = 1LL << 50;
  std::vector<long long> count(cells, 0);
  std::vector<int> order(cells);
  for (int i = 0; i < cells; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return dist[a] < dist[b]; });
  count[start] = 1;
  for (int cell : order) {
    if (count[cell] == 0) continue;
    for (int next : neighbours(cell))
      if (dist[cell] + edge_cost(next) == dist[next])
        count[next] = std::min(cap, count[next] + count[cell]);
  }

  ShortestPathInfo info;
  info.cost = dist[goal];
  info.count = count[goal];
  // Backtrack one optimal path, lowest predecessor index first for
  // determinism.
  std::vector<int> cells_on_path{goal};
  int cur = goal;
  while (cur != start) {
    int pick = -1;
    for (int prev : neighbours(cur))
      if (dist[prev] + edge_cost(cur) == dist[cur] && count[prev] > 0 &&
          (pick < 0 || prev < pick))
        pick = prev;
    cur = pick;
    cells_on_path.push_back(cur);
  }
  std::reverse(cells_on_path.begin(), cells_on_path.end());
  for (int cell : cells_on_path) {
    const int row = cell / spec.width, col = cell % spec.width;
    info.path.emplace_back(col, spec.height - 1 - row);
  }
  return info;
}

namespace {

// Depth-first enumeration of optimal paths, stopping at `limit`.
void enumerate_optimal_paths(const GridworldSpec& spec, const std::vector<long long>& dist,
                             int cell, int goal, std::vector<int>& prefix,
                             std::vector<std::vector<int>>& out, std::size_t limit) {
  if (out.size() >= limit) return;
  prefix.push_back(cell);
  if (cell == goal) {
    out.push_back(prefix);
  } else {
    const int row = cell / spec.width, col = cell % spec.width;
    const int candidates[4] = {row > 0 ? cell - spec.width : -1,
                               row < spec.height - 1 ? cell + spec.width : -1,
                               col > 0 ? cell - 1 : -1,
                               col < spec.width - 1 ? cell + 1 : -1};
    for (int next : candidates) {
      if (next < 0) continue;
      const long long cost = 1LL + spec.heights(next / spec.width, next % spec.width);
      if (dist[cell] + cost == dist[next])
        enumerate_optimal_paths(spec, dist, next, goal, prefix, out, limit);
    }
  }
  prefix.pop_back();
}

std::string format_path(const GridworldSpec& spec, const std::vector<int>& cells) {
  std::ostringstream os;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const int row = cells[i] / spec.width, col = cells[i] % spec.width;
    if (i) os << " -> ";
    os << "(" << col << "," << spec.height - 1 - row << ")";
  }
  return os.str();
}

}  // namespace

DiscreteMeasure target_measure_from_optimal_path(const GridworldSpec& spec) {
  const ShortestPathInfo info = grid_shortest_path(spec);
  if (info.count != 1) {
    // Rebuild distances for the tie enumeration; cheap at this grid size.
    std::vector<long long> dist;
    const int cells = spec.cells();
    const long long inf = std::numeric_limits<long long>::max() / 4;
    dist.assign(cells, inf);
    const int start = spec.cell_index(0, 0);
    const int goal = spec.cell_index(spec.width - 1, spec.height - 1);
    using Entry = std::pair<long long, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[start] = 0;
    heap.push({0, start});
    while (!heap.empty()) {
      auto [d, cell] = heap.top();
      heap.pop();
      if (d > dist[cell]) continue;
      const int row = cell / spec.width, col = cell % spec.width;
      const int candidates[4] = {row > 0 ? cell - spec.width : -1,
                                 row < spec.height - 1 ? cell + spec.width : -1,
                                 col > 0 ? cell - 1 : -1,
                                 col < spec.width - 1 ? cell + 1 : -1};
      for (int next : candidates) {
        if (next < 0) continue;
        const long long nd = d + 1 + spec.heights(next / spec.width, next % spec.width);
        if (nd < dist[next]) {
          dist[next] = nd;
          heap.push({nd, next});
        }
      }
    }
    std::vector<std::vector<int>> ties;
    std::vector<int> prefix;
    enumerate_optimal_paths(spec, dist, start, goal, prefix, ties, 4);
    std::ostringstream msg;
    msg << "target measure is ambiguous: " << info.count
        << " optimal paths tie (cost " << info.cost << "):";
    for (const auto& path : ties) msg << "\n  " << format_path(spec, path);
    if (info.count > static_cast<long long>(ties.size())) msg << "\n  ...";
    throw std::runtime_error(msg.str());
  }

  Point visits = Point::Zero(spec.cells());
  for (const auto& [x, y] : info.path) visits(spec.cell_index(x, y)) += 1.0;
  visits /= visits.sum();
  return DiscreteMeasure::dirac(std::move(visits));
}

}  // namespace wrl
