#include "wrl/embeddings.hpp"

#include "test_mdps.hpp"

#include "doctest.h"

using namespace wrl;

namespace {

Trajectory grid_trajectory(const std::vector<std::pair<int, int>>& cells) {
  Trajectory tau;
  for (std::size_t t = 0; t + 1 < cells.size(); ++t) {
    Action a;
    a.id = 0;
    tau.steps.push_back({point2(cells[t].first, cells[t].second), a, -1.0});
  }
  tau.final_state = point2(cells.back().first, cells.back().second);
  return tau;
}

long long binomial(int n, int k) {
  long long result = 1;
  for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

}  // namespace

TEST_CASE("visit distribution embedding") {
  const GridworldSpec grid = default_gridworld();
  const EmbeddingSpec spec = visit_distribution_spec(grid);
  CHECK(spec.dim() == 70);

  // Loitering in one cell for five steps gives a one-hot vector.
  const Trajectory loiter = grid_trajectory({{2, 3}, {2, 3}, {2, 3}, {2, 3}, {2, 3}, {2, 3}});
  const Point one_hot = embed(spec, loiter);
  CHECK(one_hot(grid.cell_index(2, 3)) == doctest::Approx(1.0));
  CHECK(one_hot.sum() == doctest::Approx(1.0));

  // Two cells, visited once each (one step from A to B).
  const Trajectory pair = grid_trajectory({{0, 0}, {1, 0}});
  const Point halves = embed(spec, pair);
  CHECK(halves(grid.cell_index(0, 0)) == doctest::Approx(0.5));
  CHECK(halves(grid.cell_index(1, 0)) == doctest::Approx(0.5));

  // Non-grid states are rejected.
  Trajectory off = grid_trajectory({{0, 0}, {1, 0}});
  off.steps[0].state = point2(0.5, 0.0);
  CHECK_THROWS_AS(embed(spec, off), std::invalid_argument);
  Trajectory empty;
  empty.final_state = point2(0, 0);
  CHECK_THROWS_AS(embed(spec, empty), std::invalid_argument);
}

TEST_CASE("mean-x and final-x embeddings") {
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::MeanX;
  Trajectory tau;
  Action a;
  a.id = 0;
  tau.steps.push_back({point2(0, 0), a, 0.0});
  tau.steps.push_back({point2(1, 0), a, 0.0});
  tau.final_state = point2(2, 0);
  CHECK(embed(spec, tau)(0) == doctest::Approx(1.0));

  spec.kind = EmbeddingKind::FinalX;
  CHECK(embed(spec, tau)(0) == doctest::Approx(2.0));
}

TEST_CASE("visit distributions stay on the simplex") {
  const GridworldSpec grid = default_gridworld();
  const GridworldMdp mdp(grid);
  const EmbeddingSpec spec = visit_distribution_spec(grid);
  RbfSoftmaxShape shape;
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x) shape.centers.push_back(point2(x, y));
  shape.actions = 4;
  const PolicyParams params = PolicyParams::rbf_softmax(std::move(shape));

  Rng rng(10);
  for (int episode = 0; episode < 1000; ++episode) {
    const Trajectory tau = rollout(mdp, params, rng);
    const Point p = embed(spec, tau);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
    // Determinism: embedding the same trajectory twice is bit-identical.
    CHECK((embed(spec, tau) - p).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("adjacent loiter embeddings sit at L1 distance 2") {
  const GridworldSpec grid = default_gridworld();
  const EmbeddingSpec spec = visit_distribution_spec(grid);
  const Point a = embed(spec, grid_trajectory({{4, 4}, {4, 4}, {4, 4}}));
  const Point b = embed(spec, grid_trajectory({{5, 4}, {5, 4}, {5, 4}}));
  CHECK(ground_cost(a, b, CostKind::L1) == doctest::Approx(2.0));
}

TEST_CASE("shortest path on the flat grid") {
  GridworldSpec flat;
  flat.heights = Eigen::MatrixXi::Zero(7, 10);
  flat.validate();
  const ShortestPathInfo info = grid_shortest_path(flat);
  CHECK(info.cost == 15);
  CHECK(info.path.size() == 16);
  CHECK(info.count == binomial(15, 6));  // all monotone staircases tie
  CHECK_THROWS_WITH_AS(target_measure_from_optimal_path(flat), doctest::Contains("ambiguous"),
                       std::runtime_error);
}

TEST_CASE("default terrain has a unique optimal path") {
  const GridworldSpec grid = default_gridworld();
  const ShortestPathInfo info = grid_shortest_path(grid);
  CHECK(info.cost == 15);
  CHECK(info.count == 1);

  const DiscreteMeasure target = target_measure_from_optimal_path(grid);
  REQUIRE(target.size() == 1);
  const Point& atom = target.atoms().front();
  CHECK(atom.size() == 70);
  CHECK(atom.sum() == doctest::Approx(1.0));
  CHECK(atom.maxCoeff() == doctest::Approx(1.0 / 16.0));
  // The corridor runs along the bottom row, then up the right column.
  for (int x = 0; x <= 9; ++x) CHECK(atom(grid.cell_index(x, 0)) == doctest::Approx(1.0 / 16.0));
  for (int y = 1; y <= 6; ++y) CHECK(atom(grid.cell_index(9, y)) == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("forced path on a 1x2 grid") {
  GridworldSpec tiny;
  tiny.width = 2;
  tiny.height = 1;
  tiny.heights = Eigen::MatrixXi::Zero(1, 2);
  tiny.timeout = 5;
  tiny.validate();
  const DiscreteMeasure target = target_measure_from_optimal_path(tiny);
  REQUIRE(target.size() == 1);
  CHECK(target.atoms().front()(0) == doctest::Approx(0.5));
  CHECK(target.atoms().front()(1) == doctest::Approx(0.5));
}
