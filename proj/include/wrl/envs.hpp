#pragma once

#include "wrl/rl_core.hpp"

#include <string>

namespace wrl {

// 7x10 gridworld over an integer terrain. The agent starts in the lower-left
// cell and the upper-right cell is absorbing. States are (x, y) cell
// coordinates with y counted from the bottom; heights(row, col) is stored in
// file order, row 0 = top of the grid.
struct GridworldSpec {
  int width = 10;
  int height = 7;
  Eigen::MatrixXi heights;
  int timeout = 50;
  double timeout_penalty = -10.0;
  double discount = 1.0;

  int z(int x, int y) const { return heights(height - 1 - y, x); }
  // Row-major cell index counted from the top row, so indices match the
  // terrain-file layout.
  int cell_index(int x, int y) const { return (height - 1 - y) * width + x; }
  int cells() const { return width * height; }
  Point start() const { return point2(0, 0); }
  Point goal() const { return point2(width - 1, height - 1); }

  void validate() const;
};

// Built-in default terrain: a central ridge (heights 0-6) with a single
// zero-height corridor along the bottom row and right column.
GridworldSpec default_gridworld();

// Terrain file: `height` lines of `width` space-separated non-negative
// integers, line 0 = top of the grid.
GridworldSpec load_terrain(const std::string& path);

enum GridAction { GridUp = 0, GridDown = 1, GridLeft = 2, GridRight = 3 };

// One move. Off-grid moves keep the position (walls clamp) but still pay for
// the destination, i.e. the current cell. Reward is -1 - z(destination);
// absorbing iff the destination is the goal. Throws if called on the goal
// or with an invalid action id.
StepResult gridworld_step(const GridworldSpec& spec, const Point& state, int action);

class GridworldMdp : public Mdp {
 public:
  explicit GridworldMdp(GridworldSpec spec);
  Point reset() const override { return spec_.start(); }
  StepResult step(const Point& state, const Action& action) const override;
  ActionSpace action_space() const override { return DiscreteActions{4}; }
  int horizon() const override { return spec_.timeout; }
  double discount() const override { return spec_.discount; }
  double timeout_penalty() const override { return spec_.timeout_penalty; }
  const GridworldSpec& spec() const { return spec_; }

 private:
  GridworldSpec spec_;
};

// Planar environment with two goals; reward falls off inversely with the
// distance to the closest goal. Episodes never absorb, they run to the
// horizon.
struct TwoGoalSpec {
  Point g1 = point2(-2, 3);
  Point g2 = point2(2, 3);
  Point start = point2(0, 0);
  int horizon = 20;
  double reward_scale = 1.0;
  double step_clip = 0.5;
  double discount = 1.0;

  void validate() const;
};

// Displacement actions are clipped to step_clip in Euclidean norm; reward is
// scale / (1 + min distance to a goal) at the new state.
StepResult twogoal_step(const TwoGoalSpec& spec, const Point& state, const Vector& action);

class TwoGoalMdp : public Mdp {
 public:
  explicit TwoGoalMdp(TwoGoalSpec spec);
  Point reset() const override { return spec_.start; }
  StepResult step(const Point& state, const Action& action) const override {
    return twogoal_step(spec_, state, action.vec);
  }
  ActionSpace action_space() const override { return BoxActions{2}; }
  int horizon() const override { return spec_.horizon; }
  double discount() const override { return spec_.discount; }
  const TwoGoalSpec& spec() const { return spec_; }

 private:
  TwoGoalSpec spec_;
};

}  // namespace wrl
