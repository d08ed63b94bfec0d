#include "wrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wrl {

void GridworldSpec::validate() const {
  if (width < 1 || height < 1 || width * height < 2)
    throw std::invalid_argument("gridworld: start and goal must be distinct cells");
  if (heights.rows() != height || heights.cols() != width)
    throw std::invalid_argument("gridworld: heights shape does not match grid");
  if (heights.minCoeff() < 0)
    throw std::invalid_argument("gridworld: heights must be non-negative");
  if (timeout < width - 1 + height - 1)
    throw std::invalid_argument("gridworld: timeout shorter than the start-goal distance");
}

GridworldSpec default_gridworld() {
  GridworldSpec spec;
  spec.heights.resize(7, 10);
  // Row 0 is the top of the grid. The bottom row and right column form the
  // only zero-height corridor.
  spec.heights << 1, 1, 1, 1, 1, 1, 1, 1, 1, 0,
                  1, 1, 2, 3, 3, 2, 1, 1, 1, 0,
                  1, 2, 4, 5, 5, 4, 2, 1, 1, 0,
                  1, 2, 5, 6, 6, 5, 2, 1, 1, 0,
                  1, 1, 3, 4, 4, 3, 1, 1, 1, 0,
                  1, 1, 1, 1, 1, 1, 1, 1, 1, 0,
                  0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  spec.validate();
  return spec;
}

GridworldSpec load_terrain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open terrain file: " + path);
  GridworldSpec spec;
  spec.heights.resize(spec.height, spec.width);
  for (int r = 0; r < spec.height; ++r) {
    std::string line;
    if (!std::getline(in, line))
      throw std::runtime_error("terrain file too short: " + path);
    std::istringstream row(line);
    for (int c = 0; c < spec.width; ++c) {
      long value = -1;
      if (!(row >> value) || value < 0)
        throw std::runtime_error("terrain file: bad entry at row " + std::to_string(r) +
                                 ", col " + std::to_string(c));
      spec.heights(r, c) = static_cast<int>(value);
    }
  }
  spec.validate();
  return spec;
}

StepResult gridworld_step(const GridworldSpec& spec, const Point& state, int action) {
  const int x = static_cast<int>(std::lround(state(0)));
  const int y = static_cast<int>(std::lround(state(1)));
  if (x == spec.width - 1 && y == spec.height - 1)
    throw std::invalid_argument("gridworld_step: stepping from the absorbing goal cell");
  int nx = x, ny = y;
  switch (action) {
    case GridUp: ny += 1; break;
    case GridDown: ny -= 1; break;
    case GridLeft: nx -= 1; break;
    case GridRight: nx += 1; break;
    default: throw std::invalid_argument("gridworld_step: invalid action id");
  }
  nx = std::clamp(nx, 0, spec.width - 1);
  ny = std::clamp(ny, 0, spec.height - 1);
  StepResult out;
  out.state = point2(nx, ny);
  out.reward = -1.0 - spec.z(nx, ny);
  out.absorbing = (nx == spec.width - 1 && ny == spec.height - 1);
  return out;
}

GridworldMdp::GridworldMdp(GridworldSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

StepResult GridworldMdp::step(const Point& state, const Action& action) const {
  const int x = static_cast<int>(std::lround(state(0)));
  const int y = static_cast<int>(std::lround(state(1)));
  if (x == spec_.width - 1 && y == spec_.height - 1) return {state, 0.0, true};
  return gridworld_step(spec_, state, action.id);
}

void TwoGoalSpec::validate() const {
  if ((g1 - g2).norm() == 0.0) throw std::invalid_argument("twogoal: goals must differ");
  if (horizon < 1) throw std::invalid_argument("twogoal: horizon must be >= 1");
  if (reward_scale <= 0.0 || step_clip <= 0.0)
    throw std::invalid_argument("twogoal: scale and clip must be > 0");
}

StepResult twogoal_step(const TwoGoalSpec& spec, const Point& state, const Vector& action) {
  if (action.size() != 2 || !action.allFinite())
    throw std::invalid_argument("twogoal_step: action must be a finite 2-vector");
  Vector move = action;
  const double norm = move.norm();
  if (norm > spec.step_clip) move *= spec.step_clip / norm;
  StepResult out;
  out.state = state + move;
  const double dist = std::min((out.state - spec.g1).norm(), (out.state - spec.g2).norm());
  out.reward = spec.reward_scale / (1.0 + dist);
  out.absorbing = false;
  return out;
}

TwoGoalMdp::TwoGoalMdp(TwoGoalSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

}  // namespace wrl
