#include "subgoal/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace subgoal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-9;
constexpr int kMaxPathSteps = 1'000'000;

}  // namespace

ValueTable::ValueTable(const GridMap& map, Cell goal)
    : goal_(goal),
      width_(map.width()),
      height_(map.height()),
      values_(map.cell_count(), kNegInf),
      reachable_(map.cell_count(), 0) {}

bool ValueTable::reachable(Cell s) const {
  if (s.x < 0 || s.y < 0 || s.x >= width_ || s.y >= height_) return false;
  return reachable_[static_cast<std::size_t>(s.y * width_ + s.x)] != 0;
}

std::optional<double> ValueTable::value(Cell s) const {
  if (!reachable(s)) return std::nullopt;
  return values_[static_cast<std::size_t>(s.y * width_ + s.x)];
}

int ValueTable::distance(Cell s) const {
  return static_cast<int>(std::lround((kGoalReward - *value(s)) / kStepCost));
}

ValueTable plan_values(const GridMap& map, Cell goal) {
  ValueTable vt(map, goal);
  if (!map.is_open(goal)) return vt;
  vt.values_[map.index(goal)] = kGoalReward;

  // Gauss-Seidel sweeps of V(s) = max_a (-2 + V(s')); the goal is terminal.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
      const Cell s = map.cell_at(i);
      if (s == goal || map.is_wall(s)) continue;
      double best = kNegInf;
      for (Action a : kActions) {
        const Cell n = step(s, a);
        if (!map.is_open(n)) continue;
        best = std::max(best, -kStepCost + vt.values_[map.index(n)]);
      }
      if (best > vt.values_[i]) {
        vt.values_[i] = best;
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < map.cell_count(); ++i)
    vt.reachable_[i] = std::isfinite(vt.values_[i]) ? 1 : 0;
  return vt;
}

std::array<std::optional<double>, 3> action_values(const GridMap& map, const ValueTable& values, Cell s) {
  std::array<std::optional<double>, 3> q{};
  if (!map.is_open(s)) return q;
  for (Action a : kActions) {
    const Cell n = step(s, a);
    if (!map.is_open(n)) continue;
    if (auto v = values.value(n)) q[static_cast<int>(a)] = -kStepCost + *v;
  }
  return q;
}

ActionDistribution softmax_policy(const GridMap& map, const ValueTable& values, Cell s, double beta) {
  const auto q = action_values(map, values, s);
  double hi = kNegInf;
  for (const auto& v : q)
    if (v) hi = std::max(hi, *v);
  if (!std::isfinite(hi)) throw Error("goal unreachable");
  ActionDistribution dist;
  double total = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (!q[a]) continue;
    dist.prob[a] = std::exp(beta * (*q[a] - hi));
    total += dist.prob[a];
  }
  for (double& p : dist.prob) p /= total;
  return dist;
}

ActionDistribution softmax_policy(const GridMap& map, Cell goal, Cell s, double beta) {
  return softmax_policy(map, plan_values(map, goal), s, beta);
}

std::vector<Action> optimal_actions(const GridMap& map, const ValueTable& values, Cell s) {
  const auto q = action_values(map, values, s);
  double hi = kNegInf;
  for (const auto& v : q)
    if (v) hi = std::max(hi, *v);
  std::vector<Action> out;
  if (!std::isfinite(hi)) return out;
  for (Action a : kActions) {
    const auto& v = q[static_cast<int>(a)];
    if (v && *v >= hi - kTieTolerance) out.push_back(a);
  }
  return out;
}

Planner::Planner(GridMap map, double beta)
    : map_(std::move(map)), beta_(beta), entries_(std::make_unique<Entry[]>(map_.cell_count())) {
  if (!(beta >= 0.0)) throw InputError("beta must be non-negative");
}

const Planner::Entry& Planner::entry(Cell goal) const {
  if (!map_.is_open(goal)) throw InputError("goal cell is out of bounds or a wall");
  Entry& e = entries_[map_.index(goal)];
  std::call_once(e.once, [&] {
    e.values = plan_values(map_, goal);
    e.log_policy.assign(map_.cell_count(), {kNegInf, kNegInf, kNegInf});
    for (std::size_t i = 0; i < map_.cell_count(); ++i) {
      const Cell s = map_.cell_at(i);
      const auto q = action_values(map_, e.values, s);
      double hi = kNegInf;
      for (const auto& v : q)
        if (v) hi = std::max(hi, *v);
      if (!std::isfinite(hi)) continue;
      double total = 0.0;
      for (const auto& v : q)
        if (v) total += std::exp(beta_ * (*v - hi));
      const double log_total = std::log(total);
      for (int a = 0; a < 3; ++a)
        if (q[a]) e.log_policy[i][a] = beta_ * (*q[a] - hi) - log_total;
    }
  });
  return e;
}

const ValueTable& Planner::values(Cell goal) const { return entry(goal).values; }

const std::array<double, 3>& Planner::log_policy(Cell goal, Cell s) const {
  return entry(goal).log_policy[map_.index(s)];
}

Action optimal_step(const Planner& planner, Cell goal, Cell s, Rng& rng) {
  const auto best = optimal_actions(planner.map(), planner.values(goal), s);
  if (best.empty()) throw Error("goal unreachable");
  return best.size() == 1 ? best.front() : best[uniform_index(best.size(), rng)];
}

StateSequence generate_path(const Planner& planner, const SubgoalSequence& g, Cell start,
                            PolicyMode mode, Rng& rng) {
  const GridMap& map = planner.map();
  if (!map.is_open(start)) throw InputError("start cell is out of bounds or a wall");
  if (!is_row_ordered(g.items)) throw InputError("subgoal sequence is not row-ordered");
  const std::vector<Cell> goals = goal_cells(map, g);

  Cell from = start;
  for (const Cell& goal : goals) {
    if (!planner.values(goal).reachable(from))
      throw InputError("subgoal sequence " + g.key() + " is not achievable from the start");
    from = goal;
  }

  StateSequence path{start};
  Cell s = start;
  std::size_t current = 0;
  std::array<double, 3> logp{};
  while (true) {
    while (current < goals.size() && s == goals[current]) ++current;
    if (current == goals.size()) break;
    if (static_cast<int>(path.size()) > kMaxPathSteps) throw Error("path generation did not terminate");
    Action a;
    if (mode == PolicyMode::Optimal) {
      a = optimal_step(planner, goals[current], s, rng);
    } else {
      logp = planner.log_policy(goals[current], s);
      a = static_cast<Action>(sample_log_weights(logp, rng));
    }
    s = transition(map, s, a);
    path.push_back(s);
  }
  return path;
}

StateSequence generate_path(const GridMap& map, const SubgoalSequence& g, Cell start,
                            const PlannerConfig& cfg) {
  Planner planner(map, cfg.beta);
  Rng rng(cfg.seed);
  return generate_path(planner, g, start, cfg.mode, rng);
}

}  // namespace subgoal
