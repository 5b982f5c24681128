#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "subgoal/gridworld.hpp"
#include "subgoal/random.hpp"
#include "subgoal/sequence.hpp"

namespace subgoal {

inline constexpr double kGoalReward = 100.0;
inline constexpr double kStepCost = 2.0;

// State values for one local goal MDP with gamma = 1. Only states that can
// still reach the goal carry a value; V(goal) = 100.
class ValueTable {
 public:
  ValueTable() = default;
  ValueTable(const GridMap& map, Cell goal);

  Cell goal() const { return goal_; }
  bool reachable(Cell s) const;
  std::optional<double> value(Cell s) const;
  // Steps to the goal along a shortest path; requires reachable(s).
  int distance(Cell s) const;

 private:
  friend ValueTable plan_values(const GridMap& map, Cell goal);
  Cell goal_{};
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> reachable_;
};

// Value iteration to the Bellman fixed point.
ValueTable plan_values(const GridMap& map, Cell goal);

// Q(s, a) = -2 + V(s') for actions whose successor can still reach the goal;
// nullopt for inadmissible actions.
std::array<std::optional<double>, 3> action_values(const GridMap& map, const ValueTable& values, Cell s);

struct ActionDistribution {
  std::array<double, 3> prob{};
  double operator[](Action a) const { return prob[static_cast<int>(a)]; }
};

// P(a | s, goal) proportional to exp(beta * Q). Throws Error("goal unreachable")
// when no admissible action exists.
ActionDistribution softmax_policy(const GridMap& map, const ValueTable& values, Cell s, double beta);
ActionDistribution softmax_policy(const GridMap& map, Cell goal, Cell s, double beta);

// Admissible actions attaining max Q.
std::vector<Action> optimal_actions(const GridMap& map, const ValueTable& values, Cell s);

// Per-goal value tables and log-softmax policies for one map and beta,
// computed lazily. Safe for concurrent readers; each goal initializes once.
class Planner {
 public:
  Planner(GridMap map, double beta);
  Planner(const Planner&) = delete;
  Planner& operator=(const Planner&) = delete;

  const GridMap& map() const { return map_; }
  double beta() const { return beta_; }

  const ValueTable& values(Cell goal) const;
  // log P(a | s, goal) for Up/Left/Right; -inf for inadmissible actions.
  const std::array<double, 3>& log_policy(Cell goal, Cell s) const;

 private:
  struct Entry {
    std::once_flag once;
    ValueTable values;
    std::vector<std::array<double, 3>> log_policy;
  };
  const Entry& entry(Cell goal) const;

  GridMap map_;
  double beta_;
  std::unique_ptr<Entry[]> entries_;
};

enum class PolicyMode { Softmax, Optimal };

struct PlannerConfig {
  double beta = 6.0;
  PolicyMode mode = PolicyMode::Softmax;
  std::uint64_t seed = 0;
};

// Hierarchical agent: heads for the current subgoal and advances when it is
// reached. Softmax mode samples from the log policy; optimal mode picks among
// argmax-Q actions uniformly. Throws InputError for unachievable sequences.
StateSequence generate_path(const Planner& planner, const SubgoalSequence& g, Cell start,
                            PolicyMode mode, Rng& rng);
StateSequence generate_path(const GridMap& map, const SubgoalSequence& g, Cell start,
                            const PlannerConfig& cfg);

// Chooses one argmax-Q action toward `goal`, ties broken uniformly.
Action optimal_step(const Planner& planner, Cell goal, Cell s, Rng& rng);

}  // namespace subgoal
