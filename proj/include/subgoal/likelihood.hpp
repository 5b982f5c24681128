#pragma once

#include <optional>
#include <vector>

#include "subgoal/planner.hpp"
#include "subgoal/sequence.hpp"

namespace subgoal {

// 1-based time indices; b[0] = 1 and b[m] is the first t after b[m-1] with
// s_{t-1} equal to the m-th goal (items, then the destination).
using BoundaryVector = std::vector<int>;

// nullopt when the path does not achieve every goal in order.
std::optional<BoundaryVector> segment_boundaries(const GridMap& map, const StateSequence& path,
                                                 const SubgoalSequence& g);

// True iff every goal is achieved in order and the path stops on its first
// arrival at the destination.
bool satisfies(const GridMap& map, const StateSequence& path, const SubgoalSequence& g);

// log P(s | g). Each transition is scored under the goal the agent was
// pursuing when it left that state; -inf when the path does not satisfy g.
double log_sequence_likelihood(const Planner& planner, const StateSequence& path,
                               const SubgoalSequence& g);
double sequence_likelihood(const Planner& planner, const StateSequence& path,
                           const SubgoalSequence& g);
double sequence_likelihood(const GridMap& map, const StateSequence& path, const SubgoalSequence& g,
                           double beta);

// Incremental form of the partial-path likelihood P(s_{1:t} | g, d).
class PrefixTracker {
 public:
  PrefixTracker(const Planner& planner, const SubgoalSequence& g, Cell start);

  // Scores the move from the current state to `next`.
  void advance(Cell next);
  double log_likelihood() const { return log_likelihood_; }
  Cell state() const { return state_; }
  // Index into the goal list of the goal currently pursued.
  std::size_t current_goal() const { return current_; }
  bool finished() const { return current_ == goals_.size(); }

 private:
  void absorb_reached_goals();

  const Planner* planner_;
  std::vector<Cell> goals_;
  Cell state_;
  std::size_t current_ = 0;
  double log_likelihood_ = 0.0;
};

// Product of policy factors along a prefix that need not reach the
// destination. Zero once the prefix leaves the region from which the
// pursued goal can still be reached.
double log_partial_likelihood(const Planner& planner, const StateSequence& prefix,
                              const SubgoalSequence& g);
double partial_sequence_likelihood(const Planner& planner, const StateSequence& prefix,
                                   const SubgoalSequence& g);

// All row-ordered lists of 1-3 items, one per row, ending at `dest`;
// shorter lists first, then lexicographic.
std::vector<SubgoalSequence> enumerate_candidates(const GridMap& map, Dest dest);
// Sum over nonempty row subsets of the product of row sizes.
std::size_t candidate_count(const GridMap& map);

}  // namespace subgoal
