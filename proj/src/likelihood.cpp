#include "subgoal/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace subgoal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double step_log_prob(const Planner& planner, Cell goal, Cell from, Cell to) {
  if (!planner.map().is_open(from) || !planner.map().is_open(to)) return kNegInf;
  const auto a = action_between(from, to);
  if (!a) return kNegInf;
  return planner.log_policy(goal, from)[static_cast<int>(*a)];
}

}  // namespace

std::optional<BoundaryVector> segment_boundaries(const GridMap& map, const StateSequence& path,
                                                 const SubgoalSequence& g) {
  if (path.empty()) return std::nullopt;
  const auto goals = goal_cells(map, g);
  BoundaryVector b{1};
  int prev = 1;
  for (const Cell& goal : goals) {
    // Smallest 1-based state index j >= prev with s_j == goal; b = j + 1.
    std::optional<int> found;
    for (int j = prev; j <= static_cast<int>(path.size()); ++j) {
      if (path[j - 1] == goal) {
        found = j;
        break;
      }
    }
    if (!found) return std::nullopt;
    prev = *found + 1;
    b.push_back(prev);
  }
  return b;
}

bool satisfies(const GridMap& map, const StateSequence& path, const SubgoalSequence& g) {
  const auto b = segment_boundaries(map, path, g);
  return b && b->back() - 1 == static_cast<int>(path.size());
}

double log_sequence_likelihood(const Planner& planner, const StateSequence& path,
                               const SubgoalSequence& g) {
  const GridMap& map = planner.map();
  const auto b = segment_boundaries(map, path, g);
  if (!b || b->back() - 1 != static_cast<int>(path.size())) return kNegInf;
  const auto goals = goal_cells(map, g);

  // Segment m covers the moves out of states s_j for j from the state where
  // goal m-1 was reached (or 1) up to the state before goal m is reached.
  double total = 0.0;
  for (std::size_t m = 0; m < goals.size(); ++m) {
    const int first = m == 0 ? 1 : (*b)[m] - 1;
    const int reached = (*b)[m + 1] - 1;
    for (int j = first; j < reached; ++j) {
      total += step_log_prob(planner, goals[m], path[j - 1], path[j]);
      if (total == kNegInf) return kNegInf;
    }
  }
  return total;
}

double sequence_likelihood(const Planner& planner, const StateSequence& path,
                           const SubgoalSequence& g) {
  return std::exp(log_sequence_likelihood(planner, path, g));
}

double sequence_likelihood(const GridMap& map, const StateSequence& path, const SubgoalSequence& g,
                           double beta) {
  Planner planner(map, beta);
  return sequence_likelihood(planner, path, g);
}

PrefixTracker::PrefixTracker(const Planner& planner, const SubgoalSequence& g, Cell start)
    : planner_(&planner), goals_(goal_cells(planner.map(), g)), state_(start) {
  absorb_reached_goals();
}

void PrefixTracker::absorb_reached_goals() {
  while (current_ < goals_.size() && state_ == goals_[current_]) ++current_;
}

void PrefixTracker::advance(Cell next) {
  if (log_likelihood_ != kNegInf) {
    // The agent stops at the destination; any further move is impossible.
    log_likelihood_ = finished() ? kNegInf
                                 : log_likelihood_ + step_log_prob(*planner_, goals_[current_], state_, next);
  }
  state_ = next;
  absorb_reached_goals();
}

double log_partial_likelihood(const Planner& planner, const StateSequence& prefix,
                              const SubgoalSequence& g) {
  if (prefix.empty()) return 0.0;
  PrefixTracker tracker(planner, g, prefix.front());
  for (std::size_t t = 1; t < prefix.size(); ++t) {
    tracker.advance(prefix[t]);
    if (tracker.log_likelihood() == kNegInf) break;
  }
  return tracker.log_likelihood();
}

double partial_sequence_likelihood(const Planner& planner, const StateSequence& prefix,
                                   const SubgoalSequence& g) {
  return std::exp(log_partial_likelihood(planner, prefix, g));
}

std::vector<SubgoalSequence> enumerate_candidates(const GridMap& map, Dest dest) {
  std::array<std::vector<int>, kRowCount> rows;
  for (int r = 0; r < kRowCount; ++r) rows[r] = map.items_in_row(r);

  std::vector<SubgoalSequence> out;
  for (int mask = 1; mask < (1 << kRowCount); ++mask) {
    std::vector<std::vector<int>> partial{{}};
    for (int r = 0; r < kRowCount; ++r) {
      if (!(mask & (1 << r))) continue;
      std::vector<std::vector<int>> next;
      for (const auto& p : partial)
        for (int id : rows[r]) {
          next.push_back(p);
          next.back().push_back(id);
        }
      partial = std::move(next);
    }
    for (auto& items : partial)
      if (!items.empty()) out.push_back({std::move(items), dest});
  }
  std::sort(out.begin(), out.end(), [](const SubgoalSequence& a, const SubgoalSequence& b) {
    return a.items.size() != b.items.size() ? a.items.size() < b.items.size() : a.items < b.items;
  });
  return out;
}

std::size_t candidate_count(const GridMap& map) {
  std::size_t total = 0;
  for (int mask = 1; mask < (1 << kRowCount); ++mask) {
    std::size_t prod = 1;
    for (int r = 0; r < kRowCount; ++r)
      if (mask & (1 << r)) prod *= map.items_in_row(r).size();
    total += prod;
  }
  return total;
}

}  // namespace subgoal
