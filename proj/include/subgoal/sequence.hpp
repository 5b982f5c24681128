#pragma once

#include <compare>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "subgoal/gridworld.hpp"

namespace subgoal {

// An ordered item list with its implicit terminal destination.
// Items are row-ordered with at most one item per row.
struct SubgoalSequence {
  std::vector<int> items;
  Dest dest = Dest::A;

  friend auto operator<=>(const SubgoalSequence&, const SubgoalSequence&) = default;

  bool contains(int item) const;
  // "2,8|B"; the empty list is "|B".
  std::string key() const;
  // "2 8"; used in CSV columns.
  std::string items_text() const;
  static SubgoalSequence from_key(std::string_view key);
};

// Strictly row-increasing items with ids in 1..9.
bool is_row_ordered(const std::vector<int>& items);

// Subgoal cells in visiting order, destination last.
std::vector<Cell> goal_cells(const GridMap& map, const SubgoalSequence& g);

using StateSequence = std::vector<Cell>;

// Consecutive states differ by exactly one legal action on the map.
bool is_connected_path(const GridMap& map, const StateSequence& path);

struct Observation {
  Dest dest = Dest::A;
  StateSequence states;
};

nlohmann::json path_to_json(const StateSequence& path);
StateSequence path_from_json(const nlohmann::json& j);
nlohmann::json observation_to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);
// Observation-set files are JSON arrays of {"dest": "B", "states": [[x,y], ...]}.
std::vector<Observation> parse_observations(std::string_view text);
std::vector<Observation> load_observations(const std::filesystem::path& path);

}  // namespace subgoal
