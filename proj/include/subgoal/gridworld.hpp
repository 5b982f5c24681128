#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "subgoal/errors.hpp"

namespace subgoal {

// A grid cell. Zero-based, origin at the bottom-left; Up increases y.
struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Action : std::uint8_t { Up = 0, Left = 1, Right = 2 };
inline constexpr std::array<Action, 3> kActions{Action::Up, Action::Left, Action::Right};

enum class Dest : std::uint8_t { A = 0, B = 1, C = 2 };
inline constexpr std::array<Dest, 3> kDests{Dest::A, Dest::B, Dest::C};

inline constexpr int kItemCount = 9;
inline constexpr int kRowCount = 3;

// Items 1-3 are row 0, 4-6 row 1, 7-9 row 2.
constexpr int item_row(int item) { return (item - 1) / 3; }

char dest_glyph(Dest d);
std::optional<Dest> parse_dest(std::string_view s);
std::string_view action_name(Action a);

// Coordinate arithmetic only; no bounds or wall check.
Cell step(Cell c, Action a);

// If `to` is one move away from `from`, the action that realizes it.
std::optional<Action> action_between(Cell from, Cell to);

class MapError : public InputError {
 public:
  MapError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

class IllegalMove : public Error {
 public:
  IllegalMove() : Error("illegal move") {}
};

// Warehouse geometry. Immutable once built; cheap to copy.
class GridMap {
 public:
  GridMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t cell_count() const { return walls_.size(); }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y * width_ + c.x); }
  Cell cell_at(std::size_t i) const {
    return {static_cast<int>(i) % width_, static_cast<int>(i) / width_};
  }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool is_wall(Cell c) const { return walls_[index(c)]; }
  bool is_open(Cell c) const { return in_bounds(c) && !is_wall(c); }

  void set_wall(Cell c, bool wall = true);
  void add_start(Cell c);
  void set_item(int item, Cell c);
  void set_destination(Dest d, Cell c);
  void set_helper_start(Cell c);

  const std::vector<Cell>& starts() const { return starts_; }
  std::optional<Cell> item(int item) const;
  // Throws InputError when the item is not on the map.
  Cell item_cell(int item) const;
  std::optional<Cell> destination(Dest d) const { return dests_[static_cast<int>(d)]; }
  // Throws InputError when the destination is not on the map.
  Cell dest_cell(Dest d) const;
  std::optional<Cell> helper_start() const { return helper_; }

  std::optional<int> item_at(Cell c) const;
  std::optional<Dest> destination_at(Cell c) const;
  // Item ids present in a row (0-based), ascending.
  std::vector<int> items_in_row(int row) const;

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  void require_open(Cell c) const;

  int width_;
  int height_;
  std::vector<bool> walls_;
  std::vector<Cell> starts_;
  std::array<std::optional<Cell>, kItemCount> items_{};
  std::array<std::optional<Cell>, 3> dests_{};
  std::optional<Cell> helper_;
};

// Parses the line-grid map format: top line is the top row; glyphs
// '.' open, '#' wall, 'S' start, '1'-'9' item, 'A'/'B'/'C' destination,
// 'H' helper start. Validates the warehouse layout.
GridMap load_map(std::string_view text);
GridMap load_map_file(const std::filesystem::path& path);
std::string serialize_map(const GridMap& map);

std::string_view canonical_map_text();
const GridMap& canonical_map();

// Actions whose successor is in bounds and not a wall, in Up/Left/Right order.
std::vector<Action> available_actions(const GridMap& map, Cell s);
// Throws IllegalMove when `a` is not available in `s`.
Cell transition(const GridMap& map, Cell s, Action a);

}  // namespace subgoal
