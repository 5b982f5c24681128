#include "subgoal/gridworld.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace subgoal {

namespace {

constexpr std::string_view kCanonicalMap =
    ".A...B...C.\n"
    "...........\n"
    "...........\n"
    "..7..8..9..\n"
    "H..........\n"
    "...........\n"
    "..4..5..6..\n"
    "...........\n"
    "...........\n"
    "..1..2..3..\n"
    "...........\n"
    "...........\n"
    "SSSSSSSSSSS\n";

struct Located {
  Cell cell;
  int line;
  int column;
};

}  // namespace

char dest_glyph(Dest d) { return static_cast<char>('A' + static_cast<int>(d)); }

std::optional<Dest> parse_dest(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  switch (s[0]) {
    case 'A': return Dest::A;
    case 'B': return Dest::B;
    case 'C': return Dest::C;
    default: return std::nullopt;
  }
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Left: return "left";
    case Action::Right: return "right";
  }
  return "?";
}

Cell step(Cell c, Action a) {
  switch (a) {
    case Action::Up: return {c.x, c.y + 1};
    case Action::Left: return {c.x - 1, c.y};
    case Action::Right: return {c.x + 1, c.y};
  }
  return c;
}

std::optional<Action> action_between(Cell from, Cell to) {
  for (Action a : kActions)
    if (step(from, a) == to) return a;
  return std::nullopt;
}

MapError::MapError(int line, int column, const std::string& message)
    : InputError(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                ": " + message
                          : message),
      line_(line),
      column_(column),
      message_(message) {}

GridMap::GridMap(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InputError("map dimensions must be positive");
  walls_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), false);
}

void GridMap::require_open(Cell c) const {
  if (!is_open(c)) throw InputError("cell is out of bounds or a wall");
}

void GridMap::set_wall(Cell c, bool wall) {
  if (!in_bounds(c)) throw InputError("wall out of bounds");
  walls_[index(c)] = wall;
}

void GridMap::add_start(Cell c) {
  require_open(c);
  starts_.push_back(c);
}

void GridMap::set_item(int item, Cell c) {
  if (item < 1 || item > kItemCount) throw InputError("item id out of range");
  require_open(c);
  items_[item - 1] = c;
}

void GridMap::set_destination(Dest d, Cell c) {
  require_open(c);
  dests_[static_cast<int>(d)] = c;
}

void GridMap::set_helper_start(Cell c) {
  require_open(c);
  helper_ = c;
}

std::optional<Cell> GridMap::item(int item) const {
  if (item < 1 || item > kItemCount) return std::nullopt;
  return items_[item - 1];
}

Cell GridMap::item_cell(int item) const {
  auto c = this->item(item);
  if (!c) throw InputError("item " + std::to_string(item) + " is not on the map");
  return *c;
}

Cell GridMap::dest_cell(Dest d) const {
  auto c = destination(d);
  if (!c) throw InputError(std::string("destination ") + dest_glyph(d) + " is not on the map");
  return *c;
}

std::optional<int> GridMap::item_at(Cell c) const {
  for (int i = 0; i < kItemCount; ++i)
    if (items_[i] == c) return i + 1;
  return std::nullopt;
}

std::optional<Dest> GridMap::destination_at(Cell c) const {
  for (Dest d : kDests)
    if (dests_[static_cast<int>(d)] == c) return d;
  return std::nullopt;
}

std::vector<int> GridMap::items_in_row(int row) const {
  std::vector<int> out;
  for (int id = row * 3 + 1; id <= row * 3 + 3; ++id)
    if (items_[id - 1]) out.push_back(id);
  return out;
}

GridMap load_map(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::string line;
    std::istringstream in{std::string(text)};
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  if (lines.empty()) throw MapError(0, 0, "empty map document");

  const int height = static_cast<int>(lines.size());
  const int width = static_cast<int>(lines.front().size());
  if (width == 0) throw MapError(1, 1, "empty first line");

  GridMap map(width, height);
  std::array<std::optional<Located>, kItemCount> items{};
  std::array<std::optional<Located>, 3> dests{};
  std::optional<Located> helper;
  std::vector<Located> starts;

  for (int li = 0; li < height; ++li) {
    const std::string& row = lines[li];
    const int line_no = li + 1;
    if (static_cast<int>(row.size()) != width)
      throw MapError(line_no, std::min<int>(static_cast<int>(row.size()), width) + 1,
                     "line length " + std::to_string(row.size()) + " differs from width " +
                         std::to_string(width));
    const int y = height - 1 - li;
    for (int x = 0; x < width; ++x) {
      const char g = row[x];
      const Located here{{x, y}, line_no, x + 1};
      if (g == '.') continue;
      if (g == '#') {
        map.set_wall(here.cell);
      } else if (g == 'S') {
        starts.push_back(here);
      } else if (g >= '1' && g <= '9') {
        auto& slot = items[g - '1'];
        if (slot) throw MapError(line_no, x + 1, std::string("duplicated item ") + g);
        slot = here;
      } else if (g >= 'A' && g <= 'C') {
        auto& slot = dests[g - 'A'];
        if (slot) throw MapError(line_no, x + 1, std::string("duplicated destination ") + g);
        slot = here;
      } else if (g == 'H') {
        if (helper) throw MapError(line_no, x + 1, "duplicated helper start");
        helper = here;
      } else {
        throw MapError(line_no, x + 1, std::string("malformed glyph '") + g + "'");
      }
    }
  }

  for (int d = 0; d < 3; ++d)
    if (!dests[d])
      throw MapError(0, 0, std::string("missing destination ") + static_cast<char>('A' + d));
  if (starts.empty()) throw MapError(0, 0, "missing start");

  // Row layout: each id group shares one y, groups strictly increase in y.
  std::array<std::optional<int>, kRowCount> row_y{};
  std::optional<int> last_row_y;
  for (int row = 0; row < kRowCount; ++row) {
    for (int id = row * 3 + 1; id <= row * 3 + 3; ++id) {
      const auto& it = items[id - 1];
      if (!it) continue;
      if (!row_y[row]) {
        if (last_row_y && it->cell.y <= *last_row_y)
          throw MapError(it->line, it->column, "row ordering violated");
        row_y[row] = it->cell.y;
      } else if (it->cell.y != *row_y[row]) {
        throw MapError(it->line, it->column,
                       "item " + std::to_string(id) + " not aligned with its row");
      }
    }
    if (row_y[row]) last_row_y = row_y[row];
  }
  std::optional<int> lowest;
  for (const auto& y : row_y)
    if (y && !lowest) lowest = y;

  if (last_row_y)
    for (const auto& d : dests)
      if (d->cell.y <= *last_row_y)
        throw MapError(d->line, d->column, "destination not above the item rows");
  if (lowest)
    for (const auto& s : starts)
      if (s.cell.y >= *lowest) throw MapError(s.line, s.column, "start not below the item rows");
  if (helper && row_y[1] && row_y[2] &&
      !(helper->cell.y > *row_y[1] && helper->cell.y < *row_y[2]))
    throw MapError(helper->line, helper->column, "helper start not between rows 2 and 3");

  // Starts are ordered left to right, bottom row first.
  std::sort(starts.begin(), starts.end(), [](const Located& a, const Located& b) {
    return a.cell.y != b.cell.y ? a.cell.y < b.cell.y : a.cell.x < b.cell.x;
  });
  for (const auto& s : starts) map.add_start(s.cell);
  for (int id = 1; id <= kItemCount; ++id)
    if (items[id - 1]) map.set_item(id, items[id - 1]->cell);
  for (Dest d : kDests) map.set_destination(d, dests[static_cast<int>(d)]->cell);
  if (helper) map.set_helper_start(helper->cell);
  return map;
}

GridMap load_map_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open map file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_map(buf.str());
}

std::string serialize_map(const GridMap& map) {
  std::string out;
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      const Cell c{x, y};
      char g = map.is_wall(c) ? '#' : '.';
      if (auto item = map.item_at(c)) g = static_cast<char>('0' + *item);
      if (auto d = map.destination_at(c)) g = dest_glyph(*d);
      if (map.helper_start() == c) g = 'H';
      if (std::find(map.starts().begin(), map.starts().end(), c) != map.starts().end()) g = 'S';
      out.push_back(g);
    }
    out.push_back('\n');
  }
  return out;
}

std::string_view canonical_map_text() { return kCanonicalMap; }

const GridMap& canonical_map() {
  static const GridMap map = load_map(kCanonicalMap);
  return map;
}

std::vector<Action> available_actions(const GridMap& map, Cell s) {
  std::vector<Action> out;
  out.reserve(3);
  for (Action a : kActions)
    if (map.is_open(step(s, a))) out.push_back(a);
  return out;
}

Cell transition(const GridMap& map, Cell s, Action a) {
  const Cell next = step(s, a);
  if (!map.is_open(s) || !map.is_open(next)) throw IllegalMove();
  return next;
}

}  // namespace subgoal
