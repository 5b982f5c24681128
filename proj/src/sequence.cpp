#include "subgoal/sequence.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace subgoal {

bool SubgoalSequence::contains(int item) const {
  return std::find(items.begin(), items.end(), item) != items.end();
}

std::string SubgoalSequence::key() const {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(items[i]);
  }
  out += '|';
  out += dest_glyph(dest);
  return out;
}

std::string SubgoalSequence::items_text() const {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(items[i]);
  }
  return out;
}

SubgoalSequence SubgoalSequence::from_key(std::string_view key) {
  const auto bar = key.find('|');
  if (bar == std::string_view::npos) throw InputError("bad sequence key '" + std::string(key) + "'");
  auto dest = parse_dest(key.substr(bar + 1));
  if (!dest) throw InputError("bad destination in key '" + std::string(key) + "'");
  SubgoalSequence g;
  g.dest = *dest;
  std::string_view rest = key.substr(0, bar);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view tok = rest.substr(0, comma);
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw InputError("bad item in key '" + std::string(key) + "'");
    g.items.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (!is_row_ordered(g.items)) throw InputError("items not row-ordered in '" + std::string(key) + "'");
  return g;
}

bool is_row_ordered(const std::vector<int>& items) {
  int prev_row = -1;
  for (int id : items) {
    if (id < 1 || id > kItemCount) return false;
    if (item_row(id) <= prev_row) return false;
    prev_row = item_row(id);
  }
  return true;
}

std::vector<Cell> goal_cells(const GridMap& map, const SubgoalSequence& g) {
  std::vector<Cell> out;
  out.reserve(g.items.size() + 1);
  for (int id : g.items) out.push_back(map.item_cell(id));
  out.push_back(map.dest_cell(g.dest));
  return out;
}

bool is_connected_path(const GridMap& map, const StateSequence& path) {
  if (path.empty()) return false;
  for (const Cell& c : path)
    if (!map.is_open(c)) return false;
  for (std::size_t t = 1; t < path.size(); ++t)
    if (!action_between(path[t - 1], path[t])) return false;
  return true;
}

nlohmann::json path_to_json(const StateSequence& path) {
  auto arr = nlohmann::json::array();
  for (const Cell& c : path) arr.push_back({c.x, c.y});
  return arr;
}

StateSequence path_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("path must be an array of [x,y] pairs");
  StateSequence out;
  out.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
      throw InputError("path state must be an [x,y] integer pair");
    out.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  return out;
}

nlohmann::json observation_to_json(const Observation& obs) {
  return {{"dest", std::string(1, dest_glyph(obs.dest))}, {"states", path_to_json(obs.states)}};
}

Observation observation_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dest") || !j.contains("states"))
    throw InputError("observation needs \"dest\" and \"states\"");
  if (!j["dest"].is_string()) throw InputError("observation dest must be a string");
  auto dest = parse_dest(j["dest"].get<std::string>());
  if (!dest) throw InputError("unknown destination " + j["dest"].dump());
  return {*dest, path_from_json(j["states"])};
}

std::vector<Observation> parse_observations(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("observation file is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw InputError("observation file must be a JSON array");
  std::vector<Observation> out;
  for (const auto& rec : j) out.push_back(observation_from_json(rec));
  return out;
}

std::vector<Observation> load_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open observation file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_observations(buf.str());
}

}  // namespace subgoal
