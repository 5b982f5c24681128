#include "subgoal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace subgoal {

namespace {

SubgoalSequence list(std::vector<int> items, Dest d) { return {std::move(items), d}; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<int> parse_items_text(const std::string& text) {
  std::vector<int> items;
  std::istringstream in(text);
  int v = 0;
  while (in >> v) items.push_back(v);
  if (!in.eof()) throw InputError("bad items field '" + text + "'");
  if (!is_row_ordered(items)) throw InputError("items not row-ordered: '" + text + "'");
  return items;
}

}  // namespace

std::string_view style_name(PathStyle s) {
  switch (s) {
    case PathStyle::NoDetour: return "no_detour";
    case PathStyle::Detour: return "detour";
    case PathStyle::Mixed: return "mixed";
  }
  return "?";
}

PathStyle parse_style(std::string_view s) {
  if (s == "no_detour") return PathStyle::NoDetour;
  if (s == "detour") return PathStyle::Detour;
  if (s == "mixed") return PathStyle::Mixed;
  throw InputError("unknown path style '" + std::string(s) + "'");
}

std::string JobSpec::category() const {
  std::string out;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(lists[i].items.size());
  }
  return out;
}

std::vector<JobSpec> exp1_jobs() {
  using enum Dest;
  using enum PathStyle;
  return {
      {1, B, {list({8}, B)}, NoDetour},
      {2, A, {list({5}, A)}, Detour},
      {3, C, {list({3}, C)}, NoDetour},
      {4, C, {list({7}, C)}, Detour},
      {5, B, {list({2, 8}, B)}, NoDetour},
      {6, C, {list({4, 9}, C)}, Detour},
      {7, C, {list({1, 6}, C)}, Mixed},
      {8, C, {list({1, 5, 9}, C)}, NoDetour},
      {9, A, {list({1}, A), list({3}, A)}, NoDetour},
      {10, A, {list({3, 4, 7}, A)}, Detour},
      {11, B, {list({2, 6, 7}, B)}, Mixed},
      {12, B, {list({7}, B), list({9}, B)}, Detour},
      {13, B, {list({4}, B), list({6}, B)}, NoDetour},
      {14, B, {list({1, 7}, B), list({3, 9}, B)}, NoDetour},
      {15, B, {list({2, 4}, B), list({2, 6}, B)}, Detour},
      {16, B, {list({4, 8}, B), list({6, 8}, B)}, Mixed},
      {17, B, {list({1, 4, 7}, B), list({3, 6, 9}, B)}, NoDetour},
      {18, B, {list({1, 5, 9}, B), list({3, 5, 7}, B)}, Detour},
      {19, B, {list({2, 4, 8}, B), list({2, 6, 8}, B)}, Mixed},
      {20, A, {list({5}, A), list({1, 4, 7}, A)}, Detour},
      {21, C, {list({8}, C), list({1, 5, 9}, C)}, NoDetour},
      {22, C, {list({2}, C), list({3, 6, 9}, C)}, Mixed},
  };
}

std::optional<int> detour_cost(const Planner& planner, Cell start, const SubgoalSequence& g) {
  const GridMap& map = planner.map();
  const Cell dest = map.dest_cell(g.dest);
  const ValueTable& direct = planner.values(dest);
  if (!direct.reachable(start)) return std::nullopt;
  int via = 0;
  Cell from = start;
  for (const Cell& goal : goal_cells(map, g)) {
    const ValueTable& vt = planner.values(goal);
    if (!vt.reachable(from)) return std::nullopt;
    via += vt.distance(from);
    from = goal;
  }
  return via - direct.distance(start);
}

std::vector<Cell> feasible_starts(const Planner& planner, const SubgoalSequence& g, PathStyle style) {
  std::vector<Cell> out;
  for (const Cell& s : planner.map().starts()) {
    const auto cost = detour_cost(planner, s, g);
    if (!cost) continue;
    if (style == PathStyle::NoDetour && *cost != 0) continue;
    if (style == PathStyle::Detour && *cost == 0) continue;
    out.push_back(s);
  }
  return out;
}

std::vector<Stimulus> generate_exp1_stimuli(const GridMap& map, std::uint64_t seed,
                                            const std::vector<JobSpec>& jobs) {
  const Planner planner(map, 6.0);
  std::vector<Stimulus> out;
  for (const JobSpec& job : jobs) {
    if (job.lists.empty() || job.lists.size() > 2) throw InputError("a job needs one or two lists");
    std::vector<std::vector<Cell>> starts;
    for (const auto& g : job.lists) {
      if (g.dest != job.dest) throw InputError("job list has the wrong destination");
      starts.push_back(feasible_starts(planner, g, job.style));
      if (starts.back().empty())
        throw InputError("job " + std::to_string(job.job_id) + ": no start fits list " + g.key());
    }
    // A two-list job is redrawn until both lists show up among its paths.
    Stimulus stim{job, {}, {}};
    for (std::uint64_t attempt = 0;; ++attempt) {
      stim.paths.clear();
      stim.path_lists.clear();
      for (int k = 0; k < job.n_paths; ++k) {
        const auto job64 = static_cast<std::uint64_t>(job.job_id);
        const auto k64 = static_cast<std::uint64_t>(k);
        Rng rng(attempt == 0 ? derive_seed(seed, {job64, k64}) : derive_seed(seed, {job64, k64, attempt}));
        const std::size_t li = uniform_index(job.lists.size(), rng);
        const Cell start = starts[li][uniform_index(starts[li].size(), rng)];
        stim.paths.push_back(generate_path(planner, job.lists[li], start, PolicyMode::Optimal, rng));
        stim.path_lists.push_back(static_cast<int>(li));
      }
      const auto first = stim.path_lists.front();
      const bool both = std::any_of(stim.path_lists.begin(), stim.path_lists.end(), [&](int l) { return l != first; });
      if (job.lists.size() == 1 || job.n_paths < 2 || both) break;
    }
    out.push_back(std::move(stim));
  }
  return out;
}

nlohmann::json stimuli_to_json(const std::vector<Stimulus>& stimuli) {
  auto arr = nlohmann::json::array();
  for (const auto& s : stimuli) {
    auto lists = nlohmann::json::array();
    for (const auto& g : s.job.lists) lists.push_back(g.items);
    auto paths = nlohmann::json::array();
    for (const auto& p : s.paths) paths.push_back(path_to_json(p));
    arr.push_back({{"job_id", s.job.job_id},
                   {"dest", std::string(1, dest_glyph(s.job.dest))},
                   {"lists", lists},
                   {"style", std::string(style_name(s.job.style))},
                   {"path_lists", s.path_lists},
                   {"paths", paths}});
  }
  return arr;
}

std::vector<Stimulus> stimuli_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("stimulus file must be a JSON array");
  std::vector<Stimulus> out;
  try {
    for (const auto& rec : j) {
      Stimulus s;
      s.job.job_id = rec.at("job_id").get<int>();
      auto dest = parse_dest(rec.at("dest").get<std::string>());
      if (!dest) throw InputError("bad destination in stimulus");
      s.job.dest = *dest;
      for (const auto& items : rec.at("lists")) {
        auto v = items.get<std::vector<int>>();
        if (!is_row_ordered(v)) throw InputError("stimulus list is not row-ordered");
        s.job.lists.push_back({v, *dest});
      }
      s.job.style = rec.contains("style") ? parse_style(rec["style"].get<std::string>()) : PathStyle::Mixed;
      for (const auto& p : rec.at("paths")) s.paths.push_back(path_from_json(p));
      s.job.n_paths = static_cast<int>(s.paths.size());
      if (rec.contains("path_lists")) s.path_lists = rec["path_lists"].get<std::vector<int>>();
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed stimulus record: ") + e.what());
  }
  return out;
}

std::vector<Stimulus> load_stimuli(const std::filesystem::path& path) {
  try {
    return stimuli_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("stimulus file is not valid JSON: ") + e.what());
  }
}

PredictionTable run_exp1(const GridMap& map, const std::vector<Stimulus>& stimuli,
                         const std::vector<ModelKind>& models, const GibbsConfig& cfg) {
  cfg.validate();
  const Planner planner(map, cfg.beta);
  PredictionTable out;
  for (const auto& stim : stimuli) {
    for (ModelKind m : models) {
      PosteriorTable table;
      switch (m) {
        case ModelKind::Crp: {
          GibbsConfig job_cfg = cfg;
          job_cfg.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(stim.job.job_id)});
          table = gibbs_infer(planner, stim.paths, stim.job.dest, job_cfg);
          break;
        }
        case ModelKind::Independent: table = independent_model(planner, stim.paths, stim.job.dest); break;
        case ModelKind::Logical: table = logical_possibility_model(map, stim.paths, stim.job.dest); break;
        case ModelKind::Copy: table = copy_model(planner, stim.paths, stim.job.dest); break;
      }
      for (const auto& [g, p] : table.entries)
        out.push_back({stim.job.job_id, std::string(model_name(m)), g, p});
    }
  }
  return out;
}

std::string predictions_to_csv(const PredictionTable& table) {
  std::ostringstream out;
  out.precision(10);
  out << kPredictionCsvHeader << '\n';
  for (const auto& p : table)
    out << p.job_id << ',' << p.model << ',' << p.g.items_text() << ',' << dest_glyph(p.g.dest) << ','
        << p.probability << '\n';
  return out.str();
}

JudgmentTable parse_judgments(std::string_view csv) {
  JudgmentTable out;
  std::istringstream in{std::string(csv)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("job_id", 0) == 0) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw InputError("judgment line " + std::to_string(line_no) + ": expected 4 fields");
    try {
      Judgment j;
      j.job_id = std::stoi(f[0]);
      auto d = parse_dest(f[2]);
      if (!d) throw InputError("bad destination");
      j.g = {parse_items_text(f[1]), *d};
      j.proportion = std::stod(f[3]);
      if (!(j.proportion >= 0.0 && j.proportion <= 1.0)) throw InputError("proportion outside [0,1]");
      out.push_back(std::move(j));
    } catch (const std::logic_error&) {
      throw InputError("judgment line " + std::to_string(line_no) + ": malformed number");
    } catch (const InputError& e) {
      throw InputError("judgment line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

JudgmentTable load_judgments(const std::filesystem::path& path) { return parse_judgments(read_file(path)); }

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("need at least two aligned pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw InputError("correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

double correlate(const PredictionTable& predictions, std::string_view model, const JudgmentTable& judgments) {
  std::map<std::pair<int, SubgoalSequence>, double> pred;
  for (const auto& p : predictions)
    if (p.model == model) pred[{p.job_id, p.g}] = p.probability;
  std::vector<double> x, y;
  for (const auto& j : judgments) {
    auto it = pred.find({j.job_id, j.g});
    if (it == pred.end()) continue;
    x.push_back(it->second);
    y.push_back(j.proportion);
  }
  if (x.size() < 2) throw InputError("fewer than two aligned (job, sequence) pairs");
  return pearson(x, y);
}

}  // namespace subgoal
