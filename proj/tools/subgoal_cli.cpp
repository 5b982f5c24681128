#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subgoal/collab.hpp"
#include "subgoal/experiment2.hpp"
#include "subgoal/experiments.hpp"

namespace fs = std::filesystem;
using namespace subgoal;

namespace {

constexpr const char* kOutDirEnv = "SUBGOAL_OUT_DIR";

struct RunConfig {
  std::string map_path;
  std::uint64_t seed = 1;
  double alpha = 0.015;
  double beta = 6.0;
  double beta_helper = 2.0;
  double threshold = 0.5;
  int iterations = 5000;
  int burn_in = 1000;
  std::string models;
  std::string out_dir;
  unsigned threads = 0;

  GibbsConfig gibbs() const {
    GibbsConfig g{alpha, iterations, burn_in, beta, seed};
    g.validate();
    return g;
  }
};

GridMap load_selected_map(const RunConfig& rc) {
  return rc.map_path.empty() ? canonical_map() : load_map_file(rc.map_path);
}

fs::path out_dir(const RunConfig& rc) {
  fs::path dir = rc.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env && *env ? fs::path(env) : fs::path(".");
  }
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<ModelKind> parse_models(const std::string& s, std::vector<ModelKind> fallback) {
  if (s.empty()) return fallback;
  std::vector<ModelKind> out;
  for (const auto& name : split_list(s)) out.push_back(parse_model(name));
  return out;
}

std::vector<PosteriorSource> parse_sources(const std::string& s) {
  if (s.empty()) return Exp2Config{}.models;
  std::vector<PosteriorSource> out;
  for (const auto& name : split_list(s)) out.push_back(parse_source(name));
  return out;
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& tok : split_list(s)) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw InputError(std::string("bad ") + what + " value '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

// "1..8" or "1,2,4".
std::vector<int> parse_int_range(const std::string& s, const char* what) {
  if (auto dots = s.find(".."); dots != std::string::npos) {
    const auto lo = parse_ints(s.substr(0, dots), what);
    const auto hi = parse_ints(s.substr(dots + 2), what);
    if (lo.size() != 1 || hi.size() != 1 || lo[0] > hi[0]) throw InputError(std::string("bad ") + what + " range");
    std::vector<int> out;
    for (int v = lo[0]; v <= hi[0]; ++v) out.push_back(v);
    return out;
  }
  return parse_ints(s, what);
}

Cell parse_cell(const std::string& s) {
  const auto v = parse_ints(s, "cell");
  if (v.size() != 2) throw InputError("cells are written x,y");
  return {v[0], v[1]};
}

void print_top(std::ostream& os, const PosteriorTable& table, std::size_t k) {
  const auto ranked = table.ranked();
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
    os << "  " << std::setw(10) << std::left << ("[" + ranked[i].first.items_text() + "]") << std::right
       << std::fixed << std::setprecision(4) << ranked[i].second << '\n';
}

PosteriorTable infer_model(const Planner& planner, ModelKind m, std::span<const StateSequence> paths, Dest d,
                           const GibbsConfig& cfg) {
  switch (m) {
    case ModelKind::Crp: {
      GibbsConfig c = cfg;
      c.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(d)});
      return gibbs_infer(planner, paths, d, c);
    }
    case ModelKind::Independent: return independent_model(planner, paths, d);
    case ModelKind::Logical: return logical_possibility_model(planner.map(), paths, d);
    case ModelKind::Copy: return copy_model(planner, paths, d);
  }
  return {};
}

std::map<Dest, std::vector<StateSequence>> group_by_dest(const std::vector<Observation>& obs) {
  std::map<Dest, std::vector<StateSequence>> out;
  for (const auto& o : obs) out[o.dest].push_back(o.states);
  return out;
}

// --- commands -------------------------------------------------------------

int cmd_map_check(const std::string& path) {
  const GridMap map = path.empty() ? canonical_map() : load_map_file(path);
  std::cout << "map ok: " << map.width() << "x" << map.height() << ", " << map.starts().size() << " starts, "
            << candidate_count(map) << " candidate lists per destination\n";
  return 0;
}

int cmd_map_show(const RunConfig& rc) {
  std::cout << serialize_map(load_selected_map(rc));
  return 0;
}

int cmd_infer(const RunConfig& rc, const std::string& obs_path) {
  const GridMap map = load_selected_map(rc);
  const GibbsConfig cfg = rc.gibbs();
  const auto models = parse_models(rc.models, {ModelKind::Crp});
  const auto groups = group_by_dest(load_observations(obs_path));
  const Planner planner(map, cfg.beta);
  const fs::path dir = out_dir(rc);
  for (ModelKind m : models) {
    for (const auto& [d, paths] : groups) {
      const PosteriorTable table = infer_model(planner, m, paths, d, cfg);
      const std::string stem = std::string("posterior_") + std::string(model_name(m)) + "_" + dest_glyph(d);
      write_file(dir / (stem + ".json"), table.to_json().dump(2) + "\n");
      write_file(dir / (stem + ".csv"),
                 std::string(kPosteriorCsvHeader) + "\n" + table.to_csv_rows(model_name(m)));
      std::cout << model_name(m) << " -> " << dest_glyph(d) << " (" << paths.size() << " paths)\n";
      print_top(std::cout, table, 5);
    }
  }
  return 0;
}

int cmd_stimuli(const RunConfig& rc) {
  const GridMap map = load_selected_map(rc);
  const auto stimuli = generate_exp1_stimuli(map, rc.seed);
  const fs::path path = out_dir(rc) / "exp1_stimuli.json";
  write_file(path, stimuli_to_json(stimuli).dump(1) + "\n");
  std::cout << stimuli.size() << " jobs written to " << path.string() << '\n';
  return 0;
}

int cmd_exp1(const RunConfig& rc, const std::string& stimuli_path, const std::string& judgments_path) {
  const GridMap map = load_selected_map(rc);
  const GibbsConfig cfg = rc.gibbs();
  const auto stimuli = stimuli_path.empty() ? generate_exp1_stimuli(map, rc.seed) : load_stimuli(stimuli_path);
  const auto models =
      parse_models(rc.models, {ModelKind::Crp, ModelKind::Independent, ModelKind::Logical, ModelKind::Copy});
  const PredictionTable preds = run_exp1(map, stimuli, models, cfg);
  const fs::path dir = out_dir(rc);
  write_file(dir / "exp1_predictions.csv", predictions_to_csv(preds));

  // Summary: each model's top list per job.
  std::map<std::pair<int, std::string>, const Prediction*> best;
  for (const auto& p : preds) {
    auto& b = best[{p.job_id, p.model}];
    if (!b || p.probability > b->probability) b = &p;
  }
  std::cout << "job  model         top list      p\n";
  for (const auto& [key, p] : best)
    std::cout << std::setw(3) << key.first << "  " << std::setw(12) << std::left << key.second << "  "
              << std::setw(12) << ("[" + p->g.items_text() + "]" + dest_glyph(p->g.dest)) << std::right << "  "
              << std::fixed << std::setprecision(3) << p->probability << '\n';

  if (!judgments_path.empty()) {
    const auto judgments = load_judgments(judgments_path);
    for (ModelKind m : models)
      std::cout << "r(" << model_name(m) << ") = " << std::setprecision(4) << correlate(preds, model_name(m), judgments)
                << '\n';
  }
  std::cout << "predictions written to " << (dir / "exp1_predictions.csv").string() << '\n';
  return 0;
}

struct Exp2Options {
  std::string settings = "1,2,3";
  std::string n_values = "1..8";
  int structures = 10;
  int repeats = 5;
  int trials_per_start = 9;
};

int cmd_exp2(const RunConfig& rc, const Exp2Options& o) {
  const GridMap map = load_selected_map(rc);
  Exp2Config cfg;
  cfg.settings = parse_int_range(o.settings, "setting");
  cfg.n_values = parse_int_range(o.n_values, "n");
  cfg.max_structures = o.structures;
  cfg.repeats = o.repeats;
  cfg.trials_per_start = o.trials_per_start;
  cfg.models = parse_sources(rc.models);
  cfg.gibbs = rc.gibbs();
  cfg.threshold = rc.threshold;
  cfg.beta_helper = rc.beta_helper;
  cfg.seed = rc.seed;
  cfg.threads = rc.threads;
  cfg.validate();
  const Exp2Report report = run_experiment2(map, cfg);
  const fs::path dir = out_dir(rc);
  write_file(dir / "exp2_report.csv", report.to_csv());
  write_file(dir / "exp2_summary.txt", report.summary_text());
  std::cout << report.summary_text() << "report written to " << (dir / "exp2_report.csv").string() << '\n';
  return 0;
}

struct TrialOptions {
  std::string start;
  std::string dest;
  std::string items;
  std::string observations;
  std::uint64_t trial_seed = 0;
};

int cmd_trial(const RunConfig& rc, const TrialOptions& o) {
  const GridMap map = load_selected_map(rc);
  const auto d = parse_dest(o.dest);
  if (!d) throw InputError("bad destination '" + o.dest + "'");
  TrialSpec spec{parse_cell(o.start), *d, {parse_ints(o.items, "item"), *d}, o.trial_seed};
  if (!is_row_ordered(spec.worker_list.items)) throw InputError("item list must be row-ordered");
  if (std::find(map.starts().begin(), map.starts().end(), spec.worker_start) == map.starts().end())
    throw InputError("trial start is not a start cell");

  const auto sources = parse_sources(rc.models.empty() ? "none" : rc.models);
  if (sources.size() != 1) throw InputError("trial takes exactly one model");
  const PosteriorSource source = sources.front();
  const HelperConfig hc{rc.threshold, rc.beta_helper, source};

  PosteriorSet posteriors;
  if (source != PosteriorSource::GroundTruth && source != PosteriorSource::None) {
    if (o.observations.empty()) throw InputError("model-driven trial needs --observations");
    const GibbsConfig cfg = rc.gibbs();
    const Planner learner(map, cfg.beta);
    const ModelKind m = parse_model(source_name(source));
    for (const auto& [dest, paths] : group_by_dest(load_observations(o.observations)))
      posteriors[dest] = infer_model(learner, m, paths, dest, cfg);
  }
  SubgoalStructure structure;
  structure.lists[*d] = {spec.worker_list};
  const Planner helper(map, rc.beta_helper);
  const TrialResult res = run_trial(helper, structure, &posteriors, spec, hc);

  const fs::path path = out_dir(rc) / "episode.jsonl";
  std::string lines;
  for (const auto& ev : episode_log(res, spec)) lines += ev.dump() + "\n";
  write_file(path, lines);
  std::cout << "worker_steps " << res.worker_steps << "\nscore " << res.score << '\n';
  if (res.helper_target)
    std::cout << "helper_target " << *res.helper_target << " at t=" << *res.decision_time << ", destination "
              << dest_glyph(*res.helper_destination) << '\n';
  else
    std::cout << "helper_target none\n";
  std::cout << "episode log written to " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subgoal inference in a warehouse gridworld"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file; command-line flags override it");
  app.get_config_formatter_base()->arrayDelimiter(';');

  RunConfig rc;
  app.add_option("--map", rc.map_path, "Map file (default: built-in canonical map)")->check(CLI::ExistingFile);
  app.add_option("--seed", rc.seed, "Master seed")->capture_default_str();
  app.add_option("--alpha", rc.alpha, "CRP concentration")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--beta", rc.beta, "Learner softmax inverse temperature")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--beta-helper", rc.beta_helper, "Helper's Worker-model inverse temperature")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--iters", rc.iterations, "Gibbs sweeps")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--burnin", rc.burn_in, "Gibbs burn-in sweeps")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--threshold", rc.threshold, "Helper decision threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--models", rc.models, "Comma-separated models: crp, independent, logical, copy, ground_truth, none");
  app.add_option("--out", rc.out_dir, std::string("Output directory (default: $") + kOutDirEnv + " or .)");
  app.add_option("--threads", rc.threads, "Worker threads (0: all cores)")->capture_default_str();

  auto* map_cmd = app.add_subcommand("map", "Map utilities");
  map_cmd->require_subcommand(1);
  map_cmd->fallthrough();
  std::string check_path;
  auto* check_cmd = map_cmd->add_subcommand("check", "Validate a map file");
  check_cmd->add_option("file", check_path, "Map file (default: canonical map)");
  auto* show_cmd = map_cmd->add_subcommand("show", "Print the selected map");

  std::string obs_path;
  auto* infer_cmd = app.add_subcommand("infer", "Infer subgoal lists from observed paths");
  infer_cmd->add_option("observations", obs_path, "Observation JSON file")->required();

  auto* stimuli_cmd = app.add_subcommand("stimuli", "Generate the Experiment 1 stimulus set");

  std::string stimuli_path, judgments_path;
  auto* exp1_cmd = app.add_subcommand("exp1", "Model predictions for the Experiment 1 jobs");
  exp1_cmd->add_option("--stimuli", stimuli_path, "Stimulus JSON (default: generate from --seed)");
  exp1_cmd->add_option("--judgments", judgments_path, "Human judgment CSV for correlation");

  Exp2Options e2;
  auto* exp2_cmd = app.add_subcommand("exp2", "Worker-Helper collaboration sweep");
  exp2_cmd->add_option("--settings", e2.settings, "Settings, e.g. 1,2,3")->capture_default_str();
  exp2_cmd->add_option("--n", e2.n_values, "Training paths per destination, e.g. 1..8 or 2,4")->capture_default_str();
  exp2_cmd->add_option("--structures", e2.structures, "Structures per setting")->capture_default_str();
  exp2_cmd->add_option("--repeats", e2.repeats, "Repeats per structure")->capture_default_str();
  exp2_cmd->add_option("--trials-per-start", e2.trials_per_start, "Trials per start cell")->capture_default_str();

  TrialOptions to;
  auto* trial_cmd = app.add_subcommand("trial", "Run one Worker-Helper episode and log it");
  trial_cmd->add_option("--start", to.start, "Worker start x,y")->required();
  trial_cmd->add_option("--dest", to.dest, "Worker destination A, B or C")->required();
  trial_cmd->add_option("--items", to.items, "Worker item list, e.g. 2,8")->required();
  trial_cmd->add_option("--observations", to.observations, "Training paths for model-driven Helpers");
  trial_cmd->add_option("--trial-seed", to.trial_seed, "Tie-breaking seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*map_cmd) return *check_cmd ? cmd_map_check(check_path) : (*show_cmd ? cmd_map_show(rc) : 2);
    if (*infer_cmd) return cmd_infer(rc, obs_path);
    if (*stimuli_cmd) return cmd_stimuli(rc);
    if (*exp1_cmd) return cmd_exp1(rc, stimuli_path, judgments_path);
    if (*exp2_cmd) return cmd_exp2(rc, e2);
    if (*trial_cmd) return cmd_trial(rc, to);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
