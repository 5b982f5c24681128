#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "subgoal/inference.hpp"

namespace subgoal {

// no_detour: every list lies on some shortest start-to-destination route.
// detour: reaching the list costs extra steps. mixed: any start.
enum class PathStyle { NoDetour, Detour, Mixed };
std::string_view style_name(PathStyle s);
PathStyle parse_style(std::string_view s);

struct JobSpec {
  int job_id = 0;
  Dest dest = Dest::A;
  std::vector<SubgoalSequence> lists;  // one or two
  PathStyle style = PathStyle::Mixed;
  int n_paths = 8;

  // e.g. "1", "3", "1+1", "1+3": list lengths joined by '+'.
  std::string category() const;
};

// The 22-job test suite: single lists of 1, 2, 3 items and list pairs of
// (1,1), (2,2), (3,3), (1,3) items.
std::vector<JobSpec> exp1_jobs();

struct Stimulus {
  JobSpec job;
  std::vector<StateSequence> paths;
  std::vector<int> path_lists;  // index into job.lists per path
};

// Path length via the list minus the direct distance; nullopt if unachievable.
std::optional<int> detour_cost(const Planner& planner, Cell start, const SubgoalSequence& g);
std::vector<Cell> feasible_starts(const Planner& planner, const SubgoalSequence& g, PathStyle style);

// Optimal-Worker paths from seeded random starts that fit each job's style.
std::vector<Stimulus> generate_exp1_stimuli(const GridMap& map, std::uint64_t seed,
                                            const std::vector<JobSpec>& jobs = exp1_jobs());

nlohmann::json stimuli_to_json(const std::vector<Stimulus>& stimuli);
std::vector<Stimulus> stimuli_from_json(const nlohmann::json& j);
std::vector<Stimulus> load_stimuli(const std::filesystem::path& path);

struct Prediction {
  int job_id = 0;
  std::string model;
  SubgoalSequence g;
  double probability = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};
using PredictionTable = std::vector<Prediction>;

inline constexpr std::string_view kPredictionCsvHeader = "job_id,model,items,dest,probability";

// Per job and model, the marginal probability of every candidate list.
PredictionTable run_exp1(const GridMap& map, const std::vector<Stimulus>& stimuli,
                         const std::vector<ModelKind>& models, const GibbsConfig& cfg);
std::string predictions_to_csv(const PredictionTable& table);

struct Judgment {
  int job_id = 0;
  SubgoalSequence g;
  double proportion = 0.0;
};
using JudgmentTable = std::vector<Judgment>;

// CSV with header job_id,items,dest,proportion; items space-separated.
JudgmentTable parse_judgments(std::string_view csv);
JudgmentTable load_judgments(const std::filesystem::path& path);

double pearson(std::span<const double> x, std::span<const double> y);
// Pearson r over (job, sequence) pairs present in both tables for one model.
// Throws InputError with fewer than two aligned pairs.
double correlate(const PredictionTable& predictions, std::string_view model, const JudgmentTable& judgments);

}  // namespace subgoal
