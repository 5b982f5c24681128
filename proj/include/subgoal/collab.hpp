#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "subgoal/inference.hpp"
#include "subgoal/likelihood.hpp"

namespace subgoal {

// The item lists a job admits for each destination.
struct SubgoalStructure {
  std::map<Dest, std::vector<SubgoalSequence>> lists;

  // Throws InputError unless every destination has at least one valid list.
  void validate(const GridMap& map) const;
  std::string describe() const;
};

enum class PosteriorSource { Crp, Independent, Logical, Copy, GroundTruth, None };
std::string_view source_name(PosteriorSource s);
PosteriorSource parse_source(std::string_view name);

struct HelperConfig {
  double threshold = 0.5;
  double beta_helper = 2.0;
  PosteriorSource source = PosteriorSource::Crp;

  void validate() const;
};

using PosteriorSet = std::map<Dest, PosteriorTable>;

struct ItemMarginal {
  // P(item in the pursued list), indexed by item id - 1.
  std::array<double, kItemCount> inclusion{};
  // Mass of hypotheses with no row-3 item. Row-3 inclusions plus this sum to 1.
  double none = 0.0;

  double operator[](int item) const { return inclusion[item - 1]; }
};

// Partial-path beliefs over (destination, list) hypotheses weighted by learned
// posteriors. Updated one Worker step at a time.
class HelperBelief {
 public:
  HelperBelief(const Planner& planner, const PosteriorSet& posteriors, Cell start);

  void observe(Cell next);
  ItemMarginal item_marginal() const;
  std::array<double, 3> destination_marginal() const;

 private:
  struct Hypothesis {
    SubgoalSequence g;
    double log_weight;
    PrefixTracker tracker;
  };
  std::vector<Hypothesis> hypotheses_;
};

ItemMarginal target_item_marginal(const Planner& planner, const StateSequence& prefix,
                                  const PosteriorSet& posteriors);
std::array<double, 3> destination_marginal(const Planner& planner, const StateSequence& prefix,
                                           const PosteriorSet& posteriors);

struct TrialSpec {
  Cell worker_start;
  Dest worker_dest = Dest::A;
  SubgoalSequence worker_list;
  std::uint64_t seed = 0;
};

struct TrialResult {
  int worker_steps = 0;
  int score = 0;
  std::optional<int> helper_target;
  bool target_correct = false;
  bool destination_correct = false;
  std::optional<int> decision_time;
  std::optional<Dest> helper_destination;
  StateSequence worker_path;
  StateSequence helper_path;
};

inline constexpr int kTaskReward = 100;
inline constexpr int kActionCost = 2;

// Runs one Worker-Helper episode. `planner` carries beta_helper for the
// Helper's partial likelihoods; the Worker acts optimally. `posteriors` may be
// null for GroundTruth and None sources.
TrialResult run_trial(const Planner& planner, const SubgoalStructure& structure,
                      const PosteriorSet* posteriors, const TrialSpec& spec, const HelperConfig& cfg);

// One JSON object per agent step plus the commit event.
std::vector<nlohmann::json> episode_log(const TrialResult& result, const TrialSpec& spec);

}  // namespace subgoal
