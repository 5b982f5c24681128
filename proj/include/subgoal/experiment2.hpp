#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "subgoal/collab.hpp"

namespace subgoal {

// Setting 1: one [row-3] list per destination.
// Setting 2: one [row-2, row-3] list per destination.
// Setting 3: two distinct [row-3] lists per destination.
std::vector<SubgoalStructure> enumerate_structures(const GridMap& map, int setting);

struct IndexedStructure {
  int id = 0;  // position in enumerate_structures order
  SubgoalStructure structure;
};

// All structures when there are at most `limit`, otherwise a seeded sample of `limit`.
std::vector<IndexedStructure> select_structures(const GridMap& map, int setting, int limit,
                                                std::uint64_t seed);

struct Exp2Config {
  std::vector<int> settings{1, 2, 3};
  std::vector<int> n_values{1, 2, 3, 4, 5, 6, 7, 8};
  int max_structures = 10;
  int repeats = 5;
  std::vector<PosteriorSource> models{PosteriorSource::Crp,     PosteriorSource::Independent,
                                      PosteriorSource::Logical, PosteriorSource::Copy,
                                      PosteriorSource::GroundTruth, PosteriorSource::None};
  GibbsConfig gibbs;
  double threshold = 0.5;
  double beta_helper = 2.0;
  int trials_per_start = 9;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: one per hardware thread

  void validate() const;
};

struct Exp2Row {
  int setting = 0;
  int structure_id = 0;
  std::string model;
  int n_observations = 0;
  int repeats = 0;
  double mean_score = 0.0;  // mean over repeats of the per-repeat trial mean
  double variance = 0.0;    // population variance of the per-repeat means
  double mean_decision_time = 0.0;  // NaN when the Helper never committed
  double target_accuracy = 0.0;
  double dest_accuracy = 0.0;
};

struct Exp2Summary {
  int setting = 0;
  std::string model;
  int n_observations = 0;
  double mean_score = 0.0;  // averaged over structures
  double variance = 0.0;    // averaged over structures
};

struct Exp2Report {
  std::vector<Exp2Row> rows;

  std::string to_csv() const;
  std::vector<Exp2Summary> summary() const;
  std::string summary_text() const;
};

inline constexpr std::string_view kExp2CsvHeader =
    "setting,structure_id,model,n_observations,repeat,mean_score,variance,mean_decision_time,"
    "target_accuracy,dest_accuracy";

Exp2Report run_experiment2(const GridMap& map, int setting, const Exp2Config& cfg);
Exp2Report run_experiment2(const GridMap& map, const Exp2Config& cfg);

}  // namespace subgoal
