#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subgoal/likelihood.hpp"
#include "subgoal/random.hpp"

namespace subgoal {

struct GibbsConfig {
  double alpha = 0.015;
  int iterations = 5000;
  int burn_in = 1000;
  double beta = 6.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Marginal probability that each subgoal sequence is among the sequences
// generating the observations.
class PosteriorTable {
 public:
  std::map<SubgoalSequence, double> entries;

  double at(const SubgoalSequence& g) const;
  double total() const;
  // Descending by probability; ties by sequence order.
  std::vector<std::pair<SubgoalSequence, double>> ranked() const;

  // {"2,8|B": 0.93, ...}
  nlohmann::json to_json() const;
  static PosteriorTable from_json(const nlohmann::json& j);
  // Rows "dest,items,probability,model" without the header line.
  std::string to_csv_rows(std::string_view model) const;
};

inline constexpr std::string_view kPosteriorCsvHeader = "dest,items,probability,model";

// Precomputed log-likelihoods of each path under each candidate sequence.
struct Evidence {
  std::vector<SubgoalSequence> candidates;
  std::vector<std::vector<double>> loglik;  // [path][candidate]
  // log of sum_g P0(g) P(s_i | g) with uniform P0 over the candidates.
  std::vector<double> log_new_table;

  std::size_t size() const { return loglik.size(); }
};

// Throws InputError for an empty path list, for a path that does not end at
// `dest`, and ("inconsistent observation") for a path no candidate explains.
Evidence build_evidence(const Planner& planner, std::span<const StateSequence> paths, Dest dest,
                        bool include_empty = false);

struct Table {
  std::size_t param = 0;  // candidate index
  int count = 0;
};

struct CRPState {
  std::vector<int> assignment;  // path -> table index, -1 while unassigned
  std::vector<Table> tables;
};

// Unnormalized log weights for seating path i: one entry per existing table,
// then the new-table weight last. Path i must be unassigned.
std::vector<double> table_assignment_logweights(const CRPState& crp, std::size_t i,
                                                const Evidence& ev, double alpha);

// Normalized P(g | members) over the candidates, proportional to P0(g) * prod_i P(s_i | g).
std::vector<double> table_param_posterior(const Evidence& ev, std::span<const std::size_t> members);
// Draws a candidate index from table_param_posterior. Throws if every product is zero.
std::size_t resample_table_params(const Evidence& ev, std::span<const std::size_t> members, Rng& rng);

// One Chinese-restaurant Gibbs chain. Single mutator; not thread-safe.
class GibbsSampler {
 public:
  GibbsSampler(const Evidence& ev, const GibbsConfig& cfg);

  // Each path on its own table with a parameter from its single-path posterior.
  void initialize();
  // Table re-assignment for every path, then parameter re-assignment per table.
  void sweep();
  const CRPState& state() const { return state_; }
  // Throws Error when occupancy or likelihood invariants are broken.
  void check_invariants() const;

 private:
  void seat(std::size_t i, std::size_t table);
  void unseat(std::size_t i);

  const Evidence* ev_;
  GibbsConfig cfg_;
  Rng rng_;
  CRPState state_;
};

struct GibbsResult {
  // Fraction of counted sweeps in which a sequence parameterizes at least one table.
  PosteriorTable marginal;
  // Per-table counts divided by the counted sweeps; may exceed 1.
  PosteriorTable raw;
};

GibbsResult run_gibbs(const Evidence& ev, const GibbsConfig& cfg);
PosteriorTable gibbs_infer(const Planner& planner, std::span<const StateSequence> paths, Dest dest,
                           const GibbsConfig& cfg);
PosteriorTable gibbs_infer(const GridMap& map, std::span<const StateSequence> paths, Dest dest,
                           const GibbsConfig& cfg);

PosteriorTable independent_model(const Planner& planner, std::span<const StateSequence> paths, Dest dest);
PosteriorTable logical_possibility_model(const GridMap& map, std::span<const StateSequence> paths,
                                         Dest dest);
PosteriorTable copy_model(const Planner& planner, std::span<const StateSequence> paths, Dest dest);

// Highest-likelihood sequence (empty list allowed) explaining a single path;
// ties go to the longer list, then the lexicographically smaller one.
SubgoalSequence max_subgoal(const Planner& planner, const StateSequence& path, Dest dest);

enum class ModelKind { Crp, Independent, Logical, Copy };
std::string_view model_name(ModelKind m);
ModelKind parse_model(std::string_view name);

// Half the L1 distance between two tables over the union of their keys.
double total_variation(const PosteriorTable& a, const PosteriorTable& b);

}  // namespace subgoal
