#include "subgoal/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace subgoal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTieTolerance = 1e-9;

void check_paths(const GridMap& map, std::span<const StateSequence> paths, Dest dest) {
  if (paths.empty()) throw InputError("no observations");
  const Cell goal = map.dest_cell(dest);
  for (const auto& p : paths) {
    if (!is_connected_path(map, p))
      throw InputError("observation is not a connected path of legal moves");
    if (p.back() != goal)
      throw InputError(std::string("observation does not end at destination ") + dest_glyph(dest));
  }
}

std::vector<SubgoalSequence> candidates_with_empty(const GridMap& map, Dest dest) {
  std::vector<SubgoalSequence> out{{{}, dest}};
  auto rest = enumerate_candidates(map, dest);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

PosteriorTable zero_table(const std::vector<SubgoalSequence>& candidates) {
  PosteriorTable t;
  for (const auto& g : candidates) t.entries[g] = 0.0;
  return t;
}

}  // namespace

void GibbsConfig::validate() const {
  if (!(alpha > 0.0)) throw InputError("alpha must be positive");
  if (iterations <= 0) throw InputError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw InputError("burn-in must be in [0, iterations)");
  if (!(beta >= 0.0)) throw InputError("beta must be non-negative");
}

double PosteriorTable::at(const SubgoalSequence& g) const {
  auto it = entries.find(g);
  return it == entries.end() ? 0.0 : it->second;
}

double PosteriorTable::total() const {
  double s = 0.0;
  for (const auto& [g, p] : entries) s += p;
  return s;
}

std::vector<std::pair<SubgoalSequence, double>> PosteriorTable::ranked() const {
  std::vector<std::pair<SubgoalSequence, double>> out(entries.begin(), entries.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

nlohmann::json PosteriorTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [g, p] : entries) j[g.key()] = p;
  return j;
}

PosteriorTable PosteriorTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("posterior table must be a JSON object");
  PosteriorTable t;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw InputError("posterior probability must be a number");
    t.entries[SubgoalSequence::from_key(k)] = v.get<double>();
  }
  return t;
}

std::string PosteriorTable::to_csv_rows(std::string_view model) const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [g, p] : entries)
    out << dest_glyph(g.dest) << ',' << g.items_text() << ',' << p << ',' << model << '\n';
  return out.str();
}

Evidence build_evidence(const Planner& planner, std::span<const StateSequence> paths, Dest dest,
                        bool include_empty) {
  check_paths(planner.map(), paths, dest);
  Evidence ev;
  ev.candidates = include_empty ? candidates_with_empty(planner.map(), dest)
                                : enumerate_candidates(planner.map(), dest);
  const double log_prior = -std::log(static_cast<double>(ev.candidates.size()));
  for (const auto& path : paths) {
    std::vector<double> row;
    row.reserve(ev.candidates.size());
    for (const auto& g : ev.candidates) row.push_back(log_sequence_likelihood(planner, path, g));
    const double lse = log_sum_exp(row);
    if (lse == kNegInf) throw InputError("inconsistent observation: no candidate sequence explains a path");
    ev.log_new_table.push_back(lse + log_prior);
    ev.loglik.push_back(std::move(row));
  }
  return ev;
}

std::vector<double> table_assignment_logweights(const CRPState& crp, std::size_t i,
                                                const Evidence& ev, double alpha) {
  const double n = static_cast<double>(ev.size());
  const double log_denom = std::log(n - 1.0 + alpha);
  std::vector<double> w;
  w.reserve(crp.tables.size() + 1);
  for (const Table& t : crp.tables) {
    // n_{-i,k}: path i is already unseated.
    w.push_back(t.count > 0 ? std::log(static_cast<double>(t.count)) - log_denom + ev.loglik[i][t.param]
                            : kNegInf);
  }
  w.push_back(std::log(alpha) - log_denom + ev.log_new_table[i]);
  return w;
}

std::vector<double> table_param_posterior(const Evidence& ev, std::span<const std::size_t> members) {
  std::vector<double> logp(ev.candidates.size(), 0.0);
  for (std::size_t c = 0; c < logp.size(); ++c)
    for (std::size_t i : members) logp[c] += ev.loglik[i][c];
  const double lse = log_sum_exp(logp);
  if (lse == kNegInf) throw Error("no candidate explains every path on the table");
  for (double& v : logp) v = std::exp(v - lse);
  return logp;
}

std::size_t resample_table_params(const Evidence& ev, std::span<const std::size_t> members, Rng& rng) {
  std::vector<double> logp(ev.candidates.size(), 0.0);
  for (std::size_t c = 0; c < logp.size(); ++c)
    for (std::size_t i : members) logp[c] += ev.loglik[i][c];
  if (log_sum_exp(logp) == kNegInf) throw Error("no candidate explains every path on the table");
  return sample_log_weights(logp, rng);
}

GibbsSampler::GibbsSampler(const Evidence& ev, const GibbsConfig& cfg) : ev_(&ev), cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

void GibbsSampler::seat(std::size_t i, std::size_t table) {
  state_.assignment[i] = static_cast<int>(table);
  ++state_.tables[table].count;
}

void GibbsSampler::unseat(std::size_t i) {
  const int k = state_.assignment[i];
  state_.assignment[i] = -1;
  if (--state_.tables[k].count > 0) return;
  state_.tables.erase(state_.tables.begin() + k);
  for (int& z : state_.assignment)
    if (z > k) --z;
}

void GibbsSampler::initialize() {
  state_ = {};
  state_.assignment.assign(ev_->size(), -1);
  for (std::size_t i = 0; i < ev_->size(); ++i) {
    const std::size_t only[] = {i};
    state_.tables.push_back({resample_table_params(*ev_, only, rng_), 0});
    seat(i, state_.tables.size() - 1);
  }
}

void GibbsSampler::sweep() {
  for (std::size_t i = 0; i < ev_->size(); ++i) {
    unseat(i);
    const auto w = table_assignment_logweights(state_, i, *ev_, cfg_.alpha);
    const std::size_t k = sample_log_weights(w, rng_);
    if (k == state_.tables.size()) {
      const std::size_t only[] = {i};
      state_.tables.push_back({resample_table_params(*ev_, only, rng_), 0});
    }
    seat(i, k);
  }
  std::vector<std::size_t> members;
  for (std::size_t k = 0; k < state_.tables.size(); ++k) {
    members.clear();
    for (std::size_t i = 0; i < ev_->size(); ++i)
      if (state_.assignment[i] == static_cast<int>(k)) members.push_back(i);
    state_.tables[k].param = resample_table_params(*ev_, members, rng_);
  }
}

void GibbsSampler::check_invariants() const {
  int occupied = 0;
  std::vector<int> counts(state_.tables.size(), 0);
  for (std::size_t i = 0; i < state_.assignment.size(); ++i) {
    const int k = state_.assignment[i];
    if (k < 0 || k >= static_cast<int>(state_.tables.size())) throw Error("path without a table");
    ++counts[k];
    if (ev_->loglik[i][state_.tables[k].param] == kNegInf)
      throw Error("table parameter does not explain an assigned path");
  }
  for (std::size_t k = 0; k < state_.tables.size(); ++k) {
    if (counts[k] != state_.tables[k].count || counts[k] == 0) throw Error("table occupancy mismatch");
    occupied += counts[k];
  }
  if (occupied != static_cast<int>(ev_->size())) throw Error("occupancies do not sum to N");
}

GibbsResult run_gibbs(const Evidence& ev, const GibbsConfig& cfg) {
  GibbsSampler sampler(ev, cfg);
  sampler.initialize();
  std::vector<double> at_least_one(ev.candidates.size(), 0.0);
  std::vector<double> per_table(ev.candidates.size(), 0.0);
  std::vector<std::uint8_t> seen(ev.candidates.size(), 0);
  for (int r = 0; r < cfg.iterations; ++r) {
    sampler.sweep();
    if (r < cfg.burn_in) continue;
    std::fill(seen.begin(), seen.end(), 0);
    for (const Table& t : sampler.state().tables) {
      per_table[t.param] += 1.0;
      seen[t.param] = 1;
    }
    for (std::size_t c = 0; c < seen.size(); ++c) at_least_one[c] += seen[c];
  }
  const double counted = cfg.iterations - cfg.burn_in;
  GibbsResult out;
  for (std::size_t c = 0; c < ev.candidates.size(); ++c) {
    out.marginal.entries[ev.candidates[c]] = at_least_one[c] / counted;
    out.raw.entries[ev.candidates[c]] = per_table[c] / counted;
  }
  return out;
}

PosteriorTable gibbs_infer(const Planner& planner, std::span<const StateSequence> paths, Dest dest,
                           const GibbsConfig& cfg) {
  cfg.validate();
  return run_gibbs(build_evidence(planner, paths, dest), cfg).marginal;
}

PosteriorTable gibbs_infer(const GridMap& map, std::span<const StateSequence> paths, Dest dest,
                           const GibbsConfig& cfg) {
  Planner planner(map, cfg.beta);
  return gibbs_infer(planner, paths, dest, cfg);
}

PosteriorTable independent_model(const Planner& planner, std::span<const StateSequence> paths, Dest dest) {
  const Evidence ev = build_evidence(planner, paths, dest);
  std::vector<double> none(ev.candidates.size(), 1.0);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const std::size_t only[] = {i};
    const auto p = table_param_posterior(ev, only);
    for (std::size_t c = 0; c < p.size(); ++c) none[c] *= 1.0 - p[c];
  }
  PosteriorTable out;
  for (std::size_t c = 0; c < ev.candidates.size(); ++c) out.entries[ev.candidates[c]] = 1.0 - none[c];
  return out;
}

PosteriorTable logical_possibility_model(const GridMap& map, std::span<const StateSequence> paths,
                                         Dest dest) {
  check_paths(map, paths, dest);
  const auto candidates = candidates_with_empty(map, dest);
  PosteriorTable out;
  for (const auto& g : candidates) {
    int hits = 0;
    for (const auto& p : paths) hits += satisfies(map, p, g) ? 1 : 0;
    out.entries[g] = static_cast<double>(hits) / static_cast<double>(paths.size());
  }
  return out;
}

SubgoalSequence max_subgoal(const Planner& planner, const StateSequence& path, Dest dest) {
  const auto candidates = candidates_with_empty(planner.map(), dest);
  std::size_t best = 0;
  double best_ll = kNegInf;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double ll = log_sequence_likelihood(planner, path, candidates[c]);
    if (ll == kNegInf) continue;
    const auto& cur = candidates[best].items;
    const auto& cand = candidates[c].items;
    const bool better = best_ll == kNegInf || ll > best_ll + kLogTieTolerance;
    const bool tie = !better && ll >= best_ll - kLogTieTolerance;
    const bool preferred = cand.size() > cur.size() || (cand.size() == cur.size() && cand < cur);
    if (better || (tie && preferred)) {
      best = c;
      best_ll = ll;
    }
  }
  if (best_ll == kNegInf) throw InputError("inconsistent observation: no sequence explains a path");
  return candidates[best];
}

PosteriorTable copy_model(const Planner& planner, std::span<const StateSequence> paths, Dest dest) {
  check_paths(planner.map(), paths, dest);
  PosteriorTable out = zero_table(candidates_with_empty(planner.map(), dest));
  for (const auto& p : paths) out.entries[max_subgoal(planner, p, dest)] = 1.0;
  return out;
}

std::string_view model_name(ModelKind m) {
  switch (m) {
    case ModelKind::Crp: return "crp";
    case ModelKind::Independent: return "independent";
    case ModelKind::Logical: return "logical";
    case ModelKind::Copy: return "copy";
  }
  return "?";
}

ModelKind parse_model(std::string_view name) {
  if (name == "crp") return ModelKind::Crp;
  if (name == "independent") return ModelKind::Independent;
  if (name == "logical" || name == "lp") return ModelKind::Logical;
  if (name == "copy") return ModelKind::Copy;
  throw InputError("unknown model '" + std::string(name) + "'");
}

double total_variation(const PosteriorTable& a, const PosteriorTable& b) {
  std::set<SubgoalSequence> keys;
  for (const auto& [g, p] : a.entries) keys.insert(g);
  for (const auto& [g, p] : b.entries) keys.insert(g);
  double sum = 0.0;
  for (const auto& g : keys) sum += std::abs(a.at(g) - b.at(g));
  return 0.5 * sum;
}

}  // namespace subgoal
