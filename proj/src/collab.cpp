#include "subgoal/collab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace subgoal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kTargetRow = 2;

bool has_target_row_item(const SubgoalSequence& g) {
  return std::any_of(g.items.begin(), g.items.end(), [](int id) { return item_row(id) == kTargetRow; });
}

std::optional<int> target_row_item(const SubgoalSequence& g) {
  for (int id : g.items)
    if (item_row(id) == kTargetRow) return id;
  return std::nullopt;
}

// Normalized weights from log masses; falls back to the prior weights when the
// prefix rules out every hypothesis.
template <class Hyps, class LogMass, class LogPrior>
std::vector<double> normalized_weights(const Hyps& hyps, LogMass log_mass, LogPrior log_prior) {
  std::vector<double> logw;
  logw.reserve(hyps.size());
  for (const auto& h : hyps) logw.push_back(log_mass(h));
  double lse = log_sum_exp(logw);
  if (lse == kNegInf) {
    logw.clear();
    for (const auto& h : hyps) logw.push_back(log_prior(h));
    lse = log_sum_exp(logw);
  }
  std::vector<double> w(logw.size(), 0.0);
  if (lse == kNegInf) return w;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logw[i] - lse);
  return w;
}

template <class Hyps>
ItemMarginal item_marginal_from(const Hyps& hyps, const std::vector<double>& w) {
  ItemMarginal m;
  double covered = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    for (int id : hyps[i].g.items) m.inclusion[id - 1] += w[i];
    if (has_target_row_item(hyps[i].g)) covered += w[i];
  }
  m.none = std::max(0.0, 1.0 - covered);
  return m;
}

template <class Hyps>
std::array<double, 3> dest_marginal_from(const Hyps& hyps, const std::vector<double>& w) {
  std::array<double, 3> out{};
  double total = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    out[static_cast<int>(hyps[i].g.dest)] += w[i];
    total += w[i];
  }
  if (total <= 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  for (double& v : out) v /= total;
  return out;
}

struct StaticHypothesis {
  SubgoalSequence g;
  double log_weight;
  double log_lik;
};

std::vector<StaticHypothesis> score_prefix(const Planner& planner, const StateSequence& prefix,
                                           const PosteriorSet& posteriors) {
  std::vector<StaticHypothesis> out;
  for (const auto& [d, table] : posteriors)
    for (const auto& [g, p] : table.entries) {
      if (p <= 0.0) continue;
      out.push_back({g, std::log(p), log_partial_likelihood(planner, prefix, g)});
    }
  return out;
}

}  // namespace

void SubgoalStructure::validate(const GridMap& map) const {
  for (Dest d : kDests) {
    auto it = lists.find(d);
    if (it == lists.end() || it->second.empty())
      throw InputError(std::string("structure has no list for destination ") + dest_glyph(d));
    for (const auto& g : it->second) {
      if (g.dest != d) throw InputError("structure list filed under the wrong destination");
      if (g.items.empty() || !is_row_ordered(g.items)) throw InputError("structure list " + g.key() + " is invalid");
      for (int id : g.items) map.item_cell(id);
    }
  }
}

std::string SubgoalStructure::describe() const {
  std::ostringstream out;
  bool first_dest = true;
  for (const auto& [d, gs] : lists) {
    if (!first_dest) out << ' ';
    first_dest = false;
    out << dest_glyph(d) << ':';
    for (std::size_t i = 0; i < gs.size(); ++i) out << (i ? "/" : "") << '[' << gs[i].items_text() << ']';
  }
  return out.str();
}

std::string_view source_name(PosteriorSource s) {
  switch (s) {
    case PosteriorSource::Crp: return "crp";
    case PosteriorSource::Independent: return "independent";
    case PosteriorSource::Logical: return "logical";
    case PosteriorSource::Copy: return "copy";
    case PosteriorSource::GroundTruth: return "ground_truth";
    case PosteriorSource::None: return "none";
  }
  return "?";
}

PosteriorSource parse_source(std::string_view name) {
  if (name == "ground_truth" || name == "gt") return PosteriorSource::GroundTruth;
  if (name == "none" || name == "no_helper") return PosteriorSource::None;
  switch (parse_model(name)) {
    case ModelKind::Crp: return PosteriorSource::Crp;
    case ModelKind::Independent: return PosteriorSource::Independent;
    case ModelKind::Logical: return PosteriorSource::Logical;
    case ModelKind::Copy: return PosteriorSource::Copy;
  }
  return PosteriorSource::None;
}

void HelperConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InputError("threshold must be in (0, 1]");
  if (!(beta_helper > 0.0)) throw InputError("beta_helper must be positive");
}

HelperBelief::HelperBelief(const Planner& planner, const PosteriorSet& posteriors, Cell start) {
  for (const auto& [d, table] : posteriors)
    for (const auto& [g, p] : table.entries)
      if (p > 0.0) hypotheses_.push_back({g, std::log(p), PrefixTracker(planner, g, start)});
}

void HelperBelief::observe(Cell next) {
  for (auto& h : hypotheses_) h.tracker.advance(next);
}

ItemMarginal HelperBelief::item_marginal() const {
  const auto w = normalized_weights(
      hypotheses_, [](const Hypothesis& h) { return h.log_weight + h.tracker.log_likelihood(); },
      [](const Hypothesis& h) { return h.log_weight; });
  return item_marginal_from(hypotheses_, w);
}

std::array<double, 3> HelperBelief::destination_marginal() const {
  const auto w = normalized_weights(
      hypotheses_, [](const Hypothesis& h) { return h.log_weight + h.tracker.log_likelihood(); },
      [](const Hypothesis& h) { return h.log_weight; });
  return dest_marginal_from(hypotheses_, w);
}

ItemMarginal target_item_marginal(const Planner& planner, const StateSequence& prefix,
                                  const PosteriorSet& posteriors) {
  const auto hyps = score_prefix(planner, prefix, posteriors);
  const auto w = normalized_weights(
      hyps, [](const StaticHypothesis& h) { return h.log_weight + h.log_lik; },
      [](const StaticHypothesis& h) { return h.log_weight; });
  return item_marginal_from(hyps, w);
}

std::array<double, 3> destination_marginal(const Planner& planner, const StateSequence& prefix,
                                           const PosteriorSet& posteriors) {
  const auto hyps = score_prefix(planner, prefix, posteriors);
  const auto w = normalized_weights(
      hyps, [](const StaticHypothesis& h) { return h.log_weight + h.log_lik; },
      [](const StaticHypothesis& h) { return h.log_weight; });
  return dest_marginal_from(hyps, w);
}

TrialResult run_trial(const Planner& planner, const SubgoalStructure& structure,
                      const PosteriorSet* posteriors, const TrialSpec& spec, const HelperConfig& cfg) {
  cfg.validate();
  const GridMap& map = planner.map();
  {
    auto it = structure.lists.find(spec.worker_dest);
    if (it == structure.lists.end() ||
        std::find(it->second.begin(), it->second.end(), spec.worker_list) == it->second.end() ||
        spec.worker_list.dest != spec.worker_dest)
      throw InputError("invalid list/destination pairing");
  }
  const bool uses_model = cfg.source != PosteriorSource::GroundTruth && cfg.source != PosteriorSource::None;
  if (uses_model && !posteriors) throw InputError("model-driven helper needs posteriors");

  Rng rng(spec.seed);
  std::vector<Cell> remaining;
  for (int id : spec.worker_list.items) remaining.push_back(map.item_cell(id));
  const Cell dest = map.dest_cell(spec.worker_dest);

  TrialResult result;
  Cell s = spec.worker_start;
  result.worker_path.push_back(s);
  std::optional<HelperBelief> belief;
  if (uses_model) belief.emplace(planner, *posteriors, s);

  auto commit = [&](int item, int t) {
    result.helper_target = item;
    result.decision_time = t;
    const Cell c = map.item_cell(item);
    // The Worker drops the item only if it still needs it.
    auto it = std::find(remaining.begin(), remaining.end(), c);
    if (it != remaining.end()) remaining.erase(it);
  };

  if (cfg.source == PosteriorSource::GroundTruth)
    if (auto item = target_row_item(spec.worker_list)) commit(*item, 0);

  for (int t = 0;; ++t) {
    while (!remaining.empty() && s == remaining.front()) remaining.erase(remaining.begin());
    if (belief && !result.helper_target) {
      const ItemMarginal m = belief->item_marginal();
      std::optional<int> pick;
      for (int id : map.items_in_row(kTargetRow))
        if (m[id] > cfg.threshold && (!pick || m[id] > m[*pick])) pick = id;
      if (pick) commit(*pick, t);
    }
    if (remaining.empty() && s == dest) break;
    const Cell goal = remaining.empty() ? dest : remaining.front();
    s = transition(map, s, optimal_step(planner, goal, s, rng));
    result.worker_path.push_back(s);
    if (belief) belief->observe(s);
  }

  result.worker_steps = static_cast<int>(result.worker_path.size()) - 1;
  result.score = kTaskReward - kActionCost * result.worker_steps;

  if (result.helper_target) {
    const auto helper_start = map.helper_start();
    if (!helper_start) throw InputError("map has no helper start");
    const Cell item_cell = map.item_cell(*result.helper_target);
    const ValueTable& to_item = planner.values(item_cell);
    if (!to_item.reachable(*helper_start)) throw Error("helper cannot reach its target item");

    if (cfg.source == PosteriorSource::GroundTruth) {
      result.helper_destination = spec.worker_dest;
    } else {
      const int arrive = *result.decision_time + to_item.distance(*helper_start);
      const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(arrive) + 1, result.worker_path.size());
      const StateSequence prefix(result.worker_path.begin(), result.worker_path.begin() + static_cast<long>(len));
      const auto dm = destination_marginal(planner, prefix, *posteriors);
      result.helper_destination = kDests[std::max_element(dm.begin(), dm.end()) - dm.begin()];
    }

    Rng helper_rng(derive_seed(spec.seed, {0x48454c50ULL}));
    SubgoalSequence route{{*result.helper_target}, *result.helper_destination};
    if (planner.values(map.dest_cell(route.dest)).reachable(item_cell))
      result.helper_path = generate_path(planner, route, *helper_start, PolicyMode::Optimal, helper_rng);

    result.target_correct = spec.worker_list.contains(*result.helper_target);
    result.destination_correct = result.helper_destination == spec.worker_dest;
  }
  return result;
}

std::vector<nlohmann::json> episode_log(const TrialResult& result, const TrialSpec& spec) {
  std::vector<nlohmann::json> events;
  for (std::size_t t = 0; t < result.worker_path.size(); ++t)
    events.push_back({{"t", t},
                      {"agent", "worker"},
                      {"x", result.worker_path[t].x},
                      {"y", result.worker_path[t].y},
                      {"dest", std::string(1, dest_glyph(spec.worker_dest))}});
  if (result.helper_target) {
    const int t0 = *result.decision_time;
    events.push_back({{"t", t0},
                      {"agent", "helper"},
                      {"event", "commit"},
                      {"item", *result.helper_target},
                      {"dest", std::string(1, dest_glyph(*result.helper_destination))}});
    for (std::size_t k = 0; k < result.helper_path.size(); ++k)
      events.push_back({{"t", t0 + static_cast<int>(k)},
                        {"agent", "helper"},
                        {"x", result.helper_path[k].x},
                        {"y", result.helper_path[k].y}});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const nlohmann::json& a, const nlohmann::json& b) { return a["t"] < b["t"]; });
  return events;
}

}  // namespace subgoal
