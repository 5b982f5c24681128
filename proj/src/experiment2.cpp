#include "subgoal/experiment2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "subgoal/parallel.hpp"

namespace subgoal {

namespace {

constexpr std::uint64_t kTagTrial = 0x7472;
constexpr std::uint64_t kTagTrain = 0x7472616e;
constexpr std::uint64_t kTagGibbs = 0x67696262;
constexpr std::uint64_t kTagSelect = 0x73656c;

struct TrainingSet {
  std::map<Dest, std::vector<StateSequence>> paths;  // max(n) paths per destination
};

TrainingSet make_training_set(const Planner& planner, const SubgoalStructure& s, int count,
                              std::uint64_t seed) {
  const GridMap& map = planner.map();
  TrainingSet out;
  for (Dest d : kDests) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(d)}));
    const auto& lists = s.lists.at(d);
    for (int k = 0; k < count; ++k) {
      const auto& g = lists[uniform_index(lists.size(), rng)];
      const Cell start = map.starts()[uniform_index(map.starts().size(), rng)];
      out.paths[d].push_back(generate_path(planner, g, start, PolicyMode::Optimal, rng));
    }
  }
  return out;
}

PosteriorSet learn_posteriors(const Planner& planner, PosteriorSource source, const TrainingSet& train,
                              int n, const GibbsConfig& gibbs, std::uint64_t seed) {
  PosteriorSet out;
  for (Dest d : kDests) {
    const auto& all = train.paths.at(d);
    const std::span<const StateSequence> paths(all.data(), static_cast<std::size_t>(n));
    switch (source) {
      case PosteriorSource::Crp: {
        GibbsConfig cfg = gibbs;
        cfg.seed = derive_seed(seed, {static_cast<std::uint64_t>(d)});
        out[d] = gibbs_infer(planner, paths, d, cfg);
        break;
      }
      case PosteriorSource::Independent: out[d] = independent_model(planner, paths, d); break;
      case PosteriorSource::Logical: out[d] = logical_possibility_model(planner.map(), paths, d); break;
      case PosteriorSource::Copy: out[d] = copy_model(planner, paths, d); break;
      case PosteriorSource::GroundTruth:
      case PosteriorSource::None: break;
    }
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

}  // namespace

std::vector<SubgoalStructure> enumerate_structures(const GridMap& map, int setting) {
  const auto row2 = map.items_in_row(1);
  const auto row3 = map.items_in_row(2);
  std::vector<std::vector<SubgoalSequence>> per_dest_options(3);
  for (Dest d : kDests) {
    auto& opts = per_dest_options[static_cast<int>(d)];
    switch (setting) {
      case 1:
        for (int c : row3) opts.push_back({{c}, d});
        break;
      case 2:
        for (int b : row2)
          for (int c : row3) opts.push_back({{b, c}, d});
        break;
      case 3:
        // Two lists encoded back to back; split below.
        for (std::size_t i = 0; i < row3.size(); ++i)
          for (std::size_t j = i + 1; j < row3.size(); ++j) opts.push_back({{row3[i], row3[j]}, d});
        break;
      default: throw InputError("setting must be 1, 2 or 3");
    }
  }
  auto lists_for = [&](const SubgoalSequence& opt) -> std::vector<SubgoalSequence> {
    if (setting != 3) return {opt};
    return {{{opt.items[0]}, opt.dest}, {{opt.items[1]}, opt.dest}};
  };
  std::vector<SubgoalStructure> out;
  for (const auto& a : per_dest_options[0])
    for (const auto& b : per_dest_options[1])
      for (const auto& c : per_dest_options[2]) {
        SubgoalStructure s;
        s.lists[Dest::A] = lists_for(a);
        s.lists[Dest::B] = lists_for(b);
        s.lists[Dest::C] = lists_for(c);
        out.push_back(std::move(s));
      }
  return out;
}

std::vector<IndexedStructure> select_structures(const GridMap& map, int setting, int limit,
                                                std::uint64_t seed) {
  auto all = enumerate_structures(map, setting);
  std::vector<int> ids(all.size());
  std::iota(ids.begin(), ids.end(), 0);
  if (limit > 0 && static_cast<std::size_t>(limit) < all.size()) {
    Rng rng(derive_seed(seed, {kTagSelect, static_cast<std::uint64_t>(setting)}));
    for (std::size_t i = 0; i < static_cast<std::size_t>(limit); ++i)
      std::swap(ids[i], ids[i + uniform_index(ids.size() - i, rng)]);
    ids.resize(static_cast<std::size_t>(limit));
    std::sort(ids.begin(), ids.end());
  }
  std::vector<IndexedStructure> out;
  for (int id : ids) out.push_back({id, all[static_cast<std::size_t>(id)]});
  return out;
}

void Exp2Config::validate() const {
  for (int s : settings)
    if (s < 1 || s > 3) throw InputError("setting must be 1, 2 or 3");
  if (n_values.empty()) throw InputError("no observation counts given");
  for (int n : n_values)
    if (n < 1) throw InputError("observation counts must be positive");
  if (repeats < 1) throw InputError("repeats must be positive");
  if (trials_per_start < 1) throw InputError("trials per start must be positive");
  if (models.empty()) throw InputError("no models selected");
  gibbs.validate();
  HelperConfig{threshold, beta_helper, PosteriorSource::Crp}.validate();
}

Exp2Report run_experiment2(const GridMap& map, int setting, const Exp2Config& cfg) {
  cfg.validate();
  if (!map.helper_start()) throw InputError("map has no helper start");
  const Planner learner(map, cfg.gibbs.beta);
  const Planner helper(map, cfg.beta_helper);
  const auto structures = select_structures(map, setting, cfg.max_structures, cfg.seed);
  const int max_n = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
  const std::size_t n_count = cfg.n_values.size();
  const std::size_t m_count = cfg.models.size();

  std::vector<std::vector<Exp2Row>> per_structure(structures.size());
  parallel_for(structures.size(), cfg.threads, [&](std::size_t si) {
    const auto& [sid, structure] = structures[si];
    const auto sid64 = static_cast<std::uint64_t>(sid);
    const auto setting64 = static_cast<std::uint64_t>(setting);

    // Trials depend only on the structure, so every model and repeat sees the same ones.
    std::vector<TrialSpec> trials;
    for (std::size_t st = 0; st < map.starts().size(); ++st)
      for (int k = 0; k < cfg.trials_per_start; ++k) {
        const std::uint64_t seed =
            derive_seed(cfg.seed, {kTagTrial, setting64, sid64, st, static_cast<std::uint64_t>(k)});
        Rng rng(seed);
        const Dest d = kDests[uniform_index(3, rng)];
        const auto& lists = structure.lists.at(d);
        trials.push_back({map.starts()[st], d, lists[uniform_index(lists.size(), rng)], rng()});
      }

    // [model][n] -> per-repeat statistics
    struct Acc {
      std::vector<double> repeat_means;
      double decision_sum = 0.0;
      int decisions = 0;
      int target_hits = 0;
      int dest_hits = 0;
      int trials = 0;
    };
    std::vector<std::vector<Acc>> acc(m_count, std::vector<Acc>(n_count));

    for (int r = 0; r < cfg.repeats; ++r) {
      const auto r64 = static_cast<std::uint64_t>(r);
      const TrainingSet train =
          make_training_set(learner, structure, max_n, derive_seed(cfg.seed, {kTagTrain, setting64, sid64, r64}));
      for (std::size_t ni = 0; ni < n_count; ++ni) {
        const int n = cfg.n_values[ni];
        for (std::size_t mi = 0; mi < m_count; ++mi) {
          const PosteriorSource source = cfg.models[mi];
          const PosteriorSet post = learn_posteriors(
              learner, source, train, n, cfg.gibbs,
              derive_seed(cfg.gibbs.seed, {kTagGibbs, setting64, sid64, r64, static_cast<std::uint64_t>(n)}));
          const HelperConfig hc{cfg.threshold, cfg.beta_helper, source};
          Acc& a = acc[mi][ni];
          double score_sum = 0.0;
          for (const auto& spec : trials) {
            const TrialResult res = run_trial(helper, structure, &post, spec, hc);
            score_sum += res.score;
            if (res.decision_time) {
              a.decision_sum += *res.decision_time;
              ++a.decisions;
            }
            a.target_hits += res.target_correct ? 1 : 0;
            a.dest_hits += res.destination_correct ? 1 : 0;
            ++a.trials;
          }
          a.repeat_means.push_back(score_sum / static_cast<double>(trials.size()));
        }
      }
    }

    for (std::size_t mi = 0; mi < m_count; ++mi)
      for (std::size_t ni = 0; ni < n_count; ++ni) {
        const Acc& a = acc[mi][ni];
        Exp2Row row;
        row.setting = setting;
        row.structure_id = sid;
        row.model = std::string(source_name(cfg.models[mi]));
        row.n_observations = cfg.n_values[ni];
        row.repeats = cfg.repeats;
        // Shifted by the first repeat so identical repeats give exactly zero variance.
        const double shift = a.repeat_means.front();
        const double count = static_cast<double>(a.repeat_means.size());
        double mean_dev = 0.0;
        for (double v : a.repeat_means) mean_dev += v - shift;
        mean_dev /= count;
        double var = 0.0;
        for (double v : a.repeat_means) var += (v - shift - mean_dev) * (v - shift - mean_dev);
        row.mean_score = shift + mean_dev;
        row.variance = var / count;
        row.mean_decision_time =
            a.decisions ? a.decision_sum / a.decisions : std::numeric_limits<double>::quiet_NaN();
        row.target_accuracy = static_cast<double>(a.target_hits) / a.trials;
        row.dest_accuracy = static_cast<double>(a.dest_hits) / a.trials;
        per_structure[si].push_back(std::move(row));
      }
  });

  Exp2Report report;
  for (auto& rows : per_structure)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  return report;
}

Exp2Report run_experiment2(const GridMap& map, const Exp2Config& cfg) {
  Exp2Report all;
  for (int setting : cfg.settings) {
    auto part = run_experiment2(map, setting, cfg);
    all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
  }
  return all;
}

std::string Exp2Report::to_csv() const {
  std::ostringstream out;
  out << kExp2CsvHeader << '\n';
  for (const auto& r : rows)
    out << r.setting << ',' << r.structure_id << ',' << r.model << ',' << r.n_observations << ','
        << r.repeats << ',' << format_double(r.mean_score) << ',' << format_double(r.variance) << ','
        << format_double(r.mean_decision_time) << ',' << format_double(r.target_accuracy) << ','
        << format_double(r.dest_accuracy) << '\n';
  return out.str();
}

std::vector<Exp2Summary> Exp2Report::summary() const {
  struct Key {
    int setting;
    std::string model;
    int n;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::pair<Exp2Summary, int>> groups;
  std::vector<Key> order;
  for (const auto& r : rows) {
    Key k{r.setting, r.model, r.n_observations};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) {
      it->second.first = {r.setting, r.model, r.n_observations, 0.0, 0.0};
      order.push_back(k);
    }
    it->second.first.mean_score += r.mean_score;
    it->second.first.variance += r.variance;
    ++it->second.second;
  }
  std::vector<Exp2Summary> out;
  for (const auto& k : order) {
    auto [s, count] = groups.at(k);
    s.mean_score /= count;
    s.variance /= count;
    out.push_back(s);
  }
  return out;
}

std::string Exp2Report::summary_text() const {
  std::ostringstream out;
  out << "setting  model          n   mean_score  variance\n";
  char line[128];
  for (const auto& s : summary()) {
    std::snprintf(line, sizeof line, "%-8d %-14s %-3d %10.3f %9.4f\n", s.setting, s.model.c_str(),
                  s.n_observations, s.mean_score, s.variance);
    out << line;
  }
  return out.str();
}

}  // namespace subgoal
