#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>

#include "subgoal/collab.hpp"
#include "subgoal/experiment2.hpp"
#include "subgoal/parallel.hpp"

using namespace subgoal;

namespace {

PosteriorTable table(std::initializer_list<std::pair<SubgoalSequence, double>> rows) {
  PosteriorTable t;
  for (const auto& [g, p] : rows) t.entries[g] = p;
  return t;
}

SubgoalStructure single_lists(int a, int b, int c) {
  SubgoalStructure s;
  s.lists[Dest::A] = {{{a}, Dest::A}};
  s.lists[Dest::B] = {{{b}, Dest::B}};
  s.lists[Dest::C] = {{{c}, Dest::C}};
  return s;
}

PosteriorSet concentrated(const SubgoalStructure& s) {
  PosteriorSet out;
  for (const auto& [d, gs] : s.lists)
    for (const auto& g : gs) out[d].entries[g] = 1.0;
  return out;
}

StateSequence column(int x, int top) {
  StateSequence p;
  for (int y = 0; y <= top; ++y) p.push_back({x, y});
  return p;
}

double row3_sum(const ItemMarginal& m) { return m[7] + m[8] + m[9] + m.none; }

}  // namespace

TEST_SUITE("collab") {
  TEST_CASE("no helper and ground truth on the reference trial") {
    const Planner p(canonical_map(), 2.0);
    const SubgoalStructure s = single_lists(7, 7, 7);
    const TrialSpec spec{{5, 0}, Dest::C, {{7}, Dest::C}, 3};
    const TrialResult none = run_trial(p, s, nullptr, spec, {0.5, 2.0, PosteriorSource::None});
    CHECK(none.worker_steps == 22);
    CHECK(none.score == 56);
    CHECK_FALSE(none.helper_target);
    const TrialResult gt = run_trial(p, s, nullptr, spec, {0.5, 2.0, PosteriorSource::GroundTruth});
    CHECK(gt.worker_steps == 16);
    CHECK(gt.score == 68);
    CHECK(gt.helper_target == 7);
    CHECK(gt.decision_time == 0);
    CHECK(gt.target_correct);
    CHECK(gt.destination_correct);
    CHECK(gt.helper_path.front() == canonical_map().helper_start());
    CHECK(gt.helper_path.back() == canonical_map().dest_cell(Dest::C));

    const auto log = episode_log(gt, spec);
    CHECK(log.front()["agent"] == "worker");
    CHECK(std::any_of(log.begin(), log.end(), [](const nlohmann::json& e) { return e.contains("event"); }));

    CHECK_THROWS_AS(run_trial(p, s, nullptr, {{5, 0}, Dest::C, {{8}, Dest::C}, 3}, {}), InputError);
    CHECK_THROWS_AS(run_trial(p, s, nullptr, spec, {0.5, 2.0, PosteriorSource::Crp}), InputError);
  }

  TEST_CASE("marginals at the start equal the prior mixture") {
    const Planner p(canonical_map(), 2.0);
    PosteriorSet post;
    post[Dest::A] = table({{{{7}, Dest::A}, 1.0}, {{{1, 8}, Dest::A}, 0.5}});
    post[Dest::B] = table({{{{9}, Dest::B}, 0.5}});
    post[Dest::C] = table({{{{2}, Dest::C}, 1.0}});
    const StateSequence start{{4, 0}};
    const ItemMarginal m = target_item_marginal(p, start, post);
    CHECK(m[7] == doctest::Approx(1.0 / 3.0));
    CHECK(m[8] == doctest::Approx(0.5 / 3.0));
    CHECK(m[9] == doctest::Approx(0.5 / 3.0));
    CHECK(m[1] == doctest::Approx(0.5 / 3.0));
    CHECK(m.none == doctest::Approx(1.0 / 3.0));
    CHECK(row3_sum(m) == doctest::Approx(1.0).epsilon(1e-12));
    const auto d = destination_marginal(p, start, post);
    CHECK(d[0] == doctest::Approx(0.5));
    CHECK(d[1] == doctest::Approx(1.0 / 6.0));
    CHECK(d[2] == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("marginal examples") {
    const Planner p(canonical_map(), 2.0);
    PosteriorSet eight;
    eight[Dest::A] = table({{{{8}, Dest::A}, 0.4}, {{{2, 8}, Dest::A}, 0.9}});
    eight[Dest::C] = table({{{{5, 8}, Dest::C}, 1.0}});
    for (const auto& prefix : {column(5, 0), column(5, 5), column(1, 4)}) {
      const ItemMarginal m = target_item_marginal(p, prefix, eight);
      CHECK(m[8] == doctest::Approx(1.0));
      CHECK(row3_sum(m) == doctest::Approx(1.0).epsilon(1e-12));
    }

    PosteriorSet uniform_c;
    uniform_c[Dest::C] = table({{{{7}, Dest::C}, 1.0}, {{{8}, Dest::C}, 1.0}, {{{9}, Dest::C}, 1.0}});
    const ItemMarginal m = target_item_marginal(p, column(2, 9), uniform_c);
    CHECK(m[7] > m[8]);
    // Up is optimal toward both 8 and 9 from every cell of the column.
    CHECK(m[8] == doctest::Approx(m[9]).epsilon(1e-12));

    PosteriorSet sym;
    for (Dest d : kDests)
      sym[d] = table({{{{7}, d}, 1.0}, {{{8}, d}, 1.0}, {{{9}, d}, 1.0}});
    const auto start_only = destination_marginal(p, {{5, 0}}, sym);
    for (double v : start_only) CHECK(v == doctest::Approx(1.0 / 3.0));
    // Past item 8 only B keeps going straight up optimally.
    const auto up = destination_marginal(p, column(5, 11), sym);
    CHECK(up[1] > up[0]);
    CHECK(up[1] > up[2]);
    CHECK(up[0] == doctest::Approx(up[2]).epsilon(1e-9));
    CHECK(up[0] + up[1] + up[2] == doctest::Approx(1.0).epsilon(1e-12));

    PosteriorSet only_c;
    only_c[Dest::C] = table({{{{9}, Dest::C}, 0.3}});
    CHECK(destination_marginal(p, column(0, 3), only_c)[2] == doctest::Approx(1.0));
  }

  TEST_CASE("incremental belief matches the batch computation") {
    const Planner p(canonical_map(), 2.0);
    PosteriorSet post;
    for (Dest d : kDests) post[d] = table({{{{7}, d}, 0.7}, {{{2, 8}, d}, 0.4}, {{{3, 6, 9}, d}, 0.2}});
    StateSequence path{{6, 0}};
    Rng rng(3);
    generate_path(p, {{2, 8}, Dest::B}, {6, 0}, PolicyMode::Softmax, rng).swap(path);
    HelperBelief belief(p, post, path.front());
    for (std::size_t t = 1; t < path.size(); ++t) {
      belief.observe(path[t]);
      const StateSequence prefix(path.begin(), path.begin() + static_cast<long>(t) + 1);
      const ItemMarginal a = belief.item_marginal();
      const ItemMarginal b = target_item_marginal(p, prefix, post);
      for (int id = 1; id <= 9; ++id) CHECK(a[id] == doctest::Approx(b[id]).epsilon(1e-12));
      CHECK(row3_sum(a) == doctest::Approx(1.0).epsilon(1e-9));
      const auto da = belief.destination_marginal();
      CHECK(da[0] + da[1] + da[2] == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("helper never hurts and ground truth is best") {
    const GridMap& map = canonical_map();
    const Planner helper(map, 2.0);
    const Planner learner(map, 6.0);
    Rng rng(21);
    for (int setting : {1, 2, 3}) {
      for (const auto& [sid, s] : select_structures(map, setting, 3, 4)) {
        // Posteriors from a few optimal training paths.
        std::map<PosteriorSource, PosteriorSet> sets;
        for (Dest d : kDests) {
          std::vector<StateSequence> paths;
          for (int k = 0; k < 3; ++k)
            paths.push_back(generate_path(learner, s.lists.at(d)[k % s.lists.at(d).size()],
                                          map.starts()[uniform_index(11, rng)], PolicyMode::Optimal, rng));
          GibbsConfig cfg;
          cfg.iterations = 600;
          cfg.burn_in = 100;
          sets[PosteriorSource::Crp][d] = gibbs_infer(learner, paths, d, cfg);
          sets[PosteriorSource::Independent][d] = independent_model(learner, paths, d);
          sets[PosteriorSource::Logical][d] = logical_possibility_model(map, paths, d);
          sets[PosteriorSource::Copy][d] = copy_model(learner, paths, d);
        }
        for (Cell start : map.starts())
          for (Dest d : kDests)
            for (const auto& g : s.lists.at(d)) {
              const TrialSpec spec{start, d, g, rng()};
              const int none = run_trial(helper, s, nullptr, spec, {0.5, 2.0, PosteriorSource::None}).score;
              const int gt = run_trial(helper, s, nullptr, spec, {0.5, 2.0, PosteriorSource::GroundTruth}).score;
              CHECK(gt >= none);
              for (auto& [src, post] : sets) {
                const int sc = run_trial(helper, s, &post, spec, {0.5, 2.0, src}).score;
                CHECK(sc >= none);
                CHECK(gt >= sc);
              }
            }
      }
    }
  }

  TEST_CASE("concentrated posteriors reproduce ground truth on setting 1") {
    const GridMap& map = canonical_map();
    const Planner helper(map, 2.0);
    int checked = 0;
    for (const auto& s : enumerate_structures(map, 1)) {
      const PosteriorSet post = concentrated(s);
      for (Dest d : kDests) {
        const auto& g = s.lists.at(d).front();
        int same = 0;
        for (Dest e : kDests) same += s.lists.at(e).front().items == g.items;
        const double prior_mass = same / 3.0;
        if (!(0.5 < prior_mass)) continue;
        for (Cell start : map.starts()) {
          const TrialSpec spec{start, d, g, 9};
          const auto crp = run_trial(helper, s, &post, spec, {0.5, 2.0, PosteriorSource::Crp});
          const auto gt = run_trial(helper, s, nullptr, spec, {0.5, 2.0, PosteriorSource::GroundTruth});
          CHECK(crp.score == gt.score);
          CHECK(crp.decision_time == 0);
          ++checked;
        }
      }
    }
    CHECK(checked > 0);
  }

  TEST_CASE("a helper that never crosses the threshold changes nothing") {
    const GridMap& map = canonical_map();
    const Planner helper(map, 2.0);
    const SubgoalStructure s = single_lists(7, 8, 9);
    PosteriorSet post;
    for (Dest d : kDests) post[d] = table({{{{7}, d}, 1.0}, {{{8}, d}, 1.0}, {{{9}, d}, 1.0}, {{{}, d}, 1.0}});
    for (Cell start : map.starts()) {
      const TrialSpec spec{start, Dest::B, {{8}, Dest::B}, 5};
      const auto a = run_trial(helper, s, &post, spec, {1.0, 2.0, PosteriorSource::Independent});
      const auto b = run_trial(helper, s, nullptr, spec, {1.0, 2.0, PosteriorSource::None});
      CHECK_FALSE(a.helper_target);
      CHECK(a.worker_path == b.worker_path);
      CHECK(a.score == b.score);
    }
  }

  TEST_CASE("structures") {
    const GridMap& map = canonical_map();
    CHECK(enumerate_structures(map, 1).size() == 27);
    CHECK(enumerate_structures(map, 2).size() == 729);
    CHECK(enumerate_structures(map, 3).size() == 27);
    for (const auto& s : enumerate_structures(map, 3)) {
      CHECK_NOTHROW(s.validate(map));
      for (Dest d : kDests) {
        REQUIRE(s.lists.at(d).size() == 2);
        CHECK(s.lists.at(d)[0] != s.lists.at(d)[1]);
      }
    }
    const auto pick = select_structures(map, 2, 10, 1);
    CHECK(pick.size() == 10);
    CHECK(select_structures(map, 2, 10, 1).front().id == pick.front().id);
    CHECK(select_structures(map, 1, 100, 1).size() == 27);
    CHECK_THROWS_AS(enumerate_structures(map, 4), InputError);
  }

  TEST_CASE("small experiment report") {
    Exp2Config cfg;
    cfg.settings = {1};
    cfg.n_values = {1, 2};
    cfg.max_structures = 2;
    cfg.repeats = 2;
    cfg.trials_per_start = 1;
    cfg.gibbs.iterations = 300;
    cfg.gibbs.burn_in = 50;
    const Exp2Report r = run_experiment2(canonical_map(), cfg);
    CHECK(r.rows.size() == 2 * 6 * 2);
    for (const auto& row : r.rows) {
      CHECK(row.repeats == 2);
      if (row.model == "ground_truth" || row.model == "none") CHECK(row.variance == 0.0);
      if (row.model == "none") CHECK(std::isnan(row.mean_decision_time));
    }
    const std::string csv = r.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) == kExp2CsvHeader);
    CHECK(run_experiment2(canonical_map(), cfg).to_csv() == csv);
    cfg.threads = 3;
    CHECK(run_experiment2(canonical_map(), cfg).to_csv() == csv);
    CHECK(r.summary().size() == 6 * 2);
  }

  TEST_CASE("parallel_for visits each index once and rethrows") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                      if (i == 7) throw Error("boom");
                    }),
                    Error);
  }
}
