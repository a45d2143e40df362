#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "boxte/expressiveness.hpp"
#include "boxte/rng.hpp"

using namespace boxte;

namespace {

QuadrupleSet random_universe_subset(const Sizes& s, std::mt19937_64& rng) {
  QuadrupleSet graph;
  for (std::int32_t h = 0; h < s.num_entities; ++h)
    for (std::int32_t r = 0; r < s.num_relations; ++r)
      for (std::int32_t t = 0; t < s.num_entities; ++t)
        for (std::int32_t tau = 0; tau < s.num_times; ++tau)
          if (rand_below(rng, 2) == 0) graph.insert({h, r, t, tau});
  return graph;
}

std::vector<Quadruple> universe(const Sizes& s) {
  std::vector<Quadruple> all;
  for (std::int32_t h = 0; h < s.num_entities; ++h)
    for (std::int32_t r = 0; r < s.num_relations; ++r)
      for (std::int32_t t = 0; t < s.num_entities; ++t)
        for (std::int32_t tau = 0; tau < s.num_times; ++tau) all.push_back({h, r, t, tau});
  return all;
}

}  // namespace

TEST_CASE("the all-true base makes every universe fact hold") {
  const Sizes s{3, 2, 2};
  const auto m = construct_all_true_base(s, 4);
  for (const auto& q : universe(s)) CHECK(oracle_fact_true(m, q));

  CHECK_THROWS_AS(construct_all_true_base({0, 1, 1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(construct_all_true_base(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(construct_all_true_base({200, 200, 200}, 1000), std::invalid_argument);  // guard rails
}

TEST_CASE("dimension bookkeeping assigns distinct indices") {
  const Sizes s{3, 2, 4};
  std::vector<std::int64_t> seen;
  for (std::int32_t r = 0; r < 2; ++r)
    for (std::int32_t t = 0; t < 3; ++t)
      for (std::int32_t tau = 0; tau < 4; ++tau) seen.push_back(dim_for_rel_tail_time(s, r, t, tau));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(seen.front() == 0);
  CHECK(seen.back() == 2 * 3 * 4 - 1);

  seen.clear();
  for (std::int32_t h = 0; h < 3; ++h)
    for (std::int32_t r = 0; r < 2; ++r)
      for (std::int32_t t = 0; t < 3; ++t) seen.push_back(dim_for_triple(s, h, r, t));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(seen.back() == 3 * 2 * 3 - 1);
}

TEST_CASE("one false-making step removes exactly the target fact") {
  const Sizes s{3, 2, 2};
  auto m = construct_all_true_base(s, static_cast<std::int64_t>(s.num_relations) * s.num_entities * s.num_times);
  const Quadruple target{1, 0, 2, 1};

  make_fact_false(m, target, 1.5);  // clears the required 0.5 face distance

  for (const auto& q : universe(s)) {
    INFO("(" << q.head << ", " << q.relation << ", " << q.tail << ", " << q.time << ")");
    CHECK(oracle_fact_true(m, q) == (q != target));
  }
}

TEST_CASE("successive false-making steps never disturb earlier ones") {
  const Sizes s{2, 2, 2};
  auto m = construct_all_true_base(s, static_cast<std::int64_t>(s.num_relations) * s.num_entities * s.num_times);
  QuadrupleSet removed;

  // Remove a batch of facts one at a time, re-verifying the whole universe
  // after every step.
  const std::vector<Quadruple> victims = {{0, 0, 0, 0}, {1, 1, 0, 1}, {0, 1, 1, 0}, {1, 0, 1, 1}, {0, 0, 1, 1}};
  for (const auto& v : victims) {
    const std::int64_t d = dim_for_rel_tail_time(s, v.relation, v.tail, v.time);
    const double tail_point =
        m.row(m.entity_base, v.tail)[d] + m.row(m.entity_bump, v.head)[d] + m.row(m.time_shift, v.time)[d];
    const double required = m.row(m.tail_upper, v.relation)[d] - tail_point;
    make_fact_false(m, v, required + 1.0);
    removed.insert(v);
    for (const auto& q : universe(s)) CHECK(oracle_fact_true(m, q) == !removed.contains(q));
  }
}

TEST_CASE("an insufficient push distance is rejected") {
  const Sizes s{2, 1, 1};
  auto m = construct_all_true_base(s, 2);
  // The tail point starts at 0 with the face at 0.5: C must exceed 0.5.
  CHECK_THROWS_AS(make_fact_false(m, {0, 0, 1, 0}, 0.5), std::invalid_argument);
  CHECK_NOTHROW(make_fact_false(m, {0, 0, 1, 0}, 0.5 + 1e-9));
}

TEST_CASE("the relation-count construction embeds random fact sets exactly") {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Sizes s{static_cast<std::int32_t>(1 + rand_below(rng, 3)), static_cast<std::int32_t>(1 + rand_below(rng, 2)),
                  static_cast<std::int32_t>(1 + rand_below(rng, 3))};
    const auto graph = random_universe_subset(s, rng);
    const auto report = classify_universe(construct_per_fact_model(graph, s), graph);
    INFO("trial " << trial << " sizes (" << s.num_entities << ", " << s.num_relations << ", " << s.num_times
                  << ") facts " << graph.size());
    REQUIRE(report.perfect());
    checked += static_cast<int>(report.universe);
  }
  CHECK(checked > 0);
}

TEST_CASE("the timestamp-count construction embeds random fact sets exactly") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 60; ++trial) {
    const Sizes s{static_cast<std::int32_t>(1 + rand_below(rng, 3)), static_cast<std::int32_t>(1 + rand_below(rng, 2)),
                  static_cast<std::int32_t>(1 + rand_below(rng, 3))};
    const auto graph = random_universe_subset(s, rng);
    const auto report = classify_universe(construct_per_triple_model(graph, s), graph);
    INFO("trial " << trial << " sizes (" << s.num_entities << ", " << s.num_relations << ", " << s.num_times
                  << ") facts " << graph.size());
    REQUIRE(report.perfect());
  }
}

TEST_CASE("both constructions handle the empty set and the full universe") {
  const Sizes s{2, 2, 2};
  const auto all = universe(s);
  QuadrupleSet full;
  for (const auto& q : all) full.insert(q);

  CHECK(classify_universe(construct_per_fact_model({}, s), {}).perfect());
  CHECK(classify_universe(construct_per_fact_model(full, s), full).perfect());
  CHECK(classify_universe(construct_per_triple_model({}, s), {}).perfect());
  CHECK(classify_universe(construct_per_triple_model(full, s), full).perfect());
}

TEST_CASE("self-loops and repeated heads survive the constructions") {
  const Sizes s{2, 1, 2};
  QuadrupleSet graph;
  graph.insert({0, 0, 0, 0});  // self-loop held at one timestamp only
  graph.insert({0, 0, 1, 0});
  graph.insert({0, 0, 1, 1});  // same head, always-held tail
  graph.insert({1, 0, 0, 1});

  CHECK(classify_universe(construct_per_fact_model(graph, s), graph).perfect());
  CHECK(classify_universe(construct_per_triple_model(graph, s), graph).perfect());
}

TEST_CASE("re-enabling an already-true fact is an error") {
  const Sizes s{2, 1, 2};
  auto m = construct_all_true_base(s, static_cast<std::int64_t>(s.num_entities) * s.num_entities * s.num_relations);
  CHECK_THROWS_AS(make_fact_true_at_time(m, {0, 0, 1, 0}), std::invalid_argument);
}

TEST_CASE("classification reports collect mismatches") {
  const Sizes s{2, 1, 1};
  const auto m = construct_all_true_base(s, 1);  // everything predicted true
  QuadrupleSet graph;
  graph.insert({0, 0, 0, 0});  // reference holds only one fact

  const auto report = classify_universe(m, graph);
  CHECK(report.universe == 4);
  CHECK(report.correct == 1);
  CHECK_FALSE(report.perfect());
  REQUIRE(report.mismatches.size() == 3);
  for (const auto& mm : report.mismatches) {
    CHECK_FALSE(mm.expected);
    CHECK(mm.predicted);
  }
}

TEST_CASE("the oracle geometry transfers onto the trainable scorer") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Sizes s{static_cast<std::int32_t>(1 + rand_below(rng, 2)), static_cast<std::int32_t>(1 + rand_below(rng, 2)),
                  static_cast<std::int32_t>(1 + rand_below(rng, 2))};
    const auto graph = random_universe_subset(s, rng);
    const auto m = construct_per_fact_model(graph, s);
    const auto p = to_model_params(m);
    for (const auto& q : universe(s)) {
      CHECK(fact_holds(p, q) == oracle_fact_true(m, q));
      CHECK(fact_holds(p, q) == graph.contains(q));
    }
  }
}
