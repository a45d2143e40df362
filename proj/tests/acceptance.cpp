// Acceptance gate: ten desk-scale checks, one [PASS]/[FAIL] line each.
// Exit code 0 only when every check passes.
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "boxte/budget.hpp"
#include "boxte/checkpoint.hpp"
#include "boxte/data.hpp"
#include "boxte/eval.hpp"
#include "boxte/expressiveness.hpp"
#include "boxte/gradcheck.hpp"
#include "boxte/model.hpp"
#include "boxte/patterns.hpp"
#include "boxte/rng.hpp"
#include "boxte/run_config.hpp"
#include "boxte/train.hpp"

using namespace boxte;

namespace {

int failures = 0;

using Outcome = std::pair<bool, std::string>;

void run(int id, const char* label, Outcome (*fn)()) {
  bool ok = false;
  std::string detail;
  try {
    auto [o, d] = fn();
    ok = o;
    detail = std::move(d);
  } catch (const std::exception& ex) {
    detail = std::string("exception: ") + ex.what();
  }
  std::printf("[%s] %2d. %s: %s\n", ok ? "PASS" : "FAIL", id, label, detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// 1. Both closed-form constructions classify 50 random graphs over small
//    universes with zero mismatches.
Outcome c1_constructions() {
  const int trials = 50;
  std::mt19937_64 rng(2026);
  int perfect = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const Sizes s{static_cast<std::int32_t>(1 + rand_below(rng, 3)),
                  static_cast<std::int32_t>(1 + rand_below(rng, 2)),
                  static_cast<std::int32_t>(1 + rand_below(rng, 3))};
    QuadrupleSet graph;
    for (std::int32_t h = 0; h < s.num_entities; ++h)
      for (std::int32_t r = 0; r < s.num_relations; ++r)
        for (std::int32_t t = 0; t < s.num_entities; ++t)
          for (std::int32_t tau = 0; tau < s.num_times; ++tau)
            if (rand_below(rng, 2) == 0) graph.insert({h, r, t, tau});
    const bool ok = classify_universe(construct_per_fact_model(graph, s), graph).perfect() &&
                    classify_universe(construct_per_triple_model(graph, s), graph).perfect();
    if (ok) ++perfect;
  }
  return {perfect == trials,
          fmt("%d/%d random universes classified exactly by both constructions", perfect, trials)};
}

// 2. Analytic gradients vs central finite differences (h = 1e-5) across both
//    losses, the smoothness term, bounded and factorized forms.
Outcome c2_gradients() {
  const auto cases = run_gradient_checks(5, 1e-5);
  double worst = 0.0;
  std::string worst_name = "-";
  for (const auto& c : cases) {
    if (c.max_rel_err > worst) {
      worst = c.max_rel_err;
      worst_name = c.name + " / " + c.worst_tensor;
    }
  }
  const bool ok = cases.size() >= 20 && worst < 1e-4;
  return {ok, fmt("%zu objective variants, worst relative error %.3g (%s)", cases.size(), worst,
                  worst_name.c_str())};
}

// 3. The inside and outside distance branches meet at box boundaries.
Outcome c3_continuity() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = rand_uniform(rng, -5.0, 5.0);
    const double b = rand_uniform(rng, -5.0, 5.0);
    const double l = std::min(a, b), u = std::max(a, b);
    const double c = 0.5 * (l + u);
    const double w = u - l;
    const double wp1 = w + 1.0;
    const double kappa = 0.5 * w * (wp1 - 1.0 / wp1);
    for (const double e : {l, u}) {
      const double inside = point_box_distance_dim(e, l, u);  // boundary takes the inside branch
      const double outside = std::abs(e - c) * wp1 - kappa;
      worst = std::max(worst, std::abs(inside - outside));
    }
  }
  return {worst <= 1e-9, fmt("largest branch gap over 20000 box boundaries: %.3g", worst)};
}

// 4. Training memorizes a 20-fact synthetic graph (d = 32, k = 2, 200 epochs).
Outcome c4_memorization() {
  SynthSpec spec;
  spec.num_entities = 6;
  spec.num_relations = 1;
  spec.num_timestamps = 4;
  spec.patterns = {PlantedPattern::rigid_relation};
  spec.pairs_per_relation = 5;  // 5 pairs x 4 stamps = 20 facts
  const auto kg = generate_synthetic_tkg(8, spec);

  ModelConfig mc;
  mc.dim = 32;
  mc.k = 2;
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 4;
  tc.negatives = 8;
  tc.learning_rate = 0.01;
  tc.seed = 2;
  const auto result = train(kg, mc, tc);
  const auto m = evaluate(result.params, kg.train, kg.filter);
  return {m.mrr >= 0.95,
          fmt("training MRR %.4f over %zu facts (threshold 0.95)", m.mrr, kg.train.size())};
}

// 5. Every inference-pattern configuration passes its geometric and semantic
//    checks over a 20-entity universe.
Outcome c5_patterns() {
  const Sizes sizes{20, 4, 3};
  ModelConfig mc;
  mc.dim = 6;
  mc.k = 2;
  auto base = init_params(sizes, mc, 11);
  std::mt19937_64 rng(11 + 17);
  for (auto* t : {&base.entity_base, &base.entity_bump})
    for (auto& x : *t) x = rand_uniform(rng, -1.0, 1.0);

  const std::vector<PatternSpec> specs = {
      {PatternKind::rigid, {0}, {}},
      {PatternKind::hierarchy, {0, 1}, {0, 1}},
      {PatternKind::intersection, {0, 1, 2}, {0, 1, 2}},
      {PatternKind::inversion, {0, 1}, {0, 2}},
      {PatternKind::mutual_exclusion, {0, 1}, {1, 2}},
  };
  int passed = 0;
  std::string failed;
  for (const auto& spec : specs) {
    const auto built = build_pattern_config(base, spec);
    if (check_geometric(built, spec).ok && check_semantic(built, spec).ok)
      ++passed;
    else
      failed += std::string(" ") + pattern_name(spec.kind);
  }
  if (passed == static_cast<int>(specs.size()))
    return {true, fmt("all %d configurations hold geometrically and semantically", passed)};
  return {false, "failing patterns:" + failed};
}

// 6. Training a graph with one volatile and one rigid relation orders the
//    learned scalar magnitudes: volatile above rigid.
Outcome c6_scalars() {
  SynthSpec spec;
  spec.num_entities = 8;
  spec.num_relations = 2;
  spec.num_timestamps = 4;
  spec.patterns = {PlantedPattern::volatile_relation, PlantedPattern::rigid_relation};
  spec.pairs_per_relation = 8;
  const auto kg = generate_synthetic_tkg(14, spec);  // relation 0 volatile, relation 1 rigid

  ModelConfig mc;
  mc.dim = 16;
  mc.k = 2;
  TrainConfig tc;
  tc.epochs = 150;
  tc.batch_size = 16;
  tc.negatives = 16;
  tc.learning_rate = 0.01;
  tc.seed = 5;
  const auto result = train(kg, mc, tc);

  double vol = -1.0, rig = -1.0;
  for (const auto& [r, mean] : inspect_scalars(result.params)) {
    if (r == 0) vol = mean;
    if (r == 1) rig = mean;
  }
  return {vol > rig, fmt("mean |scalar|: volatile %.3f vs rigid %.3f", vol, rig)};
}

// 7. Filtered ranks equal an independent sort-based oracle, rank for rank.
Outcome c7_rank_oracle() {
  auto check_universe = [](std::int32_t entities, int dim, std::size_t fact_count,
                           std::uint64_t seed) -> std::pair<std::int64_t, std::int64_t> {
    const Sizes s{entities, 3, 4};
    ModelConfig mc;
    mc.dim = dim;
    mc.k = 2;
    const auto params = init_params(s, mc, seed);

    std::mt19937_64 rng(seed + 1);
    std::vector<Quadruple> facts;
    QuadrupleSet seen;
    while (facts.size() < fact_count) {
      const Quadruple q{static_cast<std::int32_t>(rand_below(rng, entities)),
                        static_cast<std::int32_t>(rand_below(rng, 3)),
                        static_cast<std::int32_t>(rand_below(rng, entities)),
                        static_cast<std::int32_t>(rand_below(rng, 4))};
      if (seen.insert(q).second) facts.push_back(q);
    }
    const QuadrupleSet filter(facts.begin(), facts.end());

    // Sort-based reference: position-average the tied block directly.
    auto oracle_rank = [&](const Quadruple& q, Side side) {
      const double true_score = score(params, q);
      std::vector<double> scores{true_score};
      const std::int32_t original = side == Side::head ? q.head : q.tail;
      for (std::int32_t e = 0; e < entities; ++e) {
        if (e == original) continue;
        Quadruple corrupted = q;
        (side == Side::head ? corrupted.head : corrupted.tail) = e;
        if (filter.contains(corrupted)) continue;
        scores.push_back(score(params, corrupted));
      }
      std::sort(scores.begin(), scores.end());
      const auto lo = std::lower_bound(scores.begin(), scores.end(), true_score) - scores.begin();
      const auto hi = std::upper_bound(scores.begin(), scores.end(), true_score) - scores.begin();
      return 1.0 + static_cast<double>(lo + hi - 1) / 2.0;
    };

    std::int64_t queries = 0, agreed = 0;
    for (const auto& q : facts)
      for (const Side side : {Side::head, Side::tail}) {
        ++queries;
        if (rank_fact(params, q, side, filter).rank == oracle_rank(q, side)) ++agreed;
      }
    return {agreed, queries};
  };

  const auto [a1, q1] = check_universe(12, 5, 30, 33);
  const auto [a2, q2] = check_universe(500, 3, 4, 91);
  return {a1 == q1 && a2 == q2,
          fmt("%lld/%lld ranks identical across two universes", static_cast<long long>(a1 + a2),
              static_cast<long long>(q1 + q2))};
}

// 8. The closed-form parameter count hits the published budget figure and the
//    budget fit inverts it exactly.
Outcome c8_param_arithmetic() {
  const auto s = preset_sizes("icews14");
  const auto count = param_count(CountModel::box, s, 154, 2);
  const auto fit = dimension_for_budget(CountModel::box, s, 2'379'144, 2);
  const bool ok = count == 2'379'144 && fit.dim == 154 && fit.count == count && !fit.capped;
  return {ok, fmt("d=154, k=2 gives %lld parameters; budget fit returns d=%d",
                  static_cast<long long>(count), fit.dim)};
}

// 9. The smoothness term reproduces its hand-computed fixture value, and a
//    zero weight leaves training bit-identical to a loop without the term.
Outcome c9_smoothness() {
  ModelConfig mc;
  mc.dim = 2;
  mc.k = 1;
  auto p = init_params({1, 1, 3}, mc, 0);
  p.time_bank = {0.0, 0.0, 1.0, 0.0, 1.0, 2.0};  // rows (0,0), (1,0), (1,2)
  const double lam = temporal_smoothness(p, nullptr);
  const bool fixture_ok = std::abs(lam - 8.5) <= 1e-12;

  SynthSpec spec;
  spec.num_entities = 5;
  spec.num_relations = 2;
  spec.num_timestamps = 3;
  spec.patterns = {PlantedPattern::rigid_relation};
  spec.pairs_per_relation = 4;
  const auto kg = generate_synthetic_tkg(21, spec);
  ModelConfig tmc;
  tmc.dim = 3;
  tmc.k = 2;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 7;
  tc.negatives = 3;
  tc.seed = 12;
  tc.reg_weight = 0.0;
  const auto result = train(kg, tmc, tc);

  // The same loop rebuilt with no smoothness code path at all.
  const Sizes sizes{kg.vocab.entities.size(), kg.vocab.relations.size(), kg.vocab.times.size()};
  ModelParams params = init_params(sizes, tmc, tc.seed);
  auto adam = init_adam(params);
  auto grads = zeros_like(params);
  std::mt19937_64 rng(tc.seed + 1);
  std::vector<std::size_t> order(kg.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    shuffle_deterministic(order, rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);
      zero_gradients(grads);
      for (std::size_t i = start; i < stop; ++i) {
        const Quadruple& q = kg.train[order[i]];
        const auto negs = sample_negatives(q, tc.negatives, sizes.num_entities, rng);
        cross_entropy_loss(params, q, negs, &grads, scale);
      }
      adam_step(params, grads, adam, tc.learning_rate);
    }
  }
  const bool traj_ok = result.params.entity_base == params.entity_base &&
                       result.params.entity_bump == params.entity_bump &&
                       result.params.head_corner_a == params.head_corner_a &&
                       result.params.head_corner_b == params.head_corner_b &&
                       result.params.tail_corner_a == params.tail_corner_a &&
                       result.params.tail_corner_b == params.tail_corner_b &&
                       result.params.rel_scalars == params.rel_scalars &&
                       result.params.time_bank == params.time_bank;
  return {fixture_ok && traj_ok,
          fmt("fixture value %.17g (want 8.5); zero-weight trajectory %s a loop without the term", lam,
              traj_ok ? "matches" : "differs from")};
}

// 10. Rerunning the same configuration and seed reproduces the epoch log and
//     the checkpoint byte for byte.
Outcome c10_determinism() {
  SynthSpec spec;
  spec.num_entities = 5;
  spec.num_relations = 2;
  spec.num_timestamps = 3;
  spec.patterns = {PlantedPattern::rigid_relation};
  spec.pairs_per_relation = 4;
  auto kg = generate_synthetic_tkg(21, spec);
  // Hold out every third fact so the log has validation columns.
  std::vector<Quadruple> train_facts, valid_facts;
  for (std::size_t i = 0; i < kg.train.size(); ++i)
    (i % 3 == 0 ? valid_facts : train_facts).push_back(kg.train[i]);
  kg.train = train_facts;
  kg.valid = valid_facts;
  kg.filter = build_filter_index(kg.train, kg.valid, kg.test);

  ModelConfig mc;
  mc.dim = 8;
  mc.k = 1;
  TrainConfig tc;
  tc.epochs = 6;
  tc.batch_size = 8;
  tc.negatives = 4;
  tc.validate_every = 2;
  tc.seed = 9;

  RunConfig run;
  run.set("dim", "8");
  run.set("k", "1");
  run.set("seed", "9");

  auto one_run = [&](const char* tag) {
    const auto result = train(kg, mc, tc);
    std::string csv = "epoch,loss,reg,valid_mrr\n";
    for (const auto& e : result.log)
      csv += fmt("%d,%.17g,%.17g,%.17g\n", e.epoch, e.loss, e.reg, e.valid_mrr);
    const auto path =
        (std::filesystem::temp_directory_path() / (std::string("boxte_accept_") + tag + ".ckpt")).string();
    save_checkpoint(path, run, kg.vocab, result.params);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    std::remove(path.c_str());
    return std::make_pair(csv, bytes.str());
  };

  const auto [csv1, ck1] = one_run("a");
  const auto [csv2, ck2] = one_run("b");
  const bool ok = csv1 == csv2 && ck1 == ck2 && !csv1.empty() && !ck1.empty();
  return {ok, fmt("epoch log (%zu bytes) and checkpoint (%zu bytes) identical across reruns",
                  csv1.size(), ck1.size())};
}

}  // namespace

int main() {
  run(1, "closed-form constructions", c1_constructions);
  run(2, "analytic gradients", c2_gradients);
  run(3, "distance branch continuity", c3_continuity);
  run(4, "small-graph memorization", c4_memorization);
  run(5, "inference-pattern configurations", c5_patterns);
  run(6, "learned temporal scalars", c6_scalars);
  run(7, "ranking oracle equivalence", c7_rank_oracle);
  run(8, "parameter arithmetic", c8_param_arithmetic);
  run(9, "smoothness exactness", c9_smoothness);
  run(10, "run determinism", c10_determinism);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
