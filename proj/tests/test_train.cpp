#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "boxte/data.hpp"
#include "boxte/eval.hpp"
#include "boxte/gradcheck.hpp"
#include "boxte/train.hpp"

using namespace boxte;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// d = 1 model whose scores are trivial to compute by hand: all bumps and time
// scalars are zero, every box is [-1, 1], so score(h, r, t) is just
// dist(base_h) + dist(base_t) against that interval.
ModelParams flat_model() {
  ModelConfig mc;
  mc.dim = 1;
  mc.k = 1;
  ModelParams p = init_params({3, 1, 3}, mc, 0);
  p.entity_base = {0.0, 0.5, 2.0};
  p.entity_bump = {0.0, 0.0, 0.0};
  p.rel_scalars = {0.0};
  for (auto& x : p.time_bank) x = 0.0;
  p.head_corner_a = {-1.0};
  p.head_corner_b = {1.0};
  p.tail_corner_a = {-1.0};
  p.tail_corner_b = {1.0};
  return p;
}

// Interval [-1, 1]: inside |x|/3, outside 3|x| - 8/3.
double flat_dist(double x) { return std::abs(x) <= 1.0 ? std::abs(x) / 3.0 : 3.0 * std::abs(x) - 8.0 / 3.0; }

TemporalKG small_kg() {
  SynthSpec spec;
  spec.num_entities = 5;
  spec.num_relations = 2;
  spec.num_timestamps = 3;
  spec.patterns = {PlantedPattern::rigid_relation};
  spec.pairs_per_relation = 4;
  return generate_synthetic_tkg(21, spec);
}

// Moves every third training fact into the validation split.
TemporalKG with_valid_split(TemporalKG kg) {
  std::vector<Quadruple> train, valid;
  for (std::size_t i = 0; i < kg.train.size(); ++i)
    (i % 3 == 0 ? valid : train).push_back(kg.train[i]);
  kg.train = std::move(train);
  kg.valid = std::move(valid);
  kg.filter = build_filter_index(kg.train, kg.valid, kg.test);
  return kg;
}

}  // namespace

TEST_CASE("analytic gradients agree with central differences everywhere") {
  const auto cases = run_gradient_checks(3);
  REQUIRE(cases.size() >= 16);  // every variant/bounding/loss combination
  for (const auto& c : cases) {
    INFO(c.name << " worst tensor: " << c.worst_tensor);
    CHECK(c.max_rel_err < 1e-4);
  }
}

TEST_CASE("cross-entropy loss equals the softmax log-probability of the positive") {
  const auto p = flat_model();
  const Quadruple pos{0, 0, 1, 0};
  const std::vector<Quadruple> negs = {{2, 0, 1, 0}, {0, 0, 2, 0}};

  const double s_pos = flat_dist(0.0) + flat_dist(0.5);
  const double s1 = flat_dist(2.0) + flat_dist(0.5);
  const double s2 = flat_dist(0.0) + flat_dist(2.0);
  const double expected = std::log(std::exp(-s_pos) + std::exp(-s1) + std::exp(-s2)) + s_pos;

  CHECK_THAT(cross_entropy_loss(p, pos, negs, nullptr), WithinRel(expected, 1e-12));
}

TEST_CASE("self-adversarial loss is the margin loss at the softmax weights") {
  const auto p = flat_model();
  const Quadruple pos{0, 0, 1, 1};
  const std::vector<Quadruple> negs = {{2, 0, 1, 1}, {0, 0, 2, 1}, {1, 0, 0, 1}};
  const double margin = 2.0, temp = 0.75;

  std::vector<double> s(negs.size());
  for (std::size_t i = 0; i < negs.size(); ++i) s[i] = score(p, negs[i]);
  const auto w = adversarial_weights(s, temp, margin);

  double wsum = 0.0;
  for (double x : w) {
    CHECK(x > 0.0);
    wsum += x;
  }
  CHECK_THAT(wsum, WithinRel(1.0, 1e-12));

  // Hand-built expectation from the definition.
  auto softplus = [](double x) { return std::log1p(std::exp(x)); };
  double expected = softplus(score(p, pos) - margin);
  for (std::size_t i = 0; i < negs.size(); ++i) expected += w[i] * softplus(margin - s[i]);

  const double loss = self_adversarial_loss(p, pos, negs, margin, temp, nullptr);
  CHECK_THAT(loss, WithinRel(expected, 1e-12));
  CHECK_THAT(loss, WithinRel(self_adversarial_loss_at_weights(p, pos, negs, w, margin), 1e-15));
}

TEST_CASE("temporal smoothness averages fourth powers of bank steps") {
  ModelConfig mc;
  mc.dim = 1;
  mc.k = 1;
  ModelParams p = init_params({1, 1, 3}, mc, 0);
  p.time_bank = {0.0, 0.5, -0.5};  // steps 0.5 and -1
  CHECK_THAT(temporal_smoothness(p, nullptr), WithinRel((0.0625 + 1.0) / 2.0, 1e-15));

  SECTION("a single timestamp has nothing to smooth") {
    ModelParams q = init_params({1, 1, 1}, mc, 0);
    CHECK(temporal_smoothness(q, nullptr) == 0.0);
  }

  SECTION("the factorized bank matches its own materialization") {
    ModelConfig fc;
    fc.dim = 3;
    fc.k = 2;
    fc.factor_rank = 2;
    ModelParams f = init_params({1, 1, 4}, fc, 5);

    const auto bank = materialize_time_bank(f);
    const std::size_t kd = 2 * 3;
    double expected = 0.0;
    for (std::size_t tau = 0; tau + 1 < 4; ++tau)
      for (std::size_t i = 0; i < kd; ++i) {
        const double diff = bank[(tau + 1) * kd + i] - bank[tau * kd + i];
        expected += diff * diff * diff * diff;
      }
    expected /= 3.0;
    CHECK_THAT(temporal_smoothness(f, nullptr), WithinRel(expected, 1e-12));
  }

  SECTION("only the time-bump variant has a bank") {
    ModelConfig sc;
    sc.dim = 1;
    sc.variant = Variant::box_per_stamp;
    ModelParams q = init_params({1, 1, 3}, sc, 0);
    CHECK_THROWS_AS(temporal_smoothness(q, nullptr), std::invalid_argument);
  }
}

TEST_CASE("negative sampling corrupts heads first, tails second, never the original") {
  const Quadruple q{3, 1, 7, 2};
  std::mt19937_64 rng(99);
  const auto negs = sample_negatives(q, 5, 10, rng);

  REQUIRE(negs.size() == 5);
  for (int i = 0; i < 5; ++i) {
    const auto& n = negs[static_cast<std::size_t>(i)];
    CHECK(n.relation == 1);
    CHECK(n.time == 2);
    if (i < 3) {  // ceil(5/2) head corruptions
      CHECK(n.tail == 7);
      CHECK(n.head != 3);
      CHECK(n.head < 10);
    } else {
      CHECK(n.head == 3);
      CHECK(n.tail != 7);
      CHECK(n.tail < 10);
    }
  }

  SECTION("the draw stream is deterministic") {
    std::mt19937_64 r1(5), r2(5);
    CHECK(sample_negatives(q, 8, 10, r1) == sample_negatives(q, 8, 10, r2));
  }

  SECTION("with two entities the corruption is forced") {
    std::mt19937_64 r(1);
    for (const auto& n : sample_negatives({0, 0, 1, 0}, 6, 2, r)) {
      CHECK((n.head == 0 || n.head == 1));
      CHECK((n.head != 0 || n.tail != 1));  // something changed
    }
  }

  SECTION("impossible requests are refused") {
    std::mt19937_64 r(1);
    CHECK_THROWS_AS(sample_negatives(q, -1, 10, r), std::invalid_argument);
    CHECK_THROWS_AS(sample_negatives(q, 3, 1, r), std::invalid_argument);
  }
}

TEST_CASE("one optimizer step reproduces the update formula") {
  ModelConfig mc;
  mc.dim = 1;
  mc.k = 1;
  ModelParams p = init_params({1, 1, 1}, mc, 0);
  p.entity_base = {0.25};
  auto st = init_adam(p);
  auto g = zeros_like(p);

  const double lr = 0.1, g0 = 0.5;
  double m = 0.0, v = 0.0, x = 0.25;
  for (int step = 1; step <= 3; ++step) {
    g.entity_base[0] = g0 * step;
    adam_step(p, g, st, lr);

    m = 0.9 * m + (1.0 - 0.9) * (g0 * step);
    v = 0.999 * v + (1.0 - 0.999) * (g0 * step) * (g0 * step);
    const double bc1 = 1.0 - std::pow(0.9, step);
    const double bc2 = 1.0 - std::pow(0.999, step);
    x -= lr * (m / bc1) / (std::sqrt(v / bc2) + 1e-8);
    CHECK(p.entity_base[0] == x);
    CHECK(st.step == step);
  }

  // Never-touched tensors stay exactly where they started.
  CHECK(p.entity_bump[0] == init_params({1, 1, 1}, mc, 0).entity_bump[0]);
}

TEST_CASE("training is reproducible from its seed") {
  const auto kg = small_kg();
  ModelConfig mc;
  mc.dim = 4;
  mc.k = 1;
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.negatives = 4;
  tc.seed = 77;

  const auto a = train(kg, mc, tc);
  const auto b = train(kg, mc, tc);
  CHECK(a.params.entity_base == b.params.entity_base);
  CHECK(a.params.time_bank == b.params.time_bank);
  REQUIRE(a.log.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.log[i].loss == b.log[i].loss);
    CHECK(std::isfinite(a.log[i].loss));
  }

  TrainConfig other = tc;
  other.seed = 78;
  const auto c = train(kg, mc, other);
  CHECK(a.params.entity_base != c.params.entity_base);
}

TEST_CASE("a zero smoothness weight leaves the trajectory bit-identical to a loop without the term") {
  const auto kg = small_kg();
  ModelConfig mc;
  mc.dim = 3;
  mc.k = 2;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 7;
  tc.negatives = 3;
  tc.seed = 12;
  tc.reg_weight = 0.0;

  const auto result = train(kg, mc, tc);
  for (const auto& e : result.log) CHECK(e.reg == 0.0);

  // The same loop rebuilt here with no smoothness code path at all.
  const Sizes sizes{kg.vocab.entities.size(), kg.vocab.relations.size(), kg.vocab.times.size()};
  ModelParams params = init_params(sizes, mc, tc.seed);
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

  CHECK(result.params.entity_base == params.entity_base);
  CHECK(result.params.entity_bump == params.entity_bump);
  CHECK(result.params.head_corner_a == params.head_corner_a);
  CHECK(result.params.tail_corner_b == params.tail_corner_b);
  CHECK(result.params.rel_scalars == params.rel_scalars);
  CHECK(result.params.time_bank == params.time_bank);
}

TEST_CASE("a positive smoothness weight changes the trajectory and is logged") {
  const auto kg = small_kg();
  ModelConfig mc;
  mc.dim = 3;
  mc.k = 1;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  tc.negatives = 3;
  tc.seed = 12;

  const auto plain = train(kg, mc, tc);
  tc.reg_weight = 0.5;
  const auto smoothed = train(kg, mc, tc);

  CHECK(plain.params.time_bank != smoothed.params.time_bank);
  for (const auto& e : smoothed.log) {
    CHECK(e.reg >= 0.0);
    CHECK(std::isfinite(e.reg));
  }
}

TEST_CASE("validation runs on its cadence and tracks the best epoch") {
  const auto kg = with_valid_split(small_kg());
  REQUIRE(!kg.valid.empty());
  ModelConfig mc;
  mc.dim = 4;
  mc.k = 1;
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 8;
  tc.negatives = 4;
  tc.validate_every = 2;
  tc.seed = 3;

  const auto r = train(kg, mc, tc);
  double best = -1.0;
  int best_epoch = -1;
  for (const auto& e : r.log) {
    CHECK(e.validated == (e.epoch % 2 == 0));
    if (e.validated && e.valid_mrr > best) {
      best = e.valid_mrr;
      best_epoch = e.epoch;
    }
  }
  CHECK(r.best_epoch == best_epoch);
  CHECK(r.best_mrr == best);

  // The stored snapshot really is the model that produced the best score.
  CHECK_THAT(evaluate(r.best_params, kg.valid, kg.filter).mrr, WithinAbs(r.best_mrr, 0.0));
}

TEST_CASE("without validation the best snapshot falls back to the final model") {
  const auto kg = small_kg();
  ModelConfig mc;
  mc.dim = 2;
  mc.k = 1;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.negatives = 2;
  const auto r = train(kg, mc, tc);
  CHECK(r.best_epoch == -1);
  CHECK(r.best_params.entity_base == r.params.entity_base);
}

TEST_CASE("training configurations are validated up front") {
  const ModelConfig temporal;
  ModelConfig per_stamp;
  per_stamp.variant = Variant::box_per_stamp;

  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(validate_train_config(tc, temporal), std::invalid_argument);

  tc = {};
  tc.negatives = 0;
  CHECK_THROWS_AS(validate_train_config(tc, temporal), std::invalid_argument);

  tc = {};
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(validate_train_config(tc, temporal), std::invalid_argument);

  tc = {};
  tc.reg_weight = -0.1;
  CHECK_THROWS_AS(validate_train_config(tc, temporal), std::invalid_argument);

  tc = {};
  tc.reg_weight = 0.1;
  CHECK_NOTHROW(validate_train_config(tc, temporal));
  CHECK_THROWS_AS(validate_train_config(tc, per_stamp), std::invalid_argument);

  tc = {};
  tc.loss = LossKind::self_adversarial;
  tc.adversarial_temperature = 0.0;
  CHECK_THROWS_AS(validate_train_config(tc, temporal), std::invalid_argument);
}

TEST_CASE("memorizing a handful of facts drives their ranks toward the top") {
  SynthSpec spec;
  spec.num_entities = 6;
  spec.num_relations = 1;
  spec.num_timestamps = 4;
  spec.patterns = {PlantedPattern::rigid_relation};
  spec.pairs_per_relation = 5;
  const auto kg = generate_synthetic_tkg(8, spec);  // 20 facts

  ModelConfig mc;
  mc.dim = 16;
  mc.k = 2;
  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 4;
  tc.negatives = 8;
  tc.learning_rate = 0.01;
  tc.seed = 2;

  const auto before = evaluate(init_params({6, 1, 4}, mc, tc.seed), kg.train, kg.filter);
  const auto r = train(kg, mc, tc);
  const auto after = evaluate(r.params, kg.train, kg.filter);
  CHECK(after.mrr > before.mrr);
  CHECK(after.mrr > 0.9);
}
