#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxte/data.hpp"
#include "boxte/model.hpp"

namespace boxte {

// Minimal model used by the capacity constructions: one time bump per
// timestamp shared by all relations, boxes stored directly as lower/upper.
// Kept separate from ModelParams so the constructions stay independent of the
// trainable scorer; to_model_params bridges the two for cross-checks.
struct OracleModel {
  Sizes sizes;
  std::int64_t dim = 0;
  std::vector<double> entity_base, entity_bump;                        // E x d
  std::vector<double> time_shift;                                      // T x d
  std::vector<double> head_lower, head_upper, tail_lower, tail_upper;  // R x d

  double* row(std::vector<double>& t, std::int64_t i) { return t.data() + i * dim; }
  const double* row(const std::vector<double>& t, std::int64_t i) const { return t.data() + i * dim; }
};

// One dimension per (relation, tail entity, timestamp): a fact can be made
// false there by pushing its tail point past the relation's upper face.
inline std::int64_t dim_for_rel_tail_time(const Sizes& s, std::int32_t rel, std::int32_t tail, std::int32_t time) {
  return (static_cast<std::int64_t>(rel) * s.num_entities + tail) * s.num_times + time;
}

// One dimension per (head, relation, tail) triple, for the timestamp-count
// construction whose base model is static.
inline std::int64_t dim_for_triple(const Sizes& s, std::int32_t head, std::int32_t rel, std::int32_t tail) {
  return (static_cast<std::int64_t>(head) * s.num_relations + rel) * s.num_entities + tail;
}

// Everything at the origin inside unit boxes: every universe fact holds.
inline OracleModel construct_all_true_base(const Sizes& s, std::int64_t dim) {
  if (s.num_entities < 1 || s.num_relations < 1 || s.num_times < 1)
    throw std::invalid_argument("construct_all_true_base: sizes must be positive");
  if (dim < 1) throw std::invalid_argument("construct_all_true_base: dim must be >= 1");
  const auto universe = static_cast<std::int64_t>(s.num_entities) * s.num_entities * s.num_relations * s.num_times;
  if (universe * dim > 100'000'000)
    throw std::invalid_argument("construct_all_true_base: universe too large");
  OracleModel m;
  m.sizes = s;
  m.dim = dim;
  m.entity_base.assign(static_cast<std::size_t>(s.num_entities) * dim, 0.0);
  m.entity_bump.assign(static_cast<std::size_t>(s.num_entities) * dim, 0.0);
  m.time_shift.assign(static_cast<std::size_t>(s.num_times) * dim, 0.0);
  m.head_lower.assign(static_cast<std::size_t>(s.num_relations) * dim, -0.5);
  m.head_upper.assign(static_cast<std::size_t>(s.num_relations) * dim, 0.5);
  m.tail_lower.assign(static_cast<std::size_t>(s.num_relations) * dim, -0.5);
  m.tail_upper.assign(static_cast<std::size_t>(s.num_relations) * dim, 0.5);
  return m;
}

// head = base(h) + bump(t) + shift(tau), tail = base(t) + bump(h) + shift(tau),
// each inside its side's box in every dimension (faces inclusive).
inline bool oracle_fact_true(const OracleModel& m, const Quadruple& q) {
  const auto* hb = m.row(m.entity_base, q.head);
  const auto* tb = m.row(m.entity_base, q.tail);
  const auto* hu = m.row(m.entity_bump, q.head);
  const auto* tu = m.row(m.entity_bump, q.tail);
  const auto* ts = m.row(m.time_shift, q.time);
  const auto* hl = m.row(m.head_lower, q.relation);
  const auto* hh = m.row(m.head_upper, q.relation);
  const auto* tl = m.row(m.tail_lower, q.relation);
  const auto* th = m.row(m.tail_upper, q.relation);
  for (std::int64_t i = 0; i < m.dim; ++i) {
    const double head = hb[i] + tu[i] + ts[i];
    if (head < hl[i] || head > hh[i]) return false;
    const double tail = tb[i] + hu[i] + ts[i];
    if (tail < tl[i] || tail > th[i]) return false;
  }
  return true;
}

namespace detail {

// Shared body of the two false-making steps. Pushes the target's tail point
// past its relation's upper tail face at `dim` while every other fact keeps
// its truth value: affected points shift by at most C down or C up, and all
// boxes grow C upward and 2C downward, except the target relation's upper
// tail face, which stays put so only the target escapes. with_time controls
// whether the timestamp step applies (off for static constructions).
inline void make_false_at(OracleModel& m, const Quadruple& target, double C, std::int64_t dim, bool with_time) {
  const double tail_point = m.row(m.entity_base, target.tail)[dim] + m.row(m.entity_bump, target.head)[dim] +
                            (with_time ? m.row(m.time_shift, target.time)[dim] : 0.0);
  const double required = m.row(m.tail_upper, target.relation)[dim] - tail_point;
  if (C <= required)
    throw std::invalid_argument("make_false_at: C = " + std::to_string(C) + " does not clear the upper face (needs > " +
                                std::to_string(required) + ")");

  m.row(m.entity_bump, target.head)[dim] += C;
  for (std::int32_t e = 0; e < m.sizes.num_entities; ++e)
    if (e != target.tail) m.row(m.entity_base, e)[dim] -= C;
  if (with_time) {
    for (std::int32_t t = 0; t < m.sizes.num_times; ++t)
      if (t != target.time) m.row(m.time_shift, t)[dim] -= C;
  }
  for (std::int32_t r = 0; r < m.sizes.num_relations; ++r) {
    m.row(m.head_lower, r)[dim] -= 2.0 * C;
    m.row(m.head_upper, r)[dim] += C;
    m.row(m.tail_lower, r)[dim] -= 2.0 * C;
    if (r != target.relation) m.row(m.tail_upper, r)[dim] += C;
  }
}

}  // namespace detail

// One induction step of the relation-count construction: makes `target` false
// at its (relation, tail, time) dimension. C must strictly clear the distance
// from the target's tail point to the upper tail face.
inline void make_fact_false(OracleModel& m, const Quadruple& target, double C) {
  detail::make_false_at(m, target, C, dim_for_rel_tail_time(m.sizes, target.relation, target.tail, target.time),
                        true);
}

// Static sibling used by the timestamp-count construction's base phase; the
// time dimension of `target` must be 0 and time shifts stay untouched.
inline void make_static_fact_false(OracleModel& m, std::int32_t head, std::int32_t rel, std::int32_t tail,
                                   double C) {
  detail::make_false_at(m, {head, rel, tail, 0}, C, dim_for_triple(m.sizes, head, rel, tail), false);
}

// Any finite set of facts over the universe, embedded exactly: start from the
// all-true base and make every non-fact false, one per induction step.
inline OracleModel construct_per_fact_model(const QuadrupleSet& graph, const Sizes& s) {
  const std::int64_t dim =
      static_cast<std::int64_t>(s.num_relations) * s.num_entities * s.num_times;
  OracleModel m = construct_all_true_base(s, dim);
  for (std::int32_t h = 0; h < s.num_entities; ++h)
    for (std::int32_t r = 0; r < s.num_relations; ++r)
      for (std::int32_t t = 0; t < s.num_entities; ++t)
        for (std::int32_t tau = 0; tau < s.num_times; ++tau) {
          const Quadruple q{h, r, t, tau};
          if (graph.contains(q)) continue;
          const std::int64_t d = dim_for_rel_tail_time(s, r, t, tau);
          const double tail_point =
              m.row(m.entity_base, t)[d] + m.row(m.entity_bump, h)[d] + m.row(m.time_shift, tau)[d];
          const double required = m.row(m.tail_upper, r)[d] - tail_point;
          make_fact_false(m, q, required + 1.0);
        }
  return m;
}

// Makes one held fact of a static-false triple true at exactly its timestamp:
// the time shift drops by a C that lands the tail point inside the box, and
// every lower face drops by the same C so facts sharing the timestamp keep
// their membership.
inline void make_fact_true_at_time(OracleModel& m, const Quadruple& target) {
  const std::int64_t dim = dim_for_triple(m.sizes, target.head, target.relation, target.tail);
  if (oracle_fact_true(m, target))
    throw std::invalid_argument("make_fact_true_at_time: target already true");
  const double static_tail = m.row(m.entity_base, target.tail)[dim] + m.row(m.entity_bump, target.head)[dim];
  const double lo = static_tail - m.row(m.tail_upper, target.relation)[dim];
  const double hi = static_tail - m.row(m.tail_lower, target.relation)[dim];
  if (!(lo < hi)) throw std::logic_error("make_fact_true_at_time: degenerate face interval");
  const double C = 0.5 * (lo + hi);
  m.row(m.time_shift, target.time)[dim] -= C;
  for (std::int32_t r = 0; r < m.sizes.num_relations; ++r) {
    m.row(m.head_lower, r)[dim] -= C;
    m.row(m.tail_lower, r)[dim] -= C;
  }
}

// Any finite set of facts, embedded with one dimension per (head, relation,
// tail) triple. Triples holding at every timestamp stay in the static
// all-true base; the rest are first made statically false, then re-enabled
// fact by fact at exactly the timestamps the set contains.
inline OracleModel construct_per_triple_model(const QuadrupleSet& graph, const Sizes& s) {
  const std::int64_t dim =
      static_cast<std::int64_t>(s.num_entities) * s.num_entities * s.num_relations;
  OracleModel m = construct_all_true_base(s, dim);

  auto always_holds = [&](std::int32_t h, std::int32_t r, std::int32_t t) {
    for (std::int32_t tau = 0; tau < s.num_times; ++tau)
      if (!graph.contains({h, r, t, tau})) return false;
    return true;
  };

  for (std::int32_t h = 0; h < s.num_entities; ++h)
    for (std::int32_t r = 0; r < s.num_relations; ++r)
      for (std::int32_t t = 0; t < s.num_entities; ++t) {
        if (always_holds(h, r, t)) continue;
        const std::int64_t d = dim_for_triple(s, h, r, t);
        const double static_tail = m.row(m.entity_base, t)[d] + m.row(m.entity_bump, h)[d];
        const double required = m.row(m.tail_upper, r)[d] - static_tail;
        make_static_fact_false(m, h, r, t, required + 1.0);
      }

  for (std::int32_t h = 0; h < s.num_entities; ++h)
    for (std::int32_t r = 0; r < s.num_relations; ++r)
      for (std::int32_t t = 0; t < s.num_entities; ++t) {
        if (always_holds(h, r, t)) continue;
        for (std::int32_t tau = 0; tau < s.num_times; ++tau)
          if (graph.contains({h, r, t, tau})) make_fact_true_at_time(m, {h, r, t, tau});
      }
  return m;
}

struct Mismatch {
  Quadruple fact;
  bool expected = false;
  bool predicted = false;
};

struct ClassificationReport {
  std::int64_t universe = 0;
  std::int64_t correct = 0;
  std::vector<Mismatch> mismatches;

  bool perfect() const { return universe > 0 && correct == universe; }
};

// Exhaustive truth comparison over every (head, relation, tail, time).
inline ClassificationReport classify_universe(const OracleModel& m, const QuadrupleSet& reference) {
  ClassificationReport report;
  const Sizes& s = m.sizes;
  for (std::int32_t h = 0; h < s.num_entities; ++h)
    for (std::int32_t r = 0; r < s.num_relations; ++r)
      for (std::int32_t t = 0; t < s.num_entities; ++t)
        for (std::int32_t tau = 0; tau < s.num_times; ++tau) {
          const Quadruple q{h, r, t, tau};
          const bool expected = reference.contains(q);
          const bool predicted = oracle_fact_true(m, q);
          ++report.universe;
          if (expected == predicted)
            ++report.correct;
          else if (report.mismatches.size() < 64)
            report.mismatches.push_back({q, expected, predicted});
        }
  return report;
}

// Same geometry as the trainable scorer with k = 1 and a unit relation
// scalar, so box membership there must agree with oracle_fact_true.
inline ModelParams to_model_params(const OracleModel& m) {
  ModelConfig config;
  config.dim = static_cast<int>(m.dim);
  config.k = 1;
  config.variant = Variant::box_temporal;
  ModelParams p;
  p.sizes = m.sizes;
  p.config = config;
  p.entity_base = m.entity_base;
  p.entity_bump = m.entity_bump;
  p.head_corner_a = m.head_lower;
  p.head_corner_b = m.head_upper;
  p.tail_corner_a = m.tail_lower;
  p.tail_corner_b = m.tail_upper;
  p.rel_scalars.assign(static_cast<std::size_t>(m.sizes.num_relations), 1.0);
  p.time_bank = m.time_shift;  // T x 1 x d
  return p;
}

}  // namespace boxte
