#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "boxte/data.hpp"
#include "boxte/model.hpp"

namespace boxte {

struct RankResult {
  Quadruple query;
  Side side = Side::head;
  double rank = 0.0;  // half-integer: ties share the averaged position
  std::int32_t candidates = 0;  // corruptions that survived the filter
};

// Filtered rank of the true fact among corruptions of one side. Corruptions
// that are themselves known facts (anywhere in the dataset) are skipped; the
// true fact always competes. Ties count half each, so the rank is the average
// position over all orderings of equal scores.
inline RankResult rank_fact(const ModelParams& p, const Quadruple& q, Side side, const QuadrupleSet& filter) {
  const double true_score = score(p, q);
  std::int32_t lower = 0, tied = 0, considered = 0;
  const std::int32_t original = side == Side::head ? q.head : q.tail;
  for (std::int32_t e = 0; e < p.sizes.num_entities; ++e) {
    if (e == original) continue;
    Quadruple corrupted = q;
    (side == Side::head ? corrupted.head : corrupted.tail) = e;
    if (filter.contains(corrupted)) continue;
    ++considered;
    const double s = score(p, corrupted);
    if (s < true_score)
      ++lower;
    else if (s == true_score)
      ++tied;
  }
  return {q, side, 1.0 + lower + 0.5 * tied, considered};
}

struct MetricsReport {
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::int64_t queries = 0;  // two per fact: head side and tail side
};

inline MetricsReport evaluate(const ModelParams& p, std::span<const Quadruple> facts, const QuadrupleSet& filter) {
  if (facts.empty()) throw std::invalid_argument("evaluate: empty fact list");
  MetricsReport m;
  for (const auto& q : facts) {
    for (Side side : {Side::head, Side::tail}) {
      const double rank = rank_fact(p, q, side, filter).rank;
      m.mr += rank;
      m.mrr += 1.0 / rank;
      m.hits1 += rank <= 1.0 ? 1.0 : 0.0;
      m.hits3 += rank <= 3.0 ? 1.0 : 0.0;
      m.hits10 += rank <= 10.0 ? 1.0 : 0.0;
      ++m.queries;
    }
  }
  const auto n = static_cast<double>(m.queries);
  m.mr /= n;
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

}  // namespace boxte
