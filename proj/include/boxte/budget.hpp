#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "boxte/model.hpp"

namespace boxte {

// Model families whose parameter footprint the budget tools can count. The
// first two are this library's; the rest are common baselines, counted by
// their published closed forms so budgets can be matched across families.
enum class CountModel { box, box_factorized, de_simple, tcomplex, tntcomplex };

inline CountModel parse_count_model(const std::string& name) {
  if (name == "box") return CountModel::box;
  if (name == "box-factorized") return CountModel::box_factorized;
  if (name == "de-simple") return CountModel::de_simple;
  if (name == "tcomplex") return CountModel::tcomplex;
  if (name == "tntcomplex") return CountModel::tntcomplex;
  throw std::invalid_argument("unknown model family '" + name +
                              "' (expected box, box-factorized, de-simple, tcomplex or tntcomplex)");
}

inline std::int64_t param_count(CountModel model, const Sizes& s, int dim, int k = 1, int factor_rank = 0,
                                double de_gamma = 0.0) {
  if (s.num_entities < 1 || s.num_relations < 1 || s.num_times < 1)
    throw std::invalid_argument("param_count: sizes must be positive");
  if (dim < 1) throw std::invalid_argument("param_count: dim must be >= 1");
  const auto E = static_cast<std::int64_t>(s.num_entities);
  const auto R = static_cast<std::int64_t>(s.num_relations);
  const auto T = static_cast<std::int64_t>(s.num_times);
  const auto d = static_cast<std::int64_t>(dim);
  switch (model) {
    case CountModel::box:
      if (k < 1) throw std::invalid_argument("param_count: k must be >= 1");
      return d * (2 * E + static_cast<std::int64_t>(k) * T + 2 * R) + static_cast<std::int64_t>(k) * R;
    case CountModel::box_factorized: {
      if (k < 1) throw std::invalid_argument("param_count: k must be >= 1");
      if (factor_rank < 1) throw std::invalid_argument("param_count: factor_rank must be >= 1");
      const auto b = static_cast<std::int64_t>(factor_rank);
      return d * (2 * E + static_cast<std::int64_t>(k) * b + 2 * R) + static_cast<std::int64_t>(k) * R +
             b * static_cast<std::int64_t>(k) * T;
    }
    case CountModel::de_simple:
      if (de_gamma < 0.0 || de_gamma > 1.0)
        throw std::invalid_argument("param_count: de_gamma must lie in [0, 1]");
      // Static dims carry 2 values per entity, diachronic dims carry 6.
      return std::llround(2.0 * static_cast<double>(d) *
                          ((1.0 + 2.0 * de_gamma) * static_cast<double>(E) + static_cast<double>(R)));
    case CountModel::tcomplex:
      return 2 * d * (E + T + 2 * R);
    case CountModel::tntcomplex:
      return 2 * d * (E + T + 4 * R);
  }
  throw std::logic_error("param_count: unhandled model");
}

struct BudgetFit {
  int dim = 0;
  bool capped = false;  // the search cap was reached, not the budget
  std::int64_t count = 0;
};

// Largest dim whose count fits the budget. Counts grow monotonically in dim,
// so a binary search suffices; dims are capped at one million.
inline BudgetFit dimension_for_budget(CountModel model, const Sizes& s, std::int64_t budget, int k = 1,
                                      int factor_rank = 0, double de_gamma = 0.0) {
  constexpr int dim_cap = 1'000'000;
  if (param_count(model, s, 1, k, factor_rank, de_gamma) > budget)
    throw std::invalid_argument("dimension_for_budget: budget below the one-dimensional count");
  int lo = 1, hi = dim_cap;  // invariant: count(lo) <= budget
  if (param_count(model, s, dim_cap, k, factor_rank, de_gamma) <= budget) {
    return {dim_cap, true, param_count(model, s, dim_cap, k, factor_rank, de_gamma)};
  }
  while (lo + 1 < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (param_count(model, s, mid, k, factor_rank, de_gamma) <= budget)
      lo = mid;
    else
      hi = mid;
  }
  return {lo, false, param_count(model, s, lo, k, factor_rank, de_gamma)};
}

}  // namespace boxte
