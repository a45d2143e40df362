#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "boxte/model.hpp"

namespace boxte {

enum class PatternKind { rigid, hierarchy, intersection, inversion, mutual_exclusion };

// A cross-time rule over specific relations at specific timestamps, e.g.
// hierarchy: r0 at t0 implies r1 at t1.
struct PatternSpec {
  PatternKind kind = PatternKind::rigid;
  std::vector<std::int32_t> relations;
  std::vector<std::int32_t> timestamps;
};

inline const char* pattern_name(PatternKind k) {
  switch (k) {
    case PatternKind::rigid: return "rigid";
    case PatternKind::hierarchy: return "hierarchy";
    case PatternKind::intersection: return "intersection";
    case PatternKind::inversion: return "inversion";
    case PatternKind::mutual_exclusion: return "mutual-exclusion";
  }
  return "?";
}

inline void validate_pattern_spec(const PatternSpec& spec, const Sizes& sizes) {
  std::size_t rels = 0, stamps = 0;
  switch (spec.kind) {
    case PatternKind::rigid: rels = 1; stamps = 0; break;
    case PatternKind::hierarchy:
    case PatternKind::inversion:
    case PatternKind::mutual_exclusion: rels = 2; stamps = 2; break;
    case PatternKind::intersection: rels = 3; stamps = 3; break;
  }
  if (spec.relations.size() != rels || spec.timestamps.size() != stamps)
    throw std::invalid_argument(std::string("pattern ") + pattern_name(spec.kind) + " takes " +
                                std::to_string(rels) + " relations and " + std::to_string(stamps) + " timestamps");
  for (auto r : spec.relations)
    if (r < 0 || r >= sizes.num_relations) throw std::out_of_range("pattern: relation id out of range");
  for (auto t : spec.timestamps)
    if (t < 0 || t >= sizes.num_times) throw std::out_of_range("pattern: timestamp id out of range");
}

namespace detail {

// Pattern geometry is stated through exact corner equalities, so the builder
// keeps every involved value on a 2^-8 grid: scalars, bank rows and target
// corners snap there, making products exact multiples of 2^-16 and all sums
// exact in double. Induced corners then reproduce the targets bit for bit.
inline double snap_grid(double x) {
  const double snapped = std::round(x * 256.0) / 256.0;
  return std::clamp(snapped, -2.0, 2.0);
}

inline void set_box(ModelParams& p, std::int32_t r, double lo, double hi, const std::vector<double>& bump) {
  auto ha = p.row(p.head_corner_a, r);
  auto hb = p.row(p.head_corner_b, r);
  auto ta = p.row(p.tail_corner_a, r);
  auto tb = p.row(p.tail_corner_b, r);
  for (int i = 0; i < p.config.dim; ++i) {
    ha[i] = ta[i] = lo + bump[static_cast<std::size_t>(i)];
    hb[i] = tb[i] = hi + bump[static_cast<std::size_t>(i)];
  }
}

inline void set_side_box(ModelParams& p, std::int32_t r, Side side, const std::vector<double>& lo,
                         const std::vector<double>& hi, const std::vector<double>& bump) {
  auto a = side == Side::head ? p.row(p.head_corner_a, r) : p.row(p.tail_corner_a, r);
  auto b = side == Side::head ? p.row(p.head_corner_b, r) : p.row(p.tail_corner_b, r);
  for (int i = 0; i < p.config.dim; ++i) {
    a[i] = lo[static_cast<std::size_t>(i)] + bump[static_cast<std::size_t>(i)];
    b[i] = hi[static_cast<std::size_t>(i)] + bump[static_cast<std::size_t>(i)];
  }
}

}  // namespace detail

// Returns a copy of `base` whose boxes (and, where the kind requires it, time
// scalars and bank rows) realize the pattern's geometric condition exactly.
// Entity parameters are untouched. Unbounded, unfactorized models only: the
// condition lives on raw corner arithmetic.
inline ModelParams build_pattern_config(const ModelParams& base, const PatternSpec& spec) {
  validate_pattern_spec(spec, base.sizes);
  if (base.config.bounded)
    throw std::invalid_argument("build_pattern_config: bounded models have no exact box geometry");
  if (base.config.variant != Variant::box_temporal)
    throw std::invalid_argument("build_pattern_config: requires the time-bump variant");
  if (base.config.factor_rank != 0)
    throw std::invalid_argument("build_pattern_config: requires the unfactorized time bank");

  ModelParams p = base;
  const auto d = static_cast<std::size_t>(p.config.dim);

  if (spec.kind == PatternKind::rigid) {
    double* alpha = p.rel_scalars.data() + static_cast<std::size_t>(spec.relations[0]) * p.config.k;
    for (int j = 0; j < p.config.k; ++j) alpha[j] = 0.0;
    return p;
  }

  for (auto r : spec.relations) {
    double* alpha = p.rel_scalars.data() + static_cast<std::size_t>(r) * p.config.k;
    for (int j = 0; j < p.config.k; ++j) alpha[j] = detail::snap_grid(alpha[j]);
  }
  for (auto tau : spec.timestamps) {
    double* bank = p.time_bank.data() + static_cast<std::size_t>(tau) * p.config.k * d;
    for (std::size_t i = 0; i < static_cast<std::size_t>(p.config.k) * d; ++i)
      bank[i] = detail::snap_grid(bank[i]);
  }
  std::vector<std::vector<double>> bumps;
  for (std::size_t i = 0; i < spec.relations.size(); ++i)
    bumps.push_back(time_bump(p, spec.relations[i], spec.timestamps[i]));

  switch (spec.kind) {
    case PatternKind::hierarchy:
      // Body box nested strictly inside the head box.
      detail::set_box(p, spec.relations[0], -0.5, 0.5, bumps[0]);
      detail::set_box(p, spec.relations[1], -1.0, 1.0, bumps[1]);
      break;
    case PatternKind::intersection: {
      // Third box = the overlap of the first two, corner by corner.
      detail::set_box(p, spec.relations[0], -1.0, 0.5, bumps[0]);
      detail::set_box(p, spec.relations[1], -0.5, 1.0, bumps[1]);
      const auto b0 = time_induced_box(p, spec.relations[0], Side::head, spec.timestamps[0]);
      const auto b1 = time_induced_box(p, spec.relations[1], Side::head, spec.timestamps[1]);
      std::vector<double> lo(d), hi(d);
      for (std::size_t i = 0; i < d; ++i) {
        lo[i] = std::max(b0.lower[i], b1.lower[i]);
        hi[i] = std::min(b0.upper[i], b1.upper[i]);
      }
      detail::set_side_box(p, spec.relations[2], Side::head, lo, hi, bumps[2]);
      detail::set_side_box(p, spec.relations[2], Side::tail, lo, hi, bumps[2]);
      break;
    }
    case PatternKind::inversion: {
      // Head box of each = tail box of the other.
      const std::vector<double> h_lo(d, -1.0), h_hi(d, 0.75), t_lo(d, -0.75), t_hi(d, 1.0);
      detail::set_side_box(p, spec.relations[0], Side::head, h_lo, h_hi, bumps[0]);
      detail::set_side_box(p, spec.relations[0], Side::tail, t_lo, t_hi, bumps[0]);
      detail::set_side_box(p, spec.relations[1], Side::head, t_lo, t_hi, bumps[1]);
      detail::set_side_box(p, spec.relations[1], Side::tail, h_lo, h_hi, bumps[1]);
      break;
    }
    case PatternKind::mutual_exclusion: {
      // Head boxes separated along dimension 0.
      std::vector<double> lo0(d, -2.0), hi0(d, 2.0), lo1(d, -2.0), hi1(d, 2.0);
      hi0[0] = -0.125;
      lo1[0] = 0.125;
      detail::set_side_box(p, spec.relations[0], Side::head, lo0, hi0, bumps[0]);
      detail::set_side_box(p, spec.relations[1], Side::head, lo1, hi1, bumps[1]);
      const std::vector<double> wide_lo(d, -2.0), wide_hi(d, 2.0);
      detail::set_side_box(p, spec.relations[0], Side::tail, wide_lo, wide_hi, bumps[0]);
      detail::set_side_box(p, spec.relations[1], Side::tail, wide_lo, wide_hi, bumps[1]);
      break;
    }
    case PatternKind::rigid: break;  // handled above
  }
  return p;
}

struct PatternCheck {
  bool ok = true;
  std::string detail;
};

// Verifies the kind's condition on the time-induced boxes with exact corner
// comparisons (strict inequalities for containment and disjointness).
inline PatternCheck check_geometric(const ModelParams& p, const PatternSpec& spec) {
  validate_pattern_spec(spec, p.sizes);
  if (p.config.bounded)
    return {false, "bounded models have no induced-box geometry"};
  if (p.config.variant != Variant::box_temporal)
    return {false, "model variant has no time-induced boxes"};

  auto fail_dim = [&](const char* what, std::size_t i) {
    std::ostringstream os;
    os << what << " violated at dimension " << i;
    return PatternCheck{false, os.str()};
  };

  if (spec.kind == PatternKind::rigid) {
    const double* alpha = p.rel_scalars.data() + static_cast<std::size_t>(spec.relations[0]) * p.config.k;
    for (int j = 0; j < p.config.k; ++j)
      if (alpha[j] != 0.0) return {false, "relation scalar " + std::to_string(j) + " is nonzero"};
    return {};
  }

  std::vector<std::pair<Box, Box>> boxes;  // (head side, tail side) per relation
  for (std::size_t i = 0; i < spec.relations.size(); ++i)
    boxes.emplace_back(time_induced_box(p, spec.relations[i], Side::head, spec.timestamps[i]),
                       time_induced_box(p, spec.relations[i], Side::tail, spec.timestamps[i]));
  const auto d = static_cast<std::size_t>(p.config.dim);

  switch (spec.kind) {
    case PatternKind::hierarchy:
      for (std::size_t i = 0; i < d; ++i) {
        if (!(boxes[1].first.lower[i] <= boxes[0].first.lower[i] &&
              boxes[0].first.upper[i] <= boxes[1].first.upper[i]))
          return fail_dim("head-box containment", i);
        if (!(boxes[1].second.lower[i] <= boxes[0].second.lower[i] &&
              boxes[0].second.upper[i] <= boxes[1].second.upper[i]))
          return fail_dim("tail-box containment", i);
      }
      return {};
    case PatternKind::intersection:
      for (std::size_t i = 0; i < d; ++i) {
        const double lo_h = std::max(boxes[0].first.lower[i], boxes[1].first.lower[i]);
        const double hi_h = std::min(boxes[0].first.upper[i], boxes[1].first.upper[i]);
        if (lo_h > hi_h) return fail_dim("head-box overlap", i);
        if (boxes[2].first.lower[i] != lo_h || boxes[2].first.upper[i] != hi_h)
          return fail_dim("head-box intersection equality", i);
        const double lo_t = std::max(boxes[0].second.lower[i], boxes[1].second.lower[i]);
        const double hi_t = std::min(boxes[0].second.upper[i], boxes[1].second.upper[i]);
        if (lo_t > hi_t) return fail_dim("tail-box overlap", i);
        if (boxes[2].second.lower[i] != lo_t || boxes[2].second.upper[i] != hi_t)
          return fail_dim("tail-box intersection equality", i);
      }
      return {};
    case PatternKind::inversion:
      for (std::size_t i = 0; i < d; ++i) {
        if (boxes[0].first.lower[i] != boxes[1].second.lower[i] ||
            boxes[0].first.upper[i] != boxes[1].second.upper[i])
          return fail_dim("head/tail box equality", i);
        if (boxes[0].second.lower[i] != boxes[1].first.lower[i] ||
            boxes[0].second.upper[i] != boxes[1].first.upper[i])
          return fail_dim("tail/head box equality", i);
      }
      return {};
    case PatternKind::mutual_exclusion: {
      for (std::size_t i = 0; i < d; ++i) {
        if (boxes[0].first.upper[i] < boxes[1].first.lower[i] ||
            boxes[1].first.upper[i] < boxes[0].first.lower[i])
          return {};
      }
      return {false, "head boxes overlap in every dimension"};
    }
    case PatternKind::rigid: break;
  }
  return {false, "unreachable"};
}

// Enumerates every ordered entity pair and tests the rule on actual fact
// truth (box membership). A geometric pass must leave no counterexample here.
inline PatternCheck check_semantic(const ModelParams& p, const PatternSpec& spec) {
  validate_pattern_spec(spec, p.sizes);
  auto truth = [&](std::int32_t h, std::int32_t r, std::int32_t t, std::int32_t tau) {
    return fact_holds(p, {h, r, t, tau});
  };
  auto fail_pair = [&](std::int32_t h, std::int32_t t, const char* what) {
    std::ostringstream os;
    os << what << " for entity pair (" << h << ", " << t << ")";
    return PatternCheck{false, os.str()};
  };

  for (std::int32_t h = 0; h < p.sizes.num_entities; ++h) {
    for (std::int32_t t = 0; t < p.sizes.num_entities; ++t) {
      switch (spec.kind) {
        case PatternKind::rigid: {
          const bool at0 = truth(h, spec.relations[0], t, 0);
          for (std::int32_t tau = 1; tau < p.sizes.num_times; ++tau)
            if (truth(h, spec.relations[0], t, tau) != at0) return fail_pair(h, t, "truth varies across time");
          break;
        }
        case PatternKind::hierarchy:
          if (truth(h, spec.relations[0], t, spec.timestamps[0]) &&
              !truth(h, spec.relations[1], t, spec.timestamps[1]))
            return fail_pair(h, t, "body holds but head does not");
          break;
        case PatternKind::intersection: {
          const bool both = truth(h, spec.relations[0], t, spec.timestamps[0]) &&
                            truth(h, spec.relations[1], t, spec.timestamps[1]);
          if (both != truth(h, spec.relations[2], t, spec.timestamps[2]))
            return fail_pair(h, t, "conjunction and conclusion disagree");
          break;
        }
        case PatternKind::inversion:
          if (truth(h, spec.relations[0], t, spec.timestamps[0]) !=
              truth(t, spec.relations[1], h, spec.timestamps[1]))
            return fail_pair(h, t, "forward and inverted truth disagree");
          break;
        case PatternKind::mutual_exclusion:
          if (truth(h, spec.relations[0], t, spec.timestamps[0]) &&
              truth(h, spec.relations[1], t, spec.timestamps[1]))
            return fail_pair(h, t, "both exclusive relations hold");
          break;
      }
    }
  }
  return {};
}

// Mean absolute relation scalar per relation, largest first; a large value
// means the relation's embeddings move a lot across time.
inline std::vector<std::pair<std::int32_t, double>> inspect_scalars(const ModelParams& p) {
  if (p.config.variant != Variant::box_temporal)
    throw std::invalid_argument("inspect_scalars: model variant has no relation scalars");
  std::vector<std::pair<std::int32_t, double>> out;
  out.reserve(static_cast<std::size_t>(p.sizes.num_relations));
  for (std::int32_t r = 0; r < p.sizes.num_relations; ++r) {
    const double* alpha = p.rel_scalars.data() + static_cast<std::size_t>(r) * p.config.k;
    double mean = 0.0;
    for (int j = 0; j < p.config.k; ++j) mean += std::abs(alpha[j]);
    out.emplace_back(r, mean / static_cast<double>(p.config.k));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace boxte
