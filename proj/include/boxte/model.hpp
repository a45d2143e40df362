#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "boxte/data.hpp"
#include "boxte/rng.hpp"

namespace boxte {

enum class Variant {
  box_temporal,   // bumps plus relation-scalar time bumps
  box_per_stamp,  // per-timestamp boxes instead of time bumps
  box_diachronic  // diachronic entity features instead of time bumps
};

enum class DeActivation { sine, sigmoid };

struct Sizes {
  std::int32_t num_entities = 0;
  std::int32_t num_relations = 0;
  std::int32_t num_times = 0;

  friend bool operator==(const Sizes&, const Sizes&) = default;
};

struct ModelConfig {
  int dim = 2;
  int k = 1;             // time-bump rows per timestamp
  int norm_order = 2;    // 1 or 2
  bool bounded = false;  // squash final points and box corners into (-1,1)
  int factor_rank = 0;   // 0 = full per-timestamp bank, >0 = factorized
  Variant variant = Variant::box_temporal;
  double de_gamma = 0.0;  // fraction of diachronic base dims
  DeActivation de_activation = DeActivation::sine;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline int diachronic_dims(const ModelConfig& c) {
  return static_cast<int>(std::ceil(c.de_gamma * c.dim));
}

inline void validate_model_config(const ModelConfig& c, const Sizes& s) {
  if (s.num_entities < 1 || s.num_relations < 1 || s.num_times < 1)
    throw std::invalid_argument("model: sizes must be positive");
  if (c.dim < 1) throw std::invalid_argument("model: dim must be >= 1");
  if (c.norm_order != 1 && c.norm_order != 2)
    throw std::invalid_argument("model: norm_order must be 1 or 2");
  if (c.variant == Variant::box_temporal) {
    if (c.k < 1) throw std::invalid_argument("model: k must be >= 1");
    if (c.factor_rank < 0 || c.factor_rank > s.num_times)
      throw std::invalid_argument("model: factor_rank must lie in [0, num_times]");
  } else {
    if (c.factor_rank != 0)
      throw std::invalid_argument("model: factor_rank requires the time-bump variant");
  }
  if (c.variant == Variant::box_diachronic) {
    if (c.de_gamma < 0.0 || c.de_gamma > 1.0)
      throw std::invalid_argument("model: de_gamma must lie in [0, 1]");
  } else if (c.de_gamma != 0.0) {
    throw std::invalid_argument("model: de_gamma requires the diachronic variant");
  }
}

// All tensors are flat row-major doubles. Box corners are stored as two
// unconstrained points per relation and side; lower/upper are their
// elementwise min/max, so gradients never have to respect an ordering.
struct ModelParams {
  Sizes sizes;
  ModelConfig config;

  std::vector<double> entity_base;    // E x d
  std::vector<double> entity_bump;    // E x d
  std::vector<double> head_corner_a;  // R x d
  std::vector<double> head_corner_b;  // R x d
  std::vector<double> tail_corner_a;  // R x d
  std::vector<double> tail_corner_b;  // R x d

  std::vector<double> rel_scalars;  // R x k
  std::vector<double> time_bank;    // T x k x d   (factor_rank == 0)
  std::vector<double> time_left;    // k x T x b   (factor_rank  > 0)
  std::vector<double> time_right;   // k x b x d

  std::vector<double> time_head_corner_a;  // T x d   (per-stamp variant)
  std::vector<double> time_head_corner_b;
  std::vector<double> time_tail_corner_a;
  std::vector<double> time_tail_corner_b;

  std::vector<double> de_freq;   // E x diachronic_dims   (diachronic variant)
  std::vector<double> de_phase;  // E x diachronic_dims

  std::span<const double> entity_base_row(std::int32_t e) const { return row(entity_base, e); }
  std::span<const double> entity_bump_row(std::int32_t e) const { return row(entity_bump, e); }

  std::span<const double> row(const std::vector<double>& t, std::int32_t i) const {
    return {t.data() + static_cast<std::size_t>(i) * config.dim, static_cast<std::size_t>(config.dim)};
  }
  std::span<double> row(std::vector<double>& t, std::int32_t i) {
    return {t.data() + static_cast<std::size_t>(i) * config.dim, static_cast<std::size_t>(config.dim)};
  }
};

// Fixed tensor order. Shared by the optimizer, the checkpoint payload and the
// finite-difference harness, which all walk parameters in this order.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn("entity_base", p.entity_base);
  fn("entity_bump", p.entity_bump);
  fn("head_corner_a", p.head_corner_a);
  fn("head_corner_b", p.head_corner_b);
  fn("tail_corner_a", p.tail_corner_a);
  fn("tail_corner_b", p.tail_corner_b);
  fn("rel_scalars", p.rel_scalars);
  fn("time_bank", p.time_bank);
  fn("time_left", p.time_left);
  fn("time_right", p.time_right);
  fn("time_head_corner_a", p.time_head_corner_a);
  fn("time_head_corner_b", p.time_head_corner_b);
  fn("time_tail_corner_a", p.time_tail_corner_a);
  fn("time_tail_corner_b", p.time_tail_corner_b);
  fn("de_freq", p.de_freq);
  fn("de_phase", p.de_phase);
}

inline ModelParams init_params(const Sizes& sizes, const ModelConfig& config, std::uint64_t seed) {
  validate_model_config(config, sizes);
  ModelParams p;
  p.sizes = sizes;
  p.config = config;

  const auto E = static_cast<std::size_t>(sizes.num_entities);
  const auto R = static_cast<std::size_t>(sizes.num_relations);
  const auto T = static_cast<std::size_t>(sizes.num_times);
  const auto d = static_cast<std::size_t>(config.dim);
  const auto k = static_cast<std::size_t>(config.k);

  p.entity_base.resize(E * d);
  p.entity_bump.resize(E * d);
  p.head_corner_a.resize(R * d);
  p.head_corner_b.resize(R * d);
  p.tail_corner_a.resize(R * d);
  p.tail_corner_b.resize(R * d);

  if (config.variant == Variant::box_temporal) {
    p.rel_scalars.resize(R * k);
    if (config.factor_rank == 0) {
      p.time_bank.resize(T * k * d);
    } else {
      const auto b = static_cast<std::size_t>(config.factor_rank);
      p.time_left.resize(k * T * b);
      p.time_right.resize(k * b * d);
    }
  } else if (config.variant == Variant::box_per_stamp) {
    p.time_head_corner_a.resize(T * d);
    p.time_head_corner_b.resize(T * d);
    p.time_tail_corner_a.resize(T * d);
    p.time_tail_corner_b.resize(T * d);
  } else {
    const auto n = static_cast<std::size_t>(diachronic_dims(config));
    p.de_freq.resize(E * n);
    p.de_phase.resize(E * n);
  }

  std::mt19937_64 rng(seed);
  const double scale = 0.5 / std::sqrt(static_cast<double>(config.dim));
  for_each_tensor(p, [&](const char* name, std::vector<double>& t) {
    if (std::string_view(name) == "rel_scalars") {
      for (auto& x : t) x = 1.0 / static_cast<double>(config.k);
    } else {
      for (auto& x : t) x = rand_uniform(rng, -scale, scale);
    }
  });
  return p;
}

// ---------------------------------------------------------------------------
// Boxes

struct Box {
  std::vector<double> lower, upper;

  double center(std::size_t i) const { return 0.5 * (lower[i] + upper[i]); }
  double width(std::size_t i) const { return upper[i] - lower[i]; }
  std::size_t dims() const { return lower.size(); }
};

inline Box box_from_corners(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("box_from_corners: corner dimensions differ");
  Box box;
  box.lower.resize(a.size());
  box.upper.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      throw std::invalid_argument("box_from_corners: corner value not finite");
    box.lower[i] = std::min(a[i], b[i]);
    box.upper[i] = std::max(a[i], b[i]);
  }
  return box;
}

enum class Side { head, tail };

namespace detail {

inline void check_relation(const ModelParams& p, std::int32_t r) {
  if (r < 0 || r >= p.sizes.num_relations)
    throw std::out_of_range("relation id " + std::to_string(r) + " out of range");
}

inline void check_entity(const ModelParams& p, std::int32_t e) {
  if (e < 0 || e >= p.sizes.num_entities)
    throw std::out_of_range("entity id " + std::to_string(e) + " out of range");
}

inline void check_time(const ModelParams& p, std::int32_t t) {
  if (t < 0 || t >= p.sizes.num_times)
    throw std::out_of_range("time id " + std::to_string(t) + " out of range");
}

inline std::span<const double> corner(const ModelParams& p, std::int32_t r, Side side, bool second) {
  const auto& t = side == Side::head ? (second ? p.head_corner_b : p.head_corner_a)
                                     : (second ? p.tail_corner_b : p.tail_corner_a);
  return p.row(t, r);
}

inline Box squashed_box(std::span<const double> a, std::span<const double> b, bool bounded) {
  if (!bounded) return box_from_corners(a, b);
  std::vector<double> ta(a.size()), tb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ta[i] = std::tanh(a[i]);
    tb[i] = std::tanh(b[i]);
  }
  return box_from_corners(ta, tb);
}

}  // namespace detail

// The relation's box as used by the scorer: corners squashed first when the
// model is bounded.
inline Box relation_box(const ModelParams& p, std::int32_t r, Side side) {
  detail::check_relation(p, r);
  return detail::squashed_box(detail::corner(p, r, side, false), detail::corner(p, r, side, true),
                              p.config.bounded);
}

// ---------------------------------------------------------------------------
// Time bumps

// Row j of the per-timestamp bank, materializing the factorized form on the
// fly when needed.
inline void time_bank_row(const ModelParams& p, std::int32_t tau, int j, std::span<double> out) {
  const auto d = static_cast<std::size_t>(p.config.dim);
  if (p.config.factor_rank == 0) {
    const double* src =
        p.time_bank.data() + (static_cast<std::size_t>(tau) * p.config.k + static_cast<std::size_t>(j)) * d;
    for (std::size_t i = 0; i < d; ++i) out[i] = src[i];
    return;
  }
  const auto b = static_cast<std::size_t>(p.config.factor_rank);
  const auto T = static_cast<std::size_t>(p.sizes.num_times);
  const double* left = p.time_left.data() + (static_cast<std::size_t>(j) * T + static_cast<std::size_t>(tau)) * b;
  const double* right = p.time_right.data() + static_cast<std::size_t>(j) * b * d;
  for (std::size_t i = 0; i < d; ++i) out[i] = 0.0;
  for (std::size_t m = 0; m < b; ++m) {
    const double lm = left[m];
    const double* rrow = right + m * d;
    for (std::size_t i = 0; i < d; ++i) out[i] += lm * rrow[i];
  }
}

// tau-bump for a relation: its scalars combine the timestamp's k bank rows.
inline std::vector<double> time_bump(const ModelParams& p, std::int32_t r, std::int32_t tau) {
  if (p.config.variant != Variant::box_temporal)
    throw std::invalid_argument("time_bump: model variant has no time bumps");
  detail::check_relation(p, r);
  detail::check_time(p, tau);
  const auto d = static_cast<std::size_t>(p.config.dim);
  std::vector<double> bump(d, 0.0), krow(d);
  const double* alpha = p.rel_scalars.data() + static_cast<std::size_t>(r) * p.config.k;
  for (int j = 0; j < p.config.k; ++j) {
    time_bank_row(p, tau, j, krow);
    for (std::size_t i = 0; i < d; ++i) bump[i] += alpha[j] * krow[i];
  }
  return bump;
}

// Materializes the full T x k x d bank from its factors.
inline std::vector<double> materialize_time_bank(const ModelParams& p) {
  if (p.config.factor_rank == 0) return p.time_bank;
  const auto d = static_cast<std::size_t>(p.config.dim);
  const auto k = static_cast<std::size_t>(p.config.k);
  const auto T = static_cast<std::size_t>(p.sizes.num_times);
  std::vector<double> bank(T * k * d);
  for (std::size_t tau = 0; tau < T; ++tau)
    for (std::size_t j = 0; j < k; ++j)
      time_bank_row(p, static_cast<std::int32_t>(tau), static_cast<int>(j),
                    std::span<double>(bank.data() + (tau * k + j) * d, d));
  return bank;
}

// Box the relation presents to static points at timestamp tau: the raw box
// translated by -bump. Defined on raw (unsquashed) geometry only, where
// "bumped point in box" and "static point in translated box" coincide.
inline Box time_induced_box(const ModelParams& p, std::int32_t r, Side side, std::int32_t tau) {
  if (p.config.bounded)
    throw std::invalid_argument("time_induced_box: undefined for bounded models");
  const auto bump = time_bump(p, r, tau);
  auto box = box_from_corners(detail::corner(p, r, side, false), detail::corner(p, r, side, true));
  for (std::size_t i = 0; i < box.dims(); ++i) {
    box.lower[i] -= bump[i];
    box.upper[i] -= bump[i];
  }
  return box;
}

// ---------------------------------------------------------------------------
// Points

namespace detail {

inline double de_activation_value(const ModelConfig& c, double x) {
  return c.de_activation == DeActivation::sine ? std::sin(x) : 1.0 / (1.0 + std::exp(-x));
}

// Entity base with the leading dims evaluated diachronically: the stored base
// entry is the amplitude, scaled by act(freq * t + phase) at time index t.
inline void diachronic_base(const ModelParams& p, std::int32_t e, std::int32_t tau, std::span<double> out) {
  const int n = diachronic_dims(p.config);
  const auto base = p.entity_base_row(e);
  const double* freq = p.de_freq.data() + static_cast<std::size_t>(e) * n;
  const double* phase = p.de_phase.data() + static_cast<std::size_t>(e) * n;
  const auto t = static_cast<double>(tau);
  for (int i = 0; i < n; ++i) out[i] = base[i] * de_activation_value(p.config, freq[i] * t + phase[i]);
  for (int i = n; i < p.config.dim; ++i) out[i] = base[i];
}

}  // namespace detail

// Final head and tail points for a fact, after variant-specific assembly and
// optional squashing. head = base(h) + bump(t) [+ tau-bump], tail mirrored.
inline std::pair<std::vector<double>, std::vector<double>> final_embeddings(const ModelParams& p,
                                                                            const Quadruple& q) {
  detail::check_entity(p, q.head);
  detail::check_entity(p, q.tail);
  detail::check_relation(p, q.relation);
  detail::check_time(p, q.time);
  const auto d = static_cast<std::size_t>(p.config.dim);
  std::vector<double> head(d), tail(d);

  if (p.config.variant == Variant::box_diachronic) {
    detail::diachronic_base(p, q.head, q.time, head);
    detail::diachronic_base(p, q.tail, q.time, tail);
  } else {
    const auto hb = p.entity_base_row(q.head);
    const auto tb = p.entity_base_row(q.tail);
    for (std::size_t i = 0; i < d; ++i) {
      head[i] = hb[i];
      tail[i] = tb[i];
    }
  }
  const auto hbump = p.entity_bump_row(q.head);
  const auto tbump = p.entity_bump_row(q.tail);
  for (std::size_t i = 0; i < d; ++i) {
    head[i] += tbump[i];
    tail[i] += hbump[i];
  }
  if (p.config.variant == Variant::box_temporal) {
    const auto bump = time_bump(p, q.relation, q.time);
    for (std::size_t i = 0; i < d; ++i) {
      head[i] += bump[i];
      tail[i] += bump[i];
    }
  }
  if (p.config.bounded) {
    for (std::size_t i = 0; i < d; ++i) {
      head[i] = std::tanh(head[i]);
      tail[i] = std::tanh(tail[i]);
    }
  }
  return {std::move(head), std::move(tail)};
}

// ---------------------------------------------------------------------------
// Distance and score

// Distance of a point coordinate to a box slab [l, u]. Inside, distance grows
// at rate 1/(w+1); outside at rate w+1, shifted by kappa so the two branches
// meet at the boundary. Wide boxes are cheap to be near and expensive to miss.
inline double point_box_distance_dim(double e, double l, double u) {
  const double c = 0.5 * (l + u);
  const double w = u - l;
  const double wp1 = w + 1.0;
  const double dist = std::abs(e - c);
  if (e >= l && e <= u) return dist / wp1;
  const double kappa = 0.5 * w * (wp1 - 1.0 / wp1);
  return dist * wp1 - kappa;
}

inline std::vector<double> point_box_distance(std::span<const double> point, const Box& box) {
  if (point.size() != box.dims()) throw std::invalid_argument("point_box_distance: dimension mismatch");
  std::vector<double> out(point.size());
  for (std::size_t i = 0; i < point.size(); ++i)
    out[i] = point_box_distance_dim(point[i], box.lower[i], box.upper[i]);
  return out;
}

inline double lx_norm(std::span<const double> v, int order) {
  if (order == 1) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Per-timestamp box of the per-stamp variant.
inline Box stamp_box(const ModelParams& p, std::int32_t tau, Side side) {
  if (p.config.variant != Variant::box_per_stamp)
    throw std::invalid_argument("stamp_box: model variant has no per-timestamp boxes");
  detail::check_time(p, tau);
  const auto& a = side == Side::head ? p.time_head_corner_a : p.time_tail_corner_a;
  const auto& b = side == Side::head ? p.time_head_corner_b : p.time_tail_corner_b;
  return detail::squashed_box(p.row(a, tau), p.row(b, tau), p.config.bounded);
}

// Lower is more plausible: sum over both sides of the norm of the per-dim
// distances between the side's final point and the relation's box. The
// per-stamp variant adds the same two terms against the timestamp's boxes.
inline double score(const ModelParams& p, const Quadruple& q) {
  const auto [head, tail] = final_embeddings(p, q);
  double total = 0.0;
  total += lx_norm(point_box_distance(head, relation_box(p, q.relation, Side::head)), p.config.norm_order);
  total += lx_norm(point_box_distance(tail, relation_box(p, q.relation, Side::tail)), p.config.norm_order);
  if (p.config.variant == Variant::box_per_stamp) {
    total += lx_norm(point_box_distance(head, stamp_box(p, q.time, Side::head)), p.config.norm_order);
    total += lx_norm(point_box_distance(tail, stamp_box(p, q.time, Side::tail)), p.config.norm_order);
  }
  return total;
}

// Inclusive box membership of both final points, the geometric reading of "the
// fact holds". The per-stamp variant additionally requires the timestamp's
// boxes to contain the points.
inline bool fact_holds(const ModelParams& p, const Quadruple& q) {
  const auto [head, tail] = final_embeddings(p, q);
  auto inside = [](std::span<const double> pt, const Box& box) {
    for (std::size_t i = 0; i < pt.size(); ++i)
      if (pt[i] < box.lower[i] || pt[i] > box.upper[i]) return false;
    return true;
  };
  bool ok = inside(head, relation_box(p, q.relation, Side::head)) &&
            inside(tail, relation_box(p, q.relation, Side::tail));
  if (ok && p.config.variant == Variant::box_per_stamp)
    ok = inside(head, stamp_box(p, q.time, Side::head)) && inside(tail, stamp_box(p, q.time, Side::tail));
  return ok;
}

}  // namespace boxte
