#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "boxte/data.hpp"
#include "boxte/eval.hpp"
#include "boxte/model.hpp"
#include "boxte/rng.hpp"

namespace boxte {

// Gradient accumulator, tensor-congruent with ModelParams.
struct GradientBuffer {
  std::vector<double> entity_base, entity_bump;
  std::vector<double> head_corner_a, head_corner_b, tail_corner_a, tail_corner_b;
  std::vector<double> rel_scalars, time_bank, time_left, time_right;
  std::vector<double> time_head_corner_a, time_head_corner_b, time_tail_corner_a, time_tail_corner_b;
  std::vector<double> de_freq, de_phase;
};

// Pointers to all tensors in the fixed traversal order; const-correct for
// const arguments.
template <typename P>
inline auto tensor_list(P& p) {
  using Vec = std::remove_reference_t<decltype((p.entity_base))>;
  std::vector<Vec*> out;
  for_each_tensor(p, [&](const char*, Vec& t) { out.push_back(&t); });
  return out;
}

inline GradientBuffer zeros_like(const ModelParams& p) {
  GradientBuffer g;
  auto gs = tensor_list(g);
  auto ps = tensor_list(p);
  for (std::size_t i = 0; i < gs.size(); ++i) gs[i]->assign(ps[i]->size(), 0.0);
  return g;
}

inline void zero_gradients(GradientBuffer& g) {
  for_each_tensor(g, [](const char*, std::vector<double>& t) { std::fill(t.begin(), t.end(), 0.0); });
}

// ---------------------------------------------------------------------------
// Score gradients

namespace detail {

struct DistGrad {
  double value = 0.0, d_point = 0.0, d_lower = 0.0, d_upper = 0.0;
};

// Derivatives of the piecewise point-to-slab distance w.r.t. the point and the
// (ordered) corners. At the exact center the sign is taken as 0; on the
// boundary the inside branch applies, matching the forward computation.
inline DistGrad point_box_distance_grad_dim(double e, double l, double u) {
  const double c = 0.5 * (l + u);
  const double w = u - l;
  const double wp1 = w + 1.0;
  const double t = e - c;
  const double sgn = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
  const double a = std::abs(t);
  double value, d_point, d_center, d_width;
  if (e >= l && e <= u) {
    value = a / wp1;
    d_point = sgn / wp1;
    d_center = -d_point;
    d_width = -a / (wp1 * wp1);
  } else {
    value = a * wp1 - 0.5 * w * (wp1 - 1.0 / wp1);
    d_point = sgn * wp1;
    d_center = -d_point;
    d_width = a - (w + 0.5 - 0.5 / (wp1 * wp1));
  }
  // l = c - w/2, u = c + w/2  =>  chain through (center, width).
  return {value, d_point, 0.5 * d_center - d_width, 0.5 * d_center + d_width};
}

// One point-vs-box term of the score. Adds `mult`-scaled gradients for the
// point (w.r.t. its pre-squash value) and for the two stored corner rows.
// Corner gradients route to whichever corner currently realizes the lower
// resp. upper face; ties send the lower face to corner a.
inline double box_term_grad(const ModelParams& p, std::span<const double> point,
                            std::span<const double> corner_a, std::span<const double> corner_b, double mult,
                            std::span<double> d_point_pre, std::span<double> g_corner_a,
                            std::span<double> g_corner_b) {
  const auto d = static_cast<std::size_t>(p.config.dim);
  const bool bounded = p.config.bounded;
  std::vector<DistGrad> grads(d);
  std::vector<double> dist(d), ca(d), cb(d);
  for (std::size_t i = 0; i < d; ++i) {
    ca[i] = bounded ? std::tanh(corner_a[i]) : corner_a[i];
    cb[i] = bounded ? std::tanh(corner_b[i]) : corner_b[i];
    grads[i] = point_box_distance_grad_dim(point[i], std::min(ca[i], cb[i]), std::max(ca[i], cb[i]));
    dist[i] = grads[i].value;
  }
  const double s = lx_norm(dist, p.config.norm_order);
  for (std::size_t i = 0; i < d; ++i) {
    double coeff;
    if (p.config.norm_order == 1)
      coeff = mult;
    else
      coeff = s > 0.0 ? mult * dist[i] / s : 0.0;
    double dp = coeff * grads[i].d_point;
    if (bounded) dp *= 1.0 - point[i] * point[i];
    d_point_pre[i] += dp;
    double da, db;
    if (ca[i] <= cb[i]) {
      da = coeff * grads[i].d_lower;
      db = coeff * grads[i].d_upper;
    } else {
      da = coeff * grads[i].d_upper;
      db = coeff * grads[i].d_lower;
    }
    if (bounded) {
      da *= 1.0 - ca[i] * ca[i];
      db *= 1.0 - cb[i] * cb[i];
    }
    g_corner_a[i] += da;
    g_corner_b[i] += db;
  }
  return s;
}

}  // namespace detail

// Score forward pass that also accumulates mult * d(score)/d(params) into g.
// Matches score() exactly on the forward value.
inline double score_with_grad(const ModelParams& p, const Quadruple& q, double mult, GradientBuffer& g) {
  detail::check_entity(p, q.head);
  detail::check_entity(p, q.tail);
  detail::check_relation(p, q.relation);
  detail::check_time(p, q.time);
  const auto d = static_cast<std::size_t>(p.config.dim);
  const int k = p.config.k;
  const int n_dia = p.config.variant == Variant::box_diachronic ? diachronic_dims(p.config) : 0;

  // Assemble pre-squash points, keeping what backward needs.
  std::vector<double> head_pre(d), tail_pre(d);
  std::vector<double> krows;  // k bank rows at q.time, box_temporal only
  if (p.config.variant == Variant::box_diachronic) {
    detail::diachronic_base(p, q.head, q.time, head_pre);
    detail::diachronic_base(p, q.tail, q.time, tail_pre);
  } else {
    const auto hb = p.entity_base_row(q.head);
    const auto tb = p.entity_base_row(q.tail);
    for (std::size_t i = 0; i < d; ++i) {
      head_pre[i] = hb[i];
      tail_pre[i] = tb[i];
    }
  }
  {
    const auto hbump = p.entity_bump_row(q.head);
    const auto tbump = p.entity_bump_row(q.tail);
    for (std::size_t i = 0; i < d; ++i) {
      head_pre[i] += tbump[i];
      tail_pre[i] += hbump[i];
    }
  }
  if (p.config.variant == Variant::box_temporal) {
    krows.resize(static_cast<std::size_t>(k) * d);
    const double* alpha = p.rel_scalars.data() + static_cast<std::size_t>(q.relation) * k;
    for (int j = 0; j < k; ++j) {
      auto row = std::span<double>(krows.data() + static_cast<std::size_t>(j) * d, d);
      time_bank_row(p, q.time, j, row);
      for (std::size_t i = 0; i < d; ++i) {
        head_pre[i] += alpha[j] * row[i];
        tail_pre[i] += alpha[j] * row[i];
      }
    }
  }
  std::vector<double> head_pt = head_pre, tail_pt = tail_pre;
  if (p.config.bounded) {
    for (std::size_t i = 0; i < d; ++i) {
      head_pt[i] = std::tanh(head_pre[i]);
      tail_pt[i] = std::tanh(tail_pre[i]);
    }
  }

  std::vector<double> d_head(d, 0.0), d_tail(d, 0.0);
  auto grow = [&](std::vector<double>& t, std::int32_t i) {
    return std::span<double>(t.data() + static_cast<std::size_t>(i) * d, d);
  };
  double s = 0.0;
  s += detail::box_term_grad(p, head_pt, p.row(p.head_corner_a, q.relation), p.row(p.head_corner_b, q.relation),
                             mult, d_head, grow(g.head_corner_a, q.relation), grow(g.head_corner_b, q.relation));
  s += detail::box_term_grad(p, tail_pt, p.row(p.tail_corner_a, q.relation), p.row(p.tail_corner_b, q.relation),
                             mult, d_tail, grow(g.tail_corner_a, q.relation), grow(g.tail_corner_b, q.relation));
  if (p.config.variant == Variant::box_per_stamp) {
    s += detail::box_term_grad(p, head_pt, p.row(p.time_head_corner_a, q.time), p.row(p.time_head_corner_b, q.time),
                               mult, d_head, grow(g.time_head_corner_a, q.time), grow(g.time_head_corner_b, q.time));
    s += detail::box_term_grad(p, tail_pt, p.row(p.time_tail_corner_a, q.time), p.row(p.time_tail_corner_b, q.time),
                               mult, d_tail, grow(g.time_tail_corner_a, q.time), grow(g.time_tail_corner_b, q.time));
  }

  // head_pre = base(head) + bump(tail) [+ tau-bump], tail_pre mirrored.
  {
    auto gh_bump = grow(g.entity_bump, q.tail);
    auto gt_bump = grow(g.entity_bump, q.head);
    for (std::size_t i = 0; i < d; ++i) {
      gh_bump[i] += d_head[i];
      gt_bump[i] += d_tail[i];
    }
  }
  if (p.config.variant == Variant::box_diachronic) {
    auto amp_chain = [&](std::int32_t e, std::span<const double> d_pre) {
      const auto base = p.entity_base_row(e);
      const double* freq = p.de_freq.data() + static_cast<std::size_t>(e) * n_dia;
      const double* phase = p.de_phase.data() + static_cast<std::size_t>(e) * n_dia;
      auto g_base = grow(g.entity_base, e);
      double* g_freq = g.de_freq.data() + static_cast<std::size_t>(e) * n_dia;
      double* g_phase = g.de_phase.data() + static_cast<std::size_t>(e) * n_dia;
      const auto t = static_cast<double>(q.time);
      for (int i = 0; i < n_dia; ++i) {
        const double x = freq[i] * t + phase[i];
        double act, dact;
        if (p.config.de_activation == DeActivation::sine) {
          act = std::sin(x);
          dact = std::cos(x);
        } else {
          act = 1.0 / (1.0 + std::exp(-x));
          dact = act * (1.0 - act);
        }
        g_base[i] += d_pre[i] * act;
        const double d_x = d_pre[i] * base[i] * dact;
        g_freq[i] += d_x * t;
        g_phase[i] += d_x;
      }
      for (int i = n_dia; i < p.config.dim; ++i) g_base[i] += d_pre[i];
    };
    amp_chain(q.head, d_head);
    amp_chain(q.tail, d_tail);
  } else {
    auto gh_base = grow(g.entity_base, q.head);
    auto gt_base = grow(g.entity_base, q.tail);
    for (std::size_t i = 0; i < d; ++i) {
      gh_base[i] += d_head[i];
      gt_base[i] += d_tail[i];
    }
  }
  if (p.config.variant == Variant::box_temporal) {
    std::vector<double> d_bump(d);
    for (std::size_t i = 0; i < d; ++i) d_bump[i] = d_head[i] + d_tail[i];
    const double* alpha = p.rel_scalars.data() + static_cast<std::size_t>(q.relation) * k;
    double* g_alpha = g.rel_scalars.data() + static_cast<std::size_t>(q.relation) * k;
    for (int j = 0; j < k; ++j) {
      const double* row = krows.data() + static_cast<std::size_t>(j) * d;
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += d_bump[i] * row[i];
      g_alpha[j] += dot;
      if (p.config.factor_rank == 0) {
        double* g_row =
            g.time_bank.data() + (static_cast<std::size_t>(q.time) * k + static_cast<std::size_t>(j)) * d;
        for (std::size_t i = 0; i < d; ++i) g_row[i] += alpha[j] * d_bump[i];
      } else {
        const auto b = static_cast<std::size_t>(p.config.factor_rank);
        const auto T = static_cast<std::size_t>(p.sizes.num_times);
        const double* left =
            p.time_left.data() + (static_cast<std::size_t>(j) * T + static_cast<std::size_t>(q.time)) * b;
        const double* right = p.time_right.data() + static_cast<std::size_t>(j) * b * d;
        double* g_left =
            g.time_left.data() + (static_cast<std::size_t>(j) * T + static_cast<std::size_t>(q.time)) * b;
        double* g_right = g.time_right.data() + static_cast<std::size_t>(j) * b * d;
        for (std::size_t m = 0; m < b; ++m) {
          const double* rrow = right + m * d;
          double* g_rrow = g_right + m * d;
          double dot_r = 0.0;
          for (std::size_t i = 0; i < d; ++i) {
            dot_r += alpha[j] * d_bump[i] * rrow[i];
            g_rrow[i] += left[m] * alpha[j] * d_bump[i];
          }
          g_left[m] += dot_r;
        }
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Losses

namespace detail {

inline double softplus(double x) {  // log(1 + e^x), overflow-safe
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void check_finite_scores(double pos, std::span<const double> negs) {
  if (!std::isfinite(pos)) throw std::runtime_error("loss: positive score is not finite");
  for (double s : negs)
    if (!std::isfinite(s)) throw std::runtime_error("loss: negative score is not finite");
}

}  // namespace detail

// Joint softmax over the positive and its negatives on logits -score;
// the loss is the negative log-probability of the positive. Gradients are
// scaled by grad_scale; pass g = nullptr for the value alone.
inline double cross_entropy_loss(const ModelParams& p, const Quadruple& pos, std::span<const Quadruple> negs,
                                 GradientBuffer* g, double grad_scale = 1.0) {
  const double s_pos = score(p, pos);
  std::vector<double> s_neg(negs.size());
  for (std::size_t i = 0; i < negs.size(); ++i) s_neg[i] = score(p, negs[i]);
  detail::check_finite_scores(s_pos, s_neg);

  double zmax = -s_pos;
  for (double s : s_neg) zmax = std::max(zmax, -s);
  double sum = std::exp(-s_pos - zmax);
  for (double s : s_neg) sum += std::exp(-s - zmax);
  const double lse = zmax + std::log(sum);
  const double loss = lse + s_pos;

  if (g) {
    const double w_pos = std::exp(-s_pos - lse);
    score_with_grad(p, pos, grad_scale * (1.0 - w_pos), *g);
    for (std::size_t i = 0; i < negs.size(); ++i) {
      const double w = std::exp(-s_neg[i] - lse);
      score_with_grad(p, negs[i], grad_scale * (-w), *g);
    }
  }
  return loss;
}

// Softmax weights the negatives receive under self-adversarial sampling:
// temperature * (margin - score), normalized. Treated as constants by the
// loss gradient.
inline std::vector<double> adversarial_weights(std::span<const double> neg_scores, double temperature,
                                               double margin) {
  std::vector<double> w(neg_scores.size());
  if (neg_scores.empty()) return w;
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = temperature * (margin - neg_scores[i]);
    zmax = std::max(zmax, w[i]);
  }
  double sum = 0.0;
  for (double& x : w) {
    x = std::exp(x - zmax);
    sum += x;
  }
  for (double& x : w) x /= sum;
  return w;
}

// Margin loss value for externally fixed negative weights. The training loss
// below equals this evaluated at the current-weight point; finite-difference
// checks against it with the weights frozen.
inline double self_adversarial_loss_at_weights(const ModelParams& p, const Quadruple& pos,
                                               std::span<const Quadruple> negs, std::span<const double> weights,
                                               double margin) {
  const double s_pos = score(p, pos);
  double loss = detail::softplus(s_pos - margin);
  for (std::size_t i = 0; i < negs.size(); ++i)
    loss += weights[i] * detail::softplus(margin - score(p, negs[i]));
  return loss;
}

inline double self_adversarial_loss(const ModelParams& p, const Quadruple& pos, std::span<const Quadruple> negs,
                                    double margin, double temperature, GradientBuffer* g,
                                    double grad_scale = 1.0) {
  const double s_pos = score(p, pos);
  std::vector<double> s_neg(negs.size());
  for (std::size_t i = 0; i < negs.size(); ++i) s_neg[i] = score(p, negs[i]);
  detail::check_finite_scores(s_pos, s_neg);

  const auto w = adversarial_weights(s_neg, temperature, margin);
  double loss = detail::softplus(s_pos - margin);
  for (std::size_t i = 0; i < negs.size(); ++i) loss += w[i] * detail::softplus(margin - s_neg[i]);

  if (g) {
    score_with_grad(p, pos, grad_scale * detail::sigmoid(s_pos - margin), *g);
    for (std::size_t i = 0; i < negs.size(); ++i)
      score_with_grad(p, negs[i], grad_scale * (-w[i] * detail::sigmoid(margin - s_neg[i])), *g);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Temporal smoothness

// Mean over adjacent timestamp pairs of the fourth-power norm of the bank
// difference. Pulls consecutive time representations together.
inline double temporal_smoothness(const ModelParams& p, GradientBuffer* g, double grad_scale = 1.0) {
  if (p.config.variant != Variant::box_temporal)
    throw std::invalid_argument("temporal_smoothness: model variant has no time bank");
  const auto T = static_cast<std::size_t>(p.sizes.num_times);
  if (T < 2) return 0.0;
  const auto d = static_cast<std::size_t>(p.config.dim);
  const auto k = static_cast<std::size_t>(p.config.k);
  const double inv = 1.0 / static_cast<double>(T - 1);

  const auto bank = materialize_time_bank(p);
  std::vector<double> d_bank;
  const bool factorized = p.config.factor_rank > 0;
  if (g && factorized) d_bank.assign(bank.size(), 0.0);

  double value = 0.0;
  for (std::size_t tau = 0; tau + 1 < T; ++tau) {
    const double* cur = bank.data() + tau * k * d;
    const double* nxt = cur + k * d;
    for (std::size_t i = 0; i < k * d; ++i) {
      const double diff = nxt[i] - cur[i];
      const double diff2 = diff * diff;
      value += diff2 * diff2;
      if (g) {
        const double gd = grad_scale * inv * 4.0 * diff2 * diff;
        if (factorized) {
          d_bank[(tau + 1) * k * d + i] += gd;
          d_bank[tau * k * d + i] -= gd;
        } else {
          g->time_bank[(tau + 1) * k * d + i] += gd;
          g->time_bank[tau * k * d + i] -= gd;
        }
      }
    }
  }
  if (g && factorized) {
    const auto b = static_cast<std::size_t>(p.config.factor_rank);
    for (std::size_t j = 0; j < k; ++j) {
      const double* right = p.time_right.data() + j * b * d;
      double* g_right = g->time_right.data() + j * b * d;
      for (std::size_t tau = 0; tau < T; ++tau) {
        const double* left = p.time_left.data() + (j * T + tau) * b;
        double* g_left = g->time_left.data() + (j * T + tau) * b;
        const double* db = d_bank.data() + (tau * k + j) * d;
        for (std::size_t m = 0; m < b; ++m) {
          const double* rrow = right + m * d;
          double* g_rrow = g_right + m * d;
          double dot = 0.0;
          for (std::size_t i = 0; i < d; ++i) {
            dot += db[i] * rrow[i];
            g_rrow[i] += left[m] * db[i];
          }
          g_left[m] += dot;
        }
      }
    }
  }
  return value * inv;
}

// ---------------------------------------------------------------------------
// Negative sampling

// n corruptions of one fact: the first ceil(n/2) replace the head, the rest
// the tail. The replacement is drawn uniformly from all other entities.
inline std::vector<Quadruple> sample_negatives(const Quadruple& q, int n, std::int32_t num_entities,
                                               std::mt19937_64& rng) {
  if (n < 0) throw std::invalid_argument("sample_negatives: negative count");
  if (n > 0 && num_entities < 2)
    throw std::invalid_argument("sample_negatives: need at least 2 entities to corrupt");
  std::vector<Quadruple> out;
  out.reserve(static_cast<std::size_t>(n));
  const int head_count = (n + 1) / 2;
  for (int i = 0; i < n; ++i) {
    const bool corrupt_head = i < head_count;
    const std::int32_t original = corrupt_head ? q.head : q.tail;
    auto e = static_cast<std::int32_t>(rand_below(rng, static_cast<std::uint64_t>(num_entities - 1)));
    if (e >= original) ++e;  // skip the original, keep the draw uniform
    Quadruple neg = q;
    (corrupt_head ? neg.head : neg.tail) = e;
    out.push_back(neg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  GradientBuffer m, v;
  std::int64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

inline AdamState init_adam(const ModelParams& p) {
  AdamState s;
  s.m = zeros_like(p);
  s.v = zeros_like(p);
  return s;
}

inline void adam_step(ModelParams& p, const GradientBuffer& g, AdamState& st, double learning_rate) {
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  auto ps = tensor_list(p);
  auto gs = tensor_list(g);
  auto ms = tensor_list(st.m);
  auto vs = tensor_list(st.v);
  for (std::size_t t = 0; t < ps.size(); ++t) {
    auto& pv = *ps[t];
    const auto& gv = *gs[t];
    auto& mv = *ms[t];
    auto& vv = *vs[t];
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = st.beta1 * mv[i] + (1.0 - st.beta1) * gv[i];
      vv[i] = st.beta2 * vv[i] + (1.0 - st.beta2) * gv[i] * gv[i];
      pv[i] -= learning_rate * (mv[i] / bc1) / (std::sqrt(vv[i] / bc2) + st.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Training loop

enum class LossKind { cross_entropy, self_adversarial };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  int negatives = 50;
  double learning_rate = 1e-3;
  double reg_weight = 0.0;  // weight of the temporal smoothness term
  LossKind loss = LossKind::cross_entropy;
  double margin = 9.0;  // self-adversarial only
  double adversarial_temperature = 1.0;
  int validate_every = 0;  // 0 = never
  std::uint64_t seed = 1;
};

inline void validate_train_config(const TrainConfig& c, const ModelConfig& mc) {
  if (c.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (c.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (c.negatives < 1) throw std::invalid_argument("train: negatives must be >= 1");
  if (!(c.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
  if (c.reg_weight < 0.0) throw std::invalid_argument("train: reg_weight must be >= 0");
  if (c.reg_weight != 0.0 && mc.variant != Variant::box_temporal)
    throw std::invalid_argument("train: reg_weight requires the time-bump variant");
  if (c.validate_every < 0) throw std::invalid_argument("train: validate_every must be >= 0");
  if (c.loss == LossKind::self_adversarial && !(c.adversarial_temperature > 0.0))
    throw std::invalid_argument("train: adversarial_temperature must be positive");
}

struct EpochLog {
  int epoch = 0;        // 1-based
  double loss = 0.0;    // mean per-fact data loss
  double reg = 0.0;     // mean smoothness value over the epoch's batches
  double valid_mrr = 0.0;
  bool validated = false;
};

struct TrainResult {
  ModelParams params;       // after the last epoch
  ModelParams best_params;  // at peak validation MRR; final params if never validated
  int best_epoch = -1;      // 1-based, -1 when never validated
  double best_mrr = 0.0;
  std::vector<EpochLog> log;
};

// Deterministic single-threaded loop: one mt19937_64 stream drives the epoch
// shuffle and negative sampling, so a fixed seed fixes the whole trajectory.
inline TrainResult train(const TemporalKG& kg, const ModelConfig& mc, const TrainConfig& tc,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  if (kg.train.empty()) throw std::invalid_argument("train: no training facts");
  validate_train_config(tc, mc);
  const Sizes sizes{kg.vocab.entities.size(), kg.vocab.relations.size(), kg.vocab.times.size()};

  TrainResult result;
  result.params = init_params(sizes, mc, tc.seed);
  auto adam = init_adam(result.params);
  auto grads = zeros_like(result.params);
  std::mt19937_64 rng(tc.seed + 1);  // separate stream from the init draws

  const auto N = kg.train.size();
  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;

  const bool can_validate = tc.validate_every > 0 && !kg.valid.empty();
  bool have_best = false;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    shuffle_deterministic(order, rng);
    double data_loss_sum = 0.0;
    double reg_sum = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < N; start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t stop = std::min(N, start + static_cast<std::size_t>(tc.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);
      zero_gradients(grads);
      for (std::size_t i = start; i < stop; ++i) {
        const Quadruple& q = kg.train[order[i]];
        const auto negs = sample_negatives(q, tc.negatives, sizes.num_entities, rng);
        if (tc.loss == LossKind::cross_entropy)
          data_loss_sum += cross_entropy_loss(result.params, q, negs, &grads, scale);
        else
          data_loss_sum +=
              self_adversarial_loss(result.params, q, negs, tc.margin, tc.adversarial_temperature, &grads, scale);
      }
      if (tc.reg_weight != 0.0)
        reg_sum += temporal_smoothness(result.params, &grads, tc.reg_weight);
      adam_step(result.params, grads, adam, tc.learning_rate);
      ++batches;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = data_loss_sum / static_cast<double>(N);
    entry.reg = batches > 0 ? reg_sum / static_cast<double>(batches) : 0.0;
    if (can_validate && epoch % tc.validate_every == 0) {
      entry.valid_mrr = evaluate(result.params, kg.valid, kg.filter).mrr;
      entry.validated = true;
      if (!have_best || entry.valid_mrr > result.best_mrr) {
        have_best = true;
        result.best_mrr = entry.valid_mrr;
        result.best_epoch = epoch;
        result.best_params = result.params;
      }
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  if (!have_best) result.best_params = result.params;
  return result;
}

}  // namespace boxte
