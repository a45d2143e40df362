#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "boxte/train.hpp"

namespace boxte {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  std::string worst_tensor;
};

namespace detail {

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1e-6, std::abs(analytic), std::abs(numeric)});
}

// Central differences over every parameter entry against the accumulated
// analytic gradient. `value` must evaluate the same objective the gradients
// in `g` belong to, without touching them.
inline GradCheckCase fd_compare(ModelParams& p, const GradientBuffer& g,
                                const std::function<double()>& value, double step, std::string name) {
  GradCheckCase out{std::move(name)};
  auto ps = tensor_list(p);
  auto gs = tensor_list(g);
  std::vector<const char*> names;
  for_each_tensor(p, [&](const char* n, const std::vector<double>&) { names.push_back(n); });
  for (std::size_t t = 0; t < ps.size(); ++t) {
    auto& pv = *ps[t];
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double orig = pv[i];
      pv[i] = orig + step;
      const double fp = value();
      pv[i] = orig - step;
      const double fm = value();
      pv[i] = orig;
      const double err = rel_err((*gs[t])[i], (fp - fm) / (2.0 * step));
      if (err > out.max_rel_err) {
        out.max_rel_err = err;
        out.worst_tensor = names[t];
      }
    }
  }
  return out;
}

}  // namespace detail

// Exercises every gradient path: both losses across all variants, bounded and
// factorized forms, and the smoothness term. The self-adversarial comparison
// freezes the negative weights at the center point, matching their
// stop-gradient treatment in the loss.
inline std::vector<GradCheckCase> run_gradient_checks(std::uint64_t seed, double step = 1e-6) {
  std::vector<GradCheckCase> results;
  struct Setup {
    const char* name;
    Variant variant;
    bool bounded;
    int factor_rank;
  };
  const Setup setups[] = {
      {"time-bump", Variant::box_temporal, false, 0},
      {"time-bump bounded", Variant::box_temporal, true, 0},
      {"time-bump factorized", Variant::box_temporal, false, 3},
      {"time-bump bounded factorized", Variant::box_temporal, true, 3},
      {"per-stamp", Variant::box_per_stamp, false, 0},
      {"per-stamp bounded", Variant::box_per_stamp, true, 0},
      {"diachronic sine", Variant::box_diachronic, false, 0},
      {"diachronic sigmoid", Variant::box_diachronic, true, 0},
  };
  const Sizes sizes{4, 3, 5};
  int case_id = 0;
  for (const auto& setup : setups) {
    ModelConfig mc;
    mc.dim = 6;
    mc.k = 2;
    mc.variant = setup.variant;
    mc.bounded = setup.bounded;
    mc.factor_rank = setup.factor_rank;
    if (setup.variant == Variant::box_diachronic) {
      mc.de_gamma = 0.5;
      mc.de_activation = std::string(setup.name).ends_with("sigmoid") ? DeActivation::sigmoid : DeActivation::sine;
    }
    auto p = init_params(sizes, mc, seed + static_cast<std::uint64_t>(case_id++));
    const Quadruple pos{0, 1, 2, 3};
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    const auto negs = sample_negatives(pos, 4, sizes.num_entities, rng);

    {
      auto g = zeros_like(p);
      cross_entropy_loss(p, pos, negs, &g);
      auto value = [&]() { return cross_entropy_loss(p, pos, negs, nullptr); };
      results.push_back(detail::fd_compare(p, g, value, step, std::string(setup.name) + " / cross-entropy"));
    }
    {
      const double margin = 3.0, temperature = 1.0;
      std::vector<double> neg_scores;
      for (const auto& q : negs) neg_scores.push_back(score(p, q));
      const auto weights = adversarial_weights(neg_scores, temperature, margin);
      auto g = zeros_like(p);
      self_adversarial_loss(p, pos, negs, margin, temperature, &g);
      auto value = [&]() { return self_adversarial_loss_at_weights(p, pos, negs, weights, margin); };
      results.push_back(detail::fd_compare(p, g, value, step, std::string(setup.name) + " / self-adversarial"));
    }
    if (setup.variant == Variant::box_temporal) {
      auto g = zeros_like(p);
      temporal_smoothness(p, &g);
      auto value = [&]() { return temporal_smoothness(p, nullptr); };
      results.push_back(detail::fd_compare(p, g, value, step, std::string(setup.name) + " / smoothness"));
    }
  }
  return results;
}

}  // namespace boxte
