#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "boxte/model.hpp"
#include "boxte/train.hpp"

namespace boxte {

// Flat key=value run configuration: file values, then preset values, then
// command-line overrides, all through the same typed accessors. Unknown keys
// are rejected up front so a typo cannot silently fall back to a default.
class RunConfig {
 public:
  static const std::map<std::string, std::string>& known_keys() {
    static const std::map<std::string, std::string> keys = {
        {"train", "path of the training facts file"},
        {"valid", "path of the validation facts file"},
        {"test", "path of the test facts file"},
        {"dataset_format", "tsv (4 fields) or intervals (5 fields, Since/Until rows)"},
        {"out_dir", "directory for logs, metrics and checkpoints"},
        {"dim", "embedding dimension"},
        {"k", "time-bump rows per timestamp"},
        {"norm_order", "distance aggregation norm, 1 or 2"},
        {"bounded", "squash points and corners into (-1,1)"},
        {"factor_rank", "rank of the factorized time bank, 0 = full bank"},
        {"variant", "box-temporal, box-per-stamp or box-diachronic"},
        {"de_gamma", "diachronic fraction of base dims (diachronic variant)"},
        {"de_activation", "sine or sigmoid (diachronic variant)"},
        {"epochs", "training epochs"},
        {"batch_size", "facts per optimizer step"},
        {"negatives", "corruptions per fact"},
        {"learning_rate", "optimizer step size"},
        {"lambda", "temporal smoothness weight"},
        {"loss", "cross_entropy or self_adversarial"},
        {"margin", "margin of the self-adversarial loss"},
        {"adversarial_temperature", "sharpness of the negative weighting"},
        {"validate_every", "epochs between validation passes, 0 = never"},
        {"seed", "seed for init, shuffling and sampling"},
    };
    return keys;
  }

  void set(const std::string& key, const std::string& value) {
    if (!known_keys().contains(key)) throw std::invalid_argument("unknown configuration key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  const std::string& get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("missing configuration key '" + key + "'");
    return it->second;
  }

  std::string get_string_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::int64_t get_int(const std::string& key) const { return parse_int(key, get_string(key)); }
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  bool get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get_string(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("configuration key '" + key + "': expected true/false, got '" + v + "'");
  }

  // "key = value" per line; '#' starts a comment, blank lines are skipped.
  void load(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty())
        throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key or value");
      set(key, value);
    }
  }

  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  std::string serialize() const {  // sorted by key, stable across runs
    std::string out;
    for (const auto& [k, v] : values_) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
  }

  static std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const auto x = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      throw std::invalid_argument("configuration key '" + key + "': expected an integer, got '" + v + "'");
    }
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const auto x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      throw std::invalid_argument("configuration key '" + key + "': expected a number, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

// Published hyper-parameter bundles per benchmark. The -bounded variants are
// the parameter-matched small-dimension settings.
inline RunConfig preset_config(const std::string& name) {
  RunConfig c;
  auto fill = [&](int dim, int k, const char* lambda, int batch, bool bounded, int factor_rank) {
    c.set("dim", std::to_string(dim));
    c.set("k", std::to_string(k));
    c.set("lambda", lambda);
    c.set("batch_size", std::to_string(batch));
    c.set("learning_rate", "0.001");
    c.set("negatives", "75");
    if (bounded) c.set("bounded", "true");
    if (factor_rank > 0) c.set("factor_rank", std::to_string(factor_rank));
  };
  if (name == "icews14")
    fill(1000, 2, "0.1", 256, false, 0);
  else if (name == "icews5-15")
    fill(1500, 5, "0.1", 512, false, 0);
  else if (name == "gdelt")
    fill(1500, 5, "0", 256, false, 0);
  else if (name == "icews14-bounded")
    fill(154, 2, "1", 256, true, 0);
  else if (name == "icews5-15-bounded")
    fill(104, 3, "0", 256, true, 0);
  else if (name == "gdelt-bounded")
    fill(124, 1, "0.1", 256, true, 80);
  else
    throw std::invalid_argument("unknown preset '" + name +
                                "' (expected icews14, icews5-15, gdelt or a -bounded variant)");
  return c;
}

// Benchmark vocabulary sizes, for parameter counting against the presets.
inline Sizes preset_sizes(const std::string& name) {
  const auto base = name.size() > 8 && name.ends_with("-bounded") ? name.substr(0, name.size() - 8) : name;
  if (base == "icews14") return {7128, 230, 365};
  if (base == "icews5-15") return {10488, 251, 4017};
  if (base == "gdelt") return {500, 20, 366};
  throw std::invalid_argument("unknown preset '" + name + "'");
}

inline ModelConfig model_config_from(const RunConfig& c) {
  ModelConfig mc;
  mc.dim = static_cast<int>(c.get_int_or("dim", mc.dim));
  mc.k = static_cast<int>(c.get_int_or("k", mc.k));
  mc.norm_order = static_cast<int>(c.get_int_or("norm_order", mc.norm_order));
  mc.bounded = c.get_bool_or("bounded", mc.bounded);
  mc.factor_rank = static_cast<int>(c.get_int_or("factor_rank", mc.factor_rank));
  const std::string variant = c.get_string_or("variant", "box-temporal");
  if (variant == "box-temporal")
    mc.variant = Variant::box_temporal;
  else if (variant == "box-per-stamp")
    mc.variant = Variant::box_per_stamp;
  else if (variant == "box-diachronic")
    mc.variant = Variant::box_diachronic;
  else
    throw std::invalid_argument("unknown variant '" + variant + "'");
  mc.de_gamma = c.get_double_or("de_gamma", mc.de_gamma);
  const std::string act = c.get_string_or("de_activation", "sine");
  if (act == "sine")
    mc.de_activation = DeActivation::sine;
  else if (act == "sigmoid")
    mc.de_activation = DeActivation::sigmoid;
  else
    throw std::invalid_argument("unknown de_activation '" + act + "'");
  return mc;
}

inline TrainConfig train_config_from(const RunConfig& c) {
  TrainConfig tc;
  tc.epochs = static_cast<int>(c.get_int_or("epochs", tc.epochs));
  tc.batch_size = static_cast<int>(c.get_int_or("batch_size", tc.batch_size));
  tc.negatives = static_cast<int>(c.get_int_or("negatives", tc.negatives));
  tc.learning_rate = c.get_double_or("learning_rate", tc.learning_rate);
  tc.reg_weight = c.get_double_or("lambda", tc.reg_weight);
  const std::string loss = c.get_string_or("loss", "cross_entropy");
  if (loss == "cross_entropy")
    tc.loss = LossKind::cross_entropy;
  else if (loss == "self_adversarial")
    tc.loss = LossKind::self_adversarial;
  else
    throw std::invalid_argument("unknown loss '" + loss + "'");
  tc.margin = c.get_double_or("margin", tc.margin);
  tc.adversarial_temperature = c.get_double_or("adversarial_temperature", tc.adversarial_temperature);
  tc.validate_every = static_cast<int>(c.get_int_or("validate_every", tc.validate_every));
  tc.seed = static_cast<std::uint64_t>(c.get_int_or("seed", static_cast<std::int64_t>(tc.seed)));
  return tc;
}

}  // namespace boxte
