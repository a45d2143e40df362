#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxte/data.hpp"
#include "boxte/run_config.hpp"
#include "boxte/train.hpp"

namespace boxte {

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// Order- and content-sensitive digest of all three name pools, so a
// checkpoint can refuse to load against a reindexed vocabulary.
inline std::uint64_t vocab_digest(const Vocabulary& vocab) {
  std::uint64_t h = 1469598103934665603ull;
  const std::pair<char, const IndexMap*> sections[] = {
      {'E', &vocab.entities}, {'R', &vocab.relations}, {'T', &vocab.times}};
  for (const auto& [tag, map] : sections) {
    h = fnv1a(h, &tag, 1);
    for (const auto& name : map->names()) h = fnv1a(h, name.c_str(), name.size() + 1);
  }
  return h;
}

inline void write_f64(std::ostream& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) throw std::runtime_error("checkpoint: payload ended early");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

inline std::string expect_line(std::istream& in, const char* context) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(std::string("checkpoint: truncated header at ") + context);
  return line;
}

}  // namespace detail

inline constexpr const char* checkpoint_magic = "box-tkg-checkpoint v1";

// Text header (magic, run configuration, vocabulary sizes and digest, tensor
// table, optional optimizer step), then all non-empty tensors as raw
// little-endian doubles in the fixed traversal order, followed by the
// optimizer's first and second moments when present.
inline void save_checkpoint(const std::string& path, const RunConfig& run, const Vocabulary& vocab,
                            const ModelParams& params, const AdamState* adam = nullptr) {
  if (vocab.entities.size() != params.sizes.num_entities || vocab.relations.size() != params.sizes.num_relations ||
      vocab.times.size() != params.sizes.num_times)
    throw std::invalid_argument("save_checkpoint: vocabulary sizes do not match the parameters");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);

  out << checkpoint_magic << '\n';
  out << "config-begin\n" << run.serialize() << "config-end\n";
  out << "entities = " << params.sizes.num_entities << '\n';
  out << "relations = " << params.sizes.num_relations << '\n';
  out << "times = " << params.sizes.num_times << '\n';
  {
    std::ostringstream hex;
    hex << std::hex << detail::vocab_digest(vocab);
    out << "vocab_digest = " << hex.str() << '\n';
  }
  out << "tensors =";
  std::size_t total = 0;
  for_each_tensor(params, [&](const char* name, const std::vector<double>& t) {
    if (t.empty()) return;
    out << ' ' << name << ':' << t.size();
    total += t.size();
  });
  out << '\n';
  if (adam) {
    out << "adam_step = " << adam->step << '\n';
    total *= 3;  // parameters + first and second moments
  }
  out << "payload = " << total << '\n';
  out << "header-end\n";

  for_each_tensor(params, [&](const char*, const std::vector<double>& t) {
    for (double x : t) detail::write_f64(out, x);
  });
  if (adam) {
    for_each_tensor(adam->m, [&](const char*, const std::vector<double>& t) {
      for (double x : t) detail::write_f64(out, x);
    });
    for_each_tensor(adam->v, [&](const char*, const std::vector<double>& t) {
      for (double x : t) detail::write_f64(out, x);
    });
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

struct Checkpoint {
  RunConfig run_config;
  ModelParams params;
  bool has_adam = false;
  AdamState adam;
};

// Loads and cross-checks a checkpoint against the vocabulary it will serve:
// sizes and name digest must match, and the tensor table must agree with the
// shapes the stored configuration implies.
inline Checkpoint load_checkpoint(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);

  if (detail::expect_line(in, "magic") != checkpoint_magic)
    throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
  if (detail::expect_line(in, "config") != "config-begin")
    throw std::runtime_error("load_checkpoint: malformed header (config-begin)");

  Checkpoint ck;
  {
    std::string config_text, line;
    while ((line = detail::expect_line(in, "config")) != "config-end") config_text += line + '\n';
    std::istringstream cfg(config_text);
    ck.run_config.load(cfg);
  }

  auto read_kv = [&](const char* key) {
    const std::string line = detail::expect_line(in, key);
    const std::string prefix = std::string(key) + " = ";
    if (line.rfind(prefix, 0) != 0)
      throw std::runtime_error("load_checkpoint: malformed header line '" + line + "' (wanted " + key + ")");
    return line.substr(prefix.size());
  };

  Sizes sizes;
  sizes.num_entities = static_cast<std::int32_t>(std::stol(read_kv("entities")));
  sizes.num_relations = static_cast<std::int32_t>(std::stol(read_kv("relations")));
  sizes.num_times = static_cast<std::int32_t>(std::stol(read_kv("times")));
  if (sizes.num_entities != vocab.entities.size() || sizes.num_relations != vocab.relations.size() ||
      sizes.num_times != vocab.times.size())
    throw std::runtime_error("load_checkpoint: vocabulary sizes do not match the checkpoint");
  {
    std::ostringstream hex;
    hex << std::hex << detail::vocab_digest(vocab);
    if (read_kv("vocab_digest") != hex.str())
      throw std::runtime_error("load_checkpoint: vocabulary content does not match the checkpoint");
  }

  const std::string tensor_table = read_kv("tensors");
  std::string next = detail::expect_line(in, "payload");
  if (next.rfind("adam_step = ", 0) == 0) {
    ck.has_adam = true;
    ck.adam.step = std::stoll(next.substr(12));
    next = detail::expect_line(in, "payload");
  }
  if (next.rfind("payload = ", 0) != 0)
    throw std::runtime_error("load_checkpoint: malformed header line '" + next + "' (wanted payload)");
  const auto payload = static_cast<std::size_t>(std::stoll(next.substr(10)));
  if (detail::expect_line(in, "header-end") != "header-end")
    throw std::runtime_error("load_checkpoint: malformed header (header-end)");

  // Rebuild the parameter shapes from the stored configuration and verify the
  // stored tensor table matches them exactly.
  ck.params = init_params(sizes, model_config_from(ck.run_config), 0);
  {
    std::ostringstream expect;
    std::size_t total = 0;
    bool first = true;
    for_each_tensor(ck.params, [&](const char* name, const std::vector<double>& t) {
      if (t.empty()) return;
      if (!first) expect << ' ';
      first = false;
      expect << name << ':' << t.size();
      total += t.size();
    });
    if (expect.str() != tensor_table)
      throw std::runtime_error("load_checkpoint: tensor shapes do not match the stored configuration (stored '" +
                               tensor_table + "', expected '" + expect.str() + "')");
    if (payload != (ck.has_adam ? total * 3 : total))
      throw std::runtime_error("load_checkpoint: payload size disagrees with the tensor table");
  }

  for_each_tensor(ck.params, [&](const char*, std::vector<double>& t) {
    for (double& x : t) x = detail::read_f64(in);
  });
  if (ck.has_adam) {
    ck.adam.m = zeros_like(ck.params);
    ck.adam.v = zeros_like(ck.params);
    for_each_tensor(ck.adam.m, [&](const char*, std::vector<double>& t) {
      for (double& x : t) x = detail::read_f64(in);
    });
    for_each_tensor(ck.adam.v, [&](const char*, std::vector<double>& t) {
      for (double& x : t) x = detail::read_f64(in);
    });
  }
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0)
    throw std::runtime_error("load_checkpoint: trailing bytes after the payload");
  return ck;
}

}  // namespace boxte
