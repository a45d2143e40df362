#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "boxte/rng.hpp"

namespace boxte {

// A fact: (head entity, relation, tail entity, timestamp), all as dense ids.
struct Quadruple {
  std::int32_t head = 0;
  std::int32_t relation = 0;
  std::int32_t tail = 0;
  std::int32_t time = 0;

  friend bool operator==(const Quadruple&, const Quadruple&) = default;
  friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

struct QuadrupleHash {
  std::size_t operator()(const Quadruple& q) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t part : {static_cast<std::uint64_t>(static_cast<std::uint32_t>(q.head)),
                               static_cast<std::uint64_t>(static_cast<std::uint32_t>(q.relation)),
                               static_cast<std::uint64_t>(static_cast<std::uint32_t>(q.tail)),
                               static_cast<std::uint64_t>(static_cast<std::uint32_t>(q.time))}) {
      h ^= part;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

using QuadrupleSet = std::unordered_set<Quadruple, QuadrupleHash>;

// Bijection between names and dense ids for one symbol kind.
class IndexMap {
 public:
  std::int32_t get_or_add(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<std::int32_t>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

  std::optional<std::int32_t> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= names_.size())
      throw std::out_of_range("IndexMap: id " + std::to_string(id) + " out of range");
    return names_[static_cast<std::size_t>(id)];
  }

  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

struct Vocabulary {
  IndexMap entities;
  IndexMap relations;
  IndexMap times;

  bool empty() const { return entities.empty() && relations.empty() && times.empty(); }
};

namespace detail {

struct RawRow {
  std::string head, relation, tail, time_label;
  std::size_t line_no = 0;
};

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

// Reads head/relation/tail/timestamp rows. Blank lines and lines starting
// with '#' are skipped; anything else must have exactly four fields.
inline std::vector<RawRow> read_raw_rows(std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 4 tab-separated fields, got " +
                               std::to_string(fields.size()));
    for (const auto& f : fields) {
      if (f.empty())
        throw std::runtime_error("line " + std::to_string(line_no) + ": empty field");
    }
    rows.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2]), std::move(fields[3]), line_no});
  }
  return rows;
}

// Entity and relation ids follow first appearance; timestamp ids follow the
// lexicographic order of the distinct labels, so that label schemes with a
// fixed-width date format get chronologically ordered ids.
inline void build_vocab(const std::vector<RawRow>& rows, Vocabulary& vocab) {
  std::vector<std::string> time_labels;
  std::unordered_set<std::string> seen_times;
  for (const auto& row : rows) {
    vocab.entities.get_or_add(row.head);
    vocab.relations.get_or_add(row.relation);
    vocab.entities.get_or_add(row.tail);
    if (seen_times.insert(row.time_label).second) time_labels.push_back(row.time_label);
  }
  std::sort(time_labels.begin(), time_labels.end());
  for (const auto& label : time_labels) vocab.times.get_or_add(label);
}

inline Quadruple index_row(const RawRow& row, const Vocabulary& vocab) {
  const auto h = vocab.entities.find(row.head);
  const auto r = vocab.relations.find(row.relation);
  const auto t = vocab.entities.find(row.tail);
  const auto tau = vocab.times.find(row.time_label);
  if (!h || !r || !t || !tau) {
    const std::string& missing = !h ? row.head : !r ? row.relation : !t ? row.tail : row.time_label;
    throw std::runtime_error("line " + std::to_string(row.line_no) + ": name not in vocabulary: " + missing);
  }
  return {*h, *r, *t, *tau};
}

}  // namespace detail

enum class VocabMode { build, frozen };

// Build mode fills an (initially empty) vocabulary from the stream; frozen
// mode resolves names against the given vocabulary and rejects unknown ones.
inline std::vector<Quadruple> parse_quadruples(std::istream& in, Vocabulary& vocab, VocabMode mode) {
  if (mode == VocabMode::build && !vocab.empty())
    throw std::invalid_argument("parse_quadruples: build mode requires an empty vocabulary");
  auto rows = detail::read_raw_rows(in);
  if (mode == VocabMode::build) detail::build_vocab(rows, vocab);
  std::vector<Quadruple> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(detail::index_row(row, vocab));
  return out;
}

inline std::string serialize_quadruples(const std::vector<Quadruple>& quads, const Vocabulary& vocab) {
  std::string out;
  for (const auto& q : quads) {
    out += vocab.entities.name(q.head);
    out += '\t';
    out += vocab.relations.name(q.relation);
    out += '\t';
    out += vocab.entities.name(q.tail);
    out += '\t';
    out += vocab.times.name(q.time);
    out += '\n';
  }
  return out;
}

inline QuadrupleSet build_filter_index(const std::vector<Quadruple>& train, const std::vector<Quadruple>& valid,
                                       const std::vector<Quadruple>& test) {
  QuadrupleSet filter;
  filter.reserve(train.size() + valid.size() + test.size());
  for (const auto* split : {&train, &valid, &test})
    for (const auto& q : *split) filter.insert(q);
  return filter;
}

// One dataset: shared vocabulary, three splits, and the set of all known facts
// used to filter corrupted candidates during ranking.
struct TemporalKG {
  Vocabulary vocab;
  std::vector<Quadruple> train;
  std::vector<Quadruple> valid;
  std::vector<Quadruple> test;
  QuadrupleSet filter;
};

namespace detail {

inline TemporalKG assemble_from_raw(const std::vector<RawRow>& train_rows, const std::vector<RawRow>& valid_rows,
                                    const std::vector<RawRow>& test_rows) {
  TemporalKG kg;
  std::vector<RawRow> all;
  all.reserve(train_rows.size() + valid_rows.size() + test_rows.size());
  for (const auto* rows : {&train_rows, &valid_rows, &test_rows})
    all.insert(all.end(), rows->begin(), rows->end());
  build_vocab(all, kg.vocab);
  for (const auto& row : train_rows) kg.train.push_back(index_row(row, kg.vocab));
  for (const auto& row : valid_rows) kg.valid.push_back(index_row(row, kg.vocab));
  for (const auto& row : test_rows) kg.test.push_back(index_row(row, kg.vocab));
  kg.filter = build_filter_index(kg.train, kg.valid, kg.test);
  return kg;
}

}  // namespace detail

// The vocabulary covers all three splits; timestamp ids are assigned over the
// union of labels so an unseen-in-train timestamp still gets its sorted slot.
inline TemporalKG load_dataset(std::istream& train_in, std::istream& valid_in, std::istream& test_in) {
  return detail::assemble_from_raw(detail::read_raw_rows(train_in), detail::read_raw_rows(valid_in),
                                   detail::read_raw_rows(test_in));
}

// ---------------------------------------------------------------------------
// Interval-annotated input (head, relation, tail, occursSince|occursUntil, year)

struct IntervalRow {
  std::string head, relation, tail, marker;
  long year = 0;
  std::size_t line_no = 0;
};

inline std::vector<IntervalRow> parse_interval_rows(std::istream& in) {
  std::vector<IntervalRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 5)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 5 tab-separated fields, got " +
                               std::to_string(fields.size()));
    if (fields[3] != "occursSince" && fields[3] != "occursUntil")
      throw std::runtime_error("line " + std::to_string(line_no) + ": unknown interval marker '" + fields[3] + "'");
    long year = 0;
    try {
      std::size_t consumed = 0;
      year = std::stol(fields[4], &consumed);
      if (consumed != fields[4].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad year '" + fields[4] + "'");
    }
    if (year < 0)
      throw std::runtime_error("line " + std::to_string(line_no) + ": negative year " + std::to_string(year));
    rows.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2]), std::move(fields[3]), year,
                    line_no});
  }
  return rows;
}

namespace detail {

// Zero-padded so the lexicographic timestamp ordering used by the vocabulary
// builder coincides with chronological order.
inline std::string year_label(long year) {
  std::string s = std::to_string(year);
  while (s.size() < 4) s.insert(s.begin(), '0');
  return s;
}

}  // namespace detail

// A fully named fact row, ready for vocabulary indexing.
struct FactRow {
  std::string head, relation, tail, time_label;
};

// Expands Since/Until interval annotations into one fact per year. Rows are
// matched greedily in file order per (head, relation, tail): each Until row
// closes the oldest open Since row for its triple. A Since without a matching
// Until (and vice versa) contributes the single year it names. An Until that
// closes a Since with a later year is an error.
inline std::vector<FactRow> unfold_interval_rows(const std::vector<IntervalRow>& rows) {
  struct Pending {
    std::size_t order;  // position in `rows`
    long since_year = 0;
    long until_year = -1;
    bool closed = false;
  };
  std::unordered_map<std::string, std::vector<std::size_t>> open_since;  // triple key -> pending indices
  std::vector<Pending> pendings;

  auto triple_key = [](const IntervalRow& r) { return r.head + '\t' + r.relation + '\t' + r.tail; };

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.marker == "occursSince") {
      pendings.push_back({i, row.year});
      open_since[triple_key(row)].push_back(pendings.size() - 1);
    } else {
      auto& queue = open_since[triple_key(row)];
      if (queue.empty()) {
        // Unmatched Until: stands for the single year it names.
        pendings.push_back({i, row.year, row.year, true});
      } else {
        auto& p = pendings[queue.front()];
        queue.erase(queue.begin());
        if (row.year < p.since_year)
          throw std::runtime_error("line " + std::to_string(row.line_no) + ": interval end " +
                                   std::to_string(row.year) + " precedes start " + std::to_string(p.since_year) +
                                   " opened at line " + std::to_string(rows[p.order].line_no));
        p.until_year = row.year;
        p.closed = true;
      }
    }
  }

  std::vector<FactRow> out;
  for (const auto& p : pendings) {
    const auto& row = rows[p.order];
    const long last = p.closed ? p.until_year : p.since_year;
    for (long y = p.since_year; y <= last; ++y)
      out.push_back({row.head, row.relation, row.tail, detail::year_label(y)});
  }
  return out;
}

// Builds one dataset from pre-expanded fact rows, sharing the vocabulary
// across splits like load_dataset does for streams.
inline TemporalKG assemble_dataset(const std::vector<FactRow>& train, const std::vector<FactRow>& valid,
                                   const std::vector<FactRow>& test) {
  auto to_raw = [](const std::vector<FactRow>& rows) {
    std::vector<detail::RawRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.head, r.relation, r.tail, r.time_label, 0});
    return out;
  };
  return detail::assemble_from_raw(to_raw(train), to_raw(valid), to_raw(test));
}

inline std::pair<std::vector<Quadruple>, Vocabulary> index_fact_rows(const std::vector<FactRow>& rows) {
  Vocabulary vocab;
  std::vector<std::string> time_labels;
  std::unordered_set<std::string> seen_times;
  for (const auto& row : rows) {
    vocab.entities.get_or_add(row.head);
    vocab.relations.get_or_add(row.relation);
    vocab.entities.get_or_add(row.tail);
    if (seen_times.insert(row.time_label).second) time_labels.push_back(row.time_label);
  }
  std::sort(time_labels.begin(), time_labels.end());
  for (const auto& label : time_labels) vocab.times.get_or_add(label);

  std::vector<Quadruple> quads;
  quads.reserve(rows.size());
  for (const auto& row : rows)
    quads.push_back({*vocab.entities.find(row.head), *vocab.relations.find(row.relation),
                     *vocab.entities.find(row.tail), *vocab.times.find(row.time_label)});
  return {std::move(quads), std::move(vocab)};
}

// ---------------------------------------------------------------------------
// Synthetic graphs with planted regularities, for tests and demos.

enum class PlantedPattern { rigid_relation, volatile_relation, cross_time_hierarchy };

struct SynthSpec {
  int num_entities = 0;
  int num_relations = 0;
  int num_timestamps = 0;
  std::vector<PlantedPattern> patterns;
  int pairs_per_relation = 0;  // 0 picks num_entities
};

// Patterns claim relation ids in order starting from 0 (a hierarchy claims
// two). Every generated fact goes into the train split. A rigid relation
// holds its pairs at every timestamp; a volatile relation alternates presence
// between consecutive timestamps; a hierarchy plants body facts at timestamp 0
// whose head facts at timestamp 1 always exist, plus head-only extras so the
// implication is one-directional.
inline TemporalKG generate_synthetic_tkg(std::uint64_t seed, const SynthSpec& spec) {
  if (spec.num_entities < 1 || spec.num_relations < 1 || spec.num_timestamps < 1)
    throw std::invalid_argument("generate_synthetic_tkg: sizes must be positive");

  int needed = 0;
  for (auto p : spec.patterns) needed += (p == PlantedPattern::cross_time_hierarchy) ? 2 : 1;
  if (needed > spec.num_relations)
    throw std::invalid_argument("generate_synthetic_tkg: patterns claim " + std::to_string(needed) +
                                " relations but only " + std::to_string(spec.num_relations) + " exist");
  for (auto p : spec.patterns) {
    if (p == PlantedPattern::volatile_relation && spec.num_timestamps < 2)
      throw std::invalid_argument("generate_synthetic_tkg: volatile pattern needs at least 2 timestamps");
    if (p == PlantedPattern::cross_time_hierarchy && spec.num_timestamps < 2)
      throw std::invalid_argument("generate_synthetic_tkg: hierarchy pattern needs at least 2 timestamps");
  }

  const int pair_budget = spec.pairs_per_relation > 0 ? spec.pairs_per_relation : spec.num_entities;
  const auto num_pairs = static_cast<std::int64_t>(spec.num_entities) * spec.num_entities;
  if (pair_budget > num_pairs)
    throw std::invalid_argument("generate_synthetic_tkg: pairs_per_relation exceeds entity pair count");

  std::mt19937_64 rng(seed);
  auto sample_pairs = [&](int count, const std::unordered_set<std::int64_t>& exclude = {}) {
    // Distinct (head, tail) pairs, sampled by index without replacement.
    if (count + static_cast<std::int64_t>(exclude.size()) > num_pairs)
      throw std::invalid_argument("generate_synthetic_tkg: not enough entity pairs for the planted patterns");
    std::unordered_set<std::int64_t> chosen;
    std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
    while (static_cast<int>(pairs.size()) < count) {
      const auto idx = static_cast<std::int64_t>(rand_below(rng, static_cast<std::uint64_t>(num_pairs)));
      if (exclude.count(idx) || !chosen.insert(idx).second) continue;
      pairs.emplace_back(static_cast<std::int32_t>(idx / spec.num_entities),
                         static_cast<std::int32_t>(idx % spec.num_entities));
    }
    return pairs;
  };

  std::vector<Quadruple> facts;
  int next_rel = 0;
  for (auto pattern : spec.patterns) {
    switch (pattern) {
      case PlantedPattern::rigid_relation: {
        const std::int32_t r = next_rel++;
        for (auto [h, t] : sample_pairs(pair_budget))
          for (std::int32_t tau = 0; tau < spec.num_timestamps; ++tau) facts.push_back({h, r, t, tau});
        break;
      }
      case PlantedPattern::volatile_relation: {
        const std::int32_t r = next_rel++;
        for (auto [h, t] : sample_pairs(pair_budget)) {
          const auto phase = static_cast<std::int32_t>(rand_below(rng, 2));
          for (std::int32_t tau = 0; tau < spec.num_timestamps; ++tau)
            if ((tau + phase) % 2 == 0) facts.push_back({h, r, t, tau});
        }
        break;
      }
      case PlantedPattern::cross_time_hierarchy: {
        const std::int32_t body = next_rel++;
        const std::int32_t head = next_rel++;
        const auto body_pairs = sample_pairs(pair_budget);
        std::unordered_set<std::int64_t> body_idx;
        for (auto [h, t] : body_pairs) {
          facts.push_back({h, body, t, 0});
          facts.push_back({h, head, t, 1});
          body_idx.insert(static_cast<std::int64_t>(h) * spec.num_entities + t);
        }
        // Head-only extras keep the converse implication false.
        for (auto [h, t] : sample_pairs(std::max(1, pair_budget / 2), body_idx)) facts.push_back({h, head, t, 1});
        break;
      }
    }
  }
  // Unclaimed relations get plain random facts.
  for (std::int32_t r = next_rel; r < spec.num_relations; ++r) {
    for (auto [h, t] : sample_pairs(pair_budget)) {
      const auto tau = static_cast<std::int32_t>(rand_below(rng, static_cast<std::uint64_t>(spec.num_timestamps)));
      facts.push_back({h, r, t, tau});
    }
  }

  TemporalKG kg;
  // Names are zero-padded so id order and label sort order agree.
  auto padded = [](const char* prefix, int i, int width) {
    std::string digits = std::to_string(i);
    while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
    return std::string(prefix) + digits;
  };
  const int ew = static_cast<int>(std::to_string(spec.num_entities - 1).size());
  const int rw = static_cast<int>(std::to_string(spec.num_relations - 1).size());
  const int tw = static_cast<int>(std::to_string(spec.num_timestamps - 1).size());
  for (int i = 0; i < spec.num_entities; ++i) kg.vocab.entities.get_or_add(padded("e", i, ew));
  for (int i = 0; i < spec.num_relations; ++i) kg.vocab.relations.get_or_add(padded("r", i, rw));
  for (int i = 0; i < spec.num_timestamps; ++i) kg.vocab.times.get_or_add(padded("t", i, tw));

  kg.train = std::move(facts);
  kg.filter = build_filter_index(kg.train, kg.valid, kg.test);
  return kg;
}

}  // namespace boxte
