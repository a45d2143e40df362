// Command-line front end: training, evaluation, capacity and pattern
// verification, gradient checking, parameter counting and scalar inspection.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "boxte/budget.hpp"
#include "boxte/checkpoint.hpp"
#include "boxte/data.hpp"
#include "boxte/eval.hpp"
#include "boxte/expressiveness.hpp"
#include "boxte/gradcheck.hpp"
#include "boxte/model.hpp"
#include "boxte/patterns.hpp"
#include "boxte/run_config.hpp"
#include "boxte/train.hpp"

namespace {

using namespace boxte;

std::string with_thousands(std::int64_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count > 0 && count % 3 == 0 && *it != '-') out += ',';
    out += *it;
    ++count;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Shared --config / --preset / --set plumbing. Precedence: preset values
// first, then the config file, then explicit overrides.
struct ConfigArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--preset", preset, "hyper-parameter preset (icews14, icews5-15, gdelt, *-bounded)");
    cmd->add_option("--set", overrides, "override, key=value (repeatable)")->take_all();
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!preset.empty()) c = preset_config(preset);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot open config file " + config_path);
      c.load(in);
    }
    for (const auto& o : overrides) c.apply_override(o);
    return c;
  }
};

std::vector<FactRow> read_fact_file(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (format == "intervals") return unfold_interval_rows(parse_interval_rows(in));
  std::vector<FactRow> rows;
  for (const auto& r : detail::read_raw_rows(in)) rows.push_back({r.head, r.relation, r.tail, r.time_label});
  return rows;
}

TemporalKG dataset_from_config(const RunConfig& c, bool need_train = true) {
  const std::string format = c.get_string_or("dataset_format", "tsv");
  if (format != "tsv" && format != "intervals")
    throw std::invalid_argument("dataset_format must be tsv or intervals, got '" + format + "'");
  if (need_train && !c.has("train")) throw std::invalid_argument("missing configuration key 'train'");
  auto read_opt = [&](const char* key) {
    return c.has(key) ? read_fact_file(c.get_string(key), format) : std::vector<FactRow>{};
  };
  return assemble_dataset(read_opt("train"), read_opt("valid"), read_opt("test"));
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

int cmd_train(const ConfigArgs& args) {
  const RunConfig config = args.resolve();
  const auto kg = dataset_from_config(config);
  const auto mc = model_config_from(config);
  const auto tc = train_config_from(config);
  std::printf("dataset: %d entities, %d relations, %d timestamps; %zu train / %zu valid / %zu test facts\n",
              kg.vocab.entities.size(), kg.vocab.relations.size(), kg.vocab.times.size(), kg.train.size(),
              kg.valid.size(), kg.test.size());

  const std::string out_dir = config.get_string_or("out_dir", "");
  std::ofstream log;
  if (!out_dir.empty()) {
    ensure_out_dir(out_dir);
    log.open(out_dir + "/epoch_log.csv");
    if (!log) throw std::runtime_error("cannot write epoch log in " + out_dir);
    log << "epoch,loss,reg,valid_mrr\n";
  }

  auto result = train(kg, mc, tc, [&](const EpochLog& e) {
    if (e.validated)
      std::printf("epoch %4d  loss %.6f  reg %.6f  valid-MRR %.4f\n", e.epoch, e.loss, e.reg, e.valid_mrr);
    else
      std::printf("epoch %4d  loss %.6f  reg %.6f\n", e.epoch, e.loss, e.reg);
    if (log.is_open()) {
      log << e.epoch << ',' << fmt_double(e.loss) << ',' << fmt_double(e.reg) << ',';
      if (e.validated) log << fmt_double(e.valid_mrr);
      log << '\n';
    }
  });

  if (result.best_epoch > 0)
    std::printf("best valid-MRR %.4f at epoch %d\n", result.best_mrr, result.best_epoch);
  if (!out_dir.empty()) {
    save_checkpoint(out_dir + "/final.ckpt", config, kg.vocab, result.params);
    std::printf("wrote %s/final.ckpt\n", out_dir.c_str());
    if (result.best_epoch > 0) {
      save_checkpoint(out_dir + "/best.ckpt", config, kg.vocab, result.best_params);
      std::printf("wrote %s/best.ckpt\n", out_dir.c_str());
    }
  }
  return 0;
}

int cmd_eval(const ConfigArgs& args, const std::string& checkpoint_path, const std::string& split) {
  const RunConfig config = args.resolve();
  const auto kg = dataset_from_config(config);
  const auto ck = load_checkpoint(checkpoint_path, kg.vocab);

  const std::vector<Quadruple>* facts = nullptr;
  if (split == "train")
    facts = &kg.train;
  else if (split == "valid")
    facts = &kg.valid;
  else if (split == "test")
    facts = &kg.test;
  else
    throw std::invalid_argument("split must be train, valid or test, got '" + split + "'");
  if (facts->empty()) throw std::invalid_argument("split '" + split + "' is empty");

  const auto m = evaluate(ck.params, *facts, kg.filter);
  std::printf("%s: %" PRId64 " queries\n", split.c_str(), m.queries);
  std::printf("  MR      %.2f\n", m.mr);
  std::printf("  MRR     %.4f\n", m.mrr);
  std::printf("  Hits@1  %.4f\n", m.hits1);
  std::printf("  Hits@3  %.4f\n", m.hits3);
  std::printf("  Hits@10 %.4f\n", m.hits10);

  const std::string out_dir = config.get_string_or("out_dir", "");
  if (!out_dir.empty()) {
    ensure_out_dir(out_dir);
    std::ofstream csv(out_dir + "/metrics.csv");
    csv << "split,queries,mr,mrr,hits1,hits3,hits10\n";
    csv << split << ',' << m.queries << ',' << fmt_double(m.mr) << ',' << fmt_double(m.mrr) << ','
        << fmt_double(m.hits1) << ',' << fmt_double(m.hits3) << ',' << fmt_double(m.hits10) << '\n';
    std::printf("wrote %s/metrics.csv\n", out_dir.c_str());
  }
  return 0;
}

int cmd_verify_expressiveness(int trials, int max_entities, int max_relations, int max_timestamps,
                              std::uint64_t seed) {
  if (trials < 1 || max_entities < 1 || max_relations < 1 || max_timestamps < 1)
    throw std::invalid_argument("verify-expressiveness: all bounds must be >= 1");
  std::mt19937_64 rng(seed);
  int perfect = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const Sizes s{static_cast<std::int32_t>(1 + rand_below(rng, static_cast<std::uint64_t>(max_entities))),
                  static_cast<std::int32_t>(1 + rand_below(rng, static_cast<std::uint64_t>(max_relations))),
                  static_cast<std::int32_t>(1 + rand_below(rng, static_cast<std::uint64_t>(max_timestamps)))};
    QuadrupleSet graph;
    for (std::int32_t h = 0; h < s.num_entities; ++h)
      for (std::int32_t r = 0; r < s.num_relations; ++r)
        for (std::int32_t t = 0; t < s.num_entities; ++t)
          for (std::int32_t tau = 0; tau < s.num_times; ++tau)
            if (rand_below(rng, 2) == 0) graph.insert({h, r, t, tau});

    const auto rep1 = classify_universe(construct_per_fact_model(graph, s), graph);
    const auto rep2 = classify_universe(construct_per_triple_model(graph, s), graph);
    if (rep1.perfect() && rep2.perfect()) {
      ++perfect;
    } else {
      std::printf("trial %d: sizes (%d, %d, %d), %zu facts: per-fact %" PRId64 "/%" PRId64 ", per-triple %" PRId64
                  "/%" PRId64 "\n",
                  trial, s.num_entities, s.num_relations, s.num_times, graph.size(), rep1.correct, rep1.universe,
                  rep2.correct, rep2.universe);
    }
  }
  std::printf("%d/%d universes classified perfectly by both constructions\n", perfect, trials);
  return perfect == trials ? 0 : 1;
}

int cmd_check_patterns(int entities, int dim, int k, std::uint64_t seed) {
  const Sizes sizes{static_cast<std::int32_t>(entities), 4, 3};
  ModelConfig mc;
  mc.dim = dim;
  mc.k = k;
  auto base = init_params(sizes, mc, seed);
  // Spread the entities out so the semantic sweep sees both members and
  // non-members of the pattern boxes.
  std::mt19937_64 rng(seed + 17);
  for (auto* t : {&base.entity_base, &base.entity_bump})
    for (auto& x : *t) x = rand_uniform(rng, -1.0, 1.0);

  const std::vector<PatternSpec> specs = {
      {PatternKind::rigid, {0}, {}},
      {PatternKind::hierarchy, {0, 1}, {0, 1}},
      {PatternKind::intersection, {0, 1, 2}, {0, 1, 2}},
      {PatternKind::inversion, {0, 1}, {0, 2}},
      {PatternKind::mutual_exclusion, {0, 1}, {1, 2}},
  };
  bool all_ok = true;
  for (const auto& spec : specs) {
    const auto built = build_pattern_config(base, spec);
    const auto geo = check_geometric(built, spec);
    const auto sem = check_semantic(built, spec);
    const bool ok = geo.ok && sem.ok;
    all_ok = all_ok && ok;
    std::printf("[%s] %s", ok ? "PASS" : "FAIL", pattern_name(spec.kind));
    if (!geo.ok) std::printf("  geometric: %s", geo.detail.c_str());
    if (!sem.ok) std::printf("  semantic: %s", sem.detail.c_str());
    std::printf("\n");
  }
  return all_ok ? 0 : 1;
}

int cmd_param_count(const std::string& model_name, const std::string& preset, std::int64_t entities,
                    std::int64_t relations, std::int64_t timestamps, int dim, int k, int factor_rank, double gamma,
                    std::int64_t budget) {
  Sizes sizes{static_cast<std::int32_t>(entities), static_cast<std::int32_t>(relations),
              static_cast<std::int32_t>(timestamps)};
  if (!preset.empty()) {
    sizes = preset_sizes(preset);
    const RunConfig pc = preset_config(preset);
    if (dim == 0) dim = static_cast<int>(pc.get_int("dim"));
    if (k == 0) k = static_cast<int>(pc.get_int_or("k", 1));
    if (factor_rank == 0) factor_rank = static_cast<int>(pc.get_int_or("factor_rank", 0));
  }
  if (dim == 0 && budget == 0)
    throw std::invalid_argument("param-count: give --dim (or a preset), or --budget to fit one");
  const auto model = parse_count_model(model_name);
  if (budget > 0) {
    const auto fit = dimension_for_budget(model, sizes, budget, k == 0 ? 1 : k, factor_rank, gamma);
    std::printf("largest dim within %s parameters: %d (%s used)%s\n", with_thousands(budget).c_str(), fit.dim,
                with_thousands(fit.count).c_str(), fit.capped ? " [search cap reached]" : "");
    return 0;
  }
  const auto count = param_count(model, sizes, dim, k == 0 ? 1 : k, factor_rank, gamma);
  std::printf("%s at |E|=%s |R|=%s |T|=%s dim=%d", model_name.c_str(), with_thousands(sizes.num_entities).c_str(),
              with_thousands(sizes.num_relations).c_str(), with_thousands(sizes.num_times).c_str(), dim);
  if (model == CountModel::box || model == CountModel::box_factorized) std::printf(" k=%d", k == 0 ? 1 : k);
  if (model == CountModel::box_factorized) std::printf(" b=%d", factor_rank);
  if (model == CountModel::de_simple) std::printf(" gamma=%g", gamma);
  std::printf(": %s parameters\n", with_thousands(count).c_str());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double step, double threshold) {
  const auto cases = run_gradient_checks(seed, step);
  double worst = 0.0;
  for (const auto& c : cases) {
    std::printf("%-42s max rel err %.3e  (%s)\n", c.name.c_str(), c.max_rel_err,
                c.worst_tensor.empty() ? "-" : c.worst_tensor.c_str());
    worst = std::max(worst, c.max_rel_err);
  }
  std::printf("worst case: %.3e (threshold %.1e)\n", worst, threshold);
  return worst <= threshold ? 0 : 1;
}

int cmd_inspect_scalars(const ConfigArgs& args, const std::string& checkpoint_path, int top) {
  const RunConfig config = args.resolve();
  const auto kg = dataset_from_config(config);
  const auto ck = load_checkpoint(checkpoint_path, kg.vocab);
  auto summary = inspect_scalars(ck.params);
  if (top > 0 && static_cast<std::size_t>(top) < summary.size()) summary.resize(static_cast<std::size_t>(top));

  for (const auto& [rel, value] : summary)
    std::printf("%-40s %.4f\n", kg.vocab.relations.name(rel).c_str(), value);

  const std::string out_dir = config.get_string_or("out_dir", "");
  if (!out_dir.empty()) {
    ensure_out_dir(out_dir);
    std::ofstream csv(out_dir + "/scalars.csv");
    csv << "relation,mean_abs_scalar\n";
    for (const auto& [rel, value] : summary)
      csv << kg.vocab.relations.name(rel) << ',' << fmt_double(value) << '\n';
    std::printf("wrote %s/scalars.csv\n", out_dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal knowledge-graph box embeddings"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoints");
  train_args.attach(train_cmd);

  ConfigArgs eval_args;
  std::string eval_checkpoint, eval_split = "test";
  auto* eval_cmd = app.add_subcommand("eval", "filtered ranking metrics for a checkpoint");
  eval_args.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate")->required();
  eval_cmd->add_option("--split", eval_split, "train, valid or test (default test)");

  int ve_trials = 50, ve_entities = 3, ve_relations = 2, ve_timestamps = 3;
  std::uint64_t ve_seed = 7;
  auto* ve_cmd = app.add_subcommand("verify-expressiveness",
                                    "embed random universes exactly with both capacity constructions");
  ve_cmd->add_option("--trials", ve_trials, "number of random universes (default 50)");
  ve_cmd->add_option("--max-entities", ve_entities, "entity count bound (default 3)");
  ve_cmd->add_option("--max-relations", ve_relations, "relation count bound (default 2)");
  ve_cmd->add_option("--max-timestamps", ve_timestamps, "timestamp count bound (default 3)");
  ve_cmd->add_option("--seed", ve_seed, "base seed (default 7)");

  int cp_entities = 20, cp_dim = 6, cp_k = 2;
  std::uint64_t cp_seed = 11;
  auto* cp_cmd = app.add_subcommand("check-patterns", "build and verify each inference-pattern configuration");
  cp_cmd->add_option("--entities", cp_entities, "entities for the semantic sweep (default 20)");
  cp_cmd->add_option("--dim", cp_dim, "embedding dimension (default 6)");
  cp_cmd->add_option("--k", cp_k, "time-bump rows per timestamp (default 2)");
  cp_cmd->add_option("--seed", cp_seed, "base-parameter seed (default 11)");

  std::string pc_model = "box", pc_preset;
  std::int64_t pc_entities = 0, pc_relations = 0, pc_timestamps = 0, pc_budget = 0;
  int pc_dim = 0, pc_k = 0, pc_rank = 0;
  double pc_gamma = 0.0;
  auto* pc_cmd = app.add_subcommand("param-count", "parameter footprint of a model family");
  pc_cmd->add_option("--model", pc_model, "box, box-factorized, de-simple, tcomplex, tntcomplex (default box)");
  pc_cmd->add_option("--preset", pc_preset, "benchmark preset supplying sizes and hyper-parameters");
  pc_cmd->add_option("--entities", pc_entities, "entity count");
  pc_cmd->add_option("--relations", pc_relations, "relation count");
  pc_cmd->add_option("--timestamps", pc_timestamps, "timestamp count");
  pc_cmd->add_option("--dim", pc_dim, "embedding dimension");
  pc_cmd->add_option("--k", pc_k, "time-bump rows per timestamp");
  pc_cmd->add_option("--factor-rank", pc_rank, "factorization rank");
  pc_cmd->add_option("--gamma", pc_gamma, "diachronic fraction (de-simple)");
  pc_cmd->add_option("--budget", pc_budget, "fit the largest dim within this parameter budget");

  std::uint64_t gc_seed = 3;
  double gc_step = 1e-6, gc_threshold = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic gradients against central differences");
  gc_cmd->add_option("--seed", gc_seed, "parameter seed (default 3)");
  gc_cmd->add_option("--step", gc_step, "finite-difference step (default 1e-6)");
  gc_cmd->add_option("--threshold", gc_threshold, "max acceptable relative error (default 1e-4)");

  ConfigArgs is_args;
  std::string is_checkpoint;
  int is_top = 0;
  auto* is_cmd = app.add_subcommand("inspect-scalars", "relations ranked by mean absolute time scalar");
  is_args.attach(is_cmd);
  is_cmd->add_option("--checkpoint", is_checkpoint, "checkpoint to inspect")->required();
  is_cmd->add_option("--top", is_top, "print only the first N relations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, eval_checkpoint, eval_split);
    if (ve_cmd->parsed())
      return cmd_verify_expressiveness(ve_trials, ve_entities, ve_relations, ve_timestamps, ve_seed);
    if (cp_cmd->parsed()) return cmd_check_patterns(cp_entities, cp_dim, cp_k, cp_seed);
    if (pc_cmd->parsed())
      return cmd_param_count(pc_model, pc_preset, pc_entities, pc_relations, pc_timestamps, pc_dim, pc_k, pc_rank,
                             pc_gamma, pc_budget);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_step, gc_threshold);
    if (is_cmd->parsed()) return cmd_inspect_scalars(is_args, is_checkpoint, is_top);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
