// Operator entry point: reproducible pipelines over the core library.
// Exit codes: 0 ok, 2 usage, 3 data, 4 numeric.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <unordered_set>

#include "CLI11.hpp"
#include "json.hpp"
#include "visret/benchmark.hpp"
#include "visret/corpus.hpp"
#include "visret/embedding.hpp"
#include "visret/errors.hpp"
#include "visret/index.hpp"
#include "visret/io.hpp"
#include "visret/mining.hpp"
#include "visret/remote.hpp"
#include "visret/resize.hpp"
#include "visret/run_config.hpp"
#include "visret/training.hpp"
#include "visret/vector_file.hpp"

namespace {

using namespace visret;

// Flags override the config file, which overrides environment defaults:
// defaults < file < environment < explicit flags.
class ConfigCli {
 public:
  explicit ConfigCli(CLI::App* sub) {
    config_opt_ = sub->add_option("--config", config_path_,
                                  "key=value config file ([section] headers "
                                  "prefix keys)");
  }

  void bind(CLI::App* sub, const std::string& flag, const std::string& key,
            const std::string& desc) {
    auto storage = std::make_shared<std::string>();
    Binding b{sub->add_option(flag, *storage, desc), key, storage};
    bindings_.push_back(std::move(b));
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (config_opt_->count() > 0) {
      cfg.apply_text(read_file(config_path_), config_path_);
    }
    cfg.apply_env();
    for (const auto& b : bindings_) {
      if (b.opt->count() > 0) cfg.set(b.key, *b.storage);
    }
    return cfg;
  }

 private:
  struct Binding {
    CLI::Option* opt;
    std::string key;
    std::shared_ptr<std::string> storage;
  };
  std::string config_path_;
  CLI::Option* config_opt_ = nullptr;
  std::vector<Binding> bindings_;
};

std::shared_ptr<ConfigCli> common_flags(CLI::App* sub) {
  auto cli = std::make_shared<ConfigCli>(sub);
  cli->bind(sub, "--seed", "seed", "seed for every stochastic stage");
  cli->bind(sub, "--threads", "threads", "worker cap for parallel sections");
  return cli;
}

void bind_backend(CLI::App* sub, ConfigCli& cli) {
  cli.bind(sub, "--backend", "backend", "embedder: mock | remote");
  cli.bind(sub, "--dim", "dim", "embedding dimension");
  cli.bind(sub, "--endpoint", "remote.endpoint", "embedding service URL");
}

std::unique_ptr<EmbedderBackend> make_backend(const RunConfig& cfg) {
  const std::string& kind = cfg.get("backend");
  if (kind == "mock") {
    return std::make_unique<MockEmbedder>(cfg.get_u64("seed"),
                                          cfg.get_int("dim"));
  }
  if (kind == "remote") {
    RemoteConfig rc;
    rc.base_url = cfg.get("remote.endpoint");
    rc.path = cfg.get("remote.path");
    rc.dim = cfg.get_int("dim");
    rc.max_attempts = cfg.get_int("remote.max_attempts");
    rc.timeout_sec = cfg.get_int("remote.timeout_sec");
    return std::make_unique<RemoteEmbedder>(rc);
  }
  throw DataError("unknown backend '" + kind + "' (expected mock | remote)");
}

std::string prepare_out_dir(const std::string& out, const RunConfig& cfg) {
  std::filesystem::create_directories(out);
  cfg.echo_to(out);
  return out;
}

MiningConfig mining_config(const RunConfig& cfg) {
  MiningConfig mc;
  mc.q_top = cfg.get_int("mining.q_top");
  mc.q_exclude_top = cfg.get_int("mining.q_exclude_top");
  mc.t_top = cfg.get_int("mining.t_top");
  mc.t_exclude_top = cfg.get_int("mining.t_exclude_top");
  mc.visual_top = cfg.get_int("mining.visual_top");
  mc.visual_exclude_top = cfg.get_int("mining.visual_exclude_top");
  mc.sample_count = cfg.get_int("mining.sample_count");
  mc.pair_top = cfg.get_int("mining.pair_top");
  mc.seed = cfg.get_u64("seed");
  return mc;
}

// --- subcommand bodies -----------------------------------------------------

void run_ingest(const RunConfig& cfg, const std::string& in,
                const std::string& out) {
  Corpus corpus = load_corpus(in);
  prepare_out_dir(out, cfg);
  save_corpus(corpus, out + "/corpus.jsonl");
  std::cout << "ingested screenshots=" << corpus.screenshots().size()
            << " q2s=" << corpus.q2s().size()
            << " sq2s=" << corpus.sq2s().size() << "\n";
}

void run_filter(const RunConfig& cfg, const std::string& in,
                const std::string& out) {
  Corpus corpus = load_corpus(in);
  FilterConfig fc;
  fc.max_aspect_ratio = cfg.get_double("filter.max_aspect");
  fc.min_caption_chars = cfg.get_int("filter.min_caption_chars");
  {
    std::istringstream words(cfg.get("filter.blocklist"));
    std::string word;
    while (std::getline(words, word, ',')) {
      if (!word.empty()) fc.blocklist.insert(word);
    }
  }
  FilterResult result = filter_screenshots(corpus.screenshots(), fc);

  // Rebuild the corpus over the surviving screenshots; tuples referencing a
  // dropped id fall away, negative lists shed dropped members.
  std::unordered_set<std::string> kept_ids;
  Corpus filtered;
  for (const auto& s : result.kept) {
    kept_ids.insert(s.id);
    filtered.add(s);
  }
  auto prune = [&kept_ids](std::vector<std::string>& ids) {
    std::erase_if(ids, [&](const std::string& id) { return !kept_ids.count(id); });
  };
  for (Q2STuple t : corpus.q2s()) {
    if (!kept_ids.count(t.target_id)) continue;
    prune(t.hard_negative_ids);
    filtered.add(std::move(t));
  }
  for (SQ2STriplet t : corpus.sq2s()) {
    if (!kept_ids.count(t.target_id) || !kept_ids.count(t.source_id)) continue;
    prune(t.hard_negative_ids);
    filtered.add(std::move(t));
  }
  filtered.validate_references();

  prepare_out_dir(out, cfg);
  save_corpus(filtered, out + "/corpus.jsonl");
  std::string rejects;
  for (const auto& r : result.rejected) {
    nlohmann::json rec;
    rec["id"] = r.item.id;
    rec["reason"] = std::string(to_string(r.reason));
    rejects += rec.dump();
    rejects += '\n';
  }
  atomic_write(out + "/rejected.jsonl", rejects);
  std::cout << "kept=" << result.kept.size()
            << " rejected=" << result.rejected.size() << "\n";
}

void run_mine(const RunConfig& cfg, const std::string& in,
              const std::string& out) {
  Corpus corpus = load_corpus(in);
  if (corpus.screenshots().empty()) {
    throw DataError("mine: corpus has no screenshots");
  }
  auto backend = make_backend(cfg);
  int threads = cfg.get_int("threads");
  VectorIndex text_index =
      build_caption_index(corpus.screenshots(), *backend, threads);
  VectorIndex visual_index =
      build_visual_index(corpus.screenshots(), *backend, threads);

  Miner miner(corpus, text_index, &visual_index, *backend,
              mining_config(cfg));
  std::vector<NegativeSet> records = miner.augment(corpus);
  corpus.validate_references();

  prepare_out_dir(out, cfg);
  save_corpus(corpus, out + "/corpus.jsonl");
  atomic_write(out + "/provenance.jsonl", serialize_provenance(records));
  size_t empty_pools = 0;
  for (const auto& r : records) empty_pools += r.empty_pool ? 1 : 0;
  std::cout << "mined samples=" << records.size()
            << " empty_pools=" << empty_pools << "\n";
}

void run_train(const RunConfig& cfg, const std::string& in,
               const std::string& out) {
  Corpus corpus = load_corpus(in);
  TrainerConfig tc;
  tc.initial_lr = cfg.get_double("train.lr");
  tc.batch_size_stage1 = cfg.get_int("train.batch_size_stage1");
  tc.batch_size_stage2 = cfg.get_int("train.batch_size_stage2");
  tc.epochs_per_stage = cfg.get_int("train.epochs_per_stage");
  tc.seed = cfg.get_u64("seed");
  tc.d_emb = cfg.get_int("train.d_emb");
  tc.temperature = cfg.get_double("train.tau");
  tc.init_scale = cfg.get_double("train.init_scale");
  const std::string& mode = cfg.get("train.negative_mode");
  if (mode == "shared") {
    tc.negative_mode = NegativeMode::kShared;
  } else if (mode == "per_query") {
    tc.negative_mode = NegativeMode::kPerQuery;
  } else {
    throw DataError("train: negative_mode must be shared | per_query");
  }

  HashFeatureExtractor features(cfg.get_u64("seed"), cfg.get_int("dim"));
  TrainingResult result = train(corpus, features, tc);

  prepare_out_dir(out, cfg);
  save_params(out + "/params.vire", result.params);
  atomic_write(out + "/trace.jsonl", serialize_trace(result.trace));
  std::cout << "trained steps=" << result.trace.size() << " final_loss="
            << (result.trace.empty() ? 0.0 : result.trace.back().loss)
            << "\n";
}

void run_embed(const RunConfig& cfg, const std::string& in,
               const std::string& out, const std::string& what) {
  Corpus corpus = load_corpus(in);
  auto backend = make_backend(cfg);
  int threads = cfg.get_int("threads");

  std::vector<EmbeddingVector> rows;
  if (what == "captions") {
    std::vector<std::string> captions;
    captions.reserve(corpus.screenshots().size());
    for (const auto& s : corpus.screenshots()) captions.push_back(s.caption);
    rows = embed_texts(*backend, captions, threads);
  } else if (what == "images") {
    rows = embed_screenshots(*backend, corpus.screenshots(), threads);
  } else {
    throw DataError("embed: --what must be captions | images");
  }

  VectorFile vf;
  vf.dim = static_cast<uint32_t>(backend->dim());
  for (const auto& s : corpus.screenshots()) vf.ids.push_back(s.id);
  vf.data.reserve(rows.size() * vf.dim);
  for (const auto& r : rows) vf.data.insert(vf.data.end(), r.begin(), r.end());

  prepare_out_dir(out, cfg);
  save_vectors(out + "/embeddings.vire", vf);
  std::cout << "embedded count=" << vf.ids.size() << " dim=" << vf.dim << "\n";
}

void run_index(const RunConfig& cfg, const std::string& vectors_path,
               const std::string& query_id, const std::string& query_text,
               int k, const std::string& exclude_csv, const std::string& out) {
  VectorIndex index = VectorIndex::load(vectors_path);
  IdSet exclude;
  {
    std::istringstream ids(exclude_csv);
    std::string id;
    while (std::getline(ids, id, ',')) {
      if (!id.empty()) exclude.insert(id);
    }
  }

  if (query_id.empty() && query_text.empty()) {
    std::cout << "index ok count=" << index.size() << " dim=" << index.dim()
              << "\n";
    return;
  }
  if (!query_id.empty() && !query_text.empty()) {
    throw DataError("index: give --query-id or --query-text, not both");
  }
  EmbeddingVector query;
  if (!query_id.empty()) {
    query = index.vector_of(query_id);
  } else {
    query = make_backend(cfg)->embed_text(query_text);
  }

  std::string lines;
  for (const auto& hit : index.top_k(query, k, exclude)) {
    nlohmann::json rec;
    rec["id"] = hit.id;
    rec["score"] = hit.score;
    rec["rank"] = hit.rank;
    lines += rec.dump();
    lines += '\n';
  }
  std::cout << lines;
  if (!out.empty()) {
    prepare_out_dir(out, cfg);
    atomic_write(out + "/hits.jsonl", lines);
  }
}

void run_bench_build(const RunConfig& cfg, const std::string& spec_path,
                     const std::string& corpus_path, const std::string& out,
                     const std::string& verdicts_path) {
  Corpus corpus = load_corpus(corpus_path);
  RuleBasedJudge rule_judge;
  std::unique_ptr<FileJudge> file_judge;
  std::vector<const Judge*> judges{&rule_judge};
  if (!verdicts_path.empty()) {
    file_judge = std::make_unique<FileJudge>(read_file(verdicts_path));
    judges.push_back(file_judge.get());
  }

  std::vector<BenchmarkTask> tasks;
  for_each_line(spec_path, [&](size_t lineno, std::string_view line) {
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(spec_path + " line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    std::string name = rec.at("task").get<std::string>();
    TaskCategory category =
        category_from_string(rec.at("category").get<std::string>());
    std::vector<EvalSample> samples;
    for (const auto& q : rec.at("queries")) {
      samples.push_back({q.value("text", std::string{}),
                         q.value("screenshot_id", std::string{}),
                         q.at("gold").get<std::string>()});
    }
    std::map<std::string, std::string> candidate_texts;
    if (rec.contains("candidate_texts")) {
      candidate_texts =
          rec["candidate_texts"].get<std::map<std::string, std::string>>();
    }
    std::map<std::string, std::vector<std::string>> negatives;
    if (rec.contains("negatives")) {
      negatives = rec["negatives"]
                      .get<std::map<std::string, std::vector<std::string>>>();
    }
    // SQA: optionally derive wrong answers from the gold answer text.
    int perturb = rec.value("perturb", 0);
    if (perturb > 0) {
      for (const auto& s : samples) {
        auto it = candidate_texts.find(s.gold_id);
        if (it == candidate_texts.end()) {
          throw DataError("task '" + name + "': perturb needs answer text for '" +
                          s.gold_id + "'");
        }
        auto variants = perturb_answer(it->second, perturb);
        for (size_t i = 0; i < variants.size(); ++i) {
          std::string vid = s.gold_id + "#p" + std::to_string(i);
          candidate_texts[vid] = variants[i];
          negatives[s.gold_id].push_back(vid);
        }
      }
    }

    std::vector<std::string> pool;
    if (rec.contains("pool")) {
      pool = rec["pool"].get<std::vector<std::string>>();
    } else if (!candidate_texts.empty()) {
      for (const auto& [id, text] : candidate_texts) pool.push_back(id);
    } else {
      for (const auto& s : corpus.screenshots()) pool.push_back(s.id);
    }
    int target = rec.value("target_size", cfg.get_int("bench.target_size"));

    NegativeInjector injector;
    if (!negatives.empty()) {
      injector = [&negatives](const EvalSample& s) {
        auto it = negatives.find(s.gold_id);
        return it != negatives.end() ? it->second
                                     : std::vector<std::string>{};
      };
    }

    BenchmarkTask task = build_task_corpus(
        name, category, rec.value("domain", std::string{}), samples, pool,
        target, injector, judges, cfg.get_u64("seed"));
    task.candidate_texts = std::move(candidate_texts);
    task.validate();
    std::cout << "task=" << task.name << " corpus=" << task.corpus_ids.size()
              << (task.pool_exhausted ? " pool_exhausted" : "") << "\n";
    tasks.push_back(std::move(task));
  });
  if (tasks.empty()) throw DataError("bench-build: no tasks in " + spec_path);

  prepare_out_dir(out, cfg);
  save_tasks(out + "/tasks.jsonl", tasks);
}

void run_bench_eval(const RunConfig& cfg, const std::string& tasks_path,
                    const std::string& corpus_path, const std::string& out) {
  std::vector<BenchmarkTask> tasks = load_tasks(tasks_path);
  if (tasks.empty()) throw DataError("bench-eval: no tasks in " + tasks_path);
  Corpus corpus = load_corpus(corpus_path);
  auto backend = make_backend(cfg);
  int threads = cfg.get_int("threads");
  int k = cfg.get_int("bench.k");

  std::vector<TaskScore> scores;
  for (const auto& task : tasks) {
    scores.push_back({task.name, task.category, task.domain_tag,
                      evaluate_task(task, corpus, *backend, k, threads)});
  }
  EvalReport report = aggregate(scores);

  std::string score_lines;
  for (const auto& s : scores) {
    nlohmann::json rec;
    rec["task"] = s.task;
    rec["category"] = to_string(s.category);
    rec["domain"] = s.domain_tag;
    rec["recall"] = s.recall;
    score_lines += rec.dump();
    score_lines += '\n';
  }

  prepare_out_dir(out, cfg);
  atomic_write(out + "/scores.jsonl", score_lines);
  atomic_write(out + "/report.txt", emit_report(report, ReportFormat::kTable));
  atomic_write(out + "/report.jsonl",
               emit_report(report, ReportFormat::kRecords));
  std::cout << emit_report(report, ReportFormat::kTable);
}

void run_report(const std::string& scores_path, const std::string& format) {
  std::vector<TaskScore> scores;
  for_each_line(scores_path, [&](size_t lineno, std::string_view line) {
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(scores_path + " line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    if (!rec.contains("task")) return;  // aggregate line from records mode
    scores.push_back({rec.at("task").get<std::string>(),
                      category_from_string(rec.at("category").get<std::string>()),
                      rec.value("domain", std::string{}),
                      rec.at("recall").get<double>()});
  });
  if (scores.empty()) {
    throw DataError("report: no per-task records in " + scores_path);
  }
  std::cout << emit_report(aggregate(scores),
                           format == "records" ? ReportFormat::kRecords
                                               : ReportFormat::kTable);
}

void run_resize(const RunConfig& cfg, int64_t h, int64_t w) {
  ResizePlan plan = smart_resize({h, w}, cfg.get_int("resize.max_tokens"));
  char beta[32];
  std::snprintf(beta, sizeof(beta), "%.6f", plan.beta);
  std::cout << "out_height=" << plan.out_height
            << " out_width=" << plan.out_width << " tokens=" << plan.token_count
            << " beta=" << beta << " clamped=" << (plan.clamped ? 1 : 0)
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"screenshot-centric retrieval toolkit"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate and canonicalize a corpus");
  auto ingest_cfg = common_flags(ingest);
  auto ingest_in = std::make_shared<std::string>();
  auto ingest_out = std::make_shared<std::string>();
  ingest->add_option("--in", *ingest_in, "corpus JSONL")->required();
  ingest->add_option("--out", *ingest_out, "output directory")->required();
  ingest->callback([=] { run_ingest(ingest_cfg->resolve(), *ingest_in, *ingest_out); });

  // filter
  auto* filter = app.add_subcommand("filter", "apply collection quality rules");
  auto filter_cfg = common_flags(filter);
  auto filter_in = std::make_shared<std::string>();
  auto filter_out = std::make_shared<std::string>();
  filter->add_option("--in", *filter_in, "corpus JSONL")->required();
  filter->add_option("--out", *filter_out, "output directory")->required();
  filter_cfg->bind(filter, "--max-aspect", "filter.max_aspect",
                   "aspect-ratio ceiling");
  filter_cfg->bind(filter, "--min-caption-chars", "filter.min_caption_chars",
                   "caption length floor");
  filter_cfg->bind(filter, "--blocklist", "filter.blocklist",
                   "comma-separated keywords");
  filter->callback([=] { run_filter(filter_cfg->resolve(), *filter_in, *filter_out); });

  // mine
  auto* mine = app.add_subcommand("mine", "augment tuples with hard negatives");
  auto mine_cfg = common_flags(mine);
  auto mine_in = std::make_shared<std::string>();
  auto mine_out = std::make_shared<std::string>();
  mine->add_option("--in", *mine_in, "corpus JSONL")->required();
  mine->add_option("--out", *mine_out, "output directory")->required();
  bind_backend(mine, *mine_cfg);
  mine_cfg->bind(mine, "--q-top", "mining.q_top", "query window");
  mine_cfg->bind(mine, "--q-exclude-top", "mining.q_exclude_top", "query guard");
  mine_cfg->bind(mine, "--t-top", "mining.t_top", "target window");
  mine_cfg->bind(mine, "--t-exclude-top", "mining.t_exclude_top", "target guard");
  mine_cfg->bind(mine, "--visual-top", "mining.visual_top", "visual window");
  mine_cfg->bind(mine, "--visual-exclude-top", "mining.visual_exclude_top",
                 "visual guard");
  mine_cfg->bind(mine, "--sample-count", "mining.sample_count",
                 "negatives per sample");
  mine_cfg->bind(mine, "--pair-top", "mining.pair_top", "pair window");
  mine->callback([=] { run_mine(mine_cfg->resolve(), *mine_in, *mine_out); });

  // train
  auto* train_cmd = app.add_subcommand("train", "two-stage contrastive training");
  auto train_cfg = common_flags(train_cmd);
  auto train_in = std::make_shared<std::string>();
  auto train_out = std::make_shared<std::string>();
  train_cmd->add_option("--in", *train_in, "corpus JSONL")->required();
  train_cmd->add_option("--out", *train_out, "output directory")->required();
  train_cfg->bind(train_cmd, "--dim", "dim", "feature extractor dimension");
  train_cfg->bind(train_cmd, "--lr", "train.lr", "initial learning rate");
  train_cfg->bind(train_cmd, "--batch1", "train.batch_size_stage1", "stage-1 batch");
  train_cfg->bind(train_cmd, "--batch2", "train.batch_size_stage2", "stage-2 batch");
  train_cfg->bind(train_cmd, "--epochs", "train.epochs_per_stage", "epochs per stage");
  train_cfg->bind(train_cmd, "--d-emb", "train.d_emb", "encoder output dim");
  train_cfg->bind(train_cmd, "--tau", "train.tau", "temperature");
  train_cfg->bind(train_cmd, "--init-scale", "train.init_scale", "init half-range");
  train_cfg->bind(train_cmd, "--negative-mode", "train.negative_mode",
                  "shared | per_query");
  train_cmd->callback([=] { run_train(train_cfg->resolve(), *train_in, *train_out); });

  // embed
  auto* embed = app.add_subcommand("embed", "embed corpus captions or images");
  auto embed_cfg = common_flags(embed);
  auto embed_in = std::make_shared<std::string>();
  auto embed_out = std::make_shared<std::string>();
  auto embed_what = std::make_shared<std::string>("captions");
  embed->add_option("--in", *embed_in, "corpus JSONL")->required();
  embed->add_option("--out", *embed_out, "output directory")->required();
  embed->add_option("--what", *embed_what, "captions | images")
      ->check(CLI::IsMember({"captions", "images"}));
  bind_backend(embed, *embed_cfg);
  embed->callback(
      [=] { run_embed(embed_cfg->resolve(), *embed_in, *embed_out, *embed_what); });

  // index
  auto* index_cmd = app.add_subcommand("index", "validate and query an embedding file");
  auto index_cfg = common_flags(index_cmd);
  auto index_vectors = std::make_shared<std::string>();
  auto index_query_id = std::make_shared<std::string>();
  auto index_query_text = std::make_shared<std::string>();
  auto index_exclude = std::make_shared<std::string>();
  auto index_out = std::make_shared<std::string>();
  auto index_k = std::make_shared<int>(5);
  index_cmd->add_option("--vectors", *index_vectors, "embedding file")->required();
  index_cmd->add_option("--query-id", *index_query_id, "stored id to query by");
  index_cmd->add_option("--query-text", *index_query_text, "text to embed and query");
  index_cmd->add_option("--k", *index_k, "hits to return");
  index_cmd->add_option("--exclude", *index_exclude, "comma-separated ids to skip");
  index_cmd->add_option("--out", *index_out, "optional output directory");
  bind_backend(index_cmd, *index_cfg);
  index_cmd->callback([=] {
    run_index(index_cfg->resolve(), *index_vectors, *index_query_id,
              *index_query_text, *index_k, *index_exclude, *index_out);
  });

  // bench-build
  auto* bbuild = app.add_subcommand("bench-build", "assemble task corpora");
  auto bbuild_cfg = common_flags(bbuild);
  auto bbuild_spec = std::make_shared<std::string>();
  auto bbuild_corpus = std::make_shared<std::string>();
  auto bbuild_out = std::make_shared<std::string>();
  auto bbuild_verdicts = std::make_shared<std::string>();
  bbuild->add_option("--spec", *bbuild_spec, "task spec JSONL")->required();
  bbuild->add_option("--corpus", *bbuild_corpus, "corpus JSONL")->required();
  bbuild->add_option("--out", *bbuild_out, "output directory")->required();
  bbuild->add_option("--verdicts", *bbuild_verdicts, "reviewed verdict JSONL");
  bbuild_cfg->bind(bbuild, "--target-size", "bench.target_size",
                   "candidates per task corpus");
  bbuild->callback([=] {
    run_bench_build(bbuild_cfg->resolve(), *bbuild_spec, *bbuild_corpus,
                    *bbuild_out, *bbuild_verdicts);
  });

  // bench-eval
  auto* beval = app.add_subcommand("bench-eval", "score tasks and aggregate");
  auto beval_cfg = common_flags(beval);
  auto beval_tasks = std::make_shared<std::string>();
  auto beval_corpus = std::make_shared<std::string>();
  auto beval_out = std::make_shared<std::string>();
  beval->add_option("--tasks", *beval_tasks, "task JSONL")->required();
  beval->add_option("--corpus", *beval_corpus, "corpus JSONL")->required();
  beval->add_option("--out", *beval_out, "output directory")->required();
  bind_backend(beval, *beval_cfg);
  beval_cfg->bind(beval, "--k", "bench.k", "recall cutoff");
  beval->callback([=] {
    run_bench_eval(beval_cfg->resolve(), *beval_tasks, *beval_corpus, *beval_out);
  });

  // report
  auto* report = app.add_subcommand("report", "re-aggregate saved task scores");
  auto report_scores = std::make_shared<std::string>();
  auto report_format = std::make_shared<std::string>("table");
  report->add_option("--scores", *report_scores, "per-task score JSONL")->required();
  report->add_option("--format", *report_format, "table | records")
      ->check(CLI::IsMember({"table", "records"}));
  report->callback([=] { run_report(*report_scores, *report_format); });

  // resize
  auto* resize = app.add_subcommand("resize", "patch-budget image resize plan");
  resize->set_help_flag("--help", "print help");  // frees --h for height
  auto resize_cfg = common_flags(resize);
  auto resize_h = std::make_shared<int64_t>(0);
  auto resize_w = std::make_shared<int64_t>(0);
  resize->add_option("--h", *resize_h, "input height in pixels")->required();
  resize->add_option("--w", *resize_w, "input width in pixels")->required();
  resize_cfg->bind(resize, "--max-tokens", "resize.max_tokens", "patch budget");
  resize->callback([=] { run_resize(resize_cfg->resolve(), *resize_h, *resize_w); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
