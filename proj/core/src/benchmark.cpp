#include "visret/benchmark.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "visret/errors.hpp"
#include "visret/io.hpp"
#include "visret/rng.hpp"

namespace visret {

std::string to_string(TaskCategory c) {
  switch (c) {
    case TaskCategory::kSR: return "SR";
    case TaskCategory::kCSR: return "CSR";
    case TaskCategory::kSQA: return "SQA";
    case TaskCategory::kOVC: return "OVC";
  }
  return "unknown";
}

TaskCategory category_from_string(const std::string& s) {
  if (s == "SR") return TaskCategory::kSR;
  if (s == "CSR") return TaskCategory::kCSR;
  if (s == "SQA") return TaskCategory::kSQA;
  if (s == "OVC") return TaskCategory::kOVC;
  throw DataError("unknown task category '" + s + "'");
}

void BenchmarkTask::validate() const {
  if (name.empty()) throw DataError("task: empty name");
  std::set<std::string> ids(corpus_ids.begin(), corpus_ids.end());
  if (ids.size() != corpus_ids.size()) {
    throw DataError("task '" + name + "': duplicate corpus ids");
  }
  for (const auto& q : queries) {
    bool need_text = category != TaskCategory::kOVC;
    bool need_shot = category != TaskCategory::kSR;
    if (need_text && q.query_text.empty()) {
      throw DataError("task '" + name + "': sample missing query text");
    }
    if (!need_text && !q.query_text.empty()) {
      throw DataError("task '" + name + "': OVC sample carries query text");
    }
    if (need_shot && q.screenshot_id.empty()) {
      throw DataError("task '" + name + "': sample missing screenshot id");
    }
    if (!need_shot && !q.screenshot_id.empty()) {
      throw DataError("task '" + name + "': SR sample carries screenshot id");
    }
    if (ids.count(q.gold_id) == 0) {
      throw DataError("task '" + name + "': gold '" + q.gold_id +
                      "' missing from corpus");
    }
  }
}

QualityVerdict AcceptAllJudge::assess(const EvalSample&,
                                      const std::string&) const {
  return {true, true, true, "accept_all"};
}

QualityVerdict RuleBasedJudge::assess(const EvalSample& sample,
                                      const std::string& candidate) const {
  QualityVerdict v;
  v.judge_id = "rule_based";
  v.clarity = !candidate.empty();
  v.reasonability = candidate != sample.query_text;
  v.correctness = candidate != sample.gold_id;
  return v;
}

FileJudge::FileJudge(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("verdict file line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    QualityVerdict v;
    v.judge_id = "file";
    v.clarity = rec.value("clarity", false);
    v.reasonability = rec.value("reasonability", false);
    v.correctness = rec.value("correctness", false);
    verdicts_[{rec.value("gold", std::string{}),
               rec.value("candidate", std::string{})}] = v;
  }
}

QualityVerdict FileJudge::assess(const EvalSample& sample,
                                 const std::string& candidate) const {
  auto it = verdicts_.find({sample.gold_id, candidate});
  if (it != verdicts_.end()) return it->second;
  return {true, true, true, "file"};  // unreviewed pairs pass
}

BenchmarkTask build_task_corpus(const std::string& name, TaskCategory category,
                                const std::string& domain_tag,
                                const std::vector<EvalSample>& samples,
                                const std::vector<std::string>& pool_ids,
                                int target_size,
                                const NegativeInjector& injector,
                                const std::vector<const Judge*>& judges,
                                uint64_t seed) {
  BenchmarkTask task;
  task.name = name;
  task.category = category;
  task.domain_tag = domain_tag;
  task.queries = samples;

  std::set<std::string> pool(pool_ids.begin(), pool_ids.end());
  std::set<std::string> present;
  for (const auto& s : samples) {
    if (pool.count(s.gold_id) == 0) {
      throw DataError("task '" + name + "': gold '" + s.gold_id +
                      "' missing from pool");
    }
    if (present.insert(s.gold_id).second) {
      task.corpus_ids.push_back(s.gold_id);
    }
  }
  if (target_size < static_cast<int>(task.corpus_ids.size())) {
    throw DataError("task '" + name + "': target_size " +
                    std::to_string(target_size) + " below gold count " +
                    std::to_string(task.corpus_ids.size()));
  }

  // Seeded fill up to target_size, sampled from the pool in its given order.
  std::vector<std::string> fill_candidates;
  for (const auto& id : pool_ids) {
    if (present.count(id) == 0) fill_candidates.push_back(id);
  }
  size_t want = static_cast<size_t>(target_size) - task.corpus_ids.size();
  if (want > fill_candidates.size()) {
    want = fill_candidates.size();
    task.pool_exhausted = true;
  }
  SplitMix64 rng = derive_rng(seed, "fill/" + name);
  for (auto& id :
       sample_without_replacement(std::move(fill_candidates), want, rng)) {
    present.insert(id);
    task.corpus_ids.push_back(std::move(id));
  }

  // Injected hard negatives ride on top; each needs a unanimous verdict.
  if (injector) {
    for (const auto& s : samples) {
      for (const auto& candidate : injector(s)) {
        if (present.count(candidate)) continue;
        bool ok = true;
        for (const Judge* judge : judges) {
          if (!judge->assess(s, candidate).passes()) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        present.insert(candidate);
        task.corpus_ids.push_back(candidate);
      }
    }
  }
  return task;
}

double evaluate_task(const BenchmarkTask& task, const Corpus& corpus,
                     EmbedderBackend& backend, int k, int threads) {
  task.validate();
  if (task.queries.empty()) {
    throw DataError("task '" + task.name + "': no queries to evaluate");
  }
  if (k < 1) throw std::invalid_argument("evaluate_task: k must be >= 1");

  auto shot_of = [&](const std::string& id) -> const Screenshot& {
    const Screenshot* s = corpus.find(id);
    if (s == nullptr) {
      throw DataError("task '" + task.name + "': screenshot '" + id +
                      "' not in corpus");
    }
    return *s;
  };

  // Candidate matrix: text candidates embed as text, the rest as images.
  std::vector<EmbeddingVector> rows(task.corpus_ids.size());
  parallel_for(task.corpus_ids.size(), threads, [&](size_t i) {
    const std::string& id = task.corpus_ids[i];
    auto it = task.candidate_texts.find(id);
    rows[i] = it != task.candidate_texts.end()
                  ? backend.embed_text(it->second)
                  : backend.embed_screenshot(shot_of(id));
  });
  std::vector<float> matrix;
  matrix.reserve(rows.size() * static_cast<size_t>(backend.dim()));
  for (const auto& r : rows) matrix.insert(matrix.end(), r.begin(), r.end());
  VectorIndex index(task.corpus_ids, std::move(matrix),
                    static_cast<uint32_t>(backend.dim()));

  std::vector<EmbeddingVector> queries(task.queries.size());
  parallel_for(task.queries.size(), threads, [&](size_t i) {
    const EvalSample& s = task.queries[i];
    switch (task.category) {
      case TaskCategory::kSR:
        queries[i] = backend.embed_text(s.query_text);
        break;
      case TaskCategory::kCSR:
      case TaskCategory::kSQA:
        queries[i] = backend.embed_composed(
            shot_of(s.screenshot_id),
            {s.screenshot_id, s.query_text, to_string(task.category)});
        break;
      case TaskCategory::kOVC:
        queries[i] = backend.embed_screenshot(shot_of(s.screenshot_id));
        break;
    }
  });

  auto hits = index.batch_top_k(queries, k, {}, threads);
  size_t correct = 0;
  for (size_t i = 0; i < hits.size(); ++i) {
    for (const auto& hit : hits[i]) {
      if (hit.id == task.queries[i].gold_id) {
        ++correct;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(task.queries.size());
}

EvalReport aggregate(const std::vector<TaskScore>& scores) {
  if (scores.empty()) {
    throw std::invalid_argument("aggregate: no task scores");
  }
  EvalReport report;
  report.tasks = scores;
  std::map<TaskCategory, std::pair<double, int>> cat;
  std::map<std::string, std::pair<double, int>> dom;
  double total = 0.0;
  for (const auto& s : scores) {
    cat[s.category].first += s.recall;
    cat[s.category].second += 1;
    dom[s.domain_tag].first += s.recall;
    dom[s.domain_tag].second += 1;
    total += s.recall;
  }
  for (const auto& [c, acc] : cat) {
    report.per_category[c] = acc.first / acc.second;
  }
  for (const auto& [d, acc] : dom) {
    report.per_domain[d] = acc.first / acc.second;
  }
  report.overall = total / static_cast<double>(scores.size());
  return report;
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
  static const TaskCategory kOrder[] = {TaskCategory::kSR, TaskCategory::kCSR,
                                        TaskCategory::kSQA, TaskCategory::kOVC};
  if (format == ReportFormat::kTable) {
    std::string out = "SR      CSR     SQA     OVC     Overall\n";
    if (report.tasks.empty()) return out;
    for (TaskCategory c : kOrder) {
      auto it = report.per_category.find(c);
      std::string cell = it != report.per_category.end() ? fixed2(it->second)
                                                         : std::string("-");
      cell.resize(8, ' ');
      out += cell;
    }
    out += fixed2(report.overall);
    out += '\n';
    return out;
  }

  std::string out;
  for (const auto& t : report.tasks) {
    nlohmann::json rec;
    rec["task"] = t.task;
    rec["category"] = to_string(t.category);
    rec["domain"] = t.domain_tag;
    rec["recall"] = t.recall;
    out += rec.dump();
    out += '\n';
  }
  for (TaskCategory c : kOrder) {
    auto it = report.per_category.find(c);
    if (it == report.per_category.end()) continue;
    nlohmann::json rec;
    rec["category"] = to_string(c);
    rec["mean"] = it->second;
    out += rec.dump();
    out += '\n';
  }
  for (const auto& [d, mean] : report.per_domain) {
    nlohmann::json rec;
    rec["domain"] = d;
    rec["mean"] = mean;
    out += rec.dump();
    out += '\n';
  }
  if (!report.tasks.empty()) {
    nlohmann::json rec;
    rec["overall"] = report.overall;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::string> perturb_answer(const std::string& answer, int count) {
  if (count < 0) throw std::invalid_argument("perturb_answer: negative count");
  std::vector<std::string> tokens;
  {
    std::istringstream in(answer);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
  }
  auto join = [](const std::vector<std::string>& ts) {
    std::string s;
    for (size_t i = 0; i < ts.size(); ++i) {
      if (i) s += ' ';
      s += ts[i];
    }
    return s;
  };

  std::vector<std::string> out;
  std::set<std::string> seen{answer};
  auto add = [&](std::string v) {
    if (static_cast<int>(out.size()) >= count) return;
    while (seen.count(v)) v += " (alt)";
    seen.insert(v);
    out.push_back(std::move(v));
  };

  add("not " + answer);
  if (tokens.size() > 1) {
    std::vector<std::string> rev(tokens.rbegin(), tokens.rend());
    add(join(rev));
  }
  for (size_t drop = 0;
       static_cast<int>(out.size()) < count && drop < tokens.size(); ++drop) {
    std::vector<std::string> trimmed;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (i != drop) trimmed.push_back(tokens[i]);
    }
    add(join(trimmed));
  }
  int counter = 2;
  while (static_cast<int>(out.size()) < count) {
    add(answer + " x" + std::to_string(counter++));
  }
  return out;
}

std::string serialize_tasks(const std::vector<BenchmarkTask>& tasks) {
  std::string out;
  for (const auto& t : tasks) {
    nlohmann::json rec;
    rec["task"] = t.name;
    rec["category"] = to_string(t.category);
    rec["domain"] = t.domain_tag;
    auto queries = nlohmann::json::array();
    for (const auto& q : t.queries) {
      queries.push_back({{"text", q.query_text},
                         {"screenshot_id", q.screenshot_id},
                         {"gold", q.gold_id}});
    }
    rec["queries"] = std::move(queries);
    rec["corpus_ids"] = t.corpus_ids;
    if (!t.candidate_texts.empty()) {
      rec["candidate_texts"] = t.candidate_texts;
    }
    if (t.pool_exhausted) rec["pool_exhausted"] = true;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<BenchmarkTask> parse_tasks(const std::string& text) {
  std::vector<BenchmarkTask> tasks;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("task file line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    try {
      BenchmarkTask t;
      t.name = rec.at("task").get<std::string>();
      t.category = category_from_string(rec.at("category").get<std::string>());
      t.domain_tag = rec.value("domain", std::string{});
      for (const auto& q : rec.at("queries")) {
        t.queries.push_back({q.value("text", std::string{}),
                             q.value("screenshot_id", std::string{}),
                             q.at("gold").get<std::string>()});
      }
      t.corpus_ids = rec.at("corpus_ids").get<std::vector<std::string>>();
      if (rec.contains("candidate_texts")) {
        t.candidate_texts =
            rec["candidate_texts"].get<std::map<std::string, std::string>>();
      }
      t.pool_exhausted = rec.value("pool_exhausted", false);
      t.validate();
      tasks.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("task file line " + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  return tasks;
}

void save_tasks(const std::string& path,
                const std::vector<BenchmarkTask>& tasks) {
  atomic_write(path, serialize_tasks(tasks));
}

std::vector<BenchmarkTask> load_tasks(const std::string& path) {
  return parse_tasks(read_file(path));
}

}  // namespace visret
