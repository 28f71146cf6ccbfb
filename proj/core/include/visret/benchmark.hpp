#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "visret/corpus.hpp"
#include "visret/embedding.hpp"
#include "visret/index.hpp"

namespace visret {

// SR: text query -> screenshot.  CSR: screenshot+text -> screenshot.
// SQA: screenshot+question -> answer text.  OVC: screenshot -> class label.
enum class TaskCategory { kSR, kCSR, kSQA, kOVC };
inline constexpr int kTaskCategoryCount = 4;

std::string to_string(TaskCategory c);
TaskCategory category_from_string(const std::string& s);

struct EvalSample {
  std::string query_text;     // empty for OVC
  std::string screenshot_id;  // empty for SR
  std::string gold_id;
};

struct BenchmarkTask {
  std::string name;
  TaskCategory category = TaskCategory::kSR;
  std::string domain_tag;  // e.g. "Prod", "News", "Wiki"
  std::vector<EvalSample> queries;
  std::vector<std::string> corpus_ids;  // unique, contains every gold
  // Candidate content for text-candidate tasks (SQA answers, OVC labels);
  // ids absent here resolve to corpus screenshots.
  std::map<std::string, std::string> candidate_texts;
  bool pool_exhausted = false;  // fill ran out before target_size

  void validate() const;  // payload shapes, uniqueness, gold membership
};

struct QualityVerdict {
  bool clarity = false;
  bool reasonability = false;
  bool correctness = false;
  std::string judge_id;

  bool passes() const { return clarity && reasonability && correctness; }
};

// Quality-control committee member; candidates survive only on a unanimous
// all-true verdict from every judge.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual QualityVerdict assess(const EvalSample& sample,
                                const std::string& candidate) const = 0;
};

class AcceptAllJudge : public Judge {
 public:
  QualityVerdict assess(const EvalSample& sample,
                        const std::string& candidate) const override;
};

// Deterministic three-criteria gate: clarity = candidate nonempty,
// reasonability = candidate is not the query text verbatim,
// correctness = candidate is not the gold id.
class RuleBasedJudge : public Judge {
 public:
  QualityVerdict assess(const EvalSample& sample,
                        const std::string& candidate) const override;
};

// Verdicts reviewed offline: lines of
// {"gold": ..., "candidate": ..., "clarity": b, "reasonability": b,
//  "correctness": b}; pairs without an entry pass.
class FileJudge : public Judge {
 public:
  explicit FileJudge(const std::string& jsonl);
  QualityVerdict assess(const EvalSample& sample,
                        const std::string& candidate) const override;

 private:
  std::map<std::pair<std::string, std::string>, QualityVerdict> verdicts_;
};

// Produces per-sample hard-negative candidate ids (or texts for SQA/OVC).
using NegativeInjector =
    std::function<std::vector<std::string>(const EvalSample&)>;

// Assembles a task corpus: all golds, a seeded random fill from `pool_ids`
// up to target_size, then per-sample injected negatives that every judge
// passes (injection may grow the corpus past target_size, mirroring
// negatives being added on top of the sampled candidates).
BenchmarkTask build_task_corpus(const std::string& name, TaskCategory category,
                                const std::string& domain_tag,
                                const std::vector<EvalSample>& samples,
                                const std::vector<std::string>& pool_ids,
                                int target_size,
                                const NegativeInjector& injector,
                                const std::vector<const Judge*>& judges,
                                uint64_t seed);

// Recall@k in percent over the task corpus, no exclusions. Candidates with
// candidate_texts entries embed as text, the rest as corpus screenshots;
// queries embed per category (SR text, CSR/SQA composed, OVC screenshot).
double evaluate_task(const BenchmarkTask& task, const Corpus& corpus,
                     EmbedderBackend& backend, int k, int threads = 1);

struct TaskScore {
  std::string task;
  TaskCategory category = TaskCategory::kSR;
  std::string domain_tag;
  double recall = 0.0;  // percent
};

struct EvalReport {
  std::vector<TaskScore> tasks;  // input order
  std::map<TaskCategory, double> per_category;  // unweighted task mean
  std::map<std::string, double> per_domain;
  double overall = 0.0;  // unweighted mean over all tasks
};

EvalReport aggregate(const std::vector<TaskScore>& scores);

enum class ReportFormat { kTable, kRecords };
std::string emit_report(const EvalReport& report, ReportFormat format);

// Rule-based stand-in for LLM answer modification: deterministic distinct
// wrong-answer variants (negation, token reversal, token drops).
std::vector<std::string> perturb_answer(const std::string& answer, int count);

// Task file round-trip, one JSON record per line.
std::string serialize_tasks(const std::vector<BenchmarkTask>& tasks);
std::vector<BenchmarkTask> parse_tasks(const std::string& text);
void save_tasks(const std::string& path, const std::vector<BenchmarkTask>& tasks);
std::vector<BenchmarkTask> load_tasks(const std::string& path);

}  // namespace visret
