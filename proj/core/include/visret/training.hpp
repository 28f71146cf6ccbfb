#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "visret/corpus.hpp"

namespace visret {

// Toy dual encoder: one linear map per tower followed by row-wise unit
// normalization. Small enough that every gradient stays hand-derivable.
struct DualEncoderParams {
  Eigen::MatrixXd w_query;   // d_in x d_emb
  Eigen::MatrixXd w_target;  // d_in x d_emb
  double temperature = 0.05;

  void validate() const;  // finite entries, tau > 0, d_emb >= 2
};

struct TrainingBatch {
  Eigen::MatrixXd queries;  // |B| x d_in
  Eigen::MatrixXd targets;  // |B| x d_in, row i positive for query i
  std::optional<Eigen::MatrixXd> hard_negatives;  // |B| x d_in, one per query
};

// Whether every hard negative joins every query's denominator, or only its
// own query's.
enum class NegativeMode { kShared, kPerQuery };

struct TrainerConfig {
  double initial_lr = 5e-6;  // decays linearly to zero within each stage
  int batch_size_stage1 = 8;
  int batch_size_stage2 = 8;
  int epochs_per_stage = 1;
  uint64_t seed = 0;
  int d_emb = 16;
  double temperature = 0.05;  // fixed, not learned
  double init_scale = 0.1;
  NegativeMode negative_mode = NegativeMode::kShared;

  void validate() const;
};

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd similarity;  // raw cosine logits, |B| x (|B| + extras)
};

// InfoNCE over row-aligned unit-norm embeddings: row i of V is the positive
// for row i of U, every other row (plus every extras row) is a negative.
// Stabilized with row-max subtraction; always >= 0.
LossResult contrastive_loss(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                            double tau,
                            const Eigen::MatrixXd* extras = nullptr);

// Bidirectional pretraining loss: contrastive in both directions.
double stage1_loss(const Eigen::MatrixXd& E_s, const Eigen::MatrixXd& E_c,
                   double tau);

// Single-direction fine-tuning loss with optional hard negatives.
double stage2_loss(const Eigen::MatrixXd& E_q, const Eigen::MatrixXd& E_s,
                   double tau, const Eigen::MatrixXd* hard_negatives = nullptr,
                   NegativeMode mode = NegativeMode::kShared);

struct Gradients {
  Eigen::MatrixXd w_query;
  Eigen::MatrixXd w_target;
  double loss = 0.0;
};

// Analytic d(loss)/d(W) through projection + row normalization for the
// selected stage (1 or 2). Stage 1 ignores hard negatives.
Gradients loss_gradients(const TrainingBatch& batch,
                         const DualEncoderParams& params, int stage,
                         NegativeMode mode = NegativeMode::kShared);

// Maps corpus records to the trainer's d_in-dimensional input features.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> text_features(const std::string& text) const = 0;
  virtual std::vector<double> screenshot_features(
      const Screenshot& shot) const = 0;
  // Screenshot-conditioned query; default sums and rescales the two.
  virtual std::vector<double> composed_features(const Screenshot& source,
                                                const std::string& query) const;
};

// Deterministic pseudo-random features keyed by content (captions/queries by
// text, screenshots by image_ref) — the offline stand-in for a real encoder.
class HashFeatureExtractor : public FeatureExtractor {
 public:
  HashFeatureExtractor(uint64_t seed, int dim);
  int dim() const override { return dim_; }
  std::vector<double> text_features(const std::string& text) const override;
  std::vector<double> screenshot_features(
      const Screenshot& shot) const override;

 private:
  uint64_t seed_;
  int dim_;
};

struct StepRecord {
  int stage = 0;
  int step = 0;  // 0-based within its stage
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainingResult {
  DualEncoderParams params;
  std::vector<StepRecord> trace;
};

// Two-stage run: stage 1 on (screenshot, caption) pairs, stage 2 on q2s plus
// sq2s samples interleaved by seeded shuffle. Plain SGD, per-stage linear
// decay, deterministic for a fixed (corpus, extractor, cfg).
TrainingResult train(const Corpus& corpus, const FeatureExtractor& features,
                     const TrainerConfig& cfg);

// One JSON record per step: {"stage":..,"step":..,"lr":..,"loss":..}.
std::string serialize_trace(const std::vector<StepRecord>& trace);

// Params round-trip through the embedding file format: rows "wq/<i>",
// "wt/<i>" (length d_emb), then a "tau" row. Storage is f32, so a round
// trip quantizes.
void save_params(const std::string& path, const DualEncoderParams& params);
DualEncoderParams load_params(const std::string& path);

}  // namespace visret
