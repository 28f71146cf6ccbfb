#include "visret/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "visret/embedding.hpp"
#include "visret/errors.hpp"
#include "visret/rng.hpp"
#include "visret/vector_file.hpp"

namespace visret {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* layer) {
  if (!m.allFinite()) {
    throw NumericError(std::string("training: non-finite values in ") + layer);
  }
}

void require_unit_rows(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).norm() - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string(what) + " row " +
                                  std::to_string(i) + " is not unit-norm");
    }
  }
}

// Mean softmax cross-entropy with the positive for row i at column i.
// Row-max subtraction keeps every exp() in range; each row term is >= 0 in
// exact f64 (the max term contributes exp(0)=1 to the sum).
double softmax_ce(const Eigen::MatrixXd& logits, Eigen::MatrixXd* probs) {
  const Eigen::Index b = logits.rows();
  if (probs != nullptr) probs->resize(b, logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    double m = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      sum += std::exp(logits(i, j) - m);
    }
    total += m + std::log(sum) - logits(i, i);
    if (probs != nullptr) {
      for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        (*probs)(i, j) = std::exp(logits(i, j) - m) / sum;
      }
    }
  }
  return total / static_cast<double>(b);
}

void check_loss_inputs(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                       double tau, const Eigen::MatrixXd* extras) {
  if (U.rows() < 1 || U.rows() != V.rows() || U.cols() != V.cols()) {
    throw std::invalid_argument("contrastive_loss: U/V shape mismatch");
  }
  if (extras != nullptr && extras->cols() != U.cols()) {
    throw std::invalid_argument("contrastive_loss: extras dim mismatch");
  }
  if (tau <= 0.0) {
    throw std::invalid_argument("contrastive_loss: tau must be positive");
  }
  require_finite(U, "queries");
  require_finite(V, "targets");
  if (extras != nullptr) require_finite(*extras, "extra negatives");
  require_unit_rows(U, "contrastive_loss: query");
  require_unit_rows(V, "contrastive_loss: target");
  if (extras != nullptr) {
    require_unit_rows(*extras, "contrastive_loss: extra negative");
  }
}

}  // namespace

void DualEncoderParams::validate() const {
  if (w_query.rows() != w_target.rows() ||
      w_query.cols() != w_target.cols()) {
    throw std::invalid_argument("params: tower shapes differ");
  }
  if (w_query.cols() < 2) {
    throw std::invalid_argument("params: d_emb must be >= 2");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("params: temperature must be positive");
  }
  require_finite(w_query, "w_query");
  require_finite(w_target, "w_target");
}

void TrainerConfig::validate() const {
  if (!(initial_lr > 0.0)) {
    throw std::invalid_argument("trainer: initial_lr must be positive");
  }
  if (batch_size_stage1 < 1 || batch_size_stage2 < 1) {
    throw std::invalid_argument("trainer: batch sizes must be >= 1");
  }
  if (epochs_per_stage < 0) {
    throw std::invalid_argument("trainer: epochs_per_stage must be >= 0");
  }
  if (d_emb < 2) {
    throw std::invalid_argument("trainer: d_emb must be >= 2");
  }
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("trainer: temperature must be positive");
  }
  if (!(init_scale > 0.0)) {
    throw std::invalid_argument("trainer: init_scale must be positive");
  }
}

LossResult contrastive_loss(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                            double tau, const Eigen::MatrixXd* extras) {
  check_loss_inputs(U, V, tau, extras);
  LossResult out;
  Eigen::Index m = V.rows() + (extras != nullptr ? extras->rows() : 0);
  out.similarity.resize(U.rows(), m);
  out.similarity.leftCols(V.rows()) = U * V.transpose();
  if (extras != nullptr && extras->rows() > 0) {
    out.similarity.rightCols(extras->rows()) = U * extras->transpose();
  }
  out.loss = softmax_ce(out.similarity / tau, nullptr);
  return out;
}

double stage1_loss(const Eigen::MatrixXd& E_s, const Eigen::MatrixXd& E_c,
                   double tau) {
  return contrastive_loss(E_s, E_c, tau).loss +
         contrastive_loss(E_c, E_s, tau).loss;
}

double stage2_loss(const Eigen::MatrixXd& E_q, const Eigen::MatrixXd& E_s,
                   double tau, const Eigen::MatrixXd* hard_negatives,
                   NegativeMode mode) {
  if (hard_negatives == nullptr || mode == NegativeMode::kShared) {
    return contrastive_loss(E_q, E_s, tau, hard_negatives).loss;
  }
  // Per-query: row i sees the batch targets plus only its own negative.
  check_loss_inputs(E_q, E_s, tau, hard_negatives);
  if (hard_negatives->rows() != E_q.rows()) {
    throw std::invalid_argument("stage2_loss: need one negative per query");
  }
  const Eigen::Index b = E_q.rows();
  Eigen::MatrixXd base = E_q * E_s.transpose() / tau;
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    double extra = E_q.row(i).dot(hard_negatives->row(i)) / tau;
    double m = std::max(base.row(i).maxCoeff(), extra);
    double sum = std::exp(extra - m);
    for (Eigen::Index j = 0; j < b; ++j) sum += std::exp(base(i, j) - m);
    total += m + std::log(sum) - base(i, i);
  }
  return total / static_cast<double>(b);
}

namespace {

struct NormalizedRows {
  Eigen::MatrixXd unit;         // row-normalized
  Eigen::VectorXd norms;        // pre-normalization row norms
};

NormalizedRows normalize_rows(const Eigen::MatrixXd& z, const char* layer) {
  require_finite(z, layer);
  NormalizedRows out;
  out.unit = z;
  out.norms.resize(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double n = z.row(i).norm();
    if (n <= 0.0 || !std::isfinite(n)) {
      throw NumericError(std::string("training: zero/non-finite row norm in ") +
                         layer);
    }
    out.norms(i) = n;
    out.unit.row(i) /= n;
  }
  return out;
}

// d(loss)/dZ given d(loss)/dU for U = Z with unit rows:
// dZ_i = (dU_i - (dU_i . u_i) u_i) / ||z_i||.
Eigen::MatrixXd normalization_backward(const Eigen::MatrixXd& d_unit,
                                       const NormalizedRows& fwd) {
  Eigen::MatrixXd dz(d_unit.rows(), d_unit.cols());
  for (Eigen::Index i = 0; i < d_unit.rows(); ++i) {
    double proj = d_unit.row(i).dot(fwd.unit.row(i));
    dz.row(i) = (d_unit.row(i) - proj * fwd.unit.row(i)) / fwd.norms(i);
  }
  return dz;
}

}  // namespace

Gradients loss_gradients(const TrainingBatch& batch,
                         const DualEncoderParams& params, int stage,
                         NegativeMode mode) {
  params.validate();
  if (stage != 1 && stage != 2) {
    throw std::invalid_argument("loss_gradients: stage must be 1 or 2");
  }
  const Eigen::Index b = batch.queries.rows();
  if (b < 1 || batch.targets.rows() != b) {
    throw std::invalid_argument("loss_gradients: query/target row mismatch");
  }
  if (batch.queries.cols() != params.w_query.rows() ||
      batch.targets.cols() != params.w_query.rows()) {
    throw std::invalid_argument("loss_gradients: input dim mismatch");
  }
  const bool extras = stage == 2 && batch.hard_negatives.has_value();
  if (extras && (batch.hard_negatives->rows() != b ||
                 batch.hard_negatives->cols() != params.w_query.rows())) {
    throw std::invalid_argument("loss_gradients: hard negative shape mismatch");
  }
  require_finite(batch.queries, "query inputs");
  require_finite(batch.targets, "target inputs");
  if (extras) require_finite(*batch.hard_negatives, "negative inputs");

  const double tau = params.temperature;
  NormalizedRows uq =
      normalize_rows(batch.queries * params.w_query, "query projection");
  NormalizedRows vt =
      normalize_rows(batch.targets * params.w_target, "target projection");
  NormalizedRows nn;
  if (extras) {
    nn = normalize_rows(*batch.hard_negatives * params.w_target,
                        "negative projection");
  }

  const Eigen::MatrixXd& u = uq.unit;
  const Eigen::MatrixXd& v = vt.unit;
  Eigen::MatrixXd du = Eigen::MatrixXd::Zero(b, u.cols());
  Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(b, v.cols());
  Eigen::MatrixXd dn;
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);

  if (stage == 1) {
    // Both directions of Eq. 1 share the same logit matrix transposed.
    Eigen::MatrixXd p_fwd;
    loss += softmax_ce(u * v.transpose() / tau, &p_fwd);
    Eigen::MatrixXd g = p_fwd;
    g.diagonal().array() -= 1.0;
    g *= inv_b;
    du += g * v / tau;
    dv += g.transpose() * u / tau;

    Eigen::MatrixXd p_bwd;
    loss += softmax_ce(v * u.transpose() / tau, &p_bwd);
    Eigen::MatrixXd g2 = p_bwd;
    g2.diagonal().array() -= 1.0;
    g2 *= inv_b;
    dv += g2 * u / tau;
    du += g2.transpose() * v / tau;
  } else if (!extras || mode == NegativeMode::kShared) {
    Eigen::Index m = b + (extras ? nn.unit.rows() : 0);
    Eigen::MatrixXd logits(b, m);
    logits.leftCols(b) = u * v.transpose() / tau;
    if (extras) logits.rightCols(b) = u * nn.unit.transpose() / tau;
    Eigen::MatrixXd p;
    loss = softmax_ce(logits, &p);
    Eigen::MatrixXd g = p;
    g.diagonal().array() -= 1.0;  // positives occupy the leading diagonal
    g *= inv_b;
    du = (g.leftCols(b) * v +
          (extras ? (g.rightCols(b) * nn.unit).eval()
                  : Eigen::MatrixXd::Zero(b, u.cols()).eval())) /
         tau;
    dv = g.leftCols(b).transpose() * u / tau;
    if (extras) dn = g.rightCols(b).transpose() * u / tau;
  } else {
    // Per-query negatives: row i's candidate list is the batch plus n_i.
    Eigen::MatrixXd base = u * v.transpose() / tau;
    dn = Eigen::MatrixXd::Zero(b, u.cols());
    for (Eigen::Index i = 0; i < b; ++i) {
      double extra = u.row(i).dot(nn.unit.row(i)) / tau;
      double mx = std::max(base.row(i).maxCoeff(), extra);
      double sum = std::exp(extra - mx);
      for (Eigen::Index j = 0; j < b; ++j) sum += std::exp(base(i, j) - mx);
      loss += (mx + std::log(sum) - base(i, i)) * inv_b;

      double p_extra = std::exp(extra - mx) / sum;
      for (Eigen::Index j = 0; j < b; ++j) {
        double p = std::exp(base(i, j) - mx) / sum;
        double g = (p - (i == j ? 1.0 : 0.0)) * inv_b / tau;
        du.row(i) += g * v.row(j);
        dv.row(j) += g * u.row(i);
      }
      double ge = p_extra * inv_b / tau;
      du.row(i) += ge * nn.unit.row(i);
      dn.row(i) += ge * u.row(i);
    }
  }

  if (!std::isfinite(loss)) {
    throw NumericError("training: non-finite loss");
  }

  Gradients out;
  out.loss = loss;
  out.w_query = batch.queries.transpose() * normalization_backward(du, uq);
  out.w_target = batch.targets.transpose() * normalization_backward(dv, vt);
  if (extras && dn.size() > 0) {
    out.w_target +=
        batch.hard_negatives->transpose() * normalization_backward(dn, nn);
  }
  require_finite(out.w_query, "w_query gradient");
  require_finite(out.w_target, "w_target gradient");
  return out;
}

std::vector<double> FeatureExtractor::composed_features(
    const Screenshot& source, const std::string& query) const {
  std::vector<double> a = screenshot_features(source);
  std::vector<double> b = text_features(query);
  if (a.size() != b.size()) {
    throw DataError("feature extractor: modality dims differ");
  }
  for (size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + b[i]);
  return a;
}

HashFeatureExtractor::HashFeatureExtractor(uint64_t seed, int dim)
    : seed_(seed), dim_(dim) {
  if (dim < 2) {
    throw std::invalid_argument("HashFeatureExtractor: dim must be >= 2");
  }
}

std::vector<double> HashFeatureExtractor::text_features(
    const std::string& text) const {
  EmbeddingVector v = mock_embed(seed_, text, dim_);
  return std::vector<double>(v.begin(), v.end());
}

std::vector<double> HashFeatureExtractor::screenshot_features(
    const Screenshot& shot) const {
  EmbeddingVector v = mock_embed(seed_, shot.image_ref, dim_);
  return std::vector<double>(v.begin(), v.end());
}

namespace {

struct Example {
  std::vector<double> query;
  std::vector<double> target;
  std::vector<double> negative;  // empty = none
};

Eigen::MatrixXd pack_rows(const std::vector<const std::vector<double>*>& rows,
                          int dim) {
  Eigen::MatrixXd m(rows.size(), dim);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->size() != static_cast<size_t>(dim)) {
      throw DataError("training: feature dim mismatch");
    }
    for (int j = 0; j < dim; ++j) {
      m(static_cast<Eigen::Index>(i), j) = (*rows[i])[static_cast<size_t>(j)];
    }
  }
  return m;
}

const Screenshot& must_find(const Corpus& corpus, const std::string& id) {
  const Screenshot* s = corpus.find(id);
  if (s == nullptr) {
    throw DataError("training: unknown screenshot id '" + id + "'");
  }
  return *s;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              double scale, SplitMix64 rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = scale * rng.uniform_pm1();
    }
  }
  return m;
}

// One stage of seeded-shuffle SGD over `examples`; lr decays linearly to
// zero across the stage's total step count.
void run_stage(int stage, std::vector<Example> examples,
               const TrainerConfig& cfg, int batch_size,
               DualEncoderParams& params, std::vector<StepRecord>& trace) {
  size_t n = examples.size();
  size_t steps_per_epoch = (n + static_cast<size_t>(batch_size) - 1) /
                           static_cast<size_t>(batch_size);
  size_t total_steps = steps_per_epoch * static_cast<size_t>(cfg.epochs_per_stage);
  if (total_steps == 0) return;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs_per_stage; ++epoch) {
    SplitMix64 rng = derive_rng(cfg.seed, "stage" + std::to_string(stage) +
                                              "/epoch/" + std::to_string(epoch));
    shuffle(order, rng);
    for (size_t begin = 0; begin < n; begin += static_cast<size_t>(batch_size)) {
      size_t end = std::min(n, begin + static_cast<size_t>(batch_size));
      std::vector<const std::vector<double>*> q_rows, t_rows, n_rows;
      bool all_have_negatives = stage == 2;
      for (size_t i = begin; i < end; ++i) {
        const Example& ex = examples[order[i]];
        q_rows.push_back(&ex.query);
        t_rows.push_back(&ex.target);
        if (ex.negative.empty()) {
          all_have_negatives = false;
        } else {
          n_rows.push_back(&ex.negative);
        }
      }
      TrainingBatch batch;
      int dim = static_cast<int>(params.w_query.rows());
      batch.queries = pack_rows(q_rows, dim);
      batch.targets = pack_rows(t_rows, dim);
      if (all_have_negatives && n_rows.size() == q_rows.size()) {
        batch.hard_negatives = pack_rows(n_rows, dim);
      }

      Gradients g = loss_gradients(batch, params, stage, cfg.negative_mode);
      if (!std::isfinite(g.loss)) {
        throw NumericError("training diverged at stage " +
                           std::to_string(stage) + " step " +
                           std::to_string(step));
      }
      double lr = cfg.initial_lr *
                  (1.0 - static_cast<double>(step) /
                             static_cast<double>(total_steps));
      params.w_query -= lr * g.w_query;
      params.w_target -= lr * g.w_target;
      trace.push_back({stage, static_cast<int>(step), lr, g.loss});
      ++step;
    }
  }
}

}  // namespace

TrainingResult train(const Corpus& corpus, const FeatureExtractor& features,
                     const TrainerConfig& cfg) {
  cfg.validate();
  int d_in = features.dim();
  if (d_in < 1) throw std::invalid_argument("train: extractor dim must be >= 1");

  TrainingResult result;
  result.params.temperature = cfg.temperature;
  result.params.w_query = random_matrix(d_in, cfg.d_emb, cfg.init_scale,
                                        derive_rng(cfg.seed, "init/wq"));
  result.params.w_target = random_matrix(d_in, cfg.d_emb, cfg.init_scale,
                                         derive_rng(cfg.seed, "init/wt"));

  if (cfg.epochs_per_stage == 0) return result;

  // Stage 1: caption alignment over every screenshot.
  std::vector<Example> stage1;
  stage1.reserve(corpus.screenshots().size());
  for (const auto& shot : corpus.screenshots()) {
    stage1.push_back({features.text_features(shot.caption),
                      features.screenshot_features(shot),
                      {}});
  }
  if (stage1.empty()) {
    throw DataError("training: stage 1 has no caption pairs");
  }
  run_stage(1, std::move(stage1), cfg, cfg.batch_size_stage1, result.params,
            result.trace);

  // Stage 2: q2s then sq2s, interleaved by the per-epoch shuffle.
  std::vector<Example> stage2;
  stage2.reserve(corpus.q2s().size() + corpus.sq2s().size());
  for (const auto& tuple : corpus.q2s()) {
    Example ex;
    ex.query = features.text_features(tuple.query);
    ex.target = features.screenshot_features(must_find(corpus, tuple.target_id));
    if (!tuple.hard_negative_ids.empty()) {
      ex.negative = features.screenshot_features(
          must_find(corpus, tuple.hard_negative_ids.front()));
    }
    stage2.push_back(std::move(ex));
  }
  for (const auto& triplet : corpus.sq2s()) {
    Example ex;
    ex.query = features.composed_features(must_find(corpus, triplet.source_id),
                                          triplet.query);
    ex.target =
        features.screenshot_features(must_find(corpus, triplet.target_id));
    if (!triplet.hard_negative_ids.empty()) {
      ex.negative = features.screenshot_features(
          must_find(corpus, triplet.hard_negative_ids.front()));
    }
    stage2.push_back(std::move(ex));
  }
  if (stage2.empty()) {
    throw DataError("training: stage 2 has no q2s/sq2s samples");
  }
  run_stage(2, std::move(stage2), cfg, cfg.batch_size_stage2, result.params,
            result.trace);
  return result;
}

std::string serialize_trace(const std::vector<StepRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    nlohmann::json rec;
    rec["stage"] = r.stage;
    rec["step"] = r.step;
    rec["lr"] = r.lr;
    rec["loss"] = r.loss;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_params(const std::string& path, const DualEncoderParams& params) {
  params.validate();
  VectorFile vf;
  vf.dim = static_cast<uint32_t>(params.w_query.cols());
  auto push_matrix = [&vf](const Eigen::MatrixXd& m, const std::string& prefix) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      vf.ids.push_back(prefix + "/" + std::to_string(r));
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        vf.data.push_back(static_cast<float>(m(r, c)));
      }
    }
  };
  push_matrix(params.w_query, "wq");
  push_matrix(params.w_target, "wt");
  vf.ids.push_back("tau");
  vf.data.push_back(static_cast<float>(params.temperature));
  for (uint32_t i = 1; i < vf.dim; ++i) vf.data.push_back(0.0f);
  save_vectors(path, vf);
}

DualEncoderParams load_params(const std::string& path) {
  VectorFile vf = load_vectors(path);
  if (vf.count() < 3 || vf.count() % 2 == 0 || vf.ids.back() != "tau") {
    throw DataError("params file: unexpected layout");
  }
  size_t d_in = (vf.count() - 1) / 2;
  DualEncoderParams params;
  params.w_query.resize(static_cast<Eigen::Index>(d_in), vf.dim);
  params.w_target.resize(static_cast<Eigen::Index>(d_in), vf.dim);
  for (size_t r = 0; r < d_in; ++r) {
    if (vf.ids[r] != "wq/" + std::to_string(r) ||
        vf.ids[d_in + r] != "wt/" + std::to_string(r)) {
      throw DataError("params file: unexpected row id at " + std::to_string(r));
    }
    for (uint32_t c = 0; c < vf.dim; ++c) {
      params.w_query(static_cast<Eigen::Index>(r), c) = vf.row(r)[c];
      params.w_target(static_cast<Eigen::Index>(r), c) = vf.row(d_in + r)[c];
    }
  }
  params.temperature = vf.row(vf.count() - 1)[0];
  params.validate();
  return params;
}

}  // namespace visret
