#include "visret/embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "visret/errors.hpp"
#include "visret/io.hpp"
#include "visret/rng.hpp"
#include "visret/vec.hpp"

namespace visret {

EmbeddingVector fuse_clip(const EmbeddingVector& e_s,
                          const EmbeddingVector& e_q) {
  if (e_s.size() != e_q.size()) {
    throw std::invalid_argument("fuse_clip: dimension mismatch");
  }
  EmbeddingVector out(e_s.size());
  for (size_t i = 0; i < e_s.size(); ++i) out[i] = e_s[i] + e_q[i];
  l2_normalize(out);
  return out;
}

std::string format_mllm_prompt(const ComposedQuery& cq) {
  if (cq.task_tag.empty()) {
    throw std::invalid_argument("format_mllm_prompt: empty task tag");
  }
  std::string out = "[Task]: ";
  out += cq.task_tag;
  out += ", [Query]: <SCREENSHOT>, ";
  out += cq.query_text;
  out += ", [EOS]";
  return out;
}

EmbeddingVector mock_embed(uint64_t seed, const std::string& key, int dim) {
  if (dim < 2) {
    throw std::invalid_argument("mock_embed: dim must be >= 2");
  }
  SplitMix64 rng = derive_rng(seed, key);
  EmbeddingVector v(static_cast<size_t>(dim));
  // Re-draw on a (practically unreachable) near-zero sample so the
  // unit-norm postcondition holds unconditionally.
  for (;;) {
    for (auto& x : v) x = static_cast<float>(rng.uniform_pm1());
    if (l2_norm(v) > 1e-6) break;
  }
  l2_normalize(v);
  return v;
}

EmbeddingVector EmbedderBackend::embed_composed(const Screenshot& shot,
                                                const ComposedQuery& cq) {
  if (!cq.screenshot_id.empty() && cq.screenshot_id != shot.id) {
    throw DataError("embed_composed: query references screenshot '" +
                    cq.screenshot_id + "' but got '" + shot.id + "'");
  }
  return fuse_clip(embed_screenshot(shot), embed_text(cq.query_text));
}

MockEmbedder::MockEmbedder(uint64_t seed, int dim) : seed_(seed), dim_(dim) {
  if (dim < 2) {
    throw std::invalid_argument("MockEmbedder: dim must be >= 2");
  }
}

EmbeddingVector MockEmbedder::embed_text(const std::string& text) {
  return mock_embed(seed_, text, dim_);
}

EmbeddingVector MockEmbedder::embed_screenshot(const Screenshot& shot) {
  return mock_embed(seed_, shot.image_ref, dim_);
}

std::vector<EmbeddingVector> embed_texts(EmbedderBackend& backend,
                                         const std::vector<std::string>& texts,
                                         int threads) {
  std::vector<EmbeddingVector> out(texts.size());
  parallel_for(texts.size(), threads,
               [&](size_t i) { out[i] = backend.embed_text(texts[i]); });
  return out;
}

std::vector<EmbeddingVector> embed_screenshots(
    EmbedderBackend& backend, const std::vector<Screenshot>& shots,
    int threads) {
  std::vector<EmbeddingVector> out(shots.size());
  parallel_for(shots.size(), threads,
               [&](size_t i) { out[i] = backend.embed_screenshot(shots[i]); });
  return out;
}

}  // namespace visret
