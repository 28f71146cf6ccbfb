#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "visret/corpus.hpp"

namespace visret {

// Row-major float vectors; "retrieval-ready" vectors are unit-norm (1e-6).
using EmbeddingVector = std::vector<float>;

// A screenshot plus an instruction about it, e.g. a follow-up question.
struct ComposedQuery {
  std::string screenshot_id;
  std::string query_text;  // nonempty
  std::string task_tag;    // short task-type label, e.g. "news"
};

// Sum-then-renormalize fusion of two unit vectors. Commutative; throws on
// dimension mismatch or a zero-sum (antipodal inputs).
EmbeddingVector fuse_clip(const EmbeddingVector& e_s,
                          const EmbeddingVector& e_q);

// Renders "[Task]: {task}, [Query]: <SCREENSHOT>, {query}, [EOS]".
// The <SCREENSHOT> marker stands in for the visual token span.
std::string format_mllm_prompt(const ComposedQuery& cq);

// Deterministic unit-norm pseudo-random vector keyed by (seed, key, dim).
// Backs the mock embedder; dim must be >= 2.
EmbeddingVector mock_embed(uint64_t seed, const std::string& key, int dim);

class EmbedderBackend {
 public:
  virtual ~EmbedderBackend() = default;

  virtual int dim() const = 0;
  virtual EmbeddingVector embed_text(const std::string& text) = 0;
  virtual EmbeddingVector embed_screenshot(const Screenshot& shot) = 0;

  // Native composed screenshot+query mode. Backends without one inherit the
  // default, which fuses the two single-modality embeddings.
  virtual bool supports_composed() const { return false; }
  virtual EmbeddingVector embed_composed(const Screenshot& shot,
                                         const ComposedQuery& cq);
};

// Test/offline backend: output depends only on (seed, input key, dim).
// Text inputs key on the text itself and screenshots on image_ref, so a
// fixture can force an exact match by reusing the same string for both.
class MockEmbedder : public EmbedderBackend {
 public:
  MockEmbedder(uint64_t seed, int dim);

  int dim() const override { return dim_; }
  EmbeddingVector embed_text(const std::string& text) override;
  EmbeddingVector embed_screenshot(const Screenshot& shot) override;

 private:
  uint64_t seed_;
  int dim_;
};

// Embeds many inputs with deterministic output slots, fanning out across
// `threads` workers. Backends must tolerate concurrent read-only use.
std::vector<EmbeddingVector> embed_texts(EmbedderBackend& backend,
                                         const std::vector<std::string>& texts,
                                         int threads = 1);
std::vector<EmbeddingVector> embed_screenshots(
    EmbedderBackend& backend, const std::vector<Screenshot>& shots,
    int threads = 1);

}  // namespace visret
