#pragma once

#include <string>
#include <vector>

#include "visret/embedding.hpp"

namespace visret {

// Client for an external embedding service speaking
//   POST <path>  {"inputs": [...], "modality": "text"|"image"|"composed"}
//   -> {"vectors": [[...], ...]}
// Text/image inputs are plain strings (caption/query text, image refs);
// composed inputs are {"image": ref, "prompt": rendered template} objects.
// The service owns normalization; vectors come back as-is.
struct RemoteConfig {
  std::string base_url;     // e.g. "http://127.0.0.1:8089"
  std::string path = "/embed";
  int dim = 0;              // declared output dimension
  int max_attempts = 3;     // total tries per request (connect/5xx retried)
  int timeout_sec = 10;
};

class RemoteEmbedder : public EmbedderBackend {
 public:
  explicit RemoteEmbedder(RemoteConfig cfg);

  int dim() const override { return cfg_.dim; }
  EmbeddingVector embed_text(const std::string& text) override;
  EmbeddingVector embed_screenshot(const Screenshot& shot) override;
  bool supports_composed() const override { return true; }
  EmbeddingVector embed_composed(const Screenshot& shot,
                                 const ComposedQuery& cq) override;

  // Order-preserving batch call; one vector per input.
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& inputs, const std::string& modality);

 private:
  std::vector<EmbeddingVector> post(const std::string& body, size_t expect);

  RemoteConfig cfg_;
};

}  // namespace visret
