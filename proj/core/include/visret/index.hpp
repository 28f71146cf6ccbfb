#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "visret/embedding.hpp"
#include "visret/vector_file.hpp"

namespace visret {

struct SearchHit {
  std::string id;
  double score = 0.0;  // cosine similarity
  int rank = 0;        // 1-based
};

using IdSet = std::unordered_set<std::string>;

// Immutable exact-search index over unit-norm vectors. Scores accumulate in
// 64-bit; ties break by ascending id, so results are platform-stable.
class VectorIndex {
 public:
  VectorIndex(std::vector<std::string> ids, std::vector<float> matrix,
              uint32_t dim);
  explicit VectorIndex(const VectorFile& vf);

  static VectorIndex load(const std::string& path);
  void save(const std::string& path) const;

  size_t size() const { return ids_.size(); }
  uint32_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id_at(size_t row) const { return ids_[row]; }

  bool contains(const std::string& id) const;
  // Row lookup by id; throws DataError when absent.
  size_t row_of(const std::string& id) const;
  const float* row(size_t i) const { return matrix_.data() + i * dim_; }
  std::vector<float> vector_of(const std::string& id) const;

  // Exact k highest-cosine items not in `exclude`; returns fewer than k only
  // when the index runs out of candidates.
  std::vector<SearchHit> top_k(const EmbeddingVector& query, int k,
                               const IdSet& exclude = {}) const;

  // Per-query top_k with order-preserving output; fans out across threads.
  std::vector<std::vector<SearchHit>> batch_top_k(
      const std::vector<EmbeddingVector>& queries, int k,
      const std::vector<IdSet>& excludes = {}, int threads = 1) const;

 private:
  std::vector<std::string> ids_;
  std::vector<float> matrix_;  // row-major, size() * dim_
  uint32_t dim_ = 0;
  std::unordered_map<std::string, size_t> row_by_id_;
};

// Embeds every screenshot caption (text) or image (visual) and builds an
// index keyed by screenshot id.
VectorIndex build_caption_index(const std::vector<Screenshot>& shots,
                                EmbedderBackend& backend, int threads = 1);
VectorIndex build_visual_index(const std::vector<Screenshot>& shots,
                               EmbedderBackend& backend, int threads = 1);

}  // namespace visret
