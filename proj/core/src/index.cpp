#include "visret/index.hpp"

#include <algorithm>
#include <stdexcept>

#include "visret/errors.hpp"
#include "visret/io.hpp"
#include "visret/vec.hpp"

namespace visret {

VectorIndex::VectorIndex(std::vector<std::string> ids,
                         std::vector<float> matrix, uint32_t dim)
    : ids_(std::move(ids)), matrix_(std::move(matrix)), dim_(dim) {
  if (matrix_.size() != ids_.size() * static_cast<size_t>(dim_)) {
    throw DataError("index: matrix size does not match count*dim");
  }
  row_by_id_.reserve(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (!row_by_id_.emplace(ids_[i], i).second) {
      throw DataError("index: duplicate id '" + ids_[i] + "'");
    }
    double n = l2_norm(row(i), dim_);
    if (std::abs(n - 1.0) > 1e-6) {
      throw DataError("index: row for '" + ids_[i] + "' has norm " +
                      std::to_string(n) + ", expected unit");
    }
  }
}

VectorIndex::VectorIndex(const VectorFile& vf)
    : VectorIndex(vf.ids, vf.data, vf.dim) {}

VectorIndex VectorIndex::load(const std::string& path) {
  return VectorIndex(load_vectors(path));
}

void VectorIndex::save(const std::string& path) const {
  VectorFile vf;
  vf.dim = dim_;
  vf.ids = ids_;
  vf.data = matrix_;
  save_vectors(path, vf);
}

bool VectorIndex::contains(const std::string& id) const {
  return row_by_id_.count(id) != 0;
}

size_t VectorIndex::row_of(const std::string& id) const {
  auto it = row_by_id_.find(id);
  if (it == row_by_id_.end()) {
    throw DataError("index: id '" + id + "' not present");
  }
  return it->second;
}

std::vector<float> VectorIndex::vector_of(const std::string& id) const {
  size_t i = row_of(id);
  return std::vector<float>(row(i), row(i) + dim_);
}

std::vector<SearchHit> VectorIndex::top_k(const EmbeddingVector& query, int k,
                                          const IdSet& exclude) const {
  if (query.size() != dim_) {
    throw std::invalid_argument("top_k: query dim " +
                                std::to_string(query.size()) +
                                " != index dim " + std::to_string(dim_));
  }
  if (k < 1) {
    throw std::invalid_argument("top_k: k must be >= 1");
  }

  struct Scored {
    double score;
    size_t row;
  };
  std::vector<Scored> scored;
  scored.reserve(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (!exclude.empty() && exclude.count(ids_[i])) continue;
    scored.push_back({dot(query.data(), row(i), dim_), i});
  }

  auto better = [this](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return ids_[a.row] < ids_[b.row];
  };
  size_t take = std::min(static_cast<size_t>(k), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                    better);

  std::vector<SearchHit> hits;
  hits.reserve(take);
  for (size_t r = 0; r < take; ++r) {
    hits.push_back({ids_[scored[r].row], scored[r].score,
                    static_cast<int>(r) + 1});
  }
  return hits;
}

std::vector<std::vector<SearchHit>> VectorIndex::batch_top_k(
    const std::vector<EmbeddingVector>& queries, int k,
    const std::vector<IdSet>& excludes, int threads) const {
  if (!excludes.empty() && excludes.size() != queries.size()) {
    throw std::invalid_argument(
        "batch_top_k: excludes must be empty or match query count");
  }
  static const IdSet kNoExclude;
  std::vector<std::vector<SearchHit>> out(queries.size());
  parallel_for(queries.size(), threads, [&](size_t i) {
    out[i] = top_k(queries[i], k,
                   excludes.empty() ? kNoExclude : excludes[i]);
  });
  return out;
}

namespace {

VectorIndex build_index(const std::vector<Screenshot>& shots,
                        std::vector<EmbeddingVector> rows, uint32_t dim) {
  std::vector<std::string> ids;
  ids.reserve(shots.size());
  std::vector<float> matrix;
  matrix.reserve(shots.size() * dim);
  for (size_t i = 0; i < shots.size(); ++i) {
    ids.push_back(shots[i].id);
    matrix.insert(matrix.end(), rows[i].begin(), rows[i].end());
  }
  return VectorIndex(std::move(ids), std::move(matrix), dim);
}

}  // namespace

VectorIndex build_caption_index(const std::vector<Screenshot>& shots,
                                EmbedderBackend& backend, int threads) {
  std::vector<std::string> captions;
  captions.reserve(shots.size());
  for (const auto& s : shots) captions.push_back(s.caption);
  return build_index(shots, embed_texts(backend, captions, threads),
                     static_cast<uint32_t>(backend.dim()));
}

VectorIndex build_visual_index(const std::vector<Screenshot>& shots,
                               EmbedderBackend& backend, int threads) {
  return build_index(shots, embed_screenshots(backend, shots, threads),
                     static_cast<uint32_t>(backend.dim()));
}

}  // namespace visret
