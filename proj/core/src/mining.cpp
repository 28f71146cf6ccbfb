#include "visret/mining.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "visret/errors.hpp"
#include "visret/rng.hpp"

namespace visret {

namespace {

std::string hex64(uint64_t v) {
  static const char* kDigits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return s;
}

void require_window(int top, int exclude_top, const char* name) {
  if (top < 1) {
    throw std::invalid_argument(std::string("mining: ") + name +
                                " window must be >= 1");
  }
  if (exclude_top < 0 || exclude_top >= top) {
    throw std::invalid_argument(std::string("mining: ") + name +
                                " exclusion must be in [0, top)");
  }
}

}  // namespace

void MiningConfig::validate() const {
  require_window(q_top, q_exclude_top, "query");
  require_window(t_top, t_exclude_top, "target");
  require_window(visual_top, visual_exclude_top, "visual");
  if (sample_count < 1) {
    throw std::invalid_argument("mining: sample_count must be >= 1");
  }
  if (pair_top < 1) {
    throw std::invalid_argument("mining: pair_top must be >= 1");
  }
}

std::string to_string(NegativeSource s) {
  switch (s) {
    case NegativeSource::kFromQueryText: return "from_query_text";
    case NegativeSource::kFromTargetText: return "from_target_text";
    case NegativeSource::kFromTargetVisual: return "from_target_visual";
  }
  return "unknown";
}

Miner::Miner(const Corpus& corpus, const VectorIndex& text_index,
             const VectorIndex* visual_index, EmbedderBackend& backend,
             MiningConfig cfg)
    : corpus_(corpus),
      text_index_(text_index),
      visual_index_(visual_index),
      backend_(backend),
      cfg_(cfg) {
  cfg_.validate();
}

bool Miner::visual_applies(const Screenshot& target) const {
  return visual_index_ != nullptr && has_natural_images(target.domain);
}

// Adds the (top minus exclude_top) slice of a ranking to the pool, keeping
// the first tag an id was seen with. std::map keeps the merged pool in
// ascending-id order, which fixes the sample space for replays.
static void add_window(const VectorIndex& index, const EmbeddingVector& query,
                       int top, int exclude_top, NegativeSource tag,
                       const IdSet& banned,
                       std::map<std::string, NegativeSource>& pool) {
  auto hits = index.top_k(query, top);
  for (size_t r = static_cast<size_t>(exclude_top); r < hits.size(); ++r) {
    if (banned.count(hits[r].id)) continue;
    pool.emplace(hits[r].id, tag);
  }
}

NegativeSet Miner::mine_common(const std::string& sample_ref,
                               const std::string& rng_key,
                               const std::string& query_text,
                               const std::vector<std::string>& caption_anchor_ids,
                               const Screenshot& target,
                               const IdSet& banned) const {
  std::map<std::string, NegativeSource> pool;
  add_window(text_index_, backend_.embed_text(query_text), cfg_.q_top,
             cfg_.q_exclude_top, NegativeSource::kFromQueryText, banned, pool);
  for (const auto& anchor_id : caption_anchor_ids) {
    add_window(text_index_, text_index_.vector_of(anchor_id), cfg_.t_top,
               cfg_.t_exclude_top, NegativeSource::kFromTargetText, banned,
               pool);
  }
  if (visual_applies(target)) {
    add_window(*visual_index_, visual_index_->vector_of(target.id),
               cfg_.visual_top, cfg_.visual_exclude_top,
               NegativeSource::kFromTargetVisual, banned, pool);
  }

  NegativeSet out;
  out.sample_ref = sample_ref;
  if (pool.empty()) {
    out.empty_pool = true;
    return out;
  }

  std::vector<std::string> candidates;
  candidates.reserve(pool.size());
  for (const auto& [id, tag] : pool) candidates.push_back(id);

  size_t want = std::min(static_cast<size_t>(cfg_.sample_count),
                         candidates.size());
  SplitMix64 rng = derive_rng(cfg_.seed, rng_key);
  out.negatives = sample_without_replacement(std::move(candidates), want, rng);
  out.provenance.reserve(out.negatives.size());
  for (const auto& id : out.negatives) out.provenance.push_back(pool.at(id));
  return out;
}

NegativeSet Miner::mine_q2s_negatives(const Q2STuple& tuple) const {
  const Screenshot* target = corpus_.find(tuple.target_id);
  if (target == nullptr || !text_index_.contains(tuple.target_id)) {
    throw DataError("mining: target '" + tuple.target_id +
                    "' missing from corpus or text index");
  }
  std::string key =
      "q2s/" + tuple.target_id + "/" + hex64(fnv1a64(tuple.query));
  return mine_common(tuple.target_id, key, tuple.query, {tuple.target_id},
                     *target, IdSet{tuple.target_id});
}

std::string Miner::mine_sq2s_pair(const Screenshot& seed_shot) const {
  if (text_index_.size() < 2) {
    throw DataError("mining: need at least 2 screenshots to pair");
  }
  std::map<std::string, NegativeSource> pool;
  IdSet self{seed_shot.id};
  add_window(text_index_, text_index_.vector_of(seed_shot.id), cfg_.pair_top,
             0, NegativeSource::kFromTargetText, self, pool);
  if (visual_applies(seed_shot)) {
    add_window(*visual_index_, visual_index_->vector_of(seed_shot.id),
               cfg_.pair_top, 0, NegativeSource::kFromTargetVisual, self,
               pool);
  }
  if (pool.empty()) {
    throw DataError("mining: empty pair pool for '" + seed_shot.id + "'");
  }
  std::vector<std::string> candidates;
  candidates.reserve(pool.size());
  for (const auto& [id, tag] : pool) candidates.push_back(id);
  SplitMix64 rng = derive_rng(cfg_.seed, "pair/" + seed_shot.id);
  return candidates[static_cast<size_t>(rng.uniform_below(candidates.size()))];
}

NegativeSet Miner::mine_sq2s_negatives(const SQ2STriplet& triplet) const {
  const Screenshot* target = corpus_.find(triplet.target_id);
  if (target == nullptr || corpus_.find(triplet.source_id) == nullptr ||
      !text_index_.contains(triplet.target_id) ||
      !text_index_.contains(triplet.source_id)) {
    throw DataError("mining: triplet endpoints missing from corpus or index");
  }
  std::string key = "sq2s/" + triplet.source_id + "/" + triplet.target_id +
                    "/" + hex64(fnv1a64(triplet.query));
  return mine_common(triplet.source_id + "->" + triplet.target_id, key,
                     triplet.query, {triplet.source_id, triplet.target_id},
                     *target, IdSet{triplet.source_id, triplet.target_id});
}

std::vector<NegativeSet> Miner::augment(Corpus& corpus) const {
  std::vector<NegativeSet> records;
  records.reserve(corpus.q2s().size() + corpus.sq2s().size());
  for (auto& tuple : corpus.mutable_q2s()) {
    NegativeSet set = mine_q2s_negatives(tuple);
    tuple.hard_negative_ids = set.negatives;
    records.push_back(std::move(set));
  }
  for (auto& triplet : corpus.mutable_sq2s()) {
    NegativeSet set = mine_sq2s_negatives(triplet);
    triplet.hard_negative_ids = set.negatives;
    records.push_back(std::move(set));
  }
  return records;
}

std::string serialize_provenance(const std::vector<NegativeSet>& sets) {
  std::string out;
  for (const auto& set : sets) {
    nlohmann::json rec;
    rec["ref"] = set.sample_ref;
    rec["empty_pool"] = set.empty_pool;
    auto negs = nlohmann::json::array();
    for (size_t i = 0; i < set.negatives.size(); ++i) {
      negs.push_back({{"id", set.negatives[i]},
                      {"source", to_string(set.provenance[i])}});
    }
    rec["negatives"] = std::move(negs);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace visret
