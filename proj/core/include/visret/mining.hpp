#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "visret/corpus.hpp"
#include "visret/embedding.hpp"
#include "visret/index.hpp"

namespace visret {

// Ranked-window parameters for hard-negative mining. Windows are read as
// "top `top` minus its first `exclude_top` entries" over a full-corpus
// ranking that still contains the positive.
struct MiningConfig {
  int q_top = 15;             // query-text window
  int q_exclude_top = 1;
  int t_top = 10;             // target-caption window
  int t_exclude_top = 3;
  int visual_top = 10;        // target-visual window (image-heavy domains)
  int visual_exclude_top = 2;
  int sample_count = 8;       // negatives drawn from the merged pool
  int pair_top = 10;          // relevant-pair candidate window
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

enum class NegativeSource { kFromQueryText, kFromTargetText, kFromTargetVisual };
std::string to_string(NegativeSource s);

struct NegativeSet {
  std::string sample_ref;              // id of the mined tuple/triplet
  std::vector<std::string> negatives;  // sampled ids, no duplicates
  std::vector<NegativeSource> provenance;  // parallel to negatives
  bool empty_pool = false;  // exclusions exhausted every window
};

// Read-only mining over prebuilt indices. The text index must be keyed by
// screenshot id over caption embeddings; the visual index (optional) over
// image embeddings. Each sample gets its own PRNG stream derived from the
// config seed and the sample's identity, so batch order and thread count
// cannot change any output.
class Miner {
 public:
  Miner(const Corpus& corpus, const VectorIndex& text_index,
        const VectorIndex* visual_index, EmbedderBackend& backend,
        MiningConfig cfg);

  // Merged-window negatives for a q2s tuple, uniform sample of
  // min(sample_count, pool size) without replacement.
  NegativeSet mine_q2s_negatives(const Q2STuple& tuple) const;

  // Seeded uniform pick from the seed screenshot's pair window(s):
  // caption top-pair_top plus, for image-heavy domains with a visual index,
  // visual top-pair_top; self always excluded.
  std::string mine_sq2s_pair(const Screenshot& seed_shot) const;

  // As mine_q2s_negatives, with windows from the conditioned query, the
  // source caption, and the target caption (+ target visual when it
  // applies); both endpoints excluded.
  NegativeSet mine_sq2s_negatives(const SQ2STriplet& triplet) const;

  // Rewrites every tuple/triplet's hard_negative_ids in place and returns
  // the per-sample provenance, in corpus order.
  std::vector<NegativeSet> augment(Corpus& corpus) const;

 private:
  bool visual_applies(const Screenshot& target) const;
  NegativeSet mine_common(const std::string& sample_ref,
                          const std::string& rng_key,
                          const std::string& query_text,
                          const std::vector<std::string>& caption_anchor_ids,
                          const Screenshot& target,
                          const IdSet& banned) const;

  const Corpus& corpus_;
  const VectorIndex& text_index_;
  const VectorIndex* visual_index_;
  EmbedderBackend& backend_;
  MiningConfig cfg_;
};

// JSONL rendering of provenance records:
// {"ref": ..., "negatives": [{"id": ..., "source": ...}, ...]} per line.
std::string serialize_provenance(const std::vector<NegativeSet>& sets);

}  // namespace visret
