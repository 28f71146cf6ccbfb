#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace visret {

enum class DomainCategory {
  kNews,
  kProducts,
  kResearchPapers,
  kProjectHomepage,
  kGeneralDocuments,
  kCharts,
  kCommonKnowledge,
};
inline constexpr int kDomainCategoryCount = 7;

std::string_view to_string(DomainCategory domain);
std::optional<DomainCategory> domain_from_string(std::string_view name);

// Domains whose screenshots regularly contain natural images and therefore
// take part in visual-similarity mining.
bool has_natural_images(DomainCategory domain);

struct Screenshot {
  std::string id;
  DomainCategory domain = DomainCategory::kNews;
  std::string image_ref;  // opaque locator for pixel data
  int width_px = 0;
  int height_px = 0;
  std::string caption;
  bool visual_flag = false;  // always == has_natural_images(domain)

  bool operator==(const Screenshot&) const = default;
};

// Validates dimensions and derives visual_flag from the domain.
Screenshot make_screenshot(std::string id, DomainCategory domain,
                           std::string image_ref, int width_px, int height_px,
                           std::string caption);

struct Q2STuple {
  std::string query;
  std::string target_id;
  std::vector<std::string> hard_negative_ids;

  bool operator==(const Q2STuple&) const = default;
};

struct SQ2STriplet {
  std::string source_id;
  std::string query;
  std::string target_id;
  std::vector<std::string> hard_negative_ids;

  bool operator==(const SQ2STriplet&) const = default;
};

struct FilterConfig {
  double max_aspect_ratio = 9.0;
  int min_caption_chars = 100;
  std::set<std::string> blocklist;  // lowercase keywords, substring match
};

// Immutable after load; safe to share read-only across threads.
class Corpus {
 public:
  // Each add validates the record's own invariants and throws DataError on
  // violation. Cross-record references are checked by validate_references.
  void add(Screenshot screenshot);
  void add(Q2STuple tuple);
  void add(SQ2STriplet triplet);

  // Throws DataError naming the first dangling screenshot id.
  void validate_references() const;

  const Screenshot* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  const std::vector<Screenshot>& screenshots() const { return screenshots_; }
  const std::vector<Q2STuple>& q2s() const { return q2s_; }
  const std::vector<SQ2STriplet>& sq2s() const { return sq2s_; }

  // In-place rewrites (e.g. mining fills hard_negative_ids). Callers own the
  // invariants; run validate_references() afterwards when in doubt.
  std::vector<Q2STuple>& mutable_q2s() { return q2s_; }
  std::vector<SQ2STriplet>& mutable_sq2s() { return sq2s_; }
  size_t size() const { return screenshots_.size(); }
  bool empty() const {
    return screenshots_.empty() && q2s_.empty() && sq2s_.empty();
  }

  bool operator==(const Corpus& other) const {
    return screenshots_ == other.screenshots_ && q2s_ == other.q2s_ &&
           sq2s_ == other.sq2s_;
  }

 private:
  std::vector<Screenshot> screenshots_;
  std::unordered_map<std::string, size_t> by_id_;
  std::vector<Q2STuple> q2s_;
  std::vector<SQ2STriplet> sq2s_;
};

// Line-delimited records, one JSON object per line, discriminated by a
// "kind" field in {"screenshot", "q2s", "sq2s"}. Parse errors report the
// 1-based line number. All references must resolve.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view content, std::string_view origin = "");

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

enum class RejectReason { kAspectRatio, kCaptionLength, kKeyword };
std::string_view to_string(RejectReason reason);

struct RejectedScreenshot {
  Screenshot item;
  RejectReason reason;
};

struct FilterResult {
  std::vector<Screenshot> kept;
  std::vector<RejectedScreenshot> rejected;
};

// Collection-time quality filter. Aspect ratio is orientation-free
// (max(w,h)/min(w,h)); caption length counts Unicode scalar values; the
// blocklist matches case-insensitively as substrings. An item is rejected
// by the first rule it trips, in the order aspect -> length -> keyword.
FilterResult filter_screenshots(const std::vector<Screenshot>& items,
                                const FilterConfig& cfg);

}  // namespace visret
