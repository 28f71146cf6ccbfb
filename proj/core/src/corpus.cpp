#include "visret/corpus.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "visret/errors.hpp"
#include "visret/io.hpp"
#include "visret/text.hpp"

namespace visret {

using nlohmann::json;

std::string_view to_string(DomainCategory domain) {
  switch (domain) {
    case DomainCategory::kNews: return "News";
    case DomainCategory::kProducts: return "Products";
    case DomainCategory::kResearchPapers: return "ResearchPapers";
    case DomainCategory::kProjectHomepage: return "ProjectHomepage";
    case DomainCategory::kGeneralDocuments: return "GeneralDocuments";
    case DomainCategory::kCharts: return "Charts";
    case DomainCategory::kCommonKnowledge: return "CommonKnowledge";
  }
  return "News";
}

std::optional<DomainCategory> domain_from_string(std::string_view name) {
  static const std::pair<std::string_view, DomainCategory> table[] = {
      {"News", DomainCategory::kNews},
      {"Products", DomainCategory::kProducts},
      {"ResearchPapers", DomainCategory::kResearchPapers},
      {"ProjectHomepage", DomainCategory::kProjectHomepage},
      {"GeneralDocuments", DomainCategory::kGeneralDocuments},
      {"Charts", DomainCategory::kCharts},
      {"CommonKnowledge", DomainCategory::kCommonKnowledge},
  };
  for (const auto& [key, value] : table)
    if (key == name) return value;
  return std::nullopt;
}

bool has_natural_images(DomainCategory domain) {
  return domain == DomainCategory::kNews ||
         domain == DomainCategory::kProducts ||
         domain == DomainCategory::kCommonKnowledge;
}

Screenshot make_screenshot(std::string id, DomainCategory domain,
                           std::string image_ref, int width_px, int height_px,
                           std::string caption) {
  if (id.empty()) throw DataError("screenshot id must be nonempty");
  if (width_px < 1 || height_px < 1)
    throw DataError("screenshot " + id + ": dimensions must be >= 1");
  Screenshot s;
  s.id = std::move(id);
  s.domain = domain;
  s.image_ref = std::move(image_ref);
  s.width_px = width_px;
  s.height_px = height_px;
  s.caption = std::move(caption);
  s.visual_flag = has_natural_images(domain);
  return s;
}

namespace {

void check_negatives(const std::string& target_id,
                     const std::vector<std::string>& negatives,
                     const std::string& what) {
  std::unordered_set<std::string_view> seen;
  for (const auto& id : negatives) {
    if (id == target_id)
      throw DataError(what + ": target " + target_id +
                      " listed among its own hard negatives");
    if (!seen.insert(id).second)
      throw DataError(what + ": duplicate hard negative " + id);
  }
}

}  // namespace

void Corpus::add(Screenshot screenshot) {
  if (screenshot.id.empty()) throw DataError("screenshot id must be nonempty");
  if (screenshot.width_px < 1 || screenshot.height_px < 1)
    throw DataError("screenshot " + screenshot.id +
                    ": dimensions must be >= 1");
  if (screenshot.visual_flag != has_natural_images(screenshot.domain))
    throw DataError("screenshot " + screenshot.id +
                    ": visual_flag inconsistent with domain " +
                    std::string(to_string(screenshot.domain)));
  auto [it, inserted] = by_id_.emplace(screenshot.id, screenshots_.size());
  if (!inserted) throw DataError("duplicate screenshot id " + screenshot.id);
  screenshots_.push_back(std::move(screenshot));
}

void Corpus::add(Q2STuple tuple) {
  check_negatives(tuple.target_id, tuple.hard_negative_ids, "q2s");
  q2s_.push_back(std::move(tuple));
}

void Corpus::add(SQ2STriplet triplet) {
  if (triplet.source_id == triplet.target_id)
    throw DataError("sq2s: source and target are both " + triplet.source_id);
  check_negatives(triplet.target_id, triplet.hard_negative_ids, "sq2s");
  for (const auto& id : triplet.hard_negative_ids)
    if (id == triplet.source_id)
      throw DataError("sq2s: source " + triplet.source_id +
                      " listed among hard negatives");
  sq2s_.push_back(std::move(triplet));
}

void Corpus::validate_references() const {
  auto require = [this](const std::string& id, const char* role) {
    if (!contains(id))
      throw DataError(std::string("dangling reference: ") + role + " id \"" +
                      id + "\" not in corpus");
  };
  for (const auto& t : q2s_) {
    require(t.target_id, "q2s target");
    for (const auto& n : t.hard_negative_ids) require(n, "q2s hard negative");
  }
  for (const auto& t : sq2s_) {
    require(t.source_id, "sq2s source");
    require(t.target_id, "sq2s target");
    for (const auto& n : t.hard_negative_ids) require(n, "sq2s hard negative");
  }
}

const Screenshot* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &screenshots_[it->second];
}

namespace {

std::string require_string(const json& j, const char* field, size_t lineno) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string())
    throw DataError("line " + std::to_string(lineno) + ": missing string \"" +
                    field + "\"");
  return it->get<std::string>();
}

int require_int(const json& j, const char* field, size_t lineno) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_number_integer())
    throw DataError("line " + std::to_string(lineno) + ": missing integer \"" +
                    field + "\"");
  return it->get<int>();
}

std::vector<std::string> optional_string_list(const json& j, const char* field,
                                              size_t lineno) {
  auto it = j.find(field);
  if (it == j.end()) return {};
  if (!it->is_array())
    throw DataError("line " + std::to_string(lineno) + ": \"" + field +
                    "\" must be a list");
  std::vector<std::string> out;
  for (const auto& e : *it) {
    if (!e.is_string())
      throw DataError("line " + std::to_string(lineno) + ": \"" + field +
                      "\" entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void parse_record(Corpus& corpus, size_t lineno, const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError("line " + std::to_string(lineno) +
                    ": unparseable record: " + e.what());
  }
  if (!j.is_object())
    throw DataError("line " + std::to_string(lineno) + ": expected an object");
  std::string kind = require_string(j, "kind", lineno);
  if (kind == "screenshot") {
    std::string domain_name = require_string(j, "domain", lineno);
    auto domain = domain_from_string(domain_name);
    if (!domain)
      throw DataError("line " + std::to_string(lineno) + ": unknown domain \"" +
                      domain_name + "\"");
    Screenshot s = make_screenshot(
        require_string(j, "id", lineno), *domain,
        require_string(j, "image_ref", lineno),
        require_int(j, "width_px", lineno), require_int(j, "height_px", lineno),
        require_string(j, "caption", lineno));
    if (auto it = j.find("visual_flag"); it != j.end()) {
      if (!it->is_boolean())
        throw DataError("line " + std::to_string(lineno) +
                        ": visual_flag must be a boolean");
      if (it->get<bool>() != s.visual_flag)
        throw DataError("line " + std::to_string(lineno) +
                        ": visual_flag inconsistent with domain " +
                        domain_name);
    }
    corpus.add(std::move(s));
  } else if (kind == "q2s") {
    Q2STuple t;
    t.query = require_string(j, "query", lineno);
    t.target_id = require_string(j, "target_id", lineno);
    t.hard_negative_ids = optional_string_list(j, "hard_negative_ids", lineno);
    corpus.add(std::move(t));
  } else if (kind == "sq2s") {
    SQ2STriplet t;
    t.source_id = require_string(j, "source_id", lineno);
    t.query = require_string(j, "query", lineno);
    t.target_id = require_string(j, "target_id", lineno);
    t.hard_negative_ids = optional_string_list(j, "hard_negative_ids", lineno);
    corpus.add(std::move(t));
  } else {
    throw DataError("line " + std::to_string(lineno) + ": unknown kind \"" +
                    kind + "\"");
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  for_each_line(path, [&](size_t lineno, const std::string& line) {
    parse_record(corpus, lineno, line);
  });
  corpus.validate_references();
  return corpus;
}

Corpus parse_corpus(std::string_view content, std::string_view origin) {
  Corpus corpus;
  std::istringstream in{std::string(content)};
  std::string line;
  size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      parse_record(corpus, lineno, line);
    }
  } catch (const DataError& e) {
    if (origin.empty()) throw;
    throw DataError(std::string(origin) + ": " + e.what());
  }
  corpus.validate_references();
  return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.screenshots()) {
    json j{{"kind", "screenshot"},
           {"id", s.id},
           {"domain", std::string(to_string(s.domain))},
           {"image_ref", s.image_ref},
           {"width_px", s.width_px},
           {"height_px", s.height_px},
           {"caption", s.caption},
           {"visual_flag", s.visual_flag}};
    out += j.dump();
    out += '\n';
  }
  for (const auto& t : corpus.q2s()) {
    json j{{"kind", "q2s"},
           {"query", t.query},
           {"target_id", t.target_id},
           {"hard_negative_ids", t.hard_negative_ids}};
    out += j.dump();
    out += '\n';
  }
  for (const auto& t : corpus.sq2s()) {
    json j{{"kind", "sq2s"},
           {"source_id", t.source_id},
           {"query", t.query},
           {"target_id", t.target_id},
           {"hard_negative_ids", t.hard_negative_ids}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  atomic_write(path, serialize_corpus(corpus));
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kAspectRatio: return "aspect";
    case RejectReason::kCaptionLength: return "caption_length";
    case RejectReason::kKeyword: return "keyword";
  }
  return "aspect";
}

FilterResult filter_screenshots(const std::vector<Screenshot>& items,
                                const FilterConfig& cfg) {
  FilterResult result;
  for (const auto& s : items) {
    double longer = std::max(s.width_px, s.height_px);
    double shorter = std::min(s.width_px, s.height_px);
    if (longer / shorter > cfg.max_aspect_ratio) {
      result.rejected.push_back({s, RejectReason::kAspectRatio});
      continue;
    }
    size_t min_chars = static_cast<size_t>(std::max(0, cfg.min_caption_chars));
    if (utf8_length(s.caption) < min_chars) {
      result.rejected.push_back({s, RejectReason::kCaptionLength});
      continue;
    }
    std::string lowered = ascii_lower(s.caption);
    bool blocked = std::any_of(
        cfg.blocklist.begin(), cfg.blocklist.end(), [&](const auto& kw) {
          return !kw.empty() && lowered.find(kw) != std::string::npos;
        });
    if (blocked) {
      result.rejected.push_back({s, RejectReason::kKeyword});
      continue;
    }
    result.kept.push_back(s);
  }
  return result;
}

}  // namespace visret
