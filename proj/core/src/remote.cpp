#include "visret/remote.hpp"

#include <stdexcept>

#include "httplib.h"
#include "json.hpp"
#include "visret/errors.hpp"

namespace visret {

RemoteEmbedder::RemoteEmbedder(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.dim < 2) {
    throw std::invalid_argument("remote: declared dim must be >= 2");
  }
  if (cfg_.max_attempts < 1) {
    throw std::invalid_argument("remote: max_attempts must be >= 1");
  }
}

std::vector<EmbeddingVector> RemoteEmbedder::post(const std::string& body,
                                                  size_t expect) {
  std::string last_error;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_sec, 0);
    client.set_read_timeout(cfg_.timeout_sec, 0);
    auto res = client.Post(cfg_.path, body, "application/json");
    if (!res) {
      last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status >= 500) {  // transient server side, retry
      last_error = "server returned " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw DataError("remote: request rejected with status " +
                      std::to_string(res->status));
    }

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("remote: malformed response: ") + e.what());
    }
    if (!reply.contains("vectors") || !reply["vectors"].is_array()) {
      throw DataError("remote: response missing 'vectors' array");
    }
    const auto& vectors = reply["vectors"];
    if (vectors.size() != expect) {
      throw DataError("remote: got " + std::to_string(vectors.size()) +
                      " vectors for " + std::to_string(expect) + " inputs");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(expect);
    for (const auto& row : vectors) {
      if (!row.is_array() ||
          row.size() != static_cast<size_t>(cfg_.dim)) {
        throw DataError("remote: vector dim " + std::to_string(row.size()) +
                        " disagrees with declared " +
                        std::to_string(cfg_.dim));
      }
      EmbeddingVector v;
      v.reserve(row.size());
      for (const auto& x : row) {
        if (!x.is_number()) {
          throw DataError("remote: non-numeric vector entry");
        }
        v.push_back(x.get<float>());
      }
      out.push_back(std::move(v));
    }
    return out;
  }
  throw DataError("remote: " + std::to_string(cfg_.max_attempts) +
                  " attempts failed; last error: " + last_error);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(
    const std::vector<std::string>& inputs, const std::string& modality) {
  if (inputs.empty()) {
    throw std::invalid_argument("remote: empty batch");
  }
  nlohmann::json body;
  body["inputs"] = inputs;
  body["modality"] = modality;
  return post(body.dump(), inputs.size());
}

EmbeddingVector RemoteEmbedder::embed_text(const std::string& text) {
  return embed_batch({text}, "text")[0];
}

EmbeddingVector RemoteEmbedder::embed_screenshot(const Screenshot& shot) {
  return embed_batch({shot.image_ref}, "image")[0];
}

EmbeddingVector RemoteEmbedder::embed_composed(const Screenshot& shot,
                                               const ComposedQuery& cq) {
  nlohmann::json body;
  body["inputs"] = nlohmann::json::array();
  body["inputs"].push_back({{"image", shot.image_ref},
                            {"prompt", format_mllm_prompt(cq)}});
  body["modality"] = "composed";
  return post(body.dump(), 1)[0];
}

}  // namespace visret
