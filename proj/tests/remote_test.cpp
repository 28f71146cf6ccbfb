#include "visret/remote.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "visret/errors.hpp"

namespace visret {
namespace {

// Loopback stub for the embedding endpoint; each test swaps in a handler
// before issuing requests.
class StubServer {
 public:
  using Handler =
      std::function<void(const httplib::Request&, httplib::Response&)>;

  StubServer() {
    server_.Post("/embed", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      ++hits_;
      {
        std::lock_guard<std::mutex> lock(mu_);
        last_body_ = req.body;
      }
      Handler h;
      {
        std::lock_guard<std::mutex> lock(mu_);
        h = handler_;
      }
      if (h) h(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  void set_handler(Handler h) {
    std::lock_guard<std::mutex> lock(mu_);
    handler_ = std::move(h);
  }

  std::string last_body() {
    std::lock_guard<std::mutex> lock(mu_);
    return last_body_;
  }

  int hits() const { return hits_.load(); }
  void reset_hits() { hits_ = 0; }

  RemoteConfig config(int dim) const {
    RemoteConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port_);
    cfg.dim = dim;
    cfg.timeout_sec = 5;
    return cfg;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::mutex mu_;
  std::string last_body_;
  Handler handler_;
};

// Replies with one fixed-dim vector per input: [n, n, ...] for input index n.
StubServer::Handler echo_index_handler(int dim) {
  return [dim](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json vectors = nlohmann::json::array();
    for (size_t i = 0; i < body.at("inputs").size(); ++i) {
      std::vector<double> v(static_cast<size_t>(dim),
                            static_cast<double>(i));
      vectors.push_back(v);
    }
    res.set_content(nlohmann::json{{"vectors", vectors}}.dump(),
                    "application/json");
  };
}

TEST(RemoteEmbedder, ConfigValidation) {
  RemoteConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.dim = 1;
  EXPECT_THROW(RemoteEmbedder{cfg}, std::invalid_argument);
  cfg.dim = 4;
  cfg.max_attempts = 0;
  EXPECT_THROW(RemoteEmbedder{cfg}, std::invalid_argument);
  cfg.max_attempts = 1;
  RemoteEmbedder ok(cfg);
  EXPECT_EQ(ok.dim(), 4);
  EXPECT_TRUE(ok.supports_composed());
  EXPECT_THROW(ok.embed_batch({}, "text"), std::invalid_argument);
}

TEST(RemoteEmbedder, BatchPreservesInputOrder) {
  StubServer server;
  server.set_handler(echo_index_handler(3));
  RemoteEmbedder client(server.config(3));

  auto out = client.embed_batch({"first", "second", "third"}, "text");
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0], (EmbeddingVector{0.0f, 0.0f, 0.0f}));
  EXPECT_EQ(out[1], (EmbeddingVector{1.0f, 1.0f, 1.0f}));
  EXPECT_EQ(out[2], (EmbeddingVector{2.0f, 2.0f, 2.0f}));

  auto body = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(body.at("modality"), "text");
  ASSERT_EQ(body.at("inputs").size(), 3u);
  EXPECT_EQ(body["inputs"][0], "first");
  EXPECT_EQ(body["inputs"][2], "third");
}

TEST(RemoteEmbedder, ModalitiesAndComposedPromptShape) {
  StubServer server;
  server.set_handler(echo_index_handler(2));
  RemoteEmbedder client(server.config(2));

  client.embed_text("hello");
  auto body = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(body.at("modality"), "text");
  EXPECT_EQ(body["inputs"][0], "hello");

  Screenshot shot = make_screenshot("s1", DomainCategory::kNews, "img://s1",
                                    10, 10, "cap");
  client.embed_screenshot(shot);
  body = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(body.at("modality"), "image");
  EXPECT_EQ(body["inputs"][0], "img://s1");

  ComposedQuery cq{"s1", "how many", "SQA"};
  client.embed_composed(shot, cq);
  body = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(body.at("modality"), "composed");
  ASSERT_EQ(body.at("inputs").size(), 1u);
  EXPECT_EQ(body["inputs"][0].at("image"), "img://s1");
  EXPECT_EQ(body["inputs"][0].at("prompt"),
            "[Task]: SQA, [Query]: <SCREENSHOT>, how many, [EOS]");
}

TEST(RemoteEmbedder, TransientServerErrorsAreRetried) {
  StubServer server;
  std::atomic<int> failures_left{2};
  auto ok = echo_index_handler(2);
  server.set_handler([&](const httplib::Request& req, httplib::Response& res) {
    if (failures_left.fetch_sub(1) > 0) {
      res.status = 503;
      return;
    }
    ok(req, res);
  });

  RemoteConfig cfg = server.config(2);
  cfg.max_attempts = 3;
  RemoteEmbedder client(cfg);
  EXPECT_EQ(client.embed_text("x").size(), 2u);
  EXPECT_EQ(server.hits(), 3);  // two 503s, then success
}

TEST(RemoteEmbedder, PersistentServerErrorExhaustsAttempts) {
  StubServer server;
  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  RemoteConfig cfg = server.config(2);
  cfg.max_attempts = 3;
  RemoteEmbedder client(cfg);
  try {
    client.embed_text("x");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("3 attempts failed"),
              std::string::npos);
  }
  EXPECT_EQ(server.hits(), 3);
}

TEST(RemoteEmbedder, ClientRejectionIsNotRetried) {
  StubServer server;
  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.status = 404;
  });
  RemoteConfig cfg = server.config(2);
  cfg.max_attempts = 3;
  RemoteEmbedder client(cfg);
  EXPECT_THROW(client.embed_text("x"), DataError);
  EXPECT_EQ(server.hits(), 1);
}

TEST(RemoteEmbedder, MalformedResponsesAreDataErrors) {
  StubServer server;
  RemoteEmbedder client(server.config(3));

  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json at all", "application/json");
  });
  EXPECT_THROW(client.embed_text("x"), DataError);

  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"rows": []})", "application/json");
  });
  EXPECT_THROW(client.embed_text("x"), DataError);

  // Two vectors for one input.
  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors": [[1,2,3],[4,5,6]]})", "application/json");
  });
  EXPECT_THROW(client.embed_text("x"), DataError);

  // Declared dim is 3; the row has 2 entries.
  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors": [[1,2]]})", "application/json");
  });
  try {
    client.embed_text("x");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("disagrees"), std::string::npos);
  }

  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors": [[1,"two",3]]})", "application/json");
  });
  EXPECT_THROW(client.embed_text("x"), DataError);
}

TEST(RemoteEmbedder, ConnectionFailureReportsAttempts) {
  int dead_port;
  {
    StubServer server;
    RemoteConfig probe = server.config(2);
    dead_port = std::stoi(probe.base_url.substr(probe.base_url.rfind(':') + 1));
  }  // server torn down; the port is closed again

  RemoteConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(dead_port);
  cfg.dim = 2;
  cfg.max_attempts = 2;
  cfg.timeout_sec = 2;
  RemoteEmbedder client(cfg);
  try {
    client.embed_text("x");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2 attempts failed"),
              std::string::npos);
  }
}

}  // namespace
}  // namespace visret
