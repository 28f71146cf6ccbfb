#include "visret/run_config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <set>
#include <sstream>
#include <string>

#include "support/tmpdir.hpp"
#include "visret/errors.hpp"
#include "visret/io.hpp"

namespace visret {
namespace {

// setenv/unsetenv wrapper that restores the environment on scope exit.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    ::setenv(name, value, 1);
  }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

TEST(RunConfig, DefaultsMatchTheDocumentedTable) {
  RunConfig cfg;
  EXPECT_EQ(cfg.get_int("dim"), 64);
  EXPECT_EQ(cfg.get_int("threads"), 1);
  EXPECT_EQ(cfg.get_u64("seed"), 0u);
  EXPECT_EQ(cfg.get("backend"), "mock");
  EXPECT_EQ(cfg.get_int("mining.q_top"), 15);
  EXPECT_EQ(cfg.get_int("mining.t_exclude_top"), 3);
  EXPECT_EQ(cfg.get_int("mining.sample_count"), 8);
  EXPECT_DOUBLE_EQ(cfg.get_double("filter.max_aspect"), 9.0);
  EXPECT_EQ(cfg.get_int("filter.min_caption_chars"), 100);
  EXPECT_DOUBLE_EQ(cfg.get_double("train.lr"), 5e-6);
  EXPECT_DOUBLE_EQ(cfg.get_double("train.tau"), 0.05);
  EXPECT_EQ(cfg.get("train.negative_mode"), "shared");
  EXPECT_EQ(cfg.get_int("resize.max_tokens"), 2500);
  EXPECT_EQ(cfg.get_int("bench.target_size"), 5000);
  EXPECT_TRUE(cfg.has("remote.endpoint"));
  EXPECT_FALSE(cfg.has("made.up"));

  // Every documented key is present, and nothing else.
  std::set<std::string> documented;
  for (const auto& key : known_config_keys()) documented.insert(key.name);
  std::istringstream in(cfg.echo());
  std::string line;
  std::set<std::string> echoed;
  while (std::getline(in, line)) {
    echoed.insert(line.substr(0, line.find('=')));
  }
  EXPECT_EQ(echoed, documented);
}

TEST(RunConfig, FileSectionsCommentsAndWhitespace) {
  RunConfig cfg;
  cfg.apply_text("# a comment line\n"
                 "dim = 32   # trailing comment\n"
                 "\n"
                 "[mining]\n"
                 "  sample_count=4\n"
                 "q_top = 6\n"
                 "[train]\r\n"
                 "lr = 0.001\n",
                 "test.cfg");
  EXPECT_EQ(cfg.get_int("dim"), 32);
  EXPECT_EQ(cfg.get_int("mining.sample_count"), 4);
  EXPECT_EQ(cfg.get_int("mining.q_top"), 6);
  EXPECT_DOUBLE_EQ(cfg.get_double("train.lr"), 0.001);
  EXPECT_EQ(cfg.get_int("mining.t_top"), 10);  // untouched default
}

TEST(RunConfig, UnknownKeysAreRejectedWithTheirOrigin) {
  RunConfig cfg;
  try {
    cfg.apply_text("dim = 32\nnot_a_key = 1\n", "bad.cfg");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("bad.cfg line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("not_a_key"), std::string::npos) << msg;
  }

  EXPECT_THROW(cfg.set("mystery", "1"), DataError);
  EXPECT_THROW(cfg.get("mystery"), DataError);

  // Section prefix applies to the lookup, so a valid bare key under the
  // wrong section is unknown too.
  EXPECT_THROW(cfg.apply_text("[mining]\ndim = 8\n", "sect.cfg"), DataError);

  EXPECT_THROW(cfg.apply_text("[mining\nq_top = 2\n", "trunc.cfg"), DataError);
  EXPECT_THROW(cfg.apply_text("just words\n", "noeq.cfg"), DataError);
}

TEST(RunConfig, PrecedenceIsDefaultsFileEnvThenSet) {
  ScopedEnv env_threads("VISRET_THREADS", "5");
  ScopedEnv env_sample("VISRET_MINING_SAMPLE_COUNT", "12");

  RunConfig cfg;
  cfg.apply_text("threads = 3\nseed = 11\n[mining]\nsample_count = 9\n",
                 "file.cfg");
  EXPECT_EQ(cfg.get_int("threads"), 3);  // file beats default

  cfg.apply_env();
  EXPECT_EQ(cfg.get_int("threads"), 5);              // env beats file
  EXPECT_EQ(cfg.get_int("mining.sample_count"), 12); // dots become underscores
  EXPECT_EQ(cfg.get_u64("seed"), 11u);               // env without var keeps file

  cfg.set("threads", "8");
  EXPECT_EQ(cfg.get_int("threads"), 8);  // explicit set beats env
}

TEST(RunConfig, TypedGettersValidateTheirValues) {
  RunConfig cfg;
  cfg.set("dim", "abc");
  EXPECT_THROW(cfg.get_int("dim"), DataError);
  cfg.set("dim", "12pt");
  EXPECT_THROW(cfg.get_int("dim"), DataError);
  cfg.set("dim", "48");
  EXPECT_EQ(cfg.get_int("dim"), 48);

  cfg.set("seed", "7 beans");
  EXPECT_THROW(cfg.get_u64("seed"), DataError);
  cfg.set("seed", "18446744073709551615");
  EXPECT_EQ(cfg.get_u64("seed"), 18446744073709551615ull);

  cfg.set("train.lr", "fast");
  EXPECT_THROW(cfg.get_double("train.lr"), DataError);
  cfg.set("train.lr", "2.5e-4");
  EXPECT_DOUBLE_EQ(cfg.get_double("train.lr"), 2.5e-4);

  cfg.set("backend", "maybe");
  EXPECT_THROW(cfg.get_bool("backend"), DataError);
  for (const char* t : {"true", "1", "yes"}) {
    cfg.set("backend", t);
    EXPECT_TRUE(cfg.get_bool("backend")) << t;
  }
  for (const char* f : {"false", "0", "no"}) {
    cfg.set("backend", f);
    EXPECT_FALSE(cfg.get_bool("backend")) << f;
  }
}

TEST(RunConfig, EchoIsSortedAndRoundTrips) {
  RunConfig cfg;
  cfg.set("dim", "32");
  cfg.set("mining.q_top", "5");
  std::string echo = cfg.echo();

  // Sorted lines, key=value, trailing newline.
  std::istringstream in(echo);
  std::string line;
  std::string prev;
  size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_LT(prev, line);
    EXPECT_NE(line.find('='), std::string::npos);
    prev = line;
  }
  EXPECT_EQ(lines, known_config_keys().size());
  EXPECT_NE(echo.find("dim=32\n"), std::string::npos);
  EXPECT_NE(echo.find("mining.q_top=5\n"), std::string::npos);

  // An echo is itself a loadable config that reproduces the same state.
  RunConfig replayed;
  replayed.apply_text(echo, "echo");
  EXPECT_EQ(replayed.echo(), echo);
}

TEST(RunConfig, FromFileAndEchoToDisk) {
  testing_support::TmpDir tmp;
  atomic_write(tmp.str("run.cfg"), "dim = 16\n[bench]\nk = 5\n");
  RunConfig cfg = RunConfig::from_file(tmp.str("run.cfg"));
  EXPECT_EQ(cfg.get_int("dim"), 16);
  EXPECT_EQ(cfg.get_int("bench.k"), 5);

  cfg.echo_to(tmp.path().string());
  std::string echoed = read_file(tmp.str("config.echo"));
  EXPECT_EQ(echoed, cfg.echo());

  EXPECT_THROW(RunConfig::from_file(tmp.str("absent.cfg")), DataError);
}

}  // namespace
}  // namespace visret
