#include "visret/index.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "support/tmpdir.hpp"
#include "visret/errors.hpp"
#include "visret/rng.hpp"
#include "visret/vec.hpp"

namespace visret {
namespace {

using testing_support::TmpDir;

std::string padded_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "id%04d", i);
  return buf;
}

// N unit vectors with sortable ids; a few deliberate duplicates when
// `with_ties` so the id tie-break is exercised.
VectorIndex random_index(int n, int dim, uint64_t seed, bool with_ties = false) {
  std::vector<std::string> ids;
  std::vector<float> matrix;
  SplitMix64 rng(seed);
  std::vector<float> v(dim);
  for (int i = 0; i < n; ++i) {
    if (with_ties && i % 10 == 9) {
      // Duplicate the previous row bit-for-bit.
      matrix.insert(matrix.end(), matrix.end() - dim, matrix.end());
    } else {
      for (auto& x : v) x = static_cast<float>(rng.uniform_pm1());
      l2_normalize(v);
      matrix.insert(matrix.end(), v.begin(), v.end());
    }
    ids.push_back(padded_id(i));
  }
  return VectorIndex(std::move(ids), std::move(matrix),
                     static_cast<uint32_t>(dim));
}

EmbeddingVector random_unit(int dim, SplitMix64& rng) {
  EmbeddingVector v(dim);
  for (auto& x : v) x = static_cast<float>(rng.uniform_pm1());
  l2_normalize(v);
  return v;
}

TEST(IndexBuild, ValidatesShapeIdsAndNorms) {
  std::vector<float> one{1.0f, 0.0f};
  EXPECT_NO_THROW(VectorIndex({"a"}, one, 2));
  // Size mismatch.
  EXPECT_THROW(VectorIndex({"a", "b"}, one, 2), DataError);
  // Duplicate ids.
  std::vector<float> two{1.0f, 0.0f, 0.0f, 1.0f};
  EXPECT_THROW(VectorIndex({"a", "a"}, two, 2), DataError);
  // Non-unit row.
  std::vector<float> long_row{3.0f, 4.0f};
  EXPECT_THROW(VectorIndex({"a"}, long_row, 2), DataError);
}

TEST(IndexSearch, SelfRetrievalScoresOne) {
  VectorIndex index = random_index(50, 16, 1);
  EmbeddingVector q = index.vector_of("id0007");
  auto hits = index.top_k(q, 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, "id0007");
  EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
  EXPECT_EQ(hits[0].rank, 1);
}

TEST(IndexSearch, MatchesBruteForceOracle) {
  VectorIndex index = random_index(1000, 64, 2);
  std::vector<std::vector<float>> rows;
  for (size_t i = 0; i < index.size(); ++i) {
    rows.emplace_back(index.row(i), index.row(i) + index.dim());
  }

  SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingVector q = random_unit(64, rng);
    for (int k : {1, 10, 100}) {
      auto got = index.top_k(q, k);
      auto want = oracle::top_k(index.ids(), rows, q, k);
      ASSERT_EQ(got.size(), want.size());
      for (size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(got[i].id, want[i].id) << "trial " << trial << " k=" << k;
        EXPECT_NEAR(got[i].score, want[i].score, 1e-12);
        EXPECT_EQ(got[i].rank, static_cast<int>(i) + 1);
      }
    }
  }
}

TEST(IndexSearch, TiesBreakByAscendingId) {
  // Two bitwise-equal vectors under different ids.
  std::vector<float> matrix{1, 0, 1, 0, 0, 1};
  VectorIndex index({"zz", "aa", "mm"}, matrix, 2);
  auto hits = index.top_k({1.0f, 0.0f}, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].id, "aa");
  EXPECT_EQ(hits[1].id, "zz");
  EXPECT_EQ(hits[2].id, "mm");
}

TEST(IndexSearch, TieBreakUnderDuplicatesMatchesOracle) {
  VectorIndex index = random_index(200, 8, 4, /*with_ties=*/true);
  std::vector<std::vector<float>> rows;
  for (size_t i = 0; i < index.size(); ++i) {
    rows.emplace_back(index.row(i), index.row(i) + index.dim());
  }
  SplitMix64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    // Query equal to a stored duplicate row maximizes tie pressure.
    EmbeddingVector q = index.vector_of(padded_id(9));
    auto got = index.top_k(q, 20);
    auto want = oracle::top_k(index.ids(), rows, q, 20);
    ASSERT_EQ(got.size(), want.size());
    for (size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(got[i].id, want[i].id) << i;
    }
    q = random_unit(8, rng);
  }
}

TEST(IndexSearch, ExclusionsNeverReturned) {
  VectorIndex index = random_index(100, 16, 6);
  IdSet exclude{"id0000", "id0050", "id0099"};
  EmbeddingVector q = index.vector_of("id0050");
  auto hits = index.top_k(q, 100, exclude);
  EXPECT_EQ(hits.size(), 97u);
  for (const auto& h : hits) EXPECT_EQ(exclude.count(h.id), 0u) << h.id;
}

TEST(IndexSearch, SmallCorpusReturnsFewerThanK) {
  VectorIndex index = random_index(5, 8, 7);
  auto hits = index.top_k(index.vector_of("id0000"), 50);
  EXPECT_EQ(hits.size(), 5u);
}

TEST(IndexSearch, ScoreBoundsAndRankMonotonicity) {
  VectorIndex index = random_index(300, 32, 8);
  SplitMix64 rng(9);
  EmbeddingVector q = random_unit(32, rng);
  auto hits = index.top_k(q, 300);
  for (size_t i = 0; i < hits.size(); ++i) {
    EXPECT_GE(hits[i].score, -1.0 - 1e-6);
    EXPECT_LE(hits[i].score, 1.0 + 1e-6);
    if (i > 0) EXPECT_LE(hits[i].score, hits[i - 1].score);
  }
}

TEST(IndexSearch, DimensionMismatchThrows) {
  VectorIndex index = random_index(10, 8, 10);
  EXPECT_THROW(index.top_k({1.0f, 0.0f}, 1), std::invalid_argument);
  EXPECT_THROW(index.top_k(index.vector_of("id0000"), 0),
               std::invalid_argument);
}

TEST(IndexSearch, BatchEqualsSequential) {
  VectorIndex index = random_index(400, 16, 11);
  SplitMix64 rng(12);
  std::vector<EmbeddingVector> queries;
  std::vector<IdSet> excludes;
  for (int i = 0; i < 100; ++i) {
    queries.push_back(random_unit(16, rng));
    IdSet ex;
    if (i % 3 == 0) ex.insert(padded_id(static_cast<int>(rng.uniform_below(400))));
    excludes.push_back(std::move(ex));
  }

  for (int threads : {1, 8}) {
    auto batch = index.batch_top_k(queries, 7, excludes, threads);
    ASSERT_EQ(batch.size(), queries.size());
    for (size_t i = 0; i < queries.size(); ++i) {
      auto single = index.top_k(queries[i], 7, excludes[i]);
      ASSERT_EQ(batch[i].size(), single.size()) << i;
      for (size_t j = 0; j < single.size(); ++j) {
        EXPECT_EQ(batch[i][j].id, single[j].id);
        EXPECT_EQ(batch[i][j].score, single[j].score);
      }
    }
  }

  // Absent excludes behave like empty sets.
  auto none = index.batch_top_k(queries, 7, {}, 1);
  std::vector<IdSet> empties(queries.size());
  auto empty = index.batch_top_k(queries, 7, empties, 1);
  ASSERT_EQ(none.size(), empty.size());
  for (size_t i = 0; i < none.size(); ++i) {
    ASSERT_EQ(none[i].size(), empty[i].size());
    for (size_t j = 0; j < none[i].size(); ++j) {
      EXPECT_EQ(none[i][j].id, empty[i][j].id);
    }
  }
}

TEST(IndexIo, SaveLoadPreservesResults) {
  TmpDir tmp;
  VectorIndex index = random_index(64, 16, 13);
  index.save(tmp.str("index.vire"));
  VectorIndex loaded = VectorIndex::load(tmp.str("index.vire"));
  EXPECT_EQ(loaded.size(), index.size());
  EXPECT_EQ(loaded.dim(), index.dim());

  SplitMix64 rng(14);
  EmbeddingVector q = random_unit(16, rng);
  auto a = index.top_k(q, 10);
  auto b = loaded.top_k(q, 10);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].score, b[i].score);
  }
}

TEST(IndexBuilders, CaptionAndVisualKeying) {
  std::vector<Screenshot> shots;
  for (int i = 0; i < 6; ++i) {
    shots.push_back(make_screenshot("s" + std::to_string(i),
                                    DomainCategory::kNews,
                                    "img://" + std::to_string(i), 10, 10,
                                    "caption " + std::to_string(i)));
  }
  MockEmbedder backend(3, 16);
  VectorIndex captions = build_caption_index(shots, backend);
  VectorIndex visuals = build_visual_index(shots, backend);
  ASSERT_EQ(captions.size(), shots.size());
  ASSERT_EQ(visuals.size(), shots.size());
  for (const auto& s : shots) {
    EXPECT_EQ(captions.vector_of(s.id), backend.embed_text(s.caption));
    EXPECT_EQ(visuals.vector_of(s.id), backend.embed_screenshot(s));
  }
}

TEST(IndexLookup, RowOfAndContains) {
  VectorIndex index = random_index(10, 8, 15);
  EXPECT_TRUE(index.contains("id0003"));
  EXPECT_FALSE(index.contains("nope"));
  EXPECT_EQ(index.id_at(index.row_of("id0003")), "id0003");
  EXPECT_THROW(index.row_of("nope"), DataError);
}

}  // namespace
}  // namespace visret
