#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "botarms/dataset.h"
#include "botarms/error.h"
#include "botarms/linearize.h"
#include "oracles.h"
#include "support.h"

namespace botarms {
namespace {

using testing::make_user;

TEST(VerbalizeMetadata, WorkedExample) {
  const UserRecord u = make_user("a", 309, 1412, 1745, false, 12, "");
  EXPECT_EQ(verbalize_metadata(u),
            "Username: <redacted>  Follower count: 309 Following count: 1412 "
            "Tweet count: 1745 Verified: False Active years: 12 years");
}

TEST(VerbalizeMetadata, ZerosAndVerifiedCapitalized) {
  const UserRecord u = make_user("a", 0, 0, 0, true, 0, "", std::nullopt, "x");
  EXPECT_EQ(verbalize_metadata(u),
            "Username: x  Follower count: 0 Following count: 0 Tweet count: 0 "
            "Verified: True Active years: 0 years");
}

TEST(UserBlock, MetadataThenDescription) {
  const UserRecord u = make_user("a", 1, 2, 3, false, 4, "hi there", std::nullopt, "n");
  EXPECT_EQ(render_user_block(u), verbalize_metadata(u) + "\nDescription: hi there");
  EXPECT_EQ(render_user_line(u), verbalize_metadata(u) + " Description: hi there");
}

TEST(RepresentativeText, FallsBackInOrder) {
  UserRecord u = make_user("a", 1, 2, 3, false, 4, "desc");
  u.posts = {"  ", "post one"};
  EXPECT_EQ(representative_text(u), "desc");
  u.description = "";
  EXPECT_EQ(representative_text(u), "post one");
  u.posts.clear();
  EXPECT_EQ(representative_text(u), verbalize_metadata(u));
}

TEST(Cosine, IdentityOrthogonalAndHandValue) {
  EXPECT_NEAR(cosine_similarity({{3, -1, 2}}, {{3, -1, 2}}), 1.0, 1e-12);
  EXPECT_EQ(cosine_similarity({{1, 0}}, {{0, 1}}), 0.0);
  const double expected = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
  EXPECT_NEAR(cosine_similarity({{1, 2, 3}}, {{4, 5, 6}}), expected, 1e-9);
  EXPECT_NEAR(expected, 0.974631846, 1e-9);
}

TEST(Cosine, ErrorsOnMismatchAndZeroNorm) {
  try {
    cosine_similarity({{1, 2}}, {{1, 2, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  try {
    cosine_similarity({{0, 0}}, {{1, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
}

TEST(HashedEmbedder, CountsTokensIntoBuckets) {
  const HashedBagOfWordsEmbedder embedder(256);
  const EmbeddingVector v = embedder.embed("Cat cat dog");
  ASSERT_EQ(v.dim(), 256u);
  EXPECT_EQ(v.values[HashedBagOfWordsEmbedder::bucket("cat", 256)] +
                (HashedBagOfWordsEmbedder::bucket("cat", 256) ==
                         HashedBagOfWordsEmbedder::bucket("dog", 256)
                     ? -1.0
                     : 0.0),
            2.0);
  double sum = 0;
  for (double x : v.values) sum += x;
  EXPECT_EQ(sum, 3.0);
}

std::vector<UserRecord> neighbor_pool() {
  return {make_user("n1", 0, 0, 0, false, 0, "coffee hiking books"),
          make_user("n2", 0, 0, 0, false, 0, "crypto giveaway"),
          make_user("n3", 0, 0, 0, false, 0, "coffee books garden music"),
          make_user("n4", 0, 0, 0, false, 0, "hiking"),
          make_user("n5", 0, 0, 0, false, 0, "music travel coffee"),
          make_user("n6", 0, 0, 0, false, 0, "books books books coffee"),
          make_user("n7", 0, 0, 0, false, 0, "nft airdrop hiking"),
          make_user("n8", 0, 0, 0, false, 0, "coffee hiking books")};
}

std::vector<const UserRecord*> ptrs(const std::vector<UserRecord>& users) {
  std::vector<const UserRecord*> out;
  for (const auto& u : users) out.push_back(&u);
  return out;
}

TEST(PermuteNeighbors, EmptyInput) {
  const UserRecord t = make_user("t", 0, 0, 0, false, 0, "x");
  const HashedBagOfWordsEmbedder e;
  EXPECT_TRUE(permute_neighbors(t, {}, PermMode::kRandom, 1, nullptr).entries.empty());
  EXPECT_TRUE(permute_neighbors(t, {}, PermMode::kAttention, 1, &e).entries.empty());
}

TEST(PermuteNeighbors, RandomIsSeededPermutation) {
  const auto pool = neighbor_pool();
  const auto p = ptrs(pool);
  const UserRecord t = make_user("t", 0, 0, 0, false, 0, "x");
  auto order = [&](std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& e :
         permute_neighbors(t, p, PermMode::kRandom, seed, nullptr, 100).entries) {
      ids.push_back(e.user->user_id);
      EXPECT_FALSE(e.similarity.has_value());
    }
    return ids;
  };
  EXPECT_EQ(order(5), order(5));
  auto sorted = order(5);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> all;
  for (const auto& u : pool) all.push_back(u.user_id);
  EXPECT_EQ(sorted, all);
  bool differs = false;
  for (std::uint64_t s = 0; s < 10; ++s) differs |= order(s) != order(5);
  EXPECT_TRUE(differs);
}

TEST(PermuteNeighbors, RandomTruncatesToFive) {
  const auto pool = neighbor_pool();
  const UserRecord t = make_user("t", 0, 0, 0, false, 0, "x");
  EXPECT_EQ(permute_neighbors(t, ptrs(pool), PermMode::kRandom, 3, nullptr)
                .entries.size(),
            5u);
}

// The attention ordering must equal sorting by independently computed cosine
// scores (descending, ties by id), truncated to five.
TEST(PermuteNeighbors, AttentionMatchesBruteForce) {
  const HashedBagOfWordsEmbedder embedder(64);
  const auto pool = neighbor_pool();
  std::mt19937 gen(4);
  for (int round = 0; round < 30; ++round) {
    std::vector<UserRecord> subset;
    for (const auto& u : pool) {
      if (gen() % 3) subset.push_back(u);
    }
    const UserRecord t =
        make_user("t", 0, 0, 0, false, 0, round % 2 ? "coffee hiking" : "books music coffee");
    std::vector<std::pair<double, std::string>> expected;
    const auto tv = embedder.embed(t.description).values;
    for (const auto& u : subset) {
      expected.push_back({oracle::cosine(tv, embedder.embed(u.description).values),
                          u.user_id});
    }
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    if (expected.size() > 5) expected.resize(5);
    const auto got =
        permute_neighbors(t, ptrs(subset), PermMode::kAttention, 0, &embedder);
    ASSERT_EQ(got.entries.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(got.entries[i].user->user_id, expected[i].second);
      EXPECT_NEAR(*got.entries[i].similarity, expected[i].first, 1e-12);
    }
    for (std::size_t i = 1; i < got.entries.size(); ++i) {
      EXPECT_GE(*got.entries[i - 1].similarity, *got.entries[i].similarity);
    }
  }
}

TEST(PermuteNeighbors, AttentionTieBreaksById) {
  const HashedBagOfWordsEmbedder embedder;
  const auto pool = neighbor_pool();  // n1 and n8 share a description
  const UserRecord t = make_user("t", 0, 0, 0, false, 0, "coffee hiking books");
  const auto got = permute_neighbors(t, ptrs(pool), PermMode::kAttention, 0, &embedder);
  EXPECT_EQ(got.entries[0].user->user_id, "n1");
  EXPECT_EQ(got.entries[1].user->user_id, "n8");
}

TEST(PermuteNeighbors, AttentionNeedsEmbedder) {
  const auto pool = neighbor_pool();
  const UserRecord t = make_user("t", 0, 0, 0, false, 0, "x");
  EXPECT_ANY_THROW(permute_neighbors(t, ptrs(pool), PermMode::kAttention, 0, nullptr));
}

class FailingEmbedder : public Embedder {
 public:
  EmbeddingVector embed(std::string_view text) const override {
    if (text.find("crypto") != std::string_view::npos) {
      throw Error(ErrorCode::kTransport, "embedding service down");
    }
    return {{1.0, 2.0}};
  }
};

TEST(PermuteNeighbors, EmbedderFailureNamesNeighbor) {
  const auto pool = neighbor_pool();
  const UserRecord t = make_user("t", 0, 0, 0, false, 0, "x");
  const FailingEmbedder e;
  try {
    permute_neighbors(t, ptrs(pool), PermMode::kAttention, 0, &e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_NE(std::string(err.what()).find("n2"), std::string::npos) << err.what();
  }
}

TEST(StructureBlock, HeadersAndEmptyLists) {
  SocialDataset d;
  d.add_user(make_user("t", 1, 2, 3, false, 4, "desc"), Split::kTest);
  const UserRecord& t = d.user("t");
  const NeighborOrdering none;
  const std::string rand_block =
      render_structure_block(t, none, none, PermMode::kRandom, d);
  EXPECT_EQ(rand_block,
            "These users follow the target user:\n\nThe target user follows "
            "these users:\n\nTarget user:\n\n" +
                render_user_block(t) + "\nLabel:");
  const std::string att_block =
      render_structure_block(t, none, none, PermMode::kAttention, d);
  EXPECT_NE(att_block.find("These users follow the target user, from most "
                           "related to least related:"),
            std::string::npos);
}

TEST(StructureBlock, LabelsOnlyForTrainingNeighbors) {
  SocialDataset d;
  d.add_user(make_user("t", 1, 2, 3, false, 4, "desc"), Split::kTest);
  d.add_user(make_user("a", 1, 2, 3, false, 4, "known", Label::kBot), Split::kTrain);
  d.add_user(make_user("b", 1, 2, 3, false, 4, "hidden", Label::kHuman), Split::kTest);
  d.add_edge("a", "t");
  d.add_edge("b", "t");
  const Neighborhood hood = neighbor_sets(d, "t");
  const auto followers =
      permute_neighbors(d.user("t"), hood.followers, PermMode::kRandom, 0, nullptr);
  const std::string block =
      render_structure_block(d.user("t"), followers, {}, PermMode::kRandom, d);
  EXPECT_NE(block.find("Description: known\nLabel: bot"), std::string::npos);
  EXPECT_EQ(block.find("Description: hidden\nLabel:"), std::string::npos) << block;
  EXPECT_EQ(block, render_structure_block(d.user("t"), followers, {},
                                          PermMode::kRandom, d));
}

}  // namespace
}  // namespace botarms
