// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <gtest/gtest.h>

#include "bandit_oracle.hpp"
#include "ttlearn/bandit.hpp"

namespace ttlearn {
namespace {

TEST(RecordResult, Examples) {
  BanditState s;
  s.register_config("a");
  s.record_result("a", 30);
  EXPECT_EQ(s.stats("a").visits, 1);
  EXPECT_DOUBLE_EQ(s.stats("a").mean_return, 30.0);
  EXPECT_EQ(s.total_episodes(), 1);

  BanditState t;
  t.register_config("b");
  t.record_result("b", 10);
  t.record_result("b", 20);
  EXPECT_EQ(t.stats("b").visits, 2);
  EXPECT_DOUBLE_EQ(t.stats("b").mean_return, 15.0);
  EXPECT_EQ(t.total_episodes(), 2);
}

TEST(Errors, Kinds) {
  BanditState s;
  s.register_config("a");
  try {
    s.register_config("a");
    FAIL();
  } catch (const BanditError& e) {
    EXPECT_EQ(e.kind(), BanditError::Kind::DuplicateConfig);
  }
  try {
    s.record_result("zzz", 1);
    FAIL();
  } catch (const BanditError& e) {
    EXPECT_EQ(e.kind(), BanditError::Kind::UnknownConfig);
  }
  try {
    (void)s.ucb_score("a");
    FAIL();
  } catch (const BanditError& e) {
    EXPECT_EQ(e.kind(), BanditError::Kind::NoEpisodes);
  }
  s.record_result("a", 1);
  try {
    (void)s.select_next({});
    FAIL();
  } catch (const BanditError& e) {
    EXPECT_EQ(e.kind(), BanditError::Kind::EmptyPool);
  }
  EXPECT_THROW(BanditState(-1.0), std::invalid_argument);
}

TEST(UcbScore, BetaZeroIsMean) {
  BanditState s(0.0);
  s.register_config("a");
  s.record_result("a", 12.5);
  s.record_result("a", 7.5);
  EXPECT_DOUBLE_EQ(s.ucb_score("a"), 10.0);
}

BanditState fallback_parent() {
  BanditState s(1.0);
  s.register_config("p");
  for (int i = 0; i < 3; ++i) s.record_result("p", 10);
  s.register_config("c", "p");
  return s;
}

TEST(UcbScore, ParentAndFreshChild) {
  const auto s = fallback_parent();
  EXPECT_NEAR(s.ucb_score("p"), 10.524073536984103, 1e-9);
  EXPECT_NEAR(s.ucb_score("p"), 10 + std::sqrt(std::log(3.0) / 4), 1e-12);
  EXPECT_NEAR(s.ucb_score("c"), 11.048147073968206, 1e-9);
  EXPECT_DOUBLE_EQ(s.prior_or_mean("c"), 10.0);
}

TEST(SelectNext, FallBackToParent) {
  auto s = fallback_parent();
  const std::vector<ConfigId> pool{"p", "c"};
  EXPECT_EQ(s.select_next(pool), "c");
  s.record_result("c", 0);
  EXPECT_NEAR(s.ucb_score("c"), 0.8325546111576977, 1e-9);
  EXPECT_NEAR(s.ucb_score("p"), 10.588705011257737, 1e-9);
  EXPECT_EQ(s.select_next(pool), "p");
}

TEST(SelectNext, PoolOfOne) {
  BanditState s;
  s.register_config("x");
  s.register_config("y");
  s.record_result("y", 100);
  const std::vector<ConfigId> pool{"x"};
  EXPECT_EQ(s.select_next(pool), "x");
}

TEST(SelectNext, TieBreakFewerVisitsThenRegistration) {
  BanditState s(0.0);
  s.register_config("p");
  s.record_result("p", 5);
  s.register_config("c1", "p");
  s.register_config("c2", "p");
  const std::vector<ConfigId> pool{"c2", "p", "c1"};
  EXPECT_EQ(s.select_next(pool), "c1");
}

TEST(SelectNext, OrphanPriorIsZero) {
  BanditState s(0.0);
  s.register_config("p");
  s.register_config("c", "p");
  s.register_config("other");
  s.record_result("other", -1);
  EXPECT_DOUBLE_EQ(s.prior_or_mean("c"), 0.0);
  const std::vector<ConfigId> pool{"other", "c"};
  EXPECT_EQ(s.select_next(pool), "c");
}

TEST(SelectNext, MatchesOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto c = testing::random_case(rng);
    const auto s = testing::build_state(c);
    const auto ids = testing::pool_ids(c);
    ASSERT_EQ(s.select_next(ids), testing::oracle_select(c)) << "trial " << trial;
  }
}

TEST(BanditJson, RoundTripAndValidation) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = testing::build_state(testing::random_case(rng));
    const auto back = BanditState::from_json(nlohmann::json::parse(s.to_json().dump()));
    EXPECT_EQ(back, s);
  }
  auto j = nlohmann::json::parse(fallback_parent().to_json().dump());
  j["total_episodes"] = 7;
  EXPECT_THROW(BanditState::from_json(j), std::runtime_error);
  j = nlohmann::json::parse(fallback_parent().to_json().dump());
  j["configs"][0]["mean_return"] = 3.0;
  EXPECT_THROW(BanditState::from_json(j), std::runtime_error);
}

}  // namespace
}  // namespace ttlearn
