// SPDX-License-Identifier: Apache-2.0
// Random bandit states plus an independent argmax oracle, shared by the
// unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ttlearn/bandit.hpp"

namespace ttlearn::testing {

struct OracleArm {
  std::string id;
  std::optional<std::size_t> parent;  // index into arms
  int visits = 0;
  double each = 0.0;  // return recorded on every visit
};

struct BanditCase {
  double beta = 1.0;
  std::vector<OracleArm> arms;  // registration order
  std::vector<std::size_t> pool;
  int total = 0;
};

inline BanditCase random_case(std::mt19937_64& rng) {
  static constexpr double kBetas[] = {0.0, 0.5, 1.0, 2.0};
  BanditCase c;
  c.beta = kBetas[rng() % 4];
  const std::size_t pool_size = 1 + rng() % 8;
  const std::size_t n_arms = pool_size + rng() % 4;
  // Integer means make exact score ties common enough to exercise the tie-break.
  const bool integral = rng() % 2 == 0;
  std::uniform_real_distribution<double> mean_dist(-50.0, 50.0);
  for (std::size_t i = 0; i < n_arms; ++i) {
    OracleArm a;
    a.id = "c" + std::to_string(i);
    if (i > 0 && rng() % 3 != 0) a.parent = rng() % i;
    a.visits = rng() % 3 == 0 ? 0 : static_cast<int>(rng() % 21);
    const double mean = integral ? static_cast<double>(static_cast<int>(rng() % 101) - 50) : mean_dist(rng);
    a.each = mean;
    c.total += a.visits;
    c.arms.push_back(a);
  }
  if (c.total == 0) {
    auto& a = c.arms[rng() % n_arms];
    a.visits = 1;
    c.total = 1;
  }
  std::vector<std::size_t> idx(n_arms);
  for (std::size_t i = 0; i < n_arms; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  c.pool.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(pool_size));
  return c;
}

inline BanditState build_state(const BanditCase& c) {
  BanditState s(c.beta);
  for (const auto& a : c.arms) {
    s.register_config(a.id, a.parent ? std::optional<ConfigId>(c.arms[*a.parent].id) : std::nullopt);
  }
  for (const auto& a : c.arms) {
    for (int v = 0; v < a.visits; ++v) s.record_result(a.id, a.each);
  }
  return s;
}

inline double oracle_mean(const BanditCase& c, const OracleArm& a) {
  auto mean_of = [&](const OracleArm& x) {
    // Same accumulation as record_result so means agree bit for bit.
    double sum = 0.0;
    for (int v = 0; v < x.visits; ++v) sum += x.each;
    return sum / x.visits;
  };
  if (a.visits > 0) return mean_of(a);
  if (a.parent && c.arms[*a.parent].visits > 0) return mean_of(c.arms[*a.parent]);
  return 0.0;
}

inline double oracle_score(const BanditCase& c, const OracleArm& a) {
  return oracle_mean(c, a) + c.beta * std::sqrt(std::log(static_cast<double>(c.total)) / (1.0 + a.visits));
}

/// Exhaustive argmax: highest score, then fewest visits, then earliest registration.
inline std::string oracle_select(const BanditCase& c) {
  std::size_t best = c.pool.front();
  for (std::size_t i : c.pool) {
    const double si = oracle_score(c, c.arms[i]);
    const double sb = oracle_score(c, c.arms[best]);
    if (si > sb ||
        (si == sb && (c.arms[i].visits < c.arms[best].visits ||
                      (c.arms[i].visits == c.arms[best].visits && i < best)))) {
      best = i;
    }
  }
  return c.arms[best].id;
}

inline std::vector<ConfigId> pool_ids(const BanditCase& c) {
  std::vector<ConfigId> ids;
  for (std::size_t i : c.pool) ids.push_back(c.arms[i].id);
  return ids;
}

}  // namespace ttlearn::testing
