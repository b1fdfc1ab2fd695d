// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/bandit.hpp"

#include <cmath>

namespace ttlearn {

BanditState::BanditState(double beta) : beta_(beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
}

void BanditState::register_config(const ConfigId& id, std::optional<ConfigId> parent_id) {
  if (index_.count(id)) {
    throw BanditError(BanditError::Kind::DuplicateConfig, "config already registered: " + id);
  }
  index_.emplace(id, stats_.size());
  order_.push_back(id);
  CandidateStats s;
  s.config_id = id;
  s.parent_id = std::move(parent_id);
  stats_.push_back(std::move(s));
}

bool BanditState::contains(const ConfigId& id) const { return index_.count(id) != 0; }

std::size_t BanditState::position(const ConfigId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw BanditError(BanditError::Kind::UnknownConfig, "unknown config: " + id);
  }
  return it->second;
}

const CandidateStats& BanditState::stats(const ConfigId& id) const { return stats_[position(id)]; }

void BanditState::record_result(const ConfigId& id, double episode_return) {
  auto& s = stats_[position(id)];
  s.visits += 1;
  s.sum_return += episode_return;
  s.mean_return = s.sum_return / s.visits;
  total_episodes_ += 1;
}

double BanditState::prior_or_mean(const ConfigId& id) const {
  const auto& s = stats_[position(id)];
  if (s.visits > 0) return s.mean_return;
  if (s.parent_id && contains(*s.parent_id)) {
    const auto& p = stats_[position(*s.parent_id)];
    if (p.visits > 0) return p.mean_return;
  }
  return 0.0;
}

double BanditState::ucb_score(const ConfigId& id) const {
  const auto& s = stats_[position(id)];
  if (total_episodes_ < 1) {
    throw BanditError(BanditError::Kind::NoEpisodes, "ucb_score needs at least one episode");
  }
  const double bonus = std::sqrt(std::log(static_cast<double>(total_episodes_)) / (1.0 + s.visits));
  return prior_or_mean(id) + beta_ * bonus;
}

ConfigId BanditState::select_next(std::span<const ConfigId> pool) const {
  if (pool.empty()) throw BanditError(BanditError::Kind::EmptyPool, "empty candidate pool");
  std::size_t best = position(pool.front());
  double best_score = ucb_score(pool.front());
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const std::size_t pos = position(pool[i]);
    const double score = ucb_score(pool[i]);
    bool better = score > best_score;
    if (score == best_score) {
      const int v = stats_[pos].visits;
      const int bv = stats_[best].visits;
      better = v < bv || (v == bv && pos < best);
    }
    if (better) {
      best = pos;
      best_score = score;
    }
  }
  return stats_[best].config_id;
}

nlohmann::ordered_json BanditState::to_json() const {
  nlohmann::ordered_json j;
  j["beta"] = beta_;
  j["total_episodes"] = total_episodes_;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : stats_) {
    arr.push_back({{"config_id", s.config_id},
                   {"parent_id", s.parent_id ? nlohmann::ordered_json(*s.parent_id) : nlohmann::ordered_json(nullptr)},
                   {"visits", s.visits},
                   {"sum_return", s.sum_return},
                   {"mean_return", s.mean_return}});
  }
  j["configs"] = std::move(arr);
  return j;
}

BanditState BanditState::from_json(const nlohmann::json& j) {
  try {
    BanditState b(j.at("beta").get<double>());
    int visits = 0;
    for (const auto& r : j.at("configs")) {
      std::optional<ConfigId> parent;
      if (!r.at("parent_id").is_null()) parent = r.at("parent_id").get<std::string>();
      b.register_config(r.at("config_id").get<std::string>(), std::move(parent));
      auto& s = b.stats_.back();
      s.visits = r.at("visits").get<int>();
      s.sum_return = r.at("sum_return").get<double>();
      s.mean_return = r.at("mean_return").get<double>();
      if (s.visits < 0 || (s.visits > 0 && s.mean_return != s.sum_return / s.visits)) {
        throw std::runtime_error("inconsistent stats for " + s.config_id);
      }
      visits += s.visits;
    }
    b.total_episodes_ = j.at("total_episodes").get<int>();
    if (b.total_episodes_ != visits) {
      throw std::runtime_error("total_episodes does not match the sum of visits");
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed stats file: ") + e.what());
  } catch (const BanditError& e) {
    throw std::runtime_error(std::string("malformed stats file: ") + e.what());
  }
}

}  // namespace ttlearn
