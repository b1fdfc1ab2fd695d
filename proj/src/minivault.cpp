// SPDX-License-Identifier: Apache-2.0
#include <istream>
#include <ostream>
#include <string>

#include "ttlearn/environment.hpp"
#include "ttlearn/io.hpp"
#include "ttlearn/memory.hpp"

namespace ttlearn {

namespace {

constexpr std::string_view kUnknownReply = "you can't do that. ";
constexpr std::string_view kScoreTen = "[your score has just gone up by ten points.]";
constexpr std::string_view kScoreForty = "[your score has just gone up by forty points.]";

std::string canonical_direction(const std::string& action) {
  if (action == "n" || action == "go north") return "north";
  if (action == "s" || action == "go south") return "south";
  if (action == "e" || action == "go east") return "east";
  if (action == "w" || action == "go west") return "west";
  return action;
}

}  // namespace

const std::vector<std::string>& minivault_walkthrough() {
  static const std::vector<std::string> route = {
      "west", "take key", "east", "south", "unlock vault with key", "take treasure"};
  return route;
}

MiniVault::MiniVault() { reset(); }

EnvObservation MiniVault::reset() {
  room_ = Room::Lobby;
  has_key_ = false;
  vault_open_ = false;
  treasure_taken_ = false;
  done_ = false;
  score_ = 0.0;
  moves_ = 0;
  return observe(room_description(), 0.0);
}

std::string MiniVault::room_description() const {
  switch (room_) {
    case Room::Lobby:
      return "<< lobby >> you are in the marble lobby of an old bank. a doorway leads west "
             "into a closet, a corridor runs north to an office, and a heavy door to the south "
             "opens onto the vault room.";
    case Room::Closet:
      return std::string("<< closet >> you are in a cramped supply closet. ") +
             (has_key_ ? "" : "there is a key on the floor. ") + "the lobby is back to the east.";
    case Room::Office:
      return "<< office >> a dusty office with an empty desk and a boarded-up window. the only "
             "way out is south.";
    case Room::Street:
      return "<< street >> a quiet street outside the bank.";
    case Room::VaultRoom:
      if (!vault_open_) {
        return "<< vault room >> a massive steel vault fills the far wall. the vault is locked. "
               "the lobby is north.";
      }
      return std::string("<< vault room >> the steel vault stands open. ") +
             (treasure_taken_ ? "the vault is empty. " : "a pile of treasure glitters inside. ") +
             "the lobby is north.";
  }
  return {};
}

EnvObservation MiniVault::observe(std::string text, double reward) const {
  EnvObservation o;
  o.text = std::move(text);
  o.score = score_;
  o.reward = reward;
  o.done = done_;
  o.moves = moves_;
  o.max_score = kMaxScore;
  return o;
}

EnvObservation MiniVault::step(std::string_view raw_action) {
  if (done_) throw EnvError(EnvError::Kind::EpisodeFinished, "episode already finished");
  ++moves_;
  const std::string action = canonical_direction(normalize_state(raw_action));

  auto move_to = [&](Room r) {
    room_ = r;
    return observe(room_description(), 0.0);
  };
  auto unknown = [&] { return observe(std::string(kUnknownReply) + room_description(), 0.0); };
  auto scored = [&](double points, std::string text) {
    score_ += points;
    return observe(std::move(text), points);
  };

  if (action == "look" || action == "l") return observe(room_description(), 0.0);
  if (action == "inventory" || action == "i") {
    return observe(has_key_ ? "you are carrying: a brass key." : "you are empty-handed.", 0.0);
  }

  switch (room_) {
    case Room::Lobby:
      if (action == "west") return move_to(Room::Closet);
      if (action == "north") return move_to(Room::Office);
      if (action == "south") return move_to(Room::VaultRoom);
      break;
    case Room::Closet:
      if (action == "east") return move_to(Room::Lobby);
      if (!has_key_ && (action == "take key" || action == "get key")) {
        has_key_ = true;
        return scored(10.0, "taken. " + std::string(kScoreTen));
      }
      break;
    case Room::Office:
      if (action == "south") return move_to(Room::Lobby);
      break;
    case Room::Street:
      break;
    case Room::VaultRoom:
      if (action == "north") return move_to(Room::Lobby);
      if (!vault_open_ && has_key_ && action == "unlock vault with key") {
        vault_open_ = true;
        return scored(10.0, "the vault swings open. " + std::string(kScoreTen));
      }
      if (vault_open_ && !treasure_taken_ && (action == "take treasure" || action == "get treasure")) {
        treasure_taken_ = true;
        done_ = true;
        return scored(40.0, "you scoop up the treasure. " + std::string(kScoreForty) +
                                " *** you have won ***");
      }
      break;
  }
  return unknown();
}

namespace {

nlohmann::ordered_json encode(const EnvObservation& o, bool with_reward) {
  nlohmann::ordered_json j;
  j["ok"] = true;
  j["obs"] = o.text;
  j["score"] = o.score;
  if (with_reward) j["reward"] = o.reward;
  j["done"] = o.done;
  j["moves"] = o.moves;
  j["max_score"] = o.max_score;
  return j;
}

nlohmann::ordered_json failure(const std::string& what) {
  return {{"ok", false}, {"error", what}};
}

}  // namespace

void serve_protocol(Environment& env, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    nlohmann::ordered_json reply;
    bool quit = false;
    auto req = nlohmann::json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.is_object() || !req.contains("cmd") || !req["cmd"].is_string()) {
      reply = failure("malformed request");
    } else {
      const auto cmd = req["cmd"].get<std::string>();
      try {
        if (cmd == "reset") {
          reply = encode(env.reset(), false);
        } else if (cmd == "step") {
          if (!req.contains("action") || !req["action"].is_string()) {
            reply = failure("step needs a string action");
          } else {
            reply = encode(env.step(req["action"].get<std::string>()), true);
          }
        } else if (cmd == "quit") {
          reply = {{"ok", true}};
          quit = true;
        } else {
          reply = failure("unknown cmd: " + cmd);
        }
      } catch (const std::exception& e) {
        reply = failure(e.what());
      }
    }
    out << dump_json(reply) << '\n' << std::flush;
    if (quit) return;
  }
}

}  // namespace ttlearn
