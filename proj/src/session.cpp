// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "ttlearn/io.hpp"

namespace ttlearn {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFormat = "ttlearn-session/1";

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const ojson& j) { write_file_atomic(path, dump_json(j, 2) + "\n"); }

ojson backend_to_json(const BackendSpec& b) {
  if (b.replay_path) return {{"replay", b.replay_path->string()}};
  return {{"url", b.http.endpoint_url},
          {"model", b.http.model_name},
          {"api_key_env", b.http.api_key_env_var},
          {"timeout_ms", b.http.timeout_ms},
          {"max_retries", b.http.max_retries}};
}

BackendSpec backend_from_json(const nlohmann::json& j) {
  BackendSpec b;
  if (j.contains("replay")) {
    b.replay_path = fs::path(j["replay"].get<std::string>());
    return b;
  }
  b.http.endpoint_url = j.at("url").get<std::string>();
  b.http.model_name = j.at("model").get<std::string>();
  b.http.api_key_env_var = j.at("api_key_env").get<std::string>();
  b.http.timeout_ms = j.at("timeout_ms").get<int>();
  b.http.max_retries = j.at("max_retries").get<int>();
  return b;
}

ojson session_config_to_json(const SessionConfig& sc) {
  return {{"episodes", sc.episodes},
          {"step_cap", sc.step_cap},
          {"children_m", sc.children_m},
          {"beta", sc.beta},
          {"seed", sc.seed},
          {"env", sc.env_mode == EnvMode::Toy ? "toy" : "bridge"},
          {"bridge_cmd", sc.bridge_cmd},
          {"actor_backend", backend_to_json(sc.actor_backend)},
          {"evolver_backend", backend_to_json(sc.evolver_backend)},
          {"initial_prompt", sc.initial_prompt}};
}

SessionConfig session_config_from_json(const nlohmann::json& j) {
  SessionConfig sc;
  sc.episodes = j.at("episodes").get<int>();
  sc.step_cap = j.at("step_cap").get<int>();
  sc.children_m = j.at("children_m").get<int>();
  sc.beta = j.at("beta").get<double>();
  sc.seed = j.at("seed").get<std::uint64_t>();
  sc.env_mode = j.at("env").get<std::string>() == "bridge" ? EnvMode::Bridge : EnvMode::Toy;
  sc.bridge_cmd = j.at("bridge_cmd").get<std::string>();
  sc.actor_backend = backend_from_json(j.at("actor_backend"));
  sc.evolver_backend = backend_from_json(j.at("evolver_backend"));
  sc.initial_prompt = j.at("initial_prompt").get<std::string>();
  return sc;
}

ojson episode_to_json(const EpisodeRecord& r) {
  return {{"episode", r.episode},
          {"config_id", r.config_id},
          {"total_return", r.total_return},
          {"steps", r.steps},
          {"terminated_early", r.terminated_early},
          {"max_score", r.max_score},
          {"children", r.children},
          {"next_config_id", r.next_config_id},
          {"error", r.error}};
}

EpisodeRecord episode_from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  r.episode = j.at("episode").get<int>();
  r.config_id = j.at("config_id").get<std::string>();
  r.total_return = j.at("total_return").get<double>();
  r.steps = j.at("steps").get<int>();
  r.terminated_early = j.at("terminated_early").get<bool>();
  r.max_score = j.at("max_score").get<double>();
  r.children = j.at("children").get<std::vector<std::string>>();
  r.next_config_id = j.at("next_config_id").get<std::string>();
  r.error = j.at("error").get<std::string>();
  return r;
}

/// Mutable state of a session between commits.
struct Runtime {
  SessionRecord rec;
  std::size_t actor_calls = 0;
  std::size_t evolver_calls = 0;

  const AgenticConfig& config(const ConfigId& id) const {
    auto it = std::find_if(rec.archive.begin(), rec.archive.end(),
                           [&](const AgenticConfig& c) { return c.config_id == id; });
    if (it == rec.archive.end()) throw CorruptSession("config missing from archive: " + id);
    return *it;
  }
};

void commit(const Runtime& rt) {
  const auto& rec = rt.rec;
  const fs::path& out = rec.config.out_dir;
  write_json(out / "memory.json", to_json(rec.memory));
  write_json(out / "stats.json", rec.bandit.to_json());
  auto archive = ojson::array();
  for (const auto& c : rec.archive) archive.push_back(to_json(c));
  write_json(out / "configs.json", archive);
  if (rec.metrics) export_curve(*rec.metrics, out / "metrics.csv");

  ojson m;
  m["format"] = kFormat;
  m["created_at"] = rec.created_at;
  m["config"] = session_config_to_json(rec.config);
  m["r_max"] = rec.r_max;
  m["completed_episodes"] = rec.completed();
  m["returns"] = rec.returns();
  m["auc"] = rec.metrics ? ojson(rec.metrics->auc) : ojson(nullptr);
  m["current_config_id"] = rec.current_config_id;
  m["backend_calls"] = {{"actor", rt.actor_calls}, {"evolver", rt.evolver_calls}};
  auto eps = ojson::array();
  for (const auto& e : rec.episodes) eps.push_back(episode_to_json(e));
  m["episodes"] = std::move(eps);
  write_json(out / "manifest.json", m);
}

std::unique_ptr<LlmBackend> default_backend(const BackendSpec& spec) {
  if (spec.replay_path) {
    try {
      return std::make_unique<ReplayBackend>(load_replay(*spec.replay_path));
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    return std::make_unique<HttpBackend>(spec.http);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::unique_ptr<Environment> default_env(const SessionConfig& sc) {
  if (sc.env_mode == EnvMode::Toy) return std::make_unique<MiniVault>();
  try {
    return std::make_unique<BridgeEnvironment>(split_command_line(sc.bridge_cmd));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bridge command: ") + e.what());
  }
}

void refresh_metrics(SessionRecord& rec) {
  if (rec.episodes.empty() || !(rec.r_max > 0.0)) {
    rec.metrics.reset();
    return;
  }
  rec.metrics = make_metrics(rec.returns(), rec.r_max);
}

struct Resources {
  std::unique_ptr<Environment> env;
  std::unique_ptr<LlmBackend> actor;
  std::unique_ptr<LlmBackend> evolver;
};

/// Built before anything is written so a bad configuration leaves no trace.
Resources open_resources(const SessionConfig& sc, const RunOptions& opts) {
  Resources r;
  r.env = opts.make_env ? opts.make_env(sc) : default_env(sc);
  r.actor = opts.make_backend ? opts.make_backend(sc, Tag::Actor) : default_backend(sc.actor_backend);
  r.evolver =
      opts.make_backend ? opts.make_backend(sc, Tag::Evolver) : default_backend(sc.evolver_backend);
  return r;
}

SessionRecord continue_session(Runtime rt, Resources res, const RunOptions& opts) {
  auto& rec = rt.rec;
  const auto log = [&](const std::string& msg) {
    if (opts.log) opts.log(msg);
  };
  auto& env = res.env;
  auto& actor = res.actor;
  auto& evolver = res.evolver;
  actor->fast_forward(Tag::Actor, rt.actor_calls);
  evolver->fast_forward(Tag::Evolver, rt.evolver_calls);

  const int last = std::min(rec.config.episodes, opts.stop_after.value_or(rec.config.episodes));
  for (int e = rec.completed() + 1; e <= last; ++e) {
    const fs::path dir = episode_dir(rec.config.out_dir, e);
    fs::remove_all(dir);
    fs::create_directories(dir);

    const AgenticConfig parent = rt.config(rec.current_config_id);
    write_json(dir / "config.json", to_json(parent));

    ActorContext ctx{parent, rec.memory, rec.config.step_cap, e};
    const fs::path partial = dir / "transcript.jsonl.part";
    EpisodeRecord er;
    er.episode = e;
    er.config_id = parent.config_id;
    Transcript t;
    try {
      t = play_episode(ctx, *env, *actor, [&](const Step& s) {
        append_file(partial, dump_json(to_json(s)) + "\n");
      });
    } catch (const EpisodeAborted& ex) {
      t = ex.partial();
      er.error = ex.what();
      log("episode " + std::to_string(e) + " aborted: " + er.error);
    }
    write_file_atomic(dir / "transcript.jsonl", serialize_steps(t.steps));
    fs::remove(partial);

    er.total_return = total_return(t);
    er.steps = static_cast<int>(t.steps.size());
    er.terminated_early = t.terminated_early;
    er.max_score = t.max_score;
    // an episode whose reset failed never observed max_score
    if (!(rec.r_max > 0.0) && (er.error.empty() || !t.steps.empty())) rec.r_max = t.max_score;

    rec.bandit.record_result(parent.config_id, er.total_return);

    EvolveResult evo = evolve(parent, t, rec.memory, *evolver, rec.config.children_m);
    write_file_atomic(dir / "evolver_response.txt", evo.response.raw);
    auto parsed = to_json(evo.response);
    for (const auto& w : evo.warnings) parsed["warnings"].push_back(w);
    write_json(dir / "evolver_response.parsed", parsed);
    for (const auto& w : parsed["warnings"]) log("episode " + std::to_string(e) + ": " + w.get<std::string>());

    std::vector<ConfigId> pool{parent.config_id};
    for (auto& child : evo.children) {
      rec.bandit.register_config(child.config_id, parent.config_id);
      er.children.push_back(child.config_id);
      pool.push_back(child.config_id);
      rec.archive.push_back(std::move(child));
    }
    rec.memory = std::move(evo.memory);
    rec.current_config_id = rec.bandit.select_next(pool);
    er.next_config_id = rec.current_config_id;
    rec.episodes.push_back(std::move(er));

    rt.actor_calls = actor->calls(Tag::Actor);
    rt.evolver_calls = evolver->calls(Tag::Evolver);
    refresh_metrics(rec);
    commit(rt);
    log("episode " + std::to_string(e) + ": return " + format_reward(rec.episodes.back().total_return) +
        ", next " + rec.current_config_id);
  }
  return rec;
}

Runtime load_runtime(const fs::path& out_dir) {
  Runtime rt;
  auto& rec = rt.rec;
  auto read_json = [&](const char* name) {
    const fs::path p = out_dir / name;
    if (!fs::exists(p)) throw CorruptSession(std::string("missing ") + name);
    auto j = nlohmann::json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) throw CorruptSession(std::string("unparseable ") + name);
    return j;
  };
  try {
    const auto m = read_json("manifest.json");
    if (m.at("format").get<std::string>() != kFormat) throw CorruptSession("unknown session format");
    rec.config = session_config_from_json(m.at("config"));
    rec.config.out_dir = out_dir;
    rec.created_at = m.at("created_at").get<std::string>();
    rec.r_max = m.at("r_max").get<double>();
    rec.current_config_id = m.at("current_config_id").get<std::string>();
    rt.actor_calls = m.at("backend_calls").at("actor").get<std::size_t>();
    rt.evolver_calls = m.at("backend_calls").at("evolver").get<std::size_t>();
    for (const auto& e : m.at("episodes")) rec.episodes.push_back(episode_from_json(e));
    const int completed = m.at("completed_episodes").get<int>();
    const auto returns = m.at("returns").get<std::vector<double>>();
    if (completed != rec.completed() || returns != rec.returns()) {
      throw CorruptSession("manifest episode list disagrees with its counters");
    }

    try {
      rec.bandit = BanditState::from_json(read_json("stats.json"));
      rec.memory = memory_from_json(read_json("memory.json"));
    } catch (const CorruptSession&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw CorruptSession(e.what());
    }
    if (rec.bandit.total_episodes() != completed) {
      throw CorruptSession("stats.json episode count does not match the manifest");
    }
    for (const auto& c : read_json("configs.json")) rec.archive.push_back(config_from_json(c));
    std::vector<ConfigId> ids;
    for (const auto& c : rec.archive) ids.push_back(c.config_id);
    if (ids != rec.bandit.order()) throw CorruptSession("configs.json and stats.json disagree");
    rt.config(rec.current_config_id);

    for (const auto& er : rec.episodes) {
      const fs::path dir = episode_dir(out_dir, er.episode);
      for (const char* f : {"config.json", "transcript.jsonl", "evolver_response.txt",
                            "evolver_response.parsed"}) {
        if (!fs::exists(dir / f)) throw CorruptSession("missing " + (dir / f).string());
      }
      Transcript t;
      t.steps = parse_steps(read_file(dir / "transcript.jsonl"));
      if (total_return(t) != er.total_return || static_cast<int>(t.steps.size()) != er.steps) {
        throw CorruptSession("transcript of episode " + std::to_string(er.episode) +
                             " disagrees with the manifest");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptSession(std::string("malformed session file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptSession(e.what());
  } catch (const CorruptSession&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw CorruptSession(e.what());
  }
  refresh_metrics(rec);
  return rt;
}

}  // namespace

BackendSpec BackendSpec::parse(const std::string& spec, const std::string& model) {
  BackendSpec b;
  if (spec.rfind("replay:", 0) == 0) {
    if (spec.size() == 7) throw ConfigError("replay backend needs a path");
    b.replay_path = fs::path(spec.substr(7));
    return b;
  }
  if (spec.rfind("http://", 0) != 0 && spec.rfind("https://", 0) != 0) {
    throw ConfigError("backend must be an http(s) URL or replay:<path>: " + spec);
  }
  b.http.endpoint_url = spec;
  b.http.model_name = model;
  return b;
}

std::string BackendSpec::describe() const {
  return replay_path ? "replay:" + replay_path->string() : http.endpoint_url;
}

void SessionConfig::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (step_cap < 1) throw ConfigError("steps must be >= 1");
  if (children_m < 1) throw ConfigError("children must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be >= 0");
  if (initial_prompt.empty()) throw ConfigError("initial prompt must be non-empty");
  if (env_mode == EnvMode::Bridge && bridge_cmd.empty()) throw ConfigError("bridge mode needs --bridge-cmd");
  if (out_dir.empty()) throw ConfigError("an output directory is required");
  for (const auto* b : {&actor_backend, &evolver_backend}) {
    if (!b->replay_path && !b->http.valid()) throw ConfigError("backend configuration is incomplete");
  }
}

std::vector<double> SessionRecord::returns() const {
  std::vector<double> out;
  for (const auto& e : episodes) out.push_back(e.total_return);
  return out;
}

fs::path episode_dir(const fs::path& out_dir, int episode) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "ep_%03d", episode);
  return out_dir / "episodes" / buf;
}

SessionRecord run_session(const SessionConfig& sc, const RunOptions& opts) {
  sc.validate();
  if (fs::exists(sc.out_dir / "manifest.json")) {
    throw ConfigError("session already exists in " + sc.out_dir.string() + "; use resume");
  }
  Resources res = open_resources(sc, opts);
  std::error_code ec;
  fs::create_directories(sc.out_dir / "episodes", ec);
  if (ec) throw std::runtime_error("cannot create " + sc.out_dir.string() + ": " + ec.message());

  Runtime rt;
  auto& rec = rt.rec;
  rec.config = sc;
  rec.created_at = opts.timestamp.value_or(utc_timestamp());
  rec.bandit = BanditState(sc.beta);
  rec.archive.push_back(make_initial_config(sc.initial_prompt));
  rec.bandit.register_config(rec.archive.front().config_id);
  rec.current_config_id = rec.archive.front().config_id;
  commit(rt);
  return continue_session(std::move(rt), std::move(res), opts);
}

SessionRecord resume(const fs::path& out_dir, const RunOptions& opts) {
  Runtime rt = load_runtime(out_dir);
  if (rt.rec.complete()) return std::move(rt.rec);
  Resources res = open_resources(rt.rec.config, opts);
  // leftovers of an episode that never committed
  fs::remove_all(episode_dir(out_dir, rt.rec.completed() + 1));
  return continue_session(std::move(rt), std::move(res), opts);
}

SessionRecord load_session(const fs::path& out_dir) { return load_runtime(out_dir).rec; }

}  // namespace ttlearn
