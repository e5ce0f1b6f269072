#pragma once

// Chat-completions client with greedy decoding defaults, a content-addressed
// generation cache, and a bounded-concurrency evaluation runner.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>

#include "examkit/corpus.hpp"
#include "examkit/prompt.hpp"
#include "examkit/rng.hpp"

namespace examkit {

struct DecodingConfig {
  double temperature = 0.0;  // 0 means greedy
  int max_new_tokens = 2048;
  std::vector<std::string> stop;

  void validate() const {
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be at least 1");
    if (temperature < 0.0) throw ConfigError("temperature must be non-negative");
  }

  Json to_json() const {
    Json j = {{"temperature", temperature}, {"max_new_tokens", max_new_tokens}};
    if (!stop.empty()) j["stop"] = stop;
    return j;
  }

  bool operator==(const DecodingConfig&) const = default;
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model_id;
  // Name of the environment variable holding the bearer token; empty for none.
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
};

struct RawGeneration {
  TaskKey key;
  PromptMode mode = PromptMode::letter;
  std::string model_id;
  std::string text;  // verbatim, never trimmed
  std::string finish_reason;
  std::int64_t latency_ms = 0;
  int retries = 0;

  bool operator==(const RawGeneration&) const = default;
};

struct HttpRequest {
  std::string path;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Sends one POST. Connection-level failures throw TransportError.
using Transport = std::function<HttpResponse(const HttpRequest&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

inline std::string excerpt(const std::string& body, std::size_t limit = 300) {
  return body.size() <= limit ? body : body.substr(0, limit) + "...";
}

}  // namespace detail

// Path of the chat-completions route under `base_url`.
inline std::string completions_path(const std::string& base_url) {
  const auto url = detail::split_url(base_url);
  const std::string suffix = "/chat/completions";
  if (url.path.size() >= suffix.size() && url.path.compare(url.path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return url.path;
  return url.path + suffix;
}

inline Transport make_http_transport(const EndpointConfig& endpoint) {
  const auto url = detail::split_url(endpoint.base_url);
  const auto timeout = endpoint.timeout;
  return [origin = url.origin, timeout](const HttpRequest& request) {
    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(request.path, headers, request.body, "application/json");
    if (!result) throw TransportError("request to " + origin + request.path + " failed: " + httplib::to_string(result.error()));
    return HttpResponse{result->status, result->body};
  };
}

// Request body: model, messages, temperature, max_tokens (and stop when set).
// No top_p/top_k so server defaults cannot interfere.
inline Json chat_request_body(const ChatPrompt& prompt, const DecodingConfig& cfg, const std::string& model_id) {
  Json messages = Json::array();
  for (const auto& m : prompt.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  Json body = {{"model", model_id},
               {"messages", std::move(messages)},
               {"temperature", cfg.temperature},
               {"max_tokens", cfg.max_new_tokens}};
  if (!cfg.stop.empty()) body["stop"] = cfg.stop;
  return body;
}

class ChatCompletionsClient {
 public:
  explicit ChatCompletionsClient(EndpointConfig endpoint, Transport transport = {}, Sleeper sleeper = {})
      : endpoint_(std::move(endpoint)),
        transport_(transport ? std::move(transport) : make_http_transport(endpoint_)),
        sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
        path_(completions_path(endpoint_.base_url)) {}

  const EndpointConfig& endpoint() const { return endpoint_; }

  // First choice text of the endpoint's reply. 5xx, 429 and transport
  // failures are retried with exponential backoff.
  RawGeneration complete(const ChatPrompt& prompt, const DecodingConfig& cfg) const {
    cfg.validate();
    if (prompt.messages.empty()) throw ContractViolation("prompt has no messages");

    HttpRequest request;
    request.path = path_;
    request.body = chat_request_body(prompt, cfg, endpoint_.model_id).dump(-1, ' ', false);
    request.headers.emplace_back("Accept", "application/json");
    if (!endpoint_.api_key_env.empty())
      if (const char* token = std::getenv(endpoint_.api_key_env.c_str()); token && *token)
        request.headers.emplace_back("Authorization", std::string("Bearer ") + token);

    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 0;; ++attempt) {
      const bool last = attempt >= endpoint_.max_retries;
      HttpResponse response;
      try {
        response = transport_(request);
      } catch (const TransportError&) {
        if (last) throw;
        backoff(attempt);
        continue;
      }
      const bool transient = response.status >= 500 || response.status == 429;
      if (transient && !last) {
        backoff(attempt);
        continue;
      }
      if (response.status < 200 || response.status >= 300)
        throw EndpointError(response.status, detail::excerpt(response.body));

      RawGeneration gen = parse_response(response);
      gen.model_id = endpoint_.model_id;
      gen.retries = attempt;
      gen.latency_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
      return gen;
    }
  }

 private:
  void backoff(int attempt) const {
    if (endpoint_.retry_backoff.count() > 0) sleeper_(endpoint_.retry_backoff * (1LL << std::min(attempt, 10)));
  }

  static RawGeneration parse_response(const HttpResponse& response) {
    RawGeneration gen;
    try {
      const Json body = Json::parse(response.body);
      const Json& choice = body.at("choices").at(0);
      const Json& content = choice.at("message").at("content");
      gen.text = content.is_null() ? std::string() : content.get<std::string>();
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
        gen.finish_reason = choice["finish_reason"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw EndpointError(response.status, std::string("malformed completion body (") + e.what() + "): " +
                                               detail::excerpt(response.body));
    }
    return gen;
  }

  EndpointConfig endpoint_;
  Transport transport_;
  Sleeper sleeper_;
  std::string path_;
};

inline RawGeneration complete(const ChatPrompt& prompt, const DecodingConfig& cfg, const EndpointConfig& endpoint) {
  return ChatCompletionsClient(endpoint).complete(prompt, cfg);
}

// --- serialization ----------------------------------------------------------

inline Json generation_to_json(const RawGeneration& g) {
  return {{"test_id", g.key.test_id}, {"task_id", g.key.task_id},     {"mode", to_string(g.mode)},
          {"model_id", g.model_id},   {"text", g.text},               {"finish_reason", g.finish_reason},
          {"latency_ms", g.latency_ms}, {"retries", g.retries}};
}

inline RawGeneration generation_from_json(const Json& j) {
  try {
    RawGeneration g;
    g.key = {j.at("test_id").get<std::string>(), j.at("task_id").get<std::int64_t>()};
    auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
    if (!mode) throw ConfigError("unknown mode in generation record");
    g.mode = *mode;
    g.model_id = j.at("model_id").get<std::string>();
    g.text = j.at("text").get<std::string>();
    g.finish_reason = j.value("finish_reason", std::string());
    g.latency_ms = j.value("latency_ms", std::int64_t{0});
    g.retries = j.value("retries", 0);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed generation record: ") + e.what());
  }
}

inline void write_generations_jsonl(std::span<const RawGeneration> gens, std::ostream& out) {
  for (const auto& g : gens) out << generation_to_json(g).dump(-1, ' ', false) << '\n';
  if (!out) throw IoError("failed writing generation records");
}

inline std::vector<RawGeneration> read_generations_jsonl(std::istream& in) {
  std::vector<RawGeneration> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    try {
      out.push_back(generation_from_json(Json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("generation line " + std::to_string(line_no) + ": " + e.what(), e.byte);
    }
  }
  return out;
}

// --- cache ------------------------------------------------------------------

// One JSON file per key under `dir`. Keys cover model, mode, prompt content
// and decoding config; the full key material is stored and checked on load.
class GenerationCache {
 public:
  explicit GenerationCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
  }

  static std::string key_material(const std::string& model_id, PromptMode mode, const ChatPrompt& prompt,
                                  const DecodingConfig& cfg) {
    Json messages = Json::array();
    for (const auto& m : prompt.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return Json{{"model_id", model_id}, {"mode", to_string(mode)}, {"messages", messages}, {"decoding", cfg.to_json()}}
        .dump(-1, ' ', false);
  }

  static std::string key_hash(const std::string& material) {
    std::ostringstream out;
    out << std::hex << std::setfill('0') << std::setw(16) << fnv1a(material) << std::setw(16)
        << fnv1a(material, 0x84222325cbf29ce4ULL);
    return out.str();
  }

  std::optional<RawGeneration> load(const std::string& material) const {
    const auto path = dir_ / (key_hash(material) + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
      const Json j = Json::parse(in);
      if (j.at("key").get<std::string>() != material) return std::nullopt;
      return generation_from_json(j.at("generation"));
    } catch (const std::exception&) {
      return std::nullopt;  // unreadable entries count as misses and get rewritten
    }
  }

  void store(const std::string& material, const RawGeneration& gen) const {
    const std::string name = key_hash(material);
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << name << ".tmp." << std::this_thread::get_id() << '.' << counter.fetch_add(1);
    const auto tmp = dir_ / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << Json{{"key", material}, {"generation", generation_to_json(gen)}}.dump(2, ' ', false) << '\n';
      if (!out) throw IoError("cannot write cache entry " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, dir_ / (name + ".json"), ec);
    if (ec) throw IoError("cannot publish cache entry " + name + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// --- evaluation runner ------------------------------------------------------

struct TaskFailure {
  TaskKey key;
  ErrorCategory category = ErrorCategory::transport;
  std::string message;
};

struct EvalRun {
  std::vector<RawGeneration> generations;  // successful tasks, input order
  std::vector<TaskFailure> failures;       // input order
  std::size_t endpoint_calls = 0;
  std::size_t cache_hits = 0;
};

struct EvalOptions {
  std::size_t max_in_flight = 4;
  PromptOptions prompt;
};

inline EvalRun run_eval(std::span<const ExamTask> tasks, PromptMode mode, const DecodingConfig& cfg,
                        const ChatCompletionsClient& client, const GenerationCache* cache,
                        const EvalOptions& options = {}) {
  cfg.validate();
  const std::size_t n = tasks.size();
  std::vector<std::optional<RawGeneration>> results(n);
  std::vector<std::optional<TaskFailure>> failures(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  std::atomic<std::size_t> hits{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      const ExamTask& task = tasks[i];
      const ChatPrompt prompt = build_prompt(task, mode, options.prompt);
      const std::string material = GenerationCache::key_material(client.endpoint().model_id, mode, prompt, cfg);
      try {
        std::optional<RawGeneration> gen = cache ? cache->load(material) : std::nullopt;
        if (gen) {
          hits.fetch_add(1);
        } else {
          calls.fetch_add(1);
          gen = client.complete(prompt, cfg);
          gen->mode = mode;
          gen->key = task.key();
          if (cache) cache->store(material, *gen);
        }
        gen->key = task.key();
        gen->mode = mode;
        results[i] = std::move(gen);
      } catch (const Error& e) {
        failures[i] = TaskFailure{task.key(), e.category(), e.what()};
      } catch (const std::exception& e) {
        failures[i] = TaskFailure{task.key(), ErrorCategory::transport, e.what()};
      }
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(options.max_in_flight, 1), std::max<std::size_t>(n, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  EvalRun run;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) run.generations.push_back(std::move(*results[i]));
    if (failures[i]) run.failures.push_back(std::move(*failures[i]));
  }
  run.endpoint_calls = calls.load();
  run.cache_hits = hits.load();
  return run;
}

}  // namespace examkit
