#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <mutex>
#include <thread>

#include "test_support.hpp"

using namespace examkit;
using namespace examkit::testing;

namespace {

std::string completion_body(const std::string& text, const std::string& finish = "stop") {
  return Json{{"choices", Json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", text}}},
                                        {"finish_reason", finish}}})}}
      .dump();
}

EndpointConfig fake_endpoint() {
  EndpointConfig e;
  e.model_id = "test-model";
  e.api_key_env = "";
  e.retry_backoff = std::chrono::milliseconds(1);
  return e;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() /
             (name + "-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())))) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

ChatPrompt prompt8() { return build_prompt(sample_task(sample_tasks(), 8), PromptMode::cot); }

}  // namespace

TEST(Client, RetriesTransientFailures) {
  int calls = 0;
  std::vector<std::chrono::milliseconds> waits;
  ChatCompletionsClient client(
      fake_endpoint(),
      [&](const HttpRequest&) {
        return ++calls <= 3 ? HttpResponse{500, "busy"} : HttpResponse{200, completion_body("Відповідь: В")};
      },
      [&](std::chrono::milliseconds d) { waits.push_back(d); });
  const RawGeneration g = client.complete(prompt8(), {});
  EXPECT_EQ(g.text, "Відповідь: В");
  EXPECT_EQ(g.retries, 3);
  EXPECT_EQ(calls, 4);
  ASSERT_EQ(waits.size(), 3u);
  EXPECT_LT(waits[0], waits[1]);
  EXPECT_LT(waits[1], waits[2]);
}

TEST(Client, GivesUpAfterMaxRetries) {
  int calls = 0;
  ChatCompletionsClient client(fake_endpoint(), [&](const HttpRequest&) -> HttpResponse {
    ++calls;
    throw TransportError("connection refused");
  }, [](auto) {});
  EXPECT_THROW(client.complete(prompt8(), {}), TransportError);
  EXPECT_EQ(calls, 4);
}

TEST(Client, ClientErrorsAreNotRetried) {
  int calls = 0;
  ChatCompletionsClient client(fake_endpoint(), [&](const HttpRequest&) {
    ++calls;
    return HttpResponse{400, "{\"error\": \"bad model\"}"};
  }, [](auto) {});
  try {
    client.complete(prompt8(), {});
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_EQ(e.status(), 400);
    EXPECT_EQ(e.category(), ErrorCategory::endpoint);
  }
  EXPECT_EQ(calls, 1);
}

TEST(Client, MalformedBodyIsEndpointError) {
  ChatCompletionsClient client(fake_endpoint(), [](const HttpRequest&) { return HttpResponse{200, "{}"}; });
  EXPECT_THROW(client.complete(prompt8(), {}), EndpointError);
}

TEST(Client, EmptyTextIsReturnedAsIs) {
  ChatCompletionsClient client(fake_endpoint(), [](const HttpRequest&) {
    return HttpResponse{200, completion_body("", "length")};
  });
  const RawGeneration g = client.complete(prompt8(), {});
  EXPECT_EQ(g.text, "");
  EXPECT_EQ(g.finish_reason, "length");
  EXPECT_EQ(extract_answer(g.text, sample_task(sample_tasks(), 8)).status, ExtractStatus::absent);
}

TEST(Client, RequestBodyCarriesDecodingSettings) {
  HttpRequest seen;
  ChatCompletionsClient client(fake_endpoint(), [&](const HttpRequest& r) {
    seen = r;
    return HttpResponse{200, completion_body("x")};
  });
  DecodingConfig cfg;
  cfg.max_new_tokens = 64;
  cfg.stop = {"</s>"};
  client.complete(prompt8(), cfg);
  EXPECT_EQ(seen.path, "/v1/chat/completions");
  const Json body = Json::parse(seen.body);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 64);
  EXPECT_EQ(body["stop"][0], "</s>");
  EXPECT_FALSE(body.contains("top_p"));
  EXPECT_EQ(body["messages"][0]["role"], "user");
  cfg.max_new_tokens = 0;
  EXPECT_THROW(client.complete(prompt8(), cfg), ConfigError);
}

TEST(Client, CompletionsPath) {
  EXPECT_EQ(completions_path("http://h:1/v1"), "/v1/chat/completions");
  EXPECT_EQ(completions_path("http://h:1/v1/"), "/v1/chat/completions");
  EXPECT_EQ(completions_path("http://h:1/v1/chat/completions"), "/v1/chat/completions");
  EXPECT_EQ(completions_path("http://h:1"), "/chat/completions");
  EXPECT_THROW(completions_path("localhost:8000"), ConfigError);
}

TEST(Client, HttpStubReturnsTextByteForByte) {
  const std::string reply = golden("generation_mc.txt");
  httplib::Server server;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.set_content(completion_body(reply), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig e = fake_endpoint();
  e.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  e.api_key_env = "EXAMKIT_TEST_TOKEN";
  e.timeout = std::chrono::seconds(10);
  ::setenv("EXAMKIT_TEST_TOKEN", "secret", 1);
  const RawGeneration g = complete(prompt8(), {}, e);
  ::unsetenv("EXAMKIT_TEST_TOKEN");
  server.stop();
  t.join();
  EXPECT_EQ(g.text, reply);
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_TRUE(extract_answer(g.text, sample_task(sample_tasks(), 8)).matches(letters("В")));
}

TEST(Client, ConnectionRefusedIsTransportError) {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  EndpointConfig e = fake_endpoint();
  e.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  e.max_retries = 0;
  e.timeout = std::chrono::seconds(2);
  EXPECT_THROW(complete(prompt8(), {}, e), TransportError);
}

TEST(Cache, ColdThenWarm) {
  TempDir dir("examkit-cache-test");
  const GenerationCache cache(dir.path);
  std::atomic<int> calls{0};
  ChatCompletionsClient client(fake_endpoint(), [&](const HttpRequest&) {
    ++calls;
    return HttpResponse{200, completion_body("Відповідь: А")};
  });
  const auto tasks = sample_tasks();
  const EvalRun cold = run_eval(tasks, PromptMode::letter, {}, client, &cache);
  EXPECT_EQ(cold.endpoint_calls, 2u);
  EXPECT_EQ(calls.load(), 2);
  const EvalRun warm = run_eval(tasks, PromptMode::letter, {}, client, &cache);
  EXPECT_EQ(warm.endpoint_calls, 0u);
  EXPECT_EQ(warm.cache_hits, 2u);
  EXPECT_EQ(calls.load(), 2);
  EXPECT_EQ(warm.generations, cold.generations);

  DecodingConfig other;
  other.max_new_tokens = 16;
  EXPECT_EQ(run_eval(tasks, PromptMode::letter, other, client, &cache).endpoint_calls, 2u);
}

TEST(Cache, KeyDependsOnEveryInput) {
  const ChatPrompt p = prompt8();
  const std::string base = GenerationCache::key_material("m", PromptMode::cot, p, {});
  EXPECT_NE(GenerationCache::key_hash(base), GenerationCache::key_hash(GenerationCache::key_material("n", PromptMode::cot, p, {})));
  EXPECT_NE(base, GenerationCache::key_material("m", PromptMode::letter, p, {}));
  DecodingConfig hot;
  hot.temperature = 0.7;
  EXPECT_NE(base, GenerationCache::key_material("m", PromptMode::cot, p, hot));
  EXPECT_EQ(GenerationCache::key_hash(base).size(), 32u);
}

TEST(Eval, EmptyTaskListMakesNoCalls) {
  int calls = 0;
  ChatCompletionsClient client(fake_endpoint(), [&](const HttpRequest&) {
    ++calls;
    return HttpResponse{200, completion_body("")};
  });
  const EvalRun r = run_eval({}, PromptMode::cot, {}, client, nullptr);
  EXPECT_TRUE(r.generations.empty());
  EXPECT_EQ(calls, 0);
}

TEST(Eval, ResultsKeepInputOrderUnderConcurrency) {
  const auto tasks = prepare(fixture_exams(), fixture_config()).test;
  ASSERT_EQ(tasks.size(), 108u);
  std::mutex mu;
  std::map<std::string, int> seen;
  ChatCompletionsClient client(fake_endpoint(), [&](const HttpRequest& r) {
    const std::string content = Json::parse(r.body)["messages"][0]["content"].get<std::string>();
    {
      std::lock_guard lock(mu);
      ++seen[content];
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200 + content.size() % 500));
    return HttpResponse{200, completion_body(content)};
  });
  EvalOptions opts;
  opts.max_in_flight = 8;
  const EvalRun r = run_eval(tasks, PromptMode::letter, {}, client, nullptr, opts);
  ASSERT_EQ(r.generations.size(), 108u);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_EQ(r.generations[i].key, tasks[i].key());
    EXPECT_EQ(r.generations[i].text, build_prompt(tasks[i], PromptMode::letter).user_message().content);
  }
  EXPECT_EQ(r.endpoint_calls, 108u);
}

TEST(Eval, FailuresAreReportedPerTask) {
  const auto tasks = sample_tasks();
  ChatCompletionsClient client(fake_endpoint(), [](const HttpRequest& r) {
    if (r.body.find("бадилина") != std::string::npos) return HttpResponse{404, "no such model"};
    return HttpResponse{200, completion_body("Відповідь: БДАГ")};
  });
  const EvalRun r = run_eval(tasks, PromptMode::letter, {}, client, nullptr);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].key, sample_task(tasks, 8).key());
  EXPECT_EQ(r.failures[0].category, ErrorCategory::endpoint);
  ASSERT_EQ(r.generations.size(), 1u);
}

TEST(GenerationsJsonl, RoundTrip) {
  RawGeneration g;
  g.key = {"522", 8};
  g.mode = PromptMode::cot_wt;
  g.model_id = "m";
  g.text = "  Відповідь – В.\n";
  g.finish_reason = "stop";
  g.latency_ms = 12;
  g.retries = 1;
  std::stringstream buf;
  write_generations_jsonl(std::vector<RawGeneration>{g, g}, buf);
  EXPECT_EQ(read_generations_jsonl(buf), (std::vector<RawGeneration>{g, g}));
}
