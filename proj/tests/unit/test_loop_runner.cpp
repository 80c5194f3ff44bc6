#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fake_server.hpp"
#include "error_kind.hpp"
#include "loopdyn/error.hpp"
#include "loopdyn/loop_runner.hpp"
#include "temp_dir.hpp"

using namespace loopdyn;
using testutil::kind_of;
using nlohmann::json;

namespace {

std::string fixed_clock() { return "2000-01-01T00:00:00.000Z"; }

LoopConfig single_phase(std::size_t horizon) {
  LoopConfig c;
  c.loop_id = "test";
  c.initial_text = "seed text";
  c.horizon = horizon;
  c.phases.push_back({PromptTemplate("p", "Rewrite: {{TEXT}}"), GenerationParams{"m", 0.5}});
  return c;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class FixedDimEmbedder final : public EmbeddingBackend {
 public:
  std::vector<double> embed(std::string_view text) override {
    return std::vector<double>(text.size() % 2 ? 3 : 4, 1.0);
  }
};

RetryPolicy fast_retry() { return {3, std::chrono::milliseconds(1)}; }

}  // namespace

TEST_CASE("prompt templates") {
  CHECK(kind_of([] { PromptTemplate("x", "no placeholder"); }) == ErrorKind::MissingPlaceholder);
  const PromptTemplate t("x", "A {{TEXT}} B {{TEXT}}");
  CHECK(t.render("hi") == "A hi B hi");
  CHECK(t.render("{{TEXT}}") == "A {{TEXT}} B {{TEXT}}");
  CHECK(t.render("") == "A  B ");
}

TEST_CASE("postprocessing") {
  const PostprocessRules rules;
  CHECK(rules.apply("<think>plan</think>\n  Answer. ") == "Answer.");
  CHECK(rules.apply("a<think>x</think>b<think>y</think>c") == "abc");
  CHECK(rules.apply("reasoning only</think> Out") == "Out");
  CHECK(rules.apply("Out <think>never closed") == "Out");
  CHECK(PostprocessRules::none().apply(" <think>x</think> ") == " <think>x</think> ");
}

TEST_CASE("loop config validation, hashing and JSON") {
  auto c = single_phase(3);
  CHECK_NOTHROW(c.validate());
  CHECK(c.hash().size() == 16);
  CHECK(c.hash() == single_phase(3).hash());
  CHECK(c.hash() != single_phase(4).hash());
  CHECK(loop_config_from_json(loop_config_to_json(c)) == c);

  c.phases[0].generation.top_p = 0.9;
  c.phases[0].generation.top_k = 40;
  c.phases[0].generation.seed = 7;
  c.postprocess.strip_think = false;
  CHECK(loop_config_from_json(loop_config_to_json(c)) == c);

  auto bad = single_phase(0);
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidConfig);
  bad = single_phase(2);
  bad.phases.clear();
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidConfig);
  bad = single_phase(2);
  bad.phases[0].generation.temperature = -1;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidConfig);
  bad.phases[0].generation.temperature = 0.1;
  bad.phases[0].generation.top_p = 1.5;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidConfig);

  CHECK(kind_of([] { loop_config_from_json("{"); }) == ErrorKind::Parse);
  CHECK(kind_of([] {
          loop_config_from_json(R"({"initial_text":"x","horizon":0,"phases":[]})");
        }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([] {
          loop_config_from_json(
              R"({"initial_text":"x","horizon":2,"phases":[{"model":"m","template":"none"}]})");
        }) == ErrorKind::MissingPlaceholder);
}

TEST_CASE("presets") {
  const auto c = preset("contractive");
  const auto e = preset("exploratory");
  CHECK(c.initial_text == kInitialSentence);
  CHECK(c.horizon == 50);
  CHECK(c.phases.size() == 1);
  CHECK(c.phases[0].generation.model == "deepseek-r1:8b");
  CHECK(c.phases[0].generation.temperature == 0.8);
  CHECK(c.phases[0].prompt.text().find("rewriting agent") != std::string::npos);
  CHECK(e.phases[0].prompt.text().find("negate its main idea") != std::string::npos);
  CHECK(c.hash() != e.hash());
  CHECK(kind_of([] { preset("chaotic"); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("utc timestamps honor SOURCE_DATE_EPOCH") {
  const char* old = std::getenv("SOURCE_DATE_EPOCH");
  const std::string saved = old ? old : "";
  setenv("SOURCE_DATE_EPOCH", "86400", 1);
  CHECK(utc_now() == "1970-01-02T00:00:00.000Z");
  if (old) setenv("SOURCE_DATE_EPOCH", saved.c_str(), 1); else unsetenv("SOURCE_DATE_EPOCH");
  const auto now = utc_now();
  CHECK(now.size() == 24);
  CHECK(now.back() == 'Z');
}

TEST_CASE("echo backend yields a fixed point") {
  testutil::TempDir dir;
  const auto cfg = single_phase(5);
  EchoBackend echo;
  StubEmbeddingBackend stub(16);
  TrajectoryStore store(dir / "echo.jsonl");
  const auto out = run_loop(cfg, echo, &stub, store, fixed_clock);
  CHECK_FALSE(out.aborted());
  REQUIRE(out.trajectory.size() == 6);
  for (const auto& r : out.trajectory.records()) {
    CHECK(r.text == "seed text");
    CHECK(r.embedding == out.trajectory[0].embedding);
  }
  CHECK(out.trajectory[0].phase_texts.empty());
  CHECK_FALSE(out.trajectory[0].prompt_id.has_value());
  CHECK(out.trajectory[3].prompt_id == "p");
  CHECK(out.trajectory[3].model == "m");
  CHECK(out.trajectory[3].temperature == 0.5);
  CHECK(read_trajectory(dir / "echo.jsonl") == out.trajectory);
}

TEST_CASE("composite loops run phases in order") {
  testutil::TempDir dir;
  LoopConfig cfg;
  cfg.loop_id = "composite";
  cfg.initial_text = "x";
  cfg.horizon = 3;
  cfg.phases.push_back({PromptTemplate("sum", "S({{TEXT}})"), GenerationParams{"m1", 0.2}});
  cfg.phases.push_back({PromptTemplate("neg", "N({{TEXT}})"), GenerationParams{"m2", 0.9, {}, {}, 3}});
  std::vector<std::string> prompts;
  FunctionBackend fn([&](const GenerationRequest& r) {
    prompts.push_back(r.prompt);
    return r.params.model + "[" + r.source_text + "]";
  });
  TrajectoryStore store(dir / "c.jsonl");
  const auto out = run_loop(cfg, fn, nullptr, store, fixed_clock);
  REQUIRE(out.trajectory.size() == 4);
  CHECK(out.trajectory[1].phase_texts == std::vector<std::string>{"m1[x]", "m2[m1[x]]"});
  CHECK(out.trajectory[1].text == "m2[m1[x]]");
  CHECK(out.trajectory[2].text == "m2[m1[m2[m1[x]]]]");
  CHECK(prompts[0] == "S(x)");
  CHECK(prompts[1] == "N(m1[x])");
  CHECK(out.trajectory[1].prompt_id == "sum+neg");
  CHECK(out.trajectory[1].model == "m1+m2");
  CHECK(out.trajectory[1].temperature == 0.9);
  CHECK(out.trajectory[1].seed == 3);
  CHECK_FALSE(out.trajectory.has_embeddings());
}

TEST_CASE("transcript replay reproduces the recorded loops byte for byte") {
  for (const std::string name : {"contractive", "exploratory"}) {
    testutil::TempDir dir;
    const auto cfg = preset(name);
    auto run_once = [&](const std::string& file) {
      auto backend = TranscriptBackend::from_file(std::string(LOOPDYN_FIXTURES_DIR) + "/" + name +
                                                  "_transcript.jsonl");
      TrajectoryStore store(dir / file);
      return run_loop(cfg, backend, nullptr, store, fixed_clock);
    };
    const auto a = run_once("a.jsonl");
    const auto b = run_once("b.jsonl");
    CHECK_FALSE(a.aborted());
    CHECK(testutil::slurp(dir / "a.jsonl") == testutil::slurp(dir / "b.jsonl"));

    std::ifstream texts(std::string(LOOPDYN_FIXTURES_DIR) + "/" + name + "_texts.txt");
    std::size_t t = 0;
    for (std::string line; std::getline(texts, line); ++t) {
      REQUIRE(t < a.trajectory.size());
      CHECK(a.trajectory[t].text == line);
    }
    CHECK(t == 51);
  }
}

TEST_CASE("backend failure leaves a readable partial trajectory") {
  testutil::TempDir dir;
  const auto path = dir / "partial.jsonl";
  TranscriptBackend short_transcript({"one", "two"});
  TrajectoryStore store(path);
  const auto out = run_loop(single_phase(5), short_transcript, nullptr, store, fixed_clock);
  CHECK(out.aborted());
  CHECK(out.error_kind == ErrorKind::BackendMalformedResponse);
  CHECK(out.trajectory.size() == 3);
  const auto lines = read_lines(path);
  REQUIRE(lines.size() == 4);
  CHECK(json::parse(lines.back())["aborted"] == true);
  const auto back = read_trajectory(path);
  CHECK(back.aborted());
  CHECK(back.size() == 3);
  CHECK(back[2].text == "two");
}

TEST_CASE("empty generations abort unless allowed") {
  testutil::TempDir dir;
  FunctionBackend thinker([](const GenerationRequest&) { return "<think>only thoughts</think>  "; });
  {
    TrajectoryStore store(dir / "a.jsonl");
    const auto out = run_loop(single_phase(2), thinker, nullptr, store, fixed_clock);
    CHECK(out.error_kind == ErrorKind::EmptyGeneration);
    CHECK(out.trajectory.size() == 1);
  }
  auto cfg = single_phase(2);
  cfg.postprocess.reject_empty = false;
  TrajectoryStore store(dir / "b.jsonl");
  const auto out = run_loop(cfg, thinker, nullptr, store, fixed_clock);
  CHECK_FALSE(out.aborted());
  CHECK(out.trajectory[2].text.empty());
}

TEST_CASE("embedding backends") {
  StubEmbeddingBackend stub(32, 1);
  CHECK(stub.embed("a") == stub.embed("a"));
  CHECK(stub.embed("a") != stub.embed("b"));
  CHECK(StubEmbeddingBackend(32, 2).embed("a") != stub.embed("a"));
  const auto empty = stub.embed("");
  CHECK(empty[0] == 1.0);
  CHECK(embed_text(stub, "a").dim() == 32);
  CHECK(kind_of([] { StubEmbeddingBackend(0); }) == ErrorKind::InvalidParams);

  LookupEmbeddingBackend lookup({{"hello", {3.0, 4.0}}});
  CHECK(embed_text(lookup, "hello")[0] == doctest::Approx(0.6));
  CHECK(kind_of([&] { lookup.embed("bye"); }) == ErrorKind::MissingEmbeddings);

  testutil::TempDir dir;
  testutil::spit(dir / "table.jsonl", "{\"text\":\"x\",\"embedding\":[1,0]}\n\n{\"text\":\"y\"}\n");
  CHECK(kind_of([&] { LookupEmbeddingBackend::from_file(dir / "table.jsonl"); }) == ErrorKind::Parse);

  FixedDimEmbedder mixed;
  const Trajectory traj = Trajectory::from_embeddings({});
  CHECK(embed_trajectory(traj, mixed).empty());
  TrajectoryRecord a;
  a.text = "ab";
  TrajectoryRecord b;
  b.t = 1;
  b.text = "abc";
  CHECK(kind_of([&] { embed_trajectory(Trajectory({a, b}), mixed); }) == ErrorKind::DimMismatch);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("ollama-compatible backend over HTTP") {
  testutil::FakeServer fake;
  json last_body;
  std::atomic<int> calls{0};
  std::atomic<int> fail_first{0};
  fake.server.Post("/api/generate", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (fail_first > 0) {
      --fail_first;
      res.status = 503;
      return;
    }
    last_body = json::parse(req.body);
    res.set_content(json{{"response", "<think>hm</think>Done."}, {"done", true}}.dump(),
                    "application/json");
  });
  fake.server.Post("/api/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    res.set_content(json{{"embedding", {1.0, 2.0, double(body["prompt"].get<std::string>().size())}}}.dump(),
                    "application/json");
  });
  fake.start();

  OllamaBackend llm(HttpEndpoint{fake.url(), std::chrono::seconds(5)}, fast_retry());
  GenerationRequest req{GenerationParams{"tiny", 0.3, 0.9, 20, 11}, "prompt text", "src"};
  CHECK(llm.generate(req) == "<think>hm</think>Done.");
  CHECK(last_body["model"] == "tiny");
  CHECK(last_body["prompt"] == "prompt text");
  CHECK(last_body["stream"] == false);
  CHECK(last_body["options"]["temperature"] == 0.3);
  CHECK(last_body["options"]["top_p"] == 0.9);
  CHECK(last_body["options"]["top_k"] == 20);
  CHECK(last_body["options"]["seed"] == 11);

  SUBCASE("transient server errors are retried") {
    calls = 0;
    fail_first = 2;
    CHECK(llm.generate(req) == "<think>hm</think>Done.");
    CHECK(calls == 3);
    fail_first = 3;
    CHECK(kind_of([&] { llm.generate(req); }) == ErrorKind::BackendUnreachable);
  }
  SUBCASE("loops run against the server") {
    testutil::TempDir dir;
    TrajectoryStore store(dir / "http.jsonl");
    HttpEmbeddingBackend embed(HttpEndpoint{fake.url(), std::chrono::seconds(5)}, "e", fast_retry());
    const auto out = run_loop(single_phase(2), llm, &embed, store, fixed_clock);
    CHECK_FALSE(out.aborted());
    CHECK(out.trajectory[2].text == "Done.");
    CHECK(out.trajectory.has_embeddings());
  }
  SUBCASE("missing routes are malformed, dead ports unreachable") {
    testutil::FakeServer empty;
    empty.start();
    OllamaBackend no_route(HttpEndpoint{empty.url()}, fast_retry());
    HttpEmbeddingBackend no_embed(HttpEndpoint{empty.url()}, "e", fast_retry());
    CHECK(kind_of([&] { no_route.generate(req); }) == ErrorKind::BackendMalformedResponse);
    CHECK(kind_of([&] { no_embed.embed("x"); }) == ErrorKind::BackendMalformedResponse);
    OllamaBackend dead(HttpEndpoint{"http://127.0.0.1:1", std::chrono::seconds(1)}, fast_retry());
    CHECK(kind_of([&] { dead.generate(req); }) == ErrorKind::BackendUnreachable);
  }
}

TEST_CASE("malformed generation bodies") {
  testutil::FakeServer fake;
  fake.server.Post("/api/generate", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"text\": 1}", "application/json");
  });
  fake.server.Post("/api/embeddings", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "application/json");
  });
  fake.start();
  OllamaBackend llm(HttpEndpoint{fake.url()}, fast_retry());
  CHECK(kind_of([&] { llm.generate({GenerationParams{"m"}, "p", "s"}); }) ==
        ErrorKind::BackendMalformedResponse);
  HttpEmbeddingBackend emb(HttpEndpoint{fake.url()}, "e", fast_retry());
  CHECK(kind_of([&] { emb.embed("x"); }) == ErrorKind::BackendMalformedResponse);
}

TEST_CASE("endpoint environment overrides") {
  setenv("LOOPDYN_TEST_URL", "http://example.invalid:9", 1);
  setenv("LOOPDYN_HTTP_TIMEOUT_S", "2.5", 1);
  const auto ep = endpoint_from_env("LOOPDYN_TEST_URL", "http://localhost:11434");
  CHECK(ep.base_url == "http://example.invalid:9");
  CHECK(ep.timeout == std::chrono::milliseconds(2500));
  unsetenv("LOOPDYN_TEST_URL");
  unsetenv("LOOPDYN_HTTP_TIMEOUT_S");
  CHECK(endpoint_from_env("LOOPDYN_TEST_URL", "http://localhost:11434").base_url ==
        "http://localhost:11434");
}
