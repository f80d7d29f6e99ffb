#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "minerlink/error.hpp"
#include "minerlink/llm_labeler.hpp"
#include "minerlink/serialize.hpp"
#include "support/mock_llm_server.hpp"
#include "support/synthetic.hpp"

using namespace minerlink;
using minerlink::testing::MockLlmServer;
using minerlink::testing::plain_records;

namespace {

// Answers from a script, counting calls; can be told to fail.
class FakeTransport : public ChatTransport {
 public:
  explicit FakeTransport(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const ChatRequest& req) override {
    std::lock_guard lock(mu_);
    prompts.push_back(req.prompt);
    return fn_(req.prompt);
  }
  std::vector<std::string> prompts;

 private:
  std::function<std::string(const std::string&)> fn_;
  std::mutex mu_;
};

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "minerlink_llm_tests";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

LabelerConfig quick_config() {
  LabelerConfig cfg;
  cfg.timeout_s = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("llm_labeler") {
  TEST_CASE("yes/no parsing") {
    CHECK(parse_yes_no("Yes") == YesNo::Yes);
    CHECK(parse_yes_no("  yes.") == YesNo::Yes);
    CHECK(parse_yes_no("YES, they are the same") == YesNo::Yes);
    CHECK(parse_yes_no("\n**No**") == YesNo::No);
    CHECK(parse_yes_no("no") == YesNo::No);
    CHECK(parse_yes_no("Maybe") == YesNo::Abstain);
    CHECK(parse_yes_no("") == YesNo::Abstain);
    CHECK(parse_yes_no("Yesterday") == YesNo::Abstain);
    CHECK(parse_yes_no("Nope") == YesNo::Abstain);
  }

  TEST_CASE("request body and response content") {
    const auto body = chat_request_body({"m", "hello", 0.0, 8});
    CHECK(body["model"] == "m");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["max_tokens"] == 8);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "hello");
    const auto resp = nlohmann::json::parse(R"({"choices":[{"message":{"content":"Yes"}}]})");
    CHECK(chat_response_content(resp) == "Yes");
    CHECK_THROWS_AS(chat_response_content(nlohmann::json::object()), TransportError);
  }

  TEST_CASE("config validation and environment") {
    LabelerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.max_in_flight = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LabelerConfig{};
    cfg.api_key = "secret";
    CHECK(cfg.to_json().dump().find("secret") == std::string::npos);
    const auto round = LabelerConfig::from_json(cfg.to_json());
    CHECK(round.model == cfg.model);
    CHECK(round.max_retries == cfg.max_retries);
  }

  TEST_CASE("cache key and sha256") {
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto k = LabelCache::key("m", 0.0, "p");
    CHECK(k.size() == 64);
    CHECK(k != LabelCache::key("m", 0.5, "p"));
    CHECK(k != LabelCache::key("m2", 0.0, "p"));
    CHECK(k != LabelCache::key("m", 0.0, "p2"));
    CHECK(k == LabelCache::key("m", 0.0, "p"));
  }

  TEST_CASE("persistent cache survives reload and tolerates a torn line") {
    const auto path = temp_file("cache.jsonl");
    {
      LabelCache c(path);
      c.put("h1", {"Yes", LabelStatus::Ok});
      c.put("h2", {"Perhaps", LabelStatus::Abstain});
    }
    {
      std::ofstream f(path, std::ios::app);
      f << R"({"hash":"h3","resp)";
    }
    LabelCache c(path);
    CHECK(c.size() == 2);
    REQUIRE(c.get("h1"));
    CHECK(c.get("h1")->response == "Yes");
    CHECK(c.get("h2")->status == LabelStatus::Abstain);
    CHECK_FALSE(c.get("h3"));
  }

  TEST_CASE("labels pairs and reuses cached answers") {
    const auto recs = plain_records(5);
    const RecordIndex index(recs);
    const auto keys = enumerate_pairs(recs);
    FakeTransport t([](const std::string& p) {
      return p.find("name:site 1.") != std::string::npos ? "Yes" : "No.";
    });
    LabelCache cache;
    const auto first = label_dataset(keys, index, quick_config(), t, cache);
    CHECK(first.pairs.size() == 10);
    CHECK(first.summary.requests == 10);
    CHECK(first.summary.matches == 4);
    CHECK(first.summary.nonmatches == 6);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      CHECK(first.pairs[i].key == keys[i]);
      CHECK(first.pairs[i].provenance == Provenance::LLM);
    }
    const auto second = label_dataset(keys, index, quick_config(), t, cache);
    CHECK(second.summary.requests == 0);
    CHECK(second.summary.cache_hits == 10);
    CHECK(second.pairs == first.pairs);
    CHECK(t.prompts.size() == 10);
  }

  TEST_CASE("abstentions retry with the constraint and then default to non-match") {
    const auto recs = plain_records(2);
    const RecordIndex index(recs);
    FakeTransport t([](const std::string&) { return "I cannot tell."; });
    LabelCache cache;
    auto cfg = quick_config();
    cfg.max_retries = 2;
    const auto out = label_dataset(enumerate_pairs(recs), index, cfg, t, cache);
    REQUIRE(out.pairs.size() == 1);
    CHECK(t.prompts.size() == 3);
    CHECK(t.prompts[1].ends_with("\n" + std::string(kPromptConstraint)));
    CHECK(out.pairs[0].label == 0);
    CHECK(out.pairs[0].provenance == Provenance::LLMAbstainDefault);
    CHECK(out.pairs[0].raw_response == "I cannot tell.");
    CHECK(out.summary.abstain_defaulted == 1);

    // cached abstention is not re-queried
    label_dataset(enumerate_pairs(recs), index, cfg, t, cache);
    CHECK(t.prompts.size() == 3);
  }

  TEST_CASE("second attempt can resolve an abstention") {
    const auto recs = plain_records(2);
    // The template already ends with the constraint; a retry repeats it.
    const std::string repeated = std::string(kPromptConstraint) + "\n" + std::string(kPromptConstraint);
    FakeTransport t([&](const std::string& p) { return p.ends_with(repeated) ? "Yes" : "Unsure"; });
    LabelCache cache;
    Labeler l(quick_config(), t, cache);
    const auto o = l.label_pair(recs[0], recs[1]);
    CHECK(o.status == LabelStatus::Ok);
    CHECK(o.label == 1);
    CHECK(l.requests_issued() == 2);
  }

  TEST_CASE("identical prompts are asked once even when labeled concurrently") {
    std::vector<Record> recs;
    for (int i = 0; i < 8; ++i) {
      recs.push_back({"dup:" + std::to_string(i), "dup", {{"name", i < 4 ? "Same" : "Other"}}, {}});
    }
    const RecordIndex index(recs);
    MockLlmServer server([](const std::string&) { return "No"; }, std::chrono::milliseconds(2));
    auto cfg = quick_config();
    cfg.base_url = server.base_url();
    cfg.max_in_flight = 4;
    auto transport = make_http_transport(cfg);
    LabelCache cache;
    const auto out = label_dataset(enumerate_pairs(recs), index, cfg, *transport, cache);
    CHECK(out.pairs.size() == 28);
    CHECK(server.requests() == 3);  // Same|Same, Same|Other, Other|Other
    CHECK(out.summary.requests + out.summary.cache_hits == 28);
  }

  TEST_CASE("unknown uri fails before any request; empty input is a no-op") {
    const auto recs = plain_records(3);
    const RecordIndex index(recs);
    FakeTransport t([](const std::string&) { return "Yes"; });
    LabelCache cache;
    std::vector<PairKey> keys{PairKey(recs[0].uri, recs[1].uri), PairKey(recs[0].uri, "nope:1")};
    CHECK_THROWS_AS(label_dataset(keys, index, quick_config(), t, cache), DataError);
    CHECK(t.prompts.empty());
    const auto empty = label_dataset({}, index, quick_config(), t, cache);
    CHECK(empty.pairs.empty());
    CHECK(t.prompts.empty());
  }

  TEST_CASE("transport failure surfaces as TransportError and is not cached") {
    const auto recs = plain_records(4);
    const RecordIndex index(recs);
    FakeTransport t([](const std::string&) -> std::string { throw TransportError("down"); });
    LabelCache cache;
    auto cfg = quick_config();
    cfg.max_retries = 1;
    CHECK_THROWS_AS(label_dataset(enumerate_pairs(recs), index, cfg, t, cache), TransportError);
    CHECK(cache.size() == 0);
  }

  TEST_CASE("http transport against a local chat-completions server") {
    MockLlmServer server([](const std::string& p) {
      return p.find("name:site 0.") != std::string::npos ? "Yes" : "No";
    });
    auto cfg = quick_config();
    cfg.base_url = server.base_url();
    cfg.api_key = "k-123";
    cfg.model = "test-model";
    auto transport = make_http_transport(cfg);
    auto recs = plain_records(3);
    const RecordIndex index(recs);
    LabelCache cache;
    const auto out = label_dataset(enumerate_pairs(recs), index, cfg, *transport, cache);
    CHECK(server.requests() == 3);
    CHECK(server.last_authorization() == "Bearer k-123");
    const auto body = server.last_body();
    CHECK(body["model"] == "test-model");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["messages"][0]["content"].get<std::string>().find(kPromptQuestion) !=
          std::string::npos);
    CHECK(out.summary.matches == 2);
  }

  TEST_CASE("bounded in-flight requests") {
    MockLlmServer server([](const std::string&) { return "No"; }, std::chrono::milliseconds(5));
    auto cfg = quick_config();
    cfg.base_url = server.base_url();
    cfg.max_in_flight = 3;
    auto transport = make_http_transport(cfg);
    const auto recs = plain_records(12);
    const RecordIndex index(recs);
    LabelCache cache;
    const auto out = label_dataset(enumerate_pairs(recs), index, cfg, *transport, cache);
    CHECK(out.pairs.size() == 66);
    CHECK(server.max_in_flight() <= 3);
    CHECK(server.max_in_flight() >= 1);
  }

  TEST_CASE("unreachable endpoint") {
    auto cfg = quick_config();
    cfg.base_url = "http://127.0.0.1:1";
    cfg.max_retries = 0;
    cfg.timeout_s = 1;
    auto transport = make_http_transport(cfg);
    const auto recs = plain_records(2);
    const RecordIndex index(recs);
    LabelCache cache;
    CHECK_THROWS_AS(label_dataset(enumerate_pairs(recs), index, cfg, *transport, cache),
                    TransportError);
  }
}
