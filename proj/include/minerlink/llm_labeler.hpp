#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "minerlink/pairing.hpp"
#include "minerlink/records.hpp"

namespace minerlink {

struct LabelerConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "llama3-8b";
  double temperature = 0.0;
  std::size_t max_retries = 2;
  std::size_t max_in_flight = 4;
  std::filesystem::path cache_path;  // empty: no persistent cache
  double timeout_s = 60.0;
  int max_tokens = 8;
  std::string api_key;  // sent as a bearer token when non-empty

  void validate() const;
  /// MINERLINK_LLM_BASE_URL overrides base_url; MINERLINK_LLM_API_KEY sets
  /// api_key.
  void apply_environment();
  static LabelerConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // never includes the api key
};

/// The answer a response carries. Abstain is a value, not an error.
enum class YesNo { No = 0, Yes = 1, Abstain };

/// Trims whitespace and punctuation, case-folds, and reads the first token.
YesNo parse_yes_no(std::string_view text);

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 8;
};

/// Body of POST {base_url}/v1/chat/completions.
nlohmann::json chat_request_body(const ChatRequest& req);
/// choices[0].message.content of a completion response; TransportError when
/// absent.
std::string chat_response_content(const nlohmann::json& response);

/// One blocking chat completion. Implementations must be callable from
/// several threads at once.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Returns the assistant message text; throws TransportError.
  virtual std::string complete(const ChatRequest& req) = 0;
};

/// OpenAI-style chat-completions client over HTTP(S). Each calling thread
/// gets its own connection.
std::unique_ptr<ChatTransport> make_http_transport(const LabelerConfig& cfg);

enum class LabelStatus { Ok, Abstain, TransportError };

const char* to_string(LabelStatus s);

struct LabelOutcome {
  PairKey key;
  std::optional<int> label;  // present iff status == Ok
  std::string raw_response;
  LabelStatus status = LabelStatus::Abstain;
  std::string error;  // transport failure cause
};

/// Response cache keyed by SHA-256 of (model, temperature, prompt), persisted
/// as append-only JSON Lines {"hash", "response", "status"}. Safe for
/// concurrent use; an entry becomes visible only after its line is written.
class LabelCache {
 public:
  struct Entry {
    std::string response;
    LabelStatus status;
  };

  LabelCache() = default;
  /// Loads existing entries; a torn last line is skipped.
  explicit LabelCache(std::filesystem::path path);

  static std::string key(const std::string& model, double temperature,
                         const std::string& prompt);

  std::optional<Entry> get(const std::string& hash) const;
  void put(const std::string& hash, const Entry& entry);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Entry> entries_;
};

std::string sha256_hex(std::string_view data);

class Labeler {
 public:
  Labeler(LabelerConfig cfg, ChatTransport& transport, LabelCache& cache);

  /// Builds the pair prompt, consults the cache, then asks the endpoint; an
  /// abstaining answer is retried with the format constraint repeated. A
  /// prompt already being asked by another thread is waited for, not re-sent.
  LabelOutcome label_pair(const Record& a, const Record& b);

  std::size_t requests_issued() const { return requests_.load(); }
  std::size_t cache_hits() const { return hits_.load(); }

 private:
  LabelOutcome ask(const std::string& prompt, const std::string& hash, LabelOutcome out);

  LabelerConfig cfg_;
  ChatTransport& transport_;
  LabelCache& cache_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> hits_{0};
  std::mutex flight_mu_;
  std::unordered_map<std::string, std::shared_future<void>> in_flight_;
};

struct LabelSummary {
  std::size_t pairs = 0;
  std::size_t matches = 0;
  std::size_t nonmatches = 0;
  std::size_t abstain_defaulted = 0;
  std::size_t requests = 0;
  std::size_t cache_hits = 0;
};

struct LabeledDataset {
  std::vector<LabeledPair> pairs;
  LabelSummary summary;
};

/// Labels every pair with at most cfg.max_in_flight requests outstanding.
/// Output order equals input order; abstentions become label 0 with
/// provenance LLMAbstainDefault. Unknown uris throw DataError before any
/// request; a transport failure throws TransportError after in-flight
/// requests drain.
LabeledDataset label_dataset(const std::vector<PairKey>& pairs, const RecordIndex& records,
                             const LabelerConfig& cfg, ChatTransport& transport,
                             LabelCache& cache);

}  // namespace minerlink
