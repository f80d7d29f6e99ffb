#include <httplib.h>

#include "minerlink/llm_labeler.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

#include "minerlink/error.hpp"
#include "minerlink/serialize.hpp"

namespace minerlink {

void LabelerConfig::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("labeler: temperature must be >= 0");
  }
  if (max_in_flight < 1) throw ConfigError("labeler: max_in_flight must be >= 1");
  if (!(timeout_s > 0.0)) throw ConfigError("labeler: timeout_s must be positive");
  if (base_url.empty()) throw ConfigError("labeler: base_url is empty");
  if (model.empty()) throw ConfigError("labeler: model is empty");
}

void LabelerConfig::apply_environment() {
  if (const char* url = std::getenv("MINERLINK_LLM_BASE_URL"); url && *url) base_url = url;
  if (const char* key = std::getenv("MINERLINK_LLM_API_KEY"); key && *key) api_key = key;
}

LabelerConfig LabelerConfig::from_json(const nlohmann::json& j) {
  LabelerConfig c;
  try {
    c.base_url = j.value("base_url", c.base_url);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    if (j.contains("cache_path")) c.cache_path = j.at("cache_path").get<std::string>();
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("labeler: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json LabelerConfig::to_json() const {
  return {{"base_url", base_url},       {"model", model},
          {"temperature", temperature}, {"max_retries", max_retries},
          {"max_in_flight", max_in_flight}, {"cache_path", cache_path.string()},
          {"timeout_s", timeout_s},     {"max_tokens", max_tokens}};
}

YesNo parse_yes_no(std::string_view text) {
  auto word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };
  std::size_t i = 0;
  while (i < text.size() && !word_char(text[i])) ++i;
  std::string token;
  while (i < text.size() && word_char(text[i])) {
    token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    ++i;
  }
  if (token == "yes") return YesNo::Yes;
  if (token == "no") return YesNo::No;
  return YesNo::Abstain;
}

nlohmann::json chat_request_body(const ChatRequest& req) {
  return {{"model", req.model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens}};
}

std::string chat_response_content(const nlohmann::json& response) {
  try {
    const auto& content = response.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("chat response: ") + e.what());
  }
}

namespace {

class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(const LabelerConfig& cfg) : cfg_(cfg) {
    const auto scheme = cfg.base_url.find("://");
    const auto path_at =
        cfg.base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    origin_ = cfg.base_url.substr(0, path_at);
    std::string prefix = path_at == std::string::npos ? "" : cfg.base_url.substr(path_at);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/v1/chat/completions";
  }

  std::string complete(const ChatRequest& req) override {
    httplib::Client client(origin_);
    if (!client.is_valid()) throw TransportError("llm: invalid base_url '" + cfg_.base_url + "'");
    const auto secs = static_cast<time_t>(cfg_.timeout_s);
    const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    const auto res =
        client.Post(path_, headers, chat_request_body(req).dump(), "application/json");
    if (!res) {
      throw TransportError("llm: request to " + origin_ + path_ +
                           " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw TransportError("llm: HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw TransportError(std::string("llm: response is not JSON: ") + e.what());
    }
    return chat_response_content(body);
  }

 private:
  LabelerConfig cfg_;
  std::string origin_;
  std::string path_;
};

LabelStatus status_from_string(const std::string& s) {
  if (s == "Ok") return LabelStatus::Ok;
  if (s == "Abstain") return LabelStatus::Abstain;
  if (s == "TransportError") return LabelStatus::TransportError;
  throw DataError("cache: unknown status '" + s + "'");
}

}  // namespace

std::unique_ptr<ChatTransport> make_http_transport(const LabelerConfig& cfg) {
  cfg.validate();
  return std::make_unique<HttpChatTransport>(cfg);
}

const char* to_string(LabelStatus s) {
  switch (s) {
    case LabelStatus::Ok:
      return "Ok";
    case LabelStatus::Abstain:
      return "Abstain";
    case LabelStatus::TransportError:
      return "TransportError";
  }
  return "?";
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

LabelCache::LabelCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      entries_.insert_or_assign(j.at("hash").get<std::string>(),
                                Entry{j.at("response").get<std::string>(),
                                      status_from_string(j.at("status").get<std::string>())});
    } catch (const nlohmann::json::exception&) {
      // torn append from an interrupted run
    }
  }
}

std::string LabelCache::key(const std::string& model, double temperature,
                            const std::string& prompt) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, temperature);
  std::string material = model;
  material.push_back('\0');
  material.append(buf, ptr);
  material.push_back('\0');
  material += prompt;
  return sha256_hex(material);
}

std::optional<LabelCache::Entry> LabelCache::get(const std::string& hash) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LabelCache::put(const std::string& hash, const Entry& entry) {
  std::lock_guard lock(mu_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    out << nlohmann::json{{"hash", hash},
                          {"response", entry.response},
                          {"status", to_string(entry.status)}}
               .dump()
        << '\n';
    out.flush();
    if (!out) throw DataError("cache: cannot append to " + path_.string());
  }
  entries_.insert_or_assign(hash, entry);
}

std::size_t LabelCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

Labeler::Labeler(LabelerConfig cfg, ChatTransport& transport, LabelCache& cache)
    : cfg_(std::move(cfg)), transport_(transport), cache_(cache) {
  cfg_.validate();
}

LabelOutcome Labeler::label_pair(const Record& a, const Record& b) {
  LabelOutcome out{PairKey(a.uri, b.uri)};
  const std::string prompt = build_pair_prompt(a, b);
  const std::string hash = LabelCache::key(cfg_.model, cfg_.temperature, prompt);

  for (;;) {
    if (auto hit = cache_.get(hash)) {
      ++hits_;
      out.raw_response = hit->response;
      out.status = hit->status;
      if (hit->status == LabelStatus::Ok) {
        out.label = parse_yes_no(hit->response) == YesNo::Yes ? 1 : 0;
      }
      return out;
    }
    std::promise<void> done;
    std::shared_future<void> pending;
    {
      std::lock_guard lock(flight_mu_);
      const auto it = in_flight_.find(hash);
      if (it != in_flight_.end()) {
        pending = it->second;
      } else {
        in_flight_.emplace(hash, done.get_future().share());
      }
    }
    if (pending.valid()) {
      // Another thread is asking; its answer lands in the cache unless it
      // failed, in which case this thread asks itself.
      pending.wait();
      continue;
    }
    struct Release {
      Labeler& self;
      const std::string& hash;
      std::promise<void>& done;
      ~Release() {
        {
          std::lock_guard lock(self.flight_mu_);
          self.in_flight_.erase(hash);
        }
        done.set_value();
      }
    } release{*this, hash, done};
    return ask(prompt, hash, std::move(out));
  }
}

LabelOutcome Labeler::ask(const std::string& prompt, const std::string& hash,
                          LabelOutcome out) {
  const std::string retry_prompt = prompt + "\n" + std::string(kPromptConstraint);
  bool answered = false;
  for (std::size_t attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    ChatRequest req{cfg_.model, answered ? retry_prompt : prompt, cfg_.temperature,
                    cfg_.max_tokens};
    std::string text;
    try {
      ++requests_;
      text = transport_.complete(req);
    } catch (const TransportError& e) {
      out.error = e.what();
      continue;
    }
    answered = true;
    out.raw_response = text;
    const YesNo v = parse_yes_no(text);
    if (v != YesNo::Abstain) {
      out.status = LabelStatus::Ok;
      out.label = v == YesNo::Yes ? 1 : 0;
      out.error.clear();
      cache_.put(hash, {text, LabelStatus::Ok});
      return out;
    }
  }
  if (!answered) {
    out.status = LabelStatus::TransportError;
    return out;
  }
  out.status = LabelStatus::Abstain;
  out.error.clear();
  cache_.put(hash, {out.raw_response, LabelStatus::Abstain});
  return out;
}

LabeledDataset label_dataset(const std::vector<PairKey>& pairs, const RecordIndex& records,
                             const LabelerConfig& cfg, ChatTransport& transport,
                             LabelCache& cache) {
  std::vector<std::pair<const Record*, const Record*>> resolved;
  resolved.reserve(pairs.size());
  for (const auto& k : pairs) {
    resolved.emplace_back(&records.at(k.uri_1()), &records.at(k.uri_2()));
  }

  Labeler labeler(cfg, transport, cache);
  std::vector<std::optional<LabelOutcome>> outcomes(pairs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::string first_error;
  std::exception_ptr unexpected;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= pairs.size()) return;
      try {
        auto o = labeler.label_pair(*resolved[i].first, *resolved[i].second);
        if (o.status == LabelStatus::TransportError) {
          std::lock_guard lock(err_mu);
          if (first_error.empty()) first_error = o.error;
          failed = true;
        }
        outcomes[i] = std::move(o);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!unexpected) unexpected = std::current_exception();
        failed = true;
      }
    }
  };

  const std::size_t workers = std::min(cfg.max_in_flight, pairs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (unexpected) std::rethrow_exception(unexpected);
  if (failed) throw TransportError("llm: " + first_error);

  LabeledDataset out;
  out.pairs.reserve(pairs.size());
  for (auto& o : outcomes) {
    LabeledPair p{o->key};
    p.raw_response = o->raw_response;
    if (o->status == LabelStatus::Ok) {
      p.label = *o->label;
      p.provenance = Provenance::LLM;
    } else {
      p.label = 0;
      p.provenance = Provenance::LLMAbstainDefault;
      ++out.summary.abstain_defaulted;
    }
    (p.label == 1 ? out.summary.matches : out.summary.nonmatches) += 1;
    out.pairs.push_back(std::move(p));
  }
  out.summary.pairs = pairs.size();
  out.summary.requests = labeler.requests_issued();
  out.summary.cache_hits = labeler.cache_hits();
  return out;
}

}  // namespace minerlink
