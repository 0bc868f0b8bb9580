#include "sensorpen/llm_backend.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "sensorpen/digest.hpp"

namespace sensorpen::llm {
namespace {

std::string_view role_name(Role r) { return r == Role::System ? "system" : "user"; }

std::string normalise_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      out += '\n';
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

void validate(const ChatRequest& r) {
  if (r.messages.empty()) throw Error(ErrorCode::InvalidArgument, "request has no messages");
}

nlohmann::json entry_to_json(const ReplayEntry& e) {
  nlohmann::json j{{"fingerprint", e.fingerprint}, {"response_text", e.response_text},
                   {"recorded_at", e.recorded_at}};
  if (e.usage) {
    j["usage"] = {{"prompt_tokens", e.usage->prompt_tokens}, {"completion_tokens", e.usage->completion_tokens}};
  }
  return j;
}

ReplayEntry entry_from_json(const nlohmann::json& j) {
  ReplayEntry e;
  e.fingerprint = j.at("fingerprint").get<std::string>();
  e.response_text = j.at("response_text").get<std::string>();
  e.recorded_at = j.value("recorded_at", std::string{});
  if (j.contains("usage") && j["usage"].is_object()) {
    e.usage = Usage{j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0)};
  }
  return e;
}

}  // namespace

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::Live: return "live";
    case BackendKind::Replay: return "replay";
    case BackendKind::Record: return "record";
  }
  return "unknown";
}

ChatRequest make_prompt_request(const std::string& model_id, const std::string& text,
                                const std::vector<std::vector<std::uint8_t>>& images) {
  ChatRequest r;
  r.model_id = model_id;
  r.messages.push_back(Message{Role::User, text, images});
  return r;
}

std::string canonical_request(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : m.images) images.push_back(sha256_hex(img));
    messages.push_back({{"role", role_name(m.role)}, {"text", normalise_newlines(m.text)}, {"images", images}});
  }
  nlohmann::json j{{"model", request.model_id},
                   {"messages", messages},
                   {"temperature", request.temperature ? nlohmann::json(*request.temperature) : nlohmann::json()},
                   {"max_tokens", request.max_tokens ? nlohmann::json(*request.max_tokens) : nlohmann::json()}};
  return j.dump();
}

std::string fingerprint(const ChatRequest& request) { return sha256_hex(canonical_request(request)); }

nlohmann::json request_body(const ChatRequest& request) {
  validate(request);
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    if (m.images.empty()) {
      messages.push_back({{"role", role_name(m.role)}, {"content", m.text}});
      continue;
    }
    nlohmann::json parts = nlohmann::json::array();
    parts.push_back({{"type", "text"}, {"text", m.text}});
    for (const auto& img : m.images) {
      parts.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(img)}}}});
    }
    messages.push_back({{"role", role_name(m.role)}, {"content", parts}});
  }
  nlohmann::json body{{"model", request.model_id}, {"messages", messages}};
  if (request.temperature) body["temperature"] = *request.temperature;
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  return body;
}

LiveConfig live_config_from_env(const std::string& api_base) {
  const char* key = std::getenv(kApiKeyEnv);
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::AuthFailed, std::string(kApiKeyEnv) + " is not set");
  }
  return LiveConfig{api_base, key};
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.api_base.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "api base must look like http(s)://host[:port][/prefix]");
  }
  const auto path_start = config_.api_base.find('/', scheme_end + 3);
  host_ = config_.api_base.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : config_.api_base.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

ModelResponse LiveBackend::complete(const ChatRequest& request) {
  const auto body = request_body(request).dump();
  httplib::Client client(host_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  client.set_bearer_token_auth(config_.api_key);

  const auto t0 = std::chrono::steady_clock::now();
  auto res = client.Post(path_prefix_ + "/v1/chat/completions", body, "application/json");
  const auto t1 = std::chrono::steady_clock::now();
  if (!res) {
    const auto err = res.error();
    const auto code = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                          ? ErrorCode::Timeout
                          : ErrorCode::BackendFailure;
    throw Error(code, "transport error: " + httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) throw Error(ErrorCode::AuthFailed, "HTTP " + std::to_string(res->status));
  if (res->status == 429) throw Error(ErrorCode::RateLimited, "HTTP 429");
  if (res->status == 408 || res->status == 504) throw Error(ErrorCode::Timeout, "HTTP " + std::to_string(res->status));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::BackendFailure, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  ModelResponse out;
  out.backend = BackendKind::Live;
  out.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  try {
    const auto j = nlohmann::json::parse(res->body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    out.text = content.is_null() ? std::string{} : content.get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      out.usage = Usage{j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendFailure, std::string("unexpected response body: ") + e.what());
  }
  return out;
}

ReplayStore::ReplayStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // starts empty
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto e = entry_from_json(nlohmann::json::parse(line));
      entries_.emplace(e.fingerprint, std::move(e));  // first recording wins
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::InvalidArgument, path_ + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
}

std::optional<ReplayEntry> ReplayStore::lookup(const std::string& fp) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(fp);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ReplayStore::append(const ReplayEntry& entry) {
  std::unique_lock lock(mutex_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to " + path_);
    out << entry_to_json(entry).dump() << '\n';
    out.flush();
  }
  entries_.emplace(entry.fingerprint, entry);
}

std::size_t ReplayStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

ReplayBackend::ReplayBackend(std::shared_ptr<const ReplayStore> store) : store_(std::move(store)) {
  if (!store_) throw Error(ErrorCode::InvalidArgument, "replay backend needs a store");
}

ModelResponse ReplayBackend::complete(const ChatRequest& request) {
  validate(request);
  const auto fp = fingerprint(request);
  const auto entry = store_->lookup(fp);
  if (!entry) throw Error(ErrorCode::ReplayMiss, fp);
  return ModelResponse{entry->response_text, entry->usage, 0.0, BackendKind::Replay};
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<ReplayStore> store,
                                   TimestampFn now)
    : inner_(std::move(inner)), store_(std::move(store)), now_(std::move(now)) {
  if (!inner_ || !store_) throw Error(ErrorCode::InvalidArgument, "recording backend needs a backend and a store");
}

ModelResponse RecordingBackend::complete(const ChatRequest& request) {
  auto response = inner_->complete(request);
  store_->append(ReplayEntry{fingerprint(request), response.text, response.usage, now_()});
  response.backend = BackendKind::Record;
  return response;
}

void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

std::vector<BatchResult> run_batch(Backend& backend, const std::vector<ChatRequest>& requests, int parallelism,
                                   const RetryPolicy& policy, const Sleeper& sleep) {
  if (parallelism < 1) throw Error(ErrorCode::InvalidArgument, "parallelism must be >= 1");
  if (policy.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  std::vector<BatchResult> results(requests.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      auto& slot = results[i];
      auto delay = policy.base_delay;
      for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        slot.attempts = attempt;
        try {
          slot.response = backend.complete(requests[i]);
          slot.error.reset();
          slot.error_message.clear();
          break;
        } catch (const Error& e) {
          slot.error = e.code();
          slot.error_message = e.what();
          const bool retryable = e.code() == ErrorCode::RateLimited || e.code() == ErrorCode::Timeout;
          if (!retryable || attempt == policy.max_attempts) break;
          sleep(delay);
          delay *= policy.factor;
        } catch (const std::exception& e) {
          slot.error = ErrorCode::BackendFailure;
          slot.error_message = e.what();
          break;
        }
      }
    }
  };

  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), requests.size());
  if (n_threads <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

}  // namespace sensorpen::llm
