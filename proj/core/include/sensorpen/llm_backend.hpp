#pragma once

// Chat-completion backends: a live HTTP client for OpenAI-compatible
// endpoints and a record/replay store keyed by request fingerprint.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sensorpen/error.hpp"

namespace sensorpen::llm {

enum class Role { System, User };

struct Message {
  Role role = Role::User;
  std::string text;
  std::vector<std::vector<std::uint8_t>> images;  // PNG bytes, sent after the text
};

struct ChatRequest {
  std::string model_id;
  std::vector<Message> messages;
  std::optional<double> temperature;  // omitted from the body when unset
  std::optional<int> max_tokens;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

enum class BackendKind { Live, Replay, Record };

std::string_view to_string(BackendKind kind) noexcept;

struct ModelResponse {
  std::string text;
  std::optional<Usage> usage;
  double latency_ms = 0.0;
  BackendKind backend = BackendKind::Replay;
};

// Single user message holding the prompt text and any figures.
ChatRequest make_prompt_request(const std::string& model_id, const std::string& text,
                                const std::vector<std::vector<std::uint8_t>>& images = {});

// Canonical form: model, messages in order (line endings normalised to \n,
// images replaced by their SHA-256), temperature, max_tokens.
std::string canonical_request(const ChatRequest& request);
std::string fingerprint(const ChatRequest& request);

// Wire body for POST <base>/v1/chat/completions.
nlohmann::json request_body(const ChatRequest& request);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelResponse complete(const ChatRequest& request) = 0;
};

struct LiveConfig {
  std::string api_base;  // scheme://host[:port][/prefix]
  std::string api_key;
  std::chrono::seconds timeout{120};
};

inline constexpr const char* kApiKeyEnv = "SENSORPEN_API_KEY";

// Reads the key from SENSORPEN_API_KEY; throws AuthFailed when unset.
LiveConfig live_config_from_env(const std::string& api_base);

// Maps HTTP 401/403 to AuthFailed, 429 to RateLimited, transport timeouts to
// Timeout and anything else unexpected to BackendFailure.
class LiveBackend final : public Backend {
 public:
  explicit LiveBackend(LiveConfig config);
  ModelResponse complete(const ChatRequest& request) override;

 private:
  LiveConfig config_;
  std::string host_;
  std::string path_prefix_;
};

struct ReplayEntry {
  std::string fingerprint;
  std::string response_text;
  std::optional<Usage> usage;
  std::string recorded_at;
};

// JSON Lines file of recorded responses. Reads may run concurrently; appends
// are serialised and flushed line by line.
class ReplayStore {
 public:
  ReplayStore() = default;
  // Loads `path` if it exists; appends go to the same file.
  explicit ReplayStore(std::string path);

  std::optional<ReplayEntry> lookup(const std::string& fingerprint) const;
  void append(const ReplayEntry& entry);
  std::size_t size() const;
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, ReplayEntry> entries_;
};

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(std::shared_ptr<const ReplayStore> store);
  // Throws ReplayMiss with the fingerprint.
  ModelResponse complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<const ReplayStore> store_;
};

using TimestampFn = std::function<std::string()>;

// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

class RecordingBackend final : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<ReplayStore> store,
                   TimestampFn now = utc_timestamp);
  ModelResponse complete(const ChatRequest& request) override;

 private:
  std::unique_ptr<Backend> inner_;
  std::shared_ptr<ReplayStore> store_;
  TimestampFn now_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  int factor = 2;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
void real_sleep(std::chrono::milliseconds d);

struct BatchResult {
  std::optional<ModelResponse> response;
  std::optional<ErrorCode> error;
  std::string error_message;
  int attempts = 0;
};

// Runs requests with at most `parallelism` in flight and returns results in
// input order. RateLimited and Timeout are retried with delays of
// base, base*factor, ... up to max_attempts; other errors are recorded at
// once. Throws InvalidArgument if parallelism < 1.
std::vector<BatchResult> run_batch(Backend& backend, const std::vector<ChatRequest>& requests,
                                   int parallelism, const RetryPolicy& policy = {},
                                   const Sleeper& sleep = real_sleep);

}  // namespace sensorpen::llm
