#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathrag/chat.hpp"

namespace pathrag {

/// Result of one backend round trip. Backends report failures as data so
/// the gateway can decide what is retryable.
struct BackendOutcome {
    bool ok = false;
    std::string text;
    // failure details
    int status = 0;  // HTTP status when applicable, 0 otherwise
    bool timed_out = false;
    bool unreachable = false;
    bool malformed = false;
    std::string message;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendOutcome send(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
    virtual int64_t calls() const = 0;
};

/// Offline backend with a fixed response rule: the reply embeds the prompt
/// kind, the first 8 hex chars of the cache key, and (for multimodal
/// requests) the image dimensions. ArchOpenGeneration requests get a
/// well-formed five-pair QA response so dataset construction runs offline.
class MockBackend : public Backend {
public:
    BackendOutcome send(const ChatRequest& request) override;
    std::string id() const override { return "mock"; }
    int64_t calls() const override { return calls_.load(); }

private:
    std::atomic<int64_t> calls_{0};
};

struct HttpBackendOptions {
    std::string base_url;  // e.g. http://127.0.0.1:8089
    std::string api_key;   // sent as a bearer token when non-empty
    std::string path = "/v1/chat/completions";
    int timeout_ms = 60000;
};

/// JSON chat-completion client: messages array with roles, optional
/// base64 PNG image content, temperature field.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {}
    BackendOutcome send(const ChatRequest& request) override;
    std::string id() const override { return "http:" + options_.base_url; }
    int64_t calls() const override { return calls_.load(); }

private:
    HttpBackendOptions options_;
    std::atomic<int64_t> calls_{0};
};

/// Content-addressed response store. With a directory it persists one
/// JSON envelope per key and never rewrites an existing entry; without
/// one it keeps entries in memory. Concurrent readers and distinct-key
/// writers are safe; a same-key double write is benign because the
/// content is identical by construction.
class ResponseCache {
public:
    explicit ResponseCache(std::string directory = "");

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& text, const std::string& model_id);

    bool persistent() const { return !directory_.empty(); }

private:
    std::string directory_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> memory_;
};

struct GatewayOptions {
    std::string model_id;
    double temperature = 0.0;
    int max_retries = 3;  // retries after the first attempt, on Timeout/5xx
    std::vector<int> backoff_ms = {1000, 2000, 4000};
    int concurrency = 4;  // in-flight request limit
};

struct GatewayCounters {
    std::atomic<int64_t> requests{0};
    std::atomic<int64_t> cache_hits{0};
    std::atomic<int64_t> backend_calls{0};
};

/// Uniform client for one model role: cache lookup, bounded concurrency,
/// retry with exponential backoff, and failure mapping to Error codes.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache,
            GatewayOptions options);
    ~Gateway();

    /// Throws BackendUnreachable, BackendError, MalformedResponse, or
    /// Timeout. `bypass_cache` skips the read (used for parse retries);
    /// stores still happen, write-if-absent.
    ChatResponse chat(ChatRequest request, bool bypass_cache = false);

    const GatewayCounters& counters() const { return counters_; }
    const GatewayOptions& options() const { return options_; }
    Backend& backend() { return *backend_; }

private:
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    GatewayOptions options_;
    GatewayCounters counters_;
    std::unique_ptr<class RequestSlots> slots_;
};

}  // namespace pathrag
