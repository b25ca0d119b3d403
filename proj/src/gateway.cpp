#include "pathrag/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pathrag/digest.hpp"
#include "pathrag/error.hpp"
#include "pathrag/image_io.hpp"

namespace pathrag {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------------- mock

BackendOutcome MockBackend::send(const ChatRequest& request) {
    calls_.fetch_add(1);
    std::string key8 = cache_key(request).substr(0, 8);

    BackendOutcome out;
    out.ok = true;
    if (request.kind == PromptKind::ArchOpenGeneration) {
        // Five well-formed pairs so the dataset builder works offline.
        const char* stems[5] = {
            "What overall structure is most prominent in the image",
            "What staining pattern can be seen in the image",
            "What cellular arrangement appears in the image",
            "Where are the darker regions located in the image",
            "Where do the lighter areas appear in the image",
        };
        const char* answers[5] = {
            "The image most likely shows a tissue region",
            "A diffuse staining pattern dominates the field",
            "The cells appear in loose clusters",
            "The darker regions sit near the center",
            "The lighter areas line the periphery",
        };
        for (int i = 0; i < 5; ++i) {
            std::string tag = " (mock " + key8 + "-" + std::to_string(i + 1) + ")";
            out.text += std::string("Question: ") + stems[i] + tag + "?\n";
            out.text += std::string("Answer: ") + answers[i] + tag + ".\n";
        }
        return out;
    }

    out.text = std::string("[mock ") + prompt_kind_name(request.kind) + " " + key8;
    if (request.image.has_value()) {
        out.text += " " + std::to_string(request.image->width) + "x" +
                    std::to_string(request.image->height);
    }
    out.text += "]";
    return out;
}

// ------------------------------------------------------------------- http

BackendOutcome HttpBackend::send(const ChatRequest& request) {
    calls_.fetch_add(1);

    json payload;
    payload["model"] = request.model_id;
    payload["temperature"] = request.temperature;
    payload["messages"] = json::array();
    if (!request.system_text.empty()) {
        payload["messages"].push_back({{"role", "system"}, {"content", request.system_text}});
    }
    if (request.image.has_value()) {
        std::string data_url =
            "data:image/png;base64," + base64_encode(encode_png(*request.image));
        payload["messages"].push_back(
            {{"role", "user"},
             {"content",
              json::array({{{"type", "text"}, {"text", request.user_text}},
                           {{"type", "image_url"}, {"image_url", {{"url", data_url}}}}})}});
    } else {
        payload["messages"].push_back({{"role", "user"}, {"content", request.user_text}});
    }

    httplib::Client client(options_.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(options_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options_.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(options_.timeout_ms));
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }

    auto result = client.Post(options_.path, headers, payload.dump(), "application/json");

    BackendOutcome out;
    if (!result) {
        out.timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                        result.error() == httplib::Error::Read ||
                        result.error() == httplib::Error::Write;
        out.unreachable = !out.timed_out;
        out.message = httplib::to_string(result.error());
        return out;
    }
    if (result->status != 200) {
        out.status = result->status;
        out.message = result->body.substr(0, 200);
        return out;
    }

    json reply = json::parse(result->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() || !reply["choices"][0].is_object()) {
        out.malformed = true;
        out.message = "response is not a chat completion";
        return out;
    }
    const json& message = reply["choices"][0].value("message", json::object());
    if (!message.is_object() || !message.value("content", json()).is_string()) {
        out.malformed = true;
        out.message = "completion has no text content";
        return out;
    }
    std::string text = message["content"].get<std::string>();
    if (text.empty()) {
        out.malformed = true;
        out.message = "empty completion text";
        return out;
    }
    out.ok = true;
    out.text = std::move(text);
    return out;
}

// ------------------------------------------------------------------ cache

ResponseCache::ResponseCache(std::string directory) : directory_(std::move(directory)) {
    if (!directory_.empty()) {
        fs::create_directories(directory_);
    }
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    if (directory_.empty()) {
        std::lock_guard lock(mutex_);
        auto it = memory_.find(key);
        if (it == memory_.end()) return std::nullopt;
        return it->second;
    }

    fs::path file = fs::path(directory_) / (key + ".json");
    std::ifstream in(file);
    if (!in) return std::nullopt;
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json envelope = json::parse(body, nullptr, false);
    if (envelope.is_discarded() || !envelope.contains("text") ||
        !envelope["text"].is_string()) {
        return std::nullopt;  // treat a damaged entry as a miss
    }
    return envelope["text"].get<std::string>();
}

void ResponseCache::put(const std::string& key, const std::string& text,
                        const std::string& model_id) {
    if (directory_.empty()) {
        std::lock_guard lock(mutex_);
        memory_.emplace(key, text);  // first write wins; content is identical anyway
        return;
    }

    fs::path file = fs::path(directory_) / (key + ".json");
    std::error_code ec;
    if (fs::exists(file, ec)) return;  // entries are immutable

    auto now = std::chrono::system_clock::now();
    json envelope = {
        {"request_digest", key},
        {"text", text},
        {"model_id", model_id},
        {"created_at",
         std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()},
    };

    // Write to a private temp name, then rename: readers never observe a
    // partial entry.
    static std::atomic<uint64_t> temp_counter{0};
    fs::path temp = fs::path(directory_) /
                    (key + ".tmp" + std::to_string(temp_counter.fetch_add(1)) + "-" +
                     std::to_string(::getpid()));
    {
        std::ofstream outf(temp);
        outf << envelope.dump();
    }
    fs::rename(temp, file, ec);
    if (ec) fs::remove(temp, ec);
}

// ---------------------------------------------------------------- gateway

// Counting semaphore bounding in-flight backend requests.
class RequestSlots {
public:
    explicit RequestSlots(int limit) : available_(limit > 0 ? limit : 1) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

namespace {

struct SlotGuard {
    RequestSlots& slots;
    explicit SlotGuard(RequestSlots& s) : slots(s) { slots.acquire(); }
    ~SlotGuard() { slots.release(); }
};

}  // namespace

Gateway::Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache,
                 GatewayOptions options)
    : backend_(std::move(backend)),
      cache_(std::move(cache)),
      options_(std::move(options)),
      slots_(std::make_unique<RequestSlots>(options_.concurrency)) {}

Gateway::~Gateway() = default;

ChatResponse Gateway::chat(ChatRequest request, bool bypass_cache) {
    counters_.requests.fetch_add(1);
    if (request.model_id.empty()) request.model_id = options_.model_id;
    request.temperature = options_.temperature;

    auto started = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - started)
            .count();
    };

    std::string key = cache_key(request);
    if (!bypass_cache && cache_) {
        if (auto hit = cache_->get(key)) {
            counters_.cache_hits.fetch_add(1);
            return ChatResponse{*hit, "cache", true, elapsed_ms()};
        }
    }

    BackendOutcome outcome;
    int attempts = options_.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            int backoff = attempt - 1 < static_cast<int>(options_.backoff_ms.size())
                              ? options_.backoff_ms[attempt - 1]
                              : options_.backoff_ms.empty() ? 1000 : options_.backoff_ms.back();
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        }
        {
            SlotGuard guard(*slots_);
            counters_.backend_calls.fetch_add(1);
            outcome = backend_->send(request);
        }
        if (outcome.ok) break;
        bool retryable = outcome.timed_out || outcome.status >= 500;
        if (!retryable) break;
    }

    if (!outcome.ok) {
        if (outcome.unreachable) throw_error(Errc::BackendUnreachable, outcome.message);
        if (outcome.timed_out) throw_error(Errc::Timeout, outcome.message);
        if (outcome.malformed) throw_error(Errc::MalformedResponse, outcome.message);
        throw_error(Errc::BackendError,
                    "status " + std::to_string(outcome.status) + ": " + outcome.message);
    }
    if (outcome.text.empty()) {
        throw_error(Errc::MalformedResponse, "backend returned empty text");
    }

    if (cache_) cache_->put(key, outcome.text, request.model_id);
    return ChatResponse{outcome.text, backend_->id(), false, elapsed_ms()};
}

}  // namespace pathrag
