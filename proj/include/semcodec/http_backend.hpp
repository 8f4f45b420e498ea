// Generic JSON-over-HTTP adapter with bounded exponential backoff.
//
// Wire shape (all POST bodies are JSON):
//   GET  {base}/v1/capabilities  -> {"supports_session_edit": bool}
//   POST {base}/v1/describe      -> {"text": string}
//   POST {base}/v1/transform     -> {"text": string}
//   POST {base}/v1/generate      -> {"image": {"png_base64": string}}
//   POST {base}/v1/regenerate    -> {"image": {"png_base64": string}}
// Requests carry {"session_id", "messages": [...], ...}; each message is
// {"role", "content", optional "image": {"hash", "width", "height", "png_base64"}}.
// The API key travels only in the Authorization header.
#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "semcodec/backend.hpp"
#include "semcodec/errors.hpp"
#include "semcodec/image.hpp"

namespace semcodec {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{30000};

    /// Delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay_for(int retry) const {
        const double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, retry - 1);
        return std::min(max_delay, std::chrono::milliseconds(static_cast<long long>(ms)));
    }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

struct HttpEndpoint {
    std::string base_url;  // scheme://host[:port]
    std::string path;      // /v1/...
};

/// Splits "http://host:8080/prefix" into base and path prefix.
inline HttpEndpoint split_url(const std::string &url) {
    const auto scheme = url.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', host_start);
    if (slash == std::string::npos) return {url, ""};
    std::string path = url.substr(slash);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, slash), path};
}

struct HttpCallOptions {
    RetryPolicy retry;
    std::string api_key;
    std::chrono::seconds timeout{120};
    Sleeper sleep = real_sleep;
    /// JSON pointers that must be present in a successful response.
    std::vector<std::string> required_fields;
};

namespace detail {

inline std::optional<double> parse_retry_after(const httplib::Result &res) {
    if (!res || !res->has_header("Retry-After")) return std::nullopt;
    try {
        return std::stod(res->get_header_value("Retry-After"));
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

}  // namespace detail

/// One logical call. Retries 429, 5xx and transport failures up to the
/// attempt budget, then surfaces RateLimited or BackendUnavailable.
/// `request` null means GET.
inline nlohmann::json http_call(const std::string &url, const nlohmann::json &request,
                                const HttpCallOptions &opts) {
    const HttpEndpoint ep = split_url(url);
    httplib::Client client(ep.base_url);
    client.set_connection_timeout(opts.timeout);
    client.set_read_timeout(opts.timeout);
    client.set_write_timeout(opts.timeout);
    httplib::Headers headers;
    if (!opts.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts.api_key);

    const int attempts = std::max(1, opts.retry.max_attempts);
    std::string last_failure = "no attempt made";
    bool last_was_rate_limit = false;
    double last_retry_after = 0.0;

    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Result res = request.is_null()
                                  ? client.Get(ep.path, headers)
                                  : client.Post(ep.path, headers, request.dump(), "application/json");

        std::optional<double> retry_after;
        if (!res) {
            last_failure = url + ": " + httplib::to_string(res.error());
            last_was_rate_limit = false;
        } else if (res->status >= 200 && res->status < 300) {
            nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
            if (body.is_discarded() || !body.is_object()) throw MalformedResponse("/");
            for (const auto &field : opts.required_fields) {
                if (!body.contains(nlohmann::json::json_pointer(field))) throw MalformedResponse(field);
            }
            return body;
        } else if (res->status == 429) {
            retry_after = detail::parse_retry_after(res);
            last_failure = url + ": HTTP 429";
            last_was_rate_limit = true;
            last_retry_after = retry_after.value_or(0.0);
        } else if (res->status >= 500) {
            last_failure = url + ": HTTP " + std::to_string(res->status);
            last_was_rate_limit = false;
        } else {
            const nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
            const auto code = nlohmann::json::json_pointer("/error/code");
            if (!body.is_discarded() && body.contains(code) && body[code] == "content_refused") {
                throw ContentRefused(body.value(nlohmann::json::json_pointer("/error/message"), std::string("refused by provider")));
            }
            throw BackendError("HTTP " + std::to_string(res->status) + " from " + url + ": " + res->body);
        }

        if (attempt < attempts) {
            auto delay = opts.retry.delay_for(attempt);
            if (retry_after) {
                delay = std::chrono::milliseconds(static_cast<long long>(*retry_after * 1000.0));
            }
            opts.sleep(delay);
        }
    }
    if (last_was_rate_limit) {
        throw RateLimited(last_failure + " after " + std::to_string(attempts) + " attempts", last_retry_after);
    }
    throw BackendUnavailable(last_failure + " after " + std::to_string(attempts) + " attempts");
}

struct HttpBackendConfig {
    std::string api_url;
    std::string api_key;
    RetryPolicy retry;
    std::chrono::seconds timeout{120};
    Sleeper sleep = real_sleep;

    /// SEMCODEC_API_URL (required) and SEMCODEC_API_KEY (optional).
    static HttpBackendConfig from_env() {
        HttpBackendConfig cfg;
        const char *url = std::getenv("SEMCODEC_API_URL");
        if (url == nullptr || *url == '\0') throw BackendError("SEMCODEC_API_URL is not set");
        cfg.api_url = url;
        if (const char *key = std::getenv("SEMCODEC_API_KEY")) cfg.api_key = key;
        return cfg;
    }
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        while (!cfg_.api_url.empty() && cfg_.api_url.back() == '/') cfg_.api_url.pop_back();
    }

    std::string name() const override { return "http"; }

    /// Queried once; an unreachable capabilities endpoint counts as no edit support.
    BackendCapabilities capabilities() const override {
        std::call_once(caps_once_, [this] {
            try {
                const auto body = call("/v1/capabilities", nullptr, {"/supports_session_edit"});
                const auto &flag = body["supports_session_edit"];
                if (!flag.is_boolean()) throw MalformedResponse("/supports_session_edit");
                caps_.supports_session_edit = flag.get<bool>();
            } catch (const BackendError &) {
                caps_.supports_session_edit = false;
            }
        });
        return caps_;
    }

    nlohmann::json parameters() const override {
        return {{"endpoint", cfg_.api_url},
                {"retry",
                 {{"max_attempts", cfg_.retry.max_attempts},
                  {"base_delay_ms", cfg_.retry.base_delay.count()},
                  {"multiplier", cfg_.retry.multiplier}}},
                {"timeout_s", cfg_.timeout.count()}};
    }

protected:
    std::string do_describe(const BackendSession &session, const ImageRef &image,
                            std::string_view prompt) override {
        auto req = base_request(session);
        req["messages"].push_back(message_json("user", prompt, &image));
        return text_of(call("/v1/describe", req, {"/text"}));
    }

    std::string do_transform(const BackendSession &session, TransformTask task, std::string_view instruction,
                             std::string_view payload) override {
        auto req = base_request(session);
        req["task"] = std::string(to_string(task));
        req["messages"].push_back(message_json("user", compose(instruction, payload), nullptr));
        return text_of(call("/v1/transform", req, {"/text"}));
    }

    ImageRef do_generate(const BackendSession &session, std::string_view instruction,
                         std::string_view description) override {
        auto req = base_request(session);
        req["messages"].push_back(message_json("user", compose(instruction, description), nullptr));
        return image_of(call("/v1/generate", req, {"/image/png_base64"}));
    }

    ImageRef do_regenerate(const BackendSession &session, const ImageRef &prior, std::string_view instruction,
                           std::string_view edit) override {
        auto req = base_request(session);
        req["prior_image_hash"] = prior.content_hash();
        req["messages"].push_back(message_json("user", compose_inline(instruction, edit), nullptr));
        return image_of(call("/v1/regenerate", req, {"/image/png_base64"}));
    }

private:
    nlohmann::json call(const std::string &path, const nlohmann::json &req,
                        std::vector<std::string> required) const {
        HttpCallOptions opts;
        opts.retry = cfg_.retry;
        opts.api_key = cfg_.api_key;
        opts.timeout = cfg_.timeout;
        opts.sleep = cfg_.sleep;
        opts.required_fields = std::move(required);
        return http_call(cfg_.api_url + path, req, opts);
    }

    static nlohmann::json message_json(std::string_view role, std::string_view content, const ImageRef *image) {
        nlohmann::json m = {{"role", role}, {"content", content}};
        if (image != nullptr && !image->empty()) {
            m["image"] = {{"hash", image->content_hash()},
                          {"width", image->width()},
                          {"height", image->height()},
                          {"png_base64", base64_encode(encode_png(image->pixels()))}};
        }
        return m;
    }

    static nlohmann::json base_request(const BackendSession &session) {
        nlohmann::json req = {{"session_id", session.id()}, {"messages", nlohmann::json::array()}};
        for (const auto &m : session.history()) {
            req["messages"].push_back(message_json(m.role == Message::Role::user ? "user" : "assistant",
                                                   m.content, m.image ? &*m.image : nullptr));
        }
        return req;
    }

    static std::string text_of(const nlohmann::json &body) {
        const auto &t = body["text"];
        if (!t.is_string()) throw MalformedResponse("/text");
        return t.get<std::string>();
    }

    static ImageRef image_of(const nlohmann::json &body) {
        const auto &b64 = body["image"]["png_base64"];
        if (!b64.is_string()) throw MalformedResponse("/image/png_base64");
        try {
            return ImageRef(decode_png(base64_decode(b64.get<std::string>())));
        } catch (const Error &) {
            throw MalformedResponse("/image/png_base64");
        }
    }

    HttpBackendConfig cfg_;
    mutable std::once_flag caps_once_;
    mutable BackendCapabilities caps_{false};
};

}  // namespace semcodec
