#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <vector>

#include "test_support.hpp"
#include "fake_server.hpp"

using namespace semcodec;
using namespace std::chrono_literals;
using support::FakeServer;

namespace {

struct SleepLog {
    std::vector<std::chrono::milliseconds> delays;
    Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) { delays.push_back(d); };
    }
};

HttpBackendConfig config_for(const FakeServer &srv, SleepLog &log, std::string key = "") {
    HttpBackendConfig cfg;
    cfg.api_url = srv.url();
    cfg.api_key = std::move(key);
    cfg.timeout = 5s;
    cfg.sleep = log.sleeper();
    return cfg;
}

void reply_json(httplib::Response &res, const nlohmann::json &body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

std::string png_b64(const Image &img) { return base64_encode(encode_png(img)); }

}  // namespace

TEST(RetryPolicy, ExponentialDelays) {
    RetryPolicy p;
    EXPECT_EQ(p.delay_for(1), 1000ms);
    EXPECT_EQ(p.delay_for(2), 2000ms);
    EXPECT_EQ(p.delay_for(3), 4000ms);
    p.max_delay = 3000ms;
    EXPECT_EQ(p.delay_for(3), 3000ms);
}

TEST(SplitUrl, BaseAndPath) {
    const auto a = split_url("http://localhost:8080/v1/describe");
    EXPECT_EQ(a.base_url, "http://localhost:8080");
    EXPECT_EQ(a.path, "/v1/describe");
    const auto b = split_url("https://api.example.test");
    EXPECT_EQ(b.base_url, "https://api.example.test");
    EXPECT_EQ(b.path, "");
}

TEST(HttpCall, RetriesRateLimitThenSucceeds) {
    FakeServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/v1/transform", [&](const httplib::Request &, httplib::Response &res) {
        if (hits++ == 0) {
            reply_json(res, {{"error", {{"code", "rate_limited"}}}}, 429);
        } else {
            reply_json(res, {{"text", "ok"}});
        }
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    EXPECT_EQ(backend.transform(s, TransformTask::word_select, "i", "p"), "ok");
    EXPECT_EQ(hits.load(), 2);
    ASSERT_EQ(log.delays.size(), 1u);
    EXPECT_EQ(log.delays[0], 1000ms);
}

TEST(HttpCall, RetryAfterOverridesBackoff) {
    FakeServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/v1/transform", [&](const httplib::Request &, httplib::Response &res) {
        if (hits++ == 0) {
            res.set_header("Retry-After", "7");
            reply_json(res, nlohmann::json::object(), 429);
        } else {
            reply_json(res, {{"text", "ok"}});
        }
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    backend.transform(s, TransformTask::word_select, "i", "p");
    ASSERT_EQ(log.delays.size(), 1u);
    EXPECT_EQ(log.delays[0], 7000ms);
}

TEST(HttpCall, ServerErrorsExhaustAttempts) {
    FakeServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/v1/transform", [&](const httplib::Request &, httplib::Response &res) {
        ++hits;
        reply_json(res, nlohmann::json::object(), 503);
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    EXPECT_THROW(backend.transform(s, TransformTask::word_select, "i", "p"), BackendUnavailable);
    EXPECT_EQ(hits.load(), 3);
    EXPECT_EQ(log.delays, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms}));
    EXPECT_TRUE(s.history().empty());
}

TEST(HttpCall, PersistentRateLimitSurfacesRateLimited) {
    FakeServer srv;
    srv.server().Post("/v1/transform", [&](const httplib::Request &, httplib::Response &res) {
        res.set_header("Retry-After", "2");
        reply_json(res, nlohmann::json::object(), 429);
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    try {
        backend.transform(s, TransformTask::word_select, "i", "p");
        FAIL();
    } catch (const RateLimited &e) {
        EXPECT_DOUBLE_EQ(e.retry_after(), 2.0);
    }
}

TEST(HttpCall, UnreachableHostIsUnavailable) {
    SleepLog log;
    HttpBackendConfig cfg;
    cfg.api_url = "http://127.0.0.1:1";
    cfg.timeout = 2s;
    cfg.sleep = log.sleeper();
    HttpBackend backend(cfg);
    BackendSession s("s");
    EXPECT_THROW(backend.transform(s, TransformTask::word_select, "i", "p"), BackendUnavailable);
    EXPECT_EQ(log.delays.size(), 2u);
}

TEST(HttpCall, MissingFieldNamesPointer) {
    FakeServer srv;
    srv.server().Post("/v1/transform", [&](const httplib::Request &, httplib::Response &res) {
        reply_json(res, {{"txt", "typo"}});
    });
    srv.server().Post("/v1/generate", [&](const httplib::Request &, httplib::Response &res) {
        reply_json(res, {{"image", {{"png_base64", "not-a-png"}}}});
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    try {
        backend.transform(s, TransformTask::word_select, "i", "p");
        FAIL();
    } catch (const MalformedResponse &e) {
        EXPECT_EQ(e.field_path(), "/text");
    }
    try {
        backend.generate(s, "g", "boat");
        FAIL();
    } catch (const MalformedResponse &e) {
        EXPECT_EQ(e.field_path(), "/image/png_base64");
    }
    EXPECT_TRUE(log.delays.empty());
}

TEST(HttpCall, ContentRefusedIsNotRetried) {
    FakeServer srv;
    std::atomic<int> hits{0};
    srv.server().Post("/v1/describe", [&](const httplib::Request &, httplib::Response &res) {
        ++hits;
        reply_json(res, {{"error", {{"code", "content_refused"}, {"message", "policy"}}}}, 400);
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    EXPECT_THROW(backend.describe(s, ImageRef(Image(4, 4)), "describe"), ContentRefused);
    EXPECT_EQ(hits.load(), 1);
}

TEST(HttpBackend, SendsKeyOnlyInAuthorizationHeader) {
    FakeServer srv;
    srv.server().Post("/v1/describe", [&](const httplib::Request &req, httplib::Response &res) {
        srv.note(req);
        reply_json(res, {{"text", "a boat"}});
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log, "sk-test-123"));
    BackendSession s("sess-1");
    const ImageRef img(Image(4, 4));
    EXPECT_EQ(backend.describe(s, img, "describe"), "a boat");
    const auto seen = srv.seen();
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0].authorization, "Bearer sk-test-123");
    EXPECT_EQ(seen[0].body.find("sk-test-123"), std::string::npos);
    const auto body = nlohmann::json::parse(seen[0].body);
    EXPECT_EQ(body["session_id"], "sess-1");
    EXPECT_EQ(body["messages"].back()["image"]["hash"], img.content_hash());
    EXPECT_EQ(backend.parameters().dump().find("sk-test-123"), std::string::npos);
}

TEST(HttpBackend, SendsSessionHistoryAndTask) {
    FakeServer srv;
    srv.server().Post("/v1/transform", [&](const httplib::Request &req, httplib::Response &res) {
        srv.note(req);
        reply_json(res, {{"text", "out"}});
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    backend.transform(s, TransformTask::word_select, "first", "one");
    backend.transform(s, TransformTask::word_compress, "second", "two");
    const auto body = nlohmann::json::parse(srv.seen().back().body);
    EXPECT_EQ(body["task"], "word_compress");
    ASSERT_EQ(body["messages"].size(), 3u);
    EXPECT_EQ(body["messages"][0]["content"], "first\n\none");
    EXPECT_EQ(body["messages"][1]["role"], "assistant");
    EXPECT_EQ(body["messages"][2]["content"], "second\n\ntwo");
}

TEST(HttpBackend, GenerateAndRegenerateDecodeImages) {
    FakeServer srv;
    Image red(3, 2);
    for (std::size_t i = 0; i < red.rgb.size(); i += 3) red.rgb[i] = 255;
    const Image blue = [] {
        Image b(3, 2);
        for (std::size_t i = 2; i < b.rgb.size(); i += 3) b.rgb[i] = 255;
        return b;
    }();
    srv.server().Get("/v1/capabilities", [&](const httplib::Request &, httplib::Response &res) {
        reply_json(res, {{"supports_session_edit", true}});
    });
    srv.server().Post("/v1/generate", [&](const httplib::Request &, httplib::Response &res) {
        reply_json(res, {{"image", {{"png_base64", png_b64(red)}}}});
    });
    srv.server().Post("/v1/regenerate", [&](const httplib::Request &req, httplib::Response &res) {
        srv.note(req);
        reply_json(res, {{"image", {{"png_base64", png_b64(blue)}}}});
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    BackendSession s("s");
    const auto first = backend.generate(s, "gen", "red");
    EXPECT_EQ(first.pixels(), red);
    const auto second = backend.regenerate(s, "change:", "make it blue");
    EXPECT_EQ(second.pixels(), blue);
    const auto body = nlohmann::json::parse(srv.seen().back().body);
    EXPECT_EQ(body["prior_image_hash"], first.content_hash());
    EXPECT_EQ(body["messages"].back()["content"], "change: make it blue");
}

TEST(HttpBackend, CapabilitiesFlagAndFallback) {
    FakeServer srv;
    std::atomic<int> hits{0};
    srv.server().Get("/v1/capabilities", [&](const httplib::Request &, httplib::Response &res) {
        ++hits;
        reply_json(res, {{"supports_session_edit", false}});
    });
    srv.start();
    SleepLog log;
    HttpBackend backend(config_for(srv, log));
    EXPECT_FALSE(backend.capabilities().supports_session_edit);
    EXPECT_FALSE(backend.capabilities().supports_session_edit);
    EXPECT_EQ(hits.load(), 1);
    BackendSession s("s");
    s.append({Message::Role::assistant, "", ImageRef(Image(2, 2))});
    EXPECT_THROW(backend.regenerate(s, "i", "e"), EditUnsupported);

    FakeServer bare;
    bare.start();
    HttpBackend no_endpoint(config_for(bare, log));
    EXPECT_FALSE(no_endpoint.capabilities().supports_session_edit);
}

TEST(HttpBackendConfig, FromEnvironment) {
    ::unsetenv("SEMCODEC_API_URL");
    EXPECT_THROW(HttpBackendConfig::from_env(), BackendError);
    ::setenv("SEMCODEC_API_URL", "http://127.0.0.1:9", 1);
    ::setenv("SEMCODEC_API_KEY", "k", 1);
    const auto cfg = HttpBackendConfig::from_env();
    EXPECT_EQ(cfg.api_url, "http://127.0.0.1:9");
    EXPECT_EQ(cfg.api_key, "k");
    ::unsetenv("SEMCODEC_API_URL");
    ::unsetenv("SEMCODEC_API_KEY");
}
