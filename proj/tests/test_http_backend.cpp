#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <concat/http_backend.hpp>

using namespace concat;

namespace {

// In-process endpoint stub.
struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit StubServer(const std::string& path,
                        std::function<void(const httplib::Request&, httplib::Response&)> fn) {
        server.Post(path, std::move(fn));
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }

    std::string endpoint(const std::string& path = "") const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

Task choice_task() {
    Task t;
    t.id = "q-7";
    t.question = "Pick one";
    t.reference_answer = "A";
    t.kind = TaskKind::choice;
    return t;
}

AgentCall call_for(const Task& task) {
    AgentCall call;
    call.task = &task;
    call.agent = 3;
    call.round = 1;
    call.request.system_prompt = "be decisive";
    call.request.user_prompt = "The task is: Pick one.";
    call.request.temperature = 0.7;
    call.request.top_p = 0.8;
    call.request.max_tokens = 256;
    return call;
}

std::string ok_body(bool with_logprobs) {
    nlohmann::json body = {
        {"choices",
         {{{"message", {{"role", "assistant"}, {"content", "The answer is A"}}}}}},
        {"usage", {{"prompt_tokens", 100}, {"completion_tokens", 9}}},
    };
    if (with_logprobs) {
        body["choices"][0]["logprobs"] = {
            {"content",
             {{{"token", "The"}, {"logprob", -0.1}}, {{"token", "A"}, {"logprob", -0.2}}}}};
    }
    return body.dump();
}

}  // namespace

TEST_CASE("happy path maps the response onto the result") {
    nlohmann::json seen_request;
    std::string seen_auth;
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                        seen_request = nlohmann::json::parse(req.body);
                        if (req.has_header("Authorization"))
                            seen_auth = req.get_header_value("Authorization");
                        res.set_content(ok_body(true), "application/json");
                    });

    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    cfg.model = "test-model";
    cfg.api_key = "sk-test";
    HttpBackend backend(cfg);
    CHECK(backend.name() == "http");
    CHECK_FALSE(backend.synthetic_latency());

    Task task = choice_task();
    GenerationResult out = backend.generate(call_for(task));

    CHECK(out.text == "The answer is A");
    REQUIRE(out.token_probabilities.size() == 2);
    CHECK(out.token_probabilities[0] == Catch::Approx(std::exp(-0.1)).margin(1e-12));
    CHECK(out.token_probabilities[1] == Catch::Approx(std::exp(-0.2)).margin(1e-12));
    CHECK(out.prompt_tokens == 100);
    CHECK(out.completion_tokens == 9);
    CHECK(out.wall_latency >= 0.0);

    // The request carries the full generation parameters.
    CHECK(seen_request["model"] == "test-model");
    CHECK(seen_request["temperature"] == Catch::Approx(0.7));
    CHECK(seen_request["top_p"] == Catch::Approx(0.8));
    CHECK(seen_request["max_tokens"] == 256);
    CHECK(seen_request["logprobs"] == true);
    REQUIRE(seen_request["messages"].size() == 2);
    CHECK(seen_request["messages"][0]["role"] == "system");
    CHECK(seen_request["messages"][0]["content"] == "be decisive");
    CHECK(seen_request["messages"][1]["role"] == "user");
    CHECK(seen_auth == "Bearer sk-test");
}

TEST_CASE("a custom endpoint path is respected") {
    std::atomic<int> hits{0};
    StubServer stub("/custom/complete", [&](const httplib::Request&, httplib::Response& res) {
        hits += 1;
        res.set_content(ok_body(true), "application/json");
    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint("/custom/complete");
    HttpBackend backend(cfg);
    Task task = choice_task();
    CHECK_NOTHROW(backend.generate(call_for(task)));
    CHECK(hits == 1);
}

TEST_CASE("missing logprobs is a hard error by default") {
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                        res.set_content(ok_body(false), "application/json");
                    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    HttpBackend backend(cfg);
    Task task = choice_task();
    CHECK_THROWS_AS(backend.generate(call_for(task)), MissingLogprobs);
    try {
        backend.generate(call_for(task));
        FAIL("expected MissingLogprobs");
    } catch (const MissingLogprobs& e) {
        // Errors carry the experiment coordinates.
        CHECK(std::string(e.what()).find("task q-7") != std::string::npos);
        CHECK(std::string(e.what()).find("agent 3") != std::string::npos);
        CHECK(std::string(e.what()).find("round 1") != std::string::npos);
    }
}

TEST_CASE("a configured fallback confidence fills in for absent logprobs") {
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                        res.set_content(ok_body(false), "application/json");
                    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    cfg.fallback_confidence = 0.7;
    HttpBackend backend(cfg);
    Task task = choice_task();
    GenerationResult out = backend.generate(call_for(task));
    CHECK(out.token_probabilities == std::vector<double>{0.7});
}

TEST_CASE("client errors surface the status code") {
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                        res.status = 404;
                        res.set_content("no such model", "text/plain");
                    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    HttpBackend backend(cfg);
    Task task = choice_task();
    try {
        backend.generate(call_for(task));
        FAIL("expected EndpointError");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 404);
        CHECK(std::string(e.what()).find("no such model") != std::string::npos);
    }
}

TEST_CASE("unparseable bodies raise a malformed-response error") {
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                        res.set_content("not json {", "application/json");
                    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    HttpBackend backend(cfg);
    Task task = choice_task();
    CHECK_THROWS_AS(backend.generate(call_for(task)), MalformedResponse);
}

TEST_CASE("structurally wrong bodies raise a malformed-response error") {
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                        res.set_content(R"({"choices": []})", "application/json");
                    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    HttpBackend backend(cfg);
    Task task = choice_task();
    CHECK_THROWS_AS(backend.generate(call_for(task)), MalformedResponse);
}

TEST_CASE("an unreachable endpoint raises a transport error") {
    HttpBackendConfig cfg;
    // Reserve a port, then close it so nothing is listening.
    int dead_port = 0;
    {
        httplib::Server probe;
        dead_port = probe.bind_to_any_port("127.0.0.1");
    }
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(dead_port);
    cfg.max_retries = 0;
    cfg.timeout_seconds = 2;
    HttpBackend backend(cfg);
    Task task = choice_task();
    CHECK_THROWS_AS(backend.generate(call_for(task)), TransportError);
}

TEST_CASE("server errors are retried within the budget") {
    std::atomic<int> hits{0};
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                        if (hits.fetch_add(1) == 0) {
                            res.status = 503;
                            res.set_content("warming up", "text/plain");
                        } else {
                            res.set_content(ok_body(true), "application/json");
                        }
                    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    cfg.max_retries = 2;
    HttpBackend backend(cfg);
    Task task = choice_task();
    GenerationResult out = backend.generate(call_for(task));
    CHECK(out.text == "The answer is A");
    CHECK(hits == 2);
}

TEST_CASE("persistent server errors exhaust the retry budget") {
    std::atomic<int> hits{0};
    StubServer stub("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                        hits += 1;
                        res.status = 500;
                        res.set_content("still broken", "text/plain");
                    });
    HttpBackendConfig cfg;
    cfg.endpoint = stub.endpoint();
    cfg.max_retries = 1;
    HttpBackend backend(cfg);
    Task task = choice_task();
    try {
        backend.generate(call_for(task));
        FAIL("expected EndpointError");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 500);
    }
    CHECK(hits == 2);  // initial attempt + one retry
}
