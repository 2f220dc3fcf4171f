// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "spbench/error.hpp"
#include "spbench/jira.hpp"

using namespace spbench;
using json = nlohmann::json;

namespace {

json fake_issue(int n, bool with_sp = true) {
    json fields = {{"summary", "Issue " + std::to_string(n)},
                   {"description", "text"},
                   {"issuetype", {{"name", "Story"}}},
                   {"components", json::array({{{"name", "core"}}})},
                   {"created", "2016-01-01T00:00:00.000+0000"},
                   {"resolutiondate", nullptr},
                   {"project", {{"key", "MOCK"}}}};
    if (with_sp) fields["customfield_10002"] = (n % 5) + 1;
    return {{"key", "MOCK-" + std::to_string(n)}, {"fields", fields}};
}

// Serves /rest/api/2/search from a fixed list of issues; `fail_from` makes
// every request with startAt >= fail_from answer with `fail_status`.
class MockJira {
public:
    MockJira(int total, int fail_from = -1, int fail_status = 500) {
        server_.Get("/rest/api/2/search", [=, this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            const int start = std::stoi(req.get_param_value("startAt"));
            const int max = std::stoi(req.get_param_value("maxResults"));
            if (fail_from >= 0 && start >= fail_from) {
                res.status = fail_status;
                return;
            }
            json issues = json::array();
            for (int i = start; i < std::min(total, start + max); ++i) issues.push_back(fake_issue(i + 1, i % 10 != 9));
            res.set_content(json{{"startAt", start}, {"maxResults", max}, {"total", total}, {"issues", issues}}.dump(),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockJira() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int requests() const { return requests_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
};

jira::FetchOptions fast() {
    jira::FetchOptions o;
    o.retry_delay_ms = 1;
    o.max_retries = 2;
    o.timeout_seconds = 5;
    return o;
}

}  // namespace

TEST(Jira, PagesThroughAllIssues) {
    MockJira server(100);
    const auto ds = jira::fetch_jira(server.url(), "MOCK", fast());
    EXPECT_EQ(server.requests(), 2);
    EXPECT_EQ(ds.size(), 90u);  // every tenth issue has no story point
    EXPECT_EQ(ds.project_key(), "MOCK");
    EXPECT_EQ(ds[0].components, std::vector<std::string>{"core"});
    EXPECT_FALSE(ds[0].has_provenance());
    EXPECT_FALSE(ds[0].is_resolved);
}

TEST(Jira, EmptyProject) {
    MockJira server(0);
    const auto ds = jira::fetch_jira(server.url(), "MOCK", fast());
    EXPECT_TRUE(ds.empty());
    EXPECT_EQ(server.requests(), 1);
}

TEST(Jira, ServerErrorOnSecondPageDiscardsPartialData) {
    MockJira server(100, 50, 500);
    try {
        jira::fetch_jira(server.url(), "MOCK", fast());
        FAIL() << "expected TransportError";
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 3);
        EXPECT_NE(std::string(e.what()).find("startAt=50"), std::string::npos);
    }
    EXPECT_EQ(server.requests(), 4);
}

TEST(Jira, UnauthorizedIsCredentialError) {
    MockJira server(100, 0, 401);
    EXPECT_THROW(jira::fetch_jira(server.url(), "MOCK", fast()), CredentialError);
    EXPECT_EQ(server.requests(), 1);
}

TEST(Jira, ClientErrorIsDataError) {
    MockJira server(100, 0, 404);
    EXPECT_THROW(jira::fetch_jira(server.url(), "MOCK", fast()), DataError);
}

TEST(Jira, UnreachableHostIsTransportError) {
    int port;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    auto o = fast();
    o.max_retries = 1;
    o.timeout_seconds = 1;
    EXPECT_THROW(jira::fetch_jira("http://127.0.0.1:" + std::to_string(port), "MOCK", o), TransportError);
}
