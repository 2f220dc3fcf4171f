// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/jira.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "spbench/error.hpp"

namespace spbench::jira {

namespace {

using json = nlohmann::json;

struct BaseUrl {
    std::string scheme_host_port;
    std::string host;
    std::string path_prefix;
};

BaseUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("base URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    BaseUrl out;
    out.scheme_host_port = url.substr(0, path_start);
    std::string authority = url.substr(scheme_end + 3, path_start == std::string::npos ? std::string::npos
                                                                                      : path_start - scheme_end - 3);
    out.host = authority.substr(0, authority.find(':'));
    if (path_start != std::string::npos) out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

std::string string_or_empty(const json& j, const char* key) {
    const auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

std::optional<Issue> to_issue(const json& raw, const std::string& project_key, const std::string& repository,
                              const FetchOptions& options) {
    const json& fields = raw.at("fields");
    const auto sp_it = fields.find(options.story_point_field);
    if (sp_it == fields.end() || !sp_it->is_number()) return std::nullopt;

    Issue issue;
    issue.issue_key = raw.at("key").get<std::string>();
    issue.project_key = project_key;
    if (const auto p = fields.find("project"); p != fields.end() && p->is_object()) {
        issue.project_key = string_or_empty(*p, "key");
        if (issue.project_key.empty()) issue.project_key = project_key;
    }
    issue.repository = repository;
    const auto created = parse_timestamp(string_or_empty(fields, "created"));
    if (!created) throw DataError("issue " + issue.issue_key + ": unparseable created timestamp");
    issue.created = *created;
    if (const auto resolved = parse_timestamp(string_or_empty(fields, "resolutiondate"))) issue.resolved = *resolved;
    issue.is_resolved = issue.resolved.has_value();
    issue.title = string_or_empty(fields, "summary");
    issue.description = string_or_empty(fields, "description");
    if (const auto t = fields.find("issuetype"); t != fields.end() && t->is_object()) {
        issue.issue_type = string_or_empty(*t, "name");
    }
    if (const auto c = fields.find("components"); c != fields.end() && c->is_array()) {
        for (const auto& comp : *c) issue.components.push_back(string_or_empty(comp, "name"));
    }
    issue.story_point = sp_it->get<double>();
    if (issue.story_point < 0.0) return std::nullopt;
    issue.fields_changed_after_sp = Flag::unknown;
    return issue;
}

}  // namespace

IssueDataset fetch_jira(const std::string& base_url, const std::string& project_key, const FetchOptions& options) {
    if (options.page_size < 1) throw InvalidArgument("page_size must be >= 1");
    const BaseUrl url = split_url(base_url);
    const std::string repository = options.repository.empty() ? url.host : options.repository;

    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(options.timeout_seconds, 0);
    client.set_read_timeout(options.timeout_seconds, 0);
    if (!options.bearer_token.empty()) client.set_bearer_token_auth(options.bearer_token);

    const std::string fields = "summary,description,issuetype,components,created,resolutiondate,project," +
                               options.story_point_field;
    std::vector<Issue> issues;
    int start_at = 0;
    for (;;) {
        httplib::Params params{{"jql", "project=" + project_key + " ORDER BY created ASC"},
                               {"startAt", std::to_string(start_at)},
                               {"maxResults", std::to_string(options.page_size)},
                               {"fields", fields}};
        const std::string path =
            url.path_prefix + "/rest/api/2/search?" + httplib::detail::params_to_query_str(params);

        json page;
        int attempts = 0;
        for (;;) {
            ++attempts;
            auto res = client.Get(path);
            if (res && (res->status == 401 || res->status == 403)) {
                throw CredentialError("Jira rejected the credentials (HTTP " + std::to_string(res->status) + ")");
            }
            if (res && res->status == 200) {
                try {
                    page = json::parse(res->body);
                } catch (const json::exception& e) {
                    throw DataError(std::string("malformed Jira search response: ") + e.what());
                }
                break;
            }
            const bool retryable = !res || res->status >= 500;
            const std::string why = res ? "HTTP " + std::to_string(res->status)
                                        : "connection failed (" + httplib::to_string(res.error()) + ")";
            if (!retryable) throw DataError("Jira search failed: " + why);
            if (attempts > options.max_retries) {
                throw TransportError("Jira search at startAt=" + std::to_string(start_at) + " failed after " +
                                         std::to_string(attempts) + " attempt(s): " + why,
                                     attempts);
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(options.retry_delay_ms));
        }

        const json& batch = page.value("issues", json::array());
        for (const auto& raw : batch) {
            if (auto issue = to_issue(raw, project_key, repository, options)) issues.push_back(std::move(*issue));
        }
        const int total = page.value("total", 0);
        start_at += static_cast<int>(batch.size());
        if (batch.empty() || start_at >= total) break;
    }
    return IssueDataset(project_key, repository, std::move(issues));
}

}  // namespace spbench::jira
