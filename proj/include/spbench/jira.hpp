// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <string>

#include "spbench/issue.hpp"

namespace spbench::jira {

struct FetchOptions {
    int page_size = 50;
    int max_retries = 3;             // extra attempts per page after the first failure
    int retry_delay_ms = 200;
    std::string story_point_field = "customfield_10002";
    std::string repository;          // defaults to the host name
    std::string bearer_token;        // empty: anonymous
    int timeout_seconds = 30;
};

/// Pages through `GET <base>/rest/api/2/search?jql=project=<key>` and maps each
/// issue carrying a story point onto Issue. Changelog provenance is not
/// fetched: sp_assignment_count stays unset and fields_changed_after_sp is
/// unknown, so the result is refused by the Porru filter until flags are merged.
///
/// HTTP 401/403 throws CredentialError. Connection failures and 5xx responses
/// are retried `max_retries` times, then TransportError is thrown and every page
/// already received is discarded.
IssueDataset fetch_jira(const std::string& base_url, const std::string& project_key, const FetchOptions& options = {});

}  // namespace spbench::jira
