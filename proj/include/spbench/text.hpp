// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace spbench::text {

/// A code region inside a text. [begin, end) spans the whole region including
/// markup tags; [content_begin, content_end) is the code itself.
struct CodeRegion {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t content_begin = 0;
    std::size_t content_end = 0;
};

/// Jira `{code}` / `{code:lang}` and `{noformat}` blocks (properly closed), plus
/// runs of two or more consecutive Java stack-trace frames
/// (`at pkg.Class.method(File.java:42)`). Regions are disjoint and ordered.
std::vector<CodeRegion> find_code_regions(std::string_view text);

/// True when `line` is a single Java stack frame.
bool is_stack_frame(std::string_view line);

/// Lowercase, split on every non-alphanumeric byte, drop one-character tokens.
std::vector<std::string> term_tokens(std::string_view text);

/// Lowercase, split on whitespace and ASCII punctuation. Nothing is removed
/// besides the separators (no stop words, no code stripping).
std::vector<std::string> word_tokens(std::string_view text);

/// Number of maximal runs of non-whitespace bytes.
std::size_t whitespace_token_count(std::string_view text);

}  // namespace spbench::text
