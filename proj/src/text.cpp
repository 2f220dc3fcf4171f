// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/text.hpp"

#include <cctype>
#include <regex>

namespace spbench::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Bytes >= 0x80 (UTF-8 sequences) count as word characters.
bool is_word_byte(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0;
}

// Finds an opening `{tag}` or `{tag:params}` at or after `from`.
// Returns npos when none; sets `open_end` past the closing brace.
std::size_t find_open_tag(std::string_view text, std::string_view tag, std::size_t from, std::size_t& open_end) {
    const std::string needle = "{" + std::string(tag);
    for (std::size_t pos = text.find(needle, from); pos != std::string_view::npos;
         pos = text.find(needle, pos + 1)) {
        const std::size_t after = pos + needle.size();
        if (after >= text.size()) return std::string_view::npos;
        if (text[after] == '}') {
            open_end = after + 1;
            return pos;
        }
        if (text[after] == ':') {
            const std::size_t close = text.find('}', after);
            if (close == std::string_view::npos) return std::string_view::npos;
            if (text.substr(after, close - after).find('\n') != std::string_view::npos) continue;
            open_end = close + 1;
            return pos;
        }
    }
    return std::string_view::npos;
}

void collect_markup(std::string_view text, std::vector<CodeRegion>& out) {
    static constexpr std::string_view kTags[] = {"code", "noformat"};
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t best = std::string_view::npos;
        std::size_t best_open_end = 0;
        std::string_view best_tag;
        for (auto tag : kTags) {
            std::size_t open_end = 0;
            const std::size_t at = find_open_tag(text, tag, pos, open_end);
            if (at < best) {
                best = at;
                best_open_end = open_end;
                best_tag = tag;
            }
        }
        if (best == std::string_view::npos) return;
        const std::string closer = "{" + std::string(best_tag) + "}";
        const std::size_t close = text.find(closer, best_open_end);
        if (close == std::string_view::npos) {
            // Unclosed tag renders literally in Jira; look for later blocks.
            pos = best + 1;
            continue;
        }
        out.push_back({best, close + closer.size(), best_open_end, close});
        pos = close + closer.size();
    }
}

void collect_stack_traces(std::string_view text, std::size_t from, std::size_t to, std::vector<CodeRegion>& out) {
    std::size_t run_begin = 0;
    std::size_t run_end = 0;
    int run_len = 0;
    auto flush = [&] {
        if (run_len >= 2) out.push_back({run_begin, run_end, run_begin, run_end});
        run_len = 0;
    };
    std::size_t line_begin = from;
    while (line_begin < to) {
        std::size_t line_end = text.find('\n', line_begin);
        if (line_end == std::string_view::npos || line_end > to) line_end = to;
        const auto line = text.substr(line_begin, line_end - line_begin);
        if (is_stack_frame(line)) {
            if (run_len == 0) run_begin = line_begin;
            run_end = line_end;
            ++run_len;
        } else {
            flush();
        }
        line_begin = line_end + 1;
    }
    flush();
}

}  // namespace

bool is_stack_frame(std::string_view line) {
    static const std::regex frame(R"(^\s*at\s+[A-Za-z_$][\w$]*(\.[\w$<>]+)+\([^()]*\.java:\d+\)\s*$)");
    return std::regex_match(line.begin(), line.end(), frame);
}

std::vector<CodeRegion> find_code_regions(std::string_view text) {
    std::vector<CodeRegion> markup;
    collect_markup(text, markup);

    std::vector<CodeRegion> out;
    std::size_t cursor = 0;
    for (const auto& block : markup) {
        collect_stack_traces(text, cursor, block.begin, out);
        out.push_back(block);
        cursor = block.end;
    }
    collect_stack_traces(text, cursor, text.size(), out);
    return out;
}

std::vector<std::string> term_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() > 1) tokens.push_back(current);
        current.clear();
    };
    for (char c : text) {
        if (is_word_byte(c)) {
            current.push_back(lower(c));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (is_space(c) || (u < 0x80 && std::ispunct(u))) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(lower(c));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

}  // namespace spbench::text
