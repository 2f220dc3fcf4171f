// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spbench::csv {

using Record = std::vector<std::string>;

/// Streaming RFC 4180 reader: comma separated, `"` quoting with `""` escapes,
/// quoted fields may span lines. Accepts LF and CRLF and skips a UTF-8 BOM.
class Reader {
public:
    explicit Reader(std::istream& in);

    /// False at end of input. Throws DataError on an unterminated quote.
    bool next(Record& record);

    /// Physical line on which the last record started (1-based).
    std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
    bool first_ = true;
};

std::string escape(std::string_view field);

void write_row(std::ostream& out, const Record& fields);

std::string format_double(double v);

std::optional<double> parse_double(std::string_view text);

}  // namespace spbench::csv
