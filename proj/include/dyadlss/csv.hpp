#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dyadlss::csv {

struct Row {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. Blank lines are skipped. Throws ParseError on an unterminated
/// quote.
std::vector<Row> read(std::istream& in, std::string_view module = "csv");

/// Header lookup: column index by name.
class Header {
public:
    explicit Header(const Row& row);

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t require(std::string_view name, std::string_view module) const;

private:
    std::vector<std::string> names_;
    std::size_t line_;
};

std::string escape(std::string_view field);

}  // namespace dyadlss::csv
