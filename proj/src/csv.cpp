#include "dyadlss/csv.hpp"

#include "dyadlss/error.hpp"

#include <iterator>

namespace dyadlss::csv {

std::vector<Row> read(std::istream& in, std::string_view module) {
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<Row> rows;

    std::size_t line = 1;
    std::size_t i = 0;
    while (i < data.size()) {
        // comment lines ('#' in the first column) carry run metadata
        if (data[i] == '#') {
            while (i < data.size() && data[i] != '\n') ++i;
            ++i;
            ++line;
            continue;
        }
        Row row;
        row.line = line;
        std::string field;
        bool quoted = false;
        bool at_field_start = true;
        bool done = false;
        while (!done) {
            if (i >= data.size()) {
                if (quoted) throw ParseError(std::string(module), row.line, "unterminated quoted field");
                row.fields.push_back(std::move(field));
                break;
            }
            const char c = data[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < data.size() && data[i + 1] == '"') {
                        field.push_back('"');
                        i += 2;
                    } else {
                        quoted = false;
                        ++i;
                    }
                } else {
                    if (c == '\n') ++line;
                    field.push_back(c);
                    ++i;
                }
                continue;
            }
            switch (c) {
                case '"':
                    if (at_field_start) {
                        quoted = true;
                    } else {
                        field.push_back(c);
                    }
                    at_field_start = false;
                    ++i;
                    break;
                case ',':
                    row.fields.push_back(std::move(field));
                    field.clear();
                    at_field_start = true;
                    ++i;
                    break;
                case '\r':
                    ++i;
                    break;
                case '\n':
                    row.fields.push_back(std::move(field));
                    ++i;
                    ++line;
                    done = true;
                    break;
                default:
                    field.push_back(c);
                    at_field_start = false;
                    ++i;
            }
        }
        const bool blank = row.fields.size() == 1 && row.fields[0].empty();
        if (!blank) rows.push_back(std::move(row));
    }
    return rows;
}

Header::Header(const Row& row) : names_(row.fields), line_(row.line) {}

std::optional<std::size_t> Header::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t Header::require(std::string_view name, std::string_view module) const {
    if (auto idx = find(name)) return *idx;
    throw ParseError(std::string(module), line_, "header is missing column '" + std::string(name) + "'");
}

std::string escape(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos ||
                              (!field.empty() && field.front() == '#');
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace dyadlss::csv
