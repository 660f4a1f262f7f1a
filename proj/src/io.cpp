#include "relsynth/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace relsynth {

namespace {

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool parse_fixed_uint(const std::string& s, std::size_t pos, std::size_t len, unsigned& out) {
    if (pos + len > s.size()) return false;
    out = 0;
    for (std::size_t i = 0; i < len; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        out = out * 10 + static_cast<unsigned>(c - '0');
    }
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(const std::string& text) {
    // YYYY-MM-DD, optionally THH:MM:SS and a trailing Z.
    unsigned y4, mo, da;
    if (!parse_fixed_uint(text, 0, 4, y4) || text.size() < 10) return std::nullopt;
    if (text[4] != '-' || text[7] != '-') return std::nullopt;
    if (!parse_fixed_uint(text, 5, 2, mo) || !parse_fixed_uint(text, 8, 2, da)) return std::nullopt;
    if (mo < 1 || mo > 12 || da < 1) return std::nullopt;
    static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = y4 % 4 == 0 && (y4 % 100 != 0 || y4 % 400 == 0);
    if (da > (mo == 2 && leap ? 29u : lengths[mo - 1])) return std::nullopt;

    unsigned hh = 0, mi = 0, ss = 0;
    std::size_t pos = 10;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        if (text.size() < pos + 9 || text[pos + 3] != ':' || text[pos + 6] != ':')
            return std::nullopt;
        if (!parse_fixed_uint(text, pos + 1, 2, hh) || !parse_fixed_uint(text, pos + 4, 2, mi) ||
            !parse_fixed_uint(text, pos + 7, 2, ss))
            return std::nullopt;
        if (hh > 23 || mi > 59 || ss > 60) return std::nullopt;
        pos += 9;
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) return std::nullopt;

    return days_from_civil(y4, mo, da) * 86400 + hh * 3600 + mi * 60 + ss;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y;
    unsigned mo, da;
    civil_from_days(days, y, mo, da);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), mo, da, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw FileNotFound(path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    std::size_t line = 1, col = 1, field_col = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_col = col + 1;
    };
    auto end_record = [&] {
        end_field();
        if (!saw_any) {
            table.header = std::move(record);
            saw_any = true;
        } else {
            if (record.size() != table.header.size())
                throw ParseError(path.string(), line, 1,
                                 "record has " + std::to_string(record.size()) +
                                     " fields, header has " + std::to_string(table.header.size()));
            table.rows.push_back(std::move(record));
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                    ++col;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
                if (c == '\n') {
                    ++line;
                    col = 0;
                }
            }
        } else if (c == '"') {
            if (!field.empty())
                throw ParseError(path.string(), line, field_col, "quote inside unquoted field");
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
            ++line;
            col = 0;
            field_col = 1;
        } else {
            field.push_back(c);
        }
        ++col;
    }
    if (in_quotes) throw ParseError(path.string(), line, col, "unterminated quoted field");
    if (!field.empty() || !record.empty()) end_record();  // final record without newline
    if (!saw_any) throw ParseError(path.string(), 1, 1, "missing header row");
    return table;
}

namespace {

std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw IoError("cannot open for writing: " + path.string());
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(table.header[i]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << csv_escape(row[i]);
        }
        out << '\n';
    }
    if (!out.good()) throw IoError("write failed: " + path.string());
}

std::string SchemaConfig::primary_table() const {
    return links.empty() ? std::string() : links.front().primary;
}

std::string SchemaConfig::identifier_attribute() const {
    return links.empty() ? std::string() : links.front().identifier;
}

SchemaConfig load_schema(const std::filesystem::path& config_path) {
    std::ifstream in(config_path);
    if (!in.is_open()) throw FileNotFound(config_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(config_path.string(), 0, 0, e.what());
    }

    SchemaConfig cfg;
    cfg.base_dir = config_path.has_parent_path() ? config_path.parent_path()
                                                 : std::filesystem::path(".");
    try {
        cfg.dataset_name = j.at("dataset").get<std::string>();
        for (const auto& jt : j.at("tables")) {
            TableConfig tc;
            tc.name = jt.at("name").get<std::string>();
            tc.csv = jt.at("csv").get<std::string>();
            std::vector<std::string> unique =
                jt.value("unique", std::vector<std::string>{});
            for (const auto& ja : jt.at("attributes")) {
                AttributeSpec spec;
                spec.name = ja.at("name").get<std::string>();
                std::string kind = ja.at("kind").get<std::string>();
                if (kind == "numeric") spec.kind = AttributeKind::Numeric;
                else if (kind == "categorical") spec.kind = AttributeKind::Categorical;
                else if (kind == "datetime") spec.kind = AttributeKind::DateTime;
                else if (kind == "identifier") spec.kind = AttributeKind::Identifier;
                else
                    throw ParseError(config_path.string(), 0, 0,
                                     "unknown attribute kind '" + kind + "'");
                for (const auto& u : unique)
                    if (u == spec.name) spec.unique = true;
                tc.attributes.push_back(std::move(spec));
            }
            cfg.tables.push_back(std::move(tc));
        }
        for (const auto& jl : j.at("links"))
            cfg.links.push_back({jl.at("primary").get<std::string>(),
                                 jl.at("identifier").get<std::string>(),
                                 jl.at("secondary").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(config_path.string(), 0, 0, e.what());
    }
    if (cfg.links.empty())
        throw ParseError(config_path.string(), 0, 0, "schema declares no link triples");

    // Identifier attributes of a link are unique in the link's primary table.
    for (const auto& link : cfg.links)
        for (auto& table : cfg.tables)
            if (table.name == link.primary)
                for (auto& attr : table.attributes)
                    if (attr.name == link.identifier) attr.unique = true;
    return cfg;
}

namespace {

Value parse_cell(const std::string& text, AttributeKind kind, const std::string& file,
                 std::size_t line, std::size_t column) {
    if (text.empty()) return Missing{};
    switch (kind) {
        case AttributeKind::Numeric: {
            double d = 0;
            auto res = std::from_chars(text.data(), text.data() + text.size(), d);
            if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
                throw ParseError(file, line, column, "'" + text + "' is not numeric");
            return d;
        }
        case AttributeKind::Categorical:
            return Category{text};
        case AttributeKind::DateTime: {
            auto t = parse_iso8601(text);
            if (!t) throw ParseError(file, line, column, "'" + text + "' is not an ISO-8601 datetime");
            return Timestamp{*t};
        }
        case AttributeKind::Identifier:
            return Identifier{text};
    }
    throw ParseError(file, line, column, "unhandled attribute kind");
}

std::string cell_to_text(const Value& v) {
    if (is_missing(v)) return "";
    if (const auto* d = std::get_if<double>(&v)) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), *d);
        return std::string(buf, res.ptr);
    }
    if (const auto* c = std::get_if<Category>(&v)) return c->label;
    if (const auto* t = std::get_if<Timestamp>(&v)) return format_iso8601(t->seconds);
    return std::get<Identifier>(v).token;
}

}  // namespace

RelationalDataset load_dataset(const SchemaConfig& config) {
    RelationalDataset dataset;
    dataset.name = config.dataset_name;
    dataset.links = config.links;
    dataset.primary_table = config.primary_table();
    dataset.identifier_attribute = config.identifier_attribute();

    for (const auto& tc : config.tables) {
        std::filesystem::path csv_path = config.base_dir / tc.csv;
        CsvTable csv = read_csv(csv_path);

        TableData table;
        table.name = tc.name;
        table.attributes = tc.attributes;

        // Map each declared attribute to its CSV column.
        std::vector<int> col_of(tc.attributes.size(), -1);
        for (std::size_t a = 0; a < tc.attributes.size(); ++a) {
            for (std::size_t c = 0; c < csv.header.size(); ++c)
                if (csv.header[c] == tc.attributes[a].name) col_of[a] = static_cast<int>(c);
            if (col_of[a] < 0)
                throw ParseError(csv_path.string(), 1, 1,
                                 "column '" + tc.attributes[a].name + "' missing from header");
        }

        for (std::size_t r = 0; r < csv.rows.size(); ++r) {
            Row row;
            row.values.reserve(tc.attributes.size());
            for (std::size_t a = 0; a < tc.attributes.size(); ++a)
                row.values.push_back(parse_cell(csv.rows[r][col_of[a]], tc.attributes[a].kind,
                                                csv_path.string(), r + 2, col_of[a] + 1));
            table.rows.push_back(std::move(row));
        }
        dataset.tables.push_back(std::move(table));
    }

    ValidationReport report = validate(dataset);
    if (!report.ok()) throw ValidationFailed(std::move(report));
    return dataset;
}

void write_synthetic_dataset(const RelationalDataset& dataset, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    for (const auto& table : dataset.tables) {
        CsvTable csv;
        for (const auto& attr : table.attributes) csv.header.push_back(attr.name);
        for (const auto& row : table.rows) {
            std::vector<std::string> cells;
            cells.reserve(row.values.size());
            for (const auto& v : row.values) cells.push_back(cell_to_text(v));
            csv.rows.push_back(std::move(cells));
        }
        write_csv(dir / (table.name + ".csv"), csv);
    }
}

}  // namespace relsynth
