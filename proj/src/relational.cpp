#include "relsynth/relational.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace relsynth {

const char* to_string(AttributeKind kind) {
    switch (kind) {
        case AttributeKind::Numeric: return "numeric";
        case AttributeKind::Categorical: return "categorical";
        case AttributeKind::DateTime: return "datetime";
        case AttributeKind::Identifier: return "identifier";
    }
    return "?";
}

bool is_missing(const Value& v) { return std::holds_alternative<Missing>(v); }

bool matches_kind(const Value& v, AttributeKind kind) {
    if (is_missing(v)) return true;
    switch (kind) {
        case AttributeKind::Numeric: return std::holds_alternative<double>(v);
        case AttributeKind::Categorical: return std::holds_alternative<Category>(v);
        case AttributeKind::DateTime: return std::holds_alternative<Timestamp>(v);
        case AttributeKind::Identifier: return std::holds_alternative<Identifier>(v);
    }
    return false;
}

std::string value_to_text(const Value& v) {
    if (is_missing(v)) return "<missing>";
    if (const auto* d = std::get_if<double>(&v)) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), *d);
        return std::string(buf, res.ptr);
    }
    if (const auto* c = std::get_if<Category>(&v)) return c->label;
    if (const auto* t = std::get_if<Timestamp>(&v)) return "@" + std::to_string(t->seconds);
    return std::get<Identifier>(v).token;
}

int TableData::attribute_index(const std::string& attr) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (attributes[i].name == attr) return static_cast<int>(i);
    return -1;
}

int RelationalDataset::table_index(const std::string& table) const {
    for (std::size_t i = 0; i < tables.size(); ++i)
        if (tables[i].name == table) return static_cast<int>(i);
    return -1;
}

RelationalDataset RelationalDataset::single_primary(std::string name, std::vector<TableData> tables,
                                                    const std::string& primary,
                                                    const std::string& identifier) {
    RelationalDataset d;
    d.name = std::move(name);
    d.tables = std::move(tables);
    d.primary_table = primary;
    d.identifier_attribute = identifier;
    for (const auto& t : d.tables)
        if (t.name != primary) d.links.push_back({primary, identifier, t.name});
    return d;
}

std::string ValidationReport::to_text() const {
    std::ostringstream out;
    for (const auto& v : violations) {
        out << v.table;
        if (v.row >= 0) out << "[" << v.row << "]";
        if (!v.attribute.empty()) out << "." << v.attribute;
        out << ": " << v.message << "\n";
    }
    return out.str();
}

namespace {

// Hashable text form of a value for uniqueness / membership checks.
std::string value_key(const Value& v) {
    return std::to_string(v.index()) + "|" + value_to_text(v);
}

void check_unique(const TableData& table, int attr, ValidationReport& report) {
    std::unordered_map<std::string, std::size_t> seen;
    const std::string& name = table.attributes[attr].name;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const Value& v = table.rows[r].values[attr];
        if (is_missing(v)) {
            report.violations.push_back(
                {table.name, static_cast<long>(r), name, "unique attribute has undefined value"});
            continue;
        }
        auto [it, inserted] = seen.emplace(value_key(v), r);
        if (!inserted)
            report.violations.push_back({table.name, static_cast<long>(r), name,
                                         "duplicate value, first seen in row " +
                                             std::to_string(it->second)});
    }
}

}  // namespace

ValidationReport validate(const RelationalDataset& dataset) {
    ValidationReport report;

    if (dataset.tables.size() < 2)
        report.violations.push_back({dataset.name, -1, "", "dataset has fewer than two tables"});

    // Row shape and value/kind consistency.
    for (const auto& table : dataset.tables) {
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const Row& row = table.rows[r];
            if (row.values.size() != table.attributes.size()) {
                report.violations.push_back({table.name, static_cast<long>(r), "",
                                             "row has " + std::to_string(row.values.size()) +
                                                 " values for " +
                                                 std::to_string(table.attributes.size()) +
                                                 " attributes"});
                continue;
            }
            for (std::size_t a = 0; a < table.attributes.size(); ++a)
                if (!matches_kind(row.values[a], table.attributes[a].kind))
                    report.violations.push_back({table.name, static_cast<long>(r),
                                                 table.attributes[a].name,
                                                 "value does not match declared kind"});
        }
        for (std::size_t a = 0; a < table.attributes.size(); ++a)
            for (std::size_t b = a + 1; b < table.attributes.size(); ++b)
                if (table.attributes[a].name == table.attributes[b].name)
                    report.violations.push_back({table.name, -1, table.attributes[a].name,
                                                 "duplicate attribute name"});
    }

    // Declared-unique attributes are injective and never Missing.
    for (const auto& table : dataset.tables)
        for (std::size_t a = 0; a < table.attributes.size(); ++a)
            if (table.attributes[a].unique) check_unique(table, static_cast<int>(a), report);

    std::unordered_set<std::string> linked;  // tables covered as a secondary
    for (const auto& link : dataset.links) {
        int pi = dataset.table_index(link.primary);
        int si = dataset.table_index(link.secondary);
        if (pi < 0) {
            report.violations.push_back({link.primary, -1, "", "link names unknown primary table"});
            continue;
        }
        if (si < 0) {
            report.violations.push_back(
                {link.secondary, -1, "", "link names unknown secondary table"});
            continue;
        }
        linked.insert(link.secondary);
        const TableData& primary = dataset.tables[pi];
        const TableData& secondary = dataset.tables[si];

        int pa = primary.attribute_index(link.identifier);
        int sa = secondary.attribute_index(link.identifier);
        if (pa < 0) {
            report.violations.push_back(
                {link.primary, -1, link.identifier, "identifier attribute absent from primary table"});
            continue;
        }
        if (!primary.attributes[pa].unique)
            check_unique(primary, pa, report);  // identifier must be unique even if undeclared
        if (sa < 0) {
            report.violations.push_back({link.secondary, -1, link.identifier,
                                         "identifier attribute absent from secondary table"});
            continue;
        }

        std::unordered_set<std::string> keys;
        for (const auto& row : primary.rows)
            if (pa < static_cast<int>(row.values.size()) && !is_missing(row.values[pa]))
                keys.insert(value_key(row.values[pa]));
        for (std::size_t r = 0; r < secondary.rows.size(); ++r) {
            const Row& row = secondary.rows[r];
            if (sa >= static_cast<int>(row.values.size())) continue;  // reported above
            const Value& v = row.values[sa];
            if (is_missing(v)) {
                report.violations.push_back({secondary.name, static_cast<long>(r), link.identifier,
                                             "identifier undefined in secondary row"});
            } else if (!keys.count(value_key(v))) {
                report.violations.push_back({secondary.name, static_cast<long>(r), link.identifier,
                                             "references " + value_to_text(v) +
                                                 " absent from " + primary.name});
            }
        }
    }

    // Every non-primary table must be reachable as a secondary of some link.
    std::unordered_set<std::string> primaries;
    for (const auto& link : dataset.links) primaries.insert(link.primary);
    for (const auto& table : dataset.tables)
        if (table.name != dataset.primary_table && !linked.count(table.name) &&
            !primaries.count(table.name))
            report.violations.push_back({table.name, -1, "", "table participates in no link"});

    return report;
}

TableData join_tables(const TableData& left, const TableData& right, const std::string& key) {
    int lk = left.attribute_index(key);
    int rk = right.attribute_index(key);
    if (lk < 0 || rk < 0)
        throw InvalidDataset("join key '" + key + "' missing from " +
                             (lk < 0 ? left.name : right.name));

    TableData out;
    out.name = left.name + "_" + right.name;
    out.attributes = left.attributes;
    for (std::size_t a = 0; a < right.attributes.size(); ++a)
        if (static_cast<int>(a) != rk) out.attributes.push_back(right.attributes[a]);

    std::unordered_map<std::string, std::vector<std::size_t>> index;
    for (std::size_t r = 0; r < left.rows.size(); ++r) {
        const Value& v = left.rows[r].values[lk];
        if (!is_missing(v)) index[value_key(v)].push_back(r);
    }
    for (std::size_t r = 0; r < right.rows.size(); ++r) {
        const Value& v = right.rows[r].values[rk];
        if (is_missing(v)) continue;
        auto it = index.find(value_key(v));
        if (it == index.end()) continue;
        for (std::size_t lr : it->second) {
            Row row = left.rows[lr];
            for (std::size_t a = 0; a < right.attributes.size(); ++a)
                if (static_cast<int>(a) != rk) row.values.push_back(right.rows[r].values[a]);
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

TableData join_on_identifier(const RelationalDataset& dataset, const std::string& secondary) {
    int si = dataset.table_index(secondary);
    if (si < 0) throw UnknownTable(secondary);

    const LinkTriple* link = nullptr;
    for (const auto& l : dataset.links)
        if (l.secondary == secondary) {
            link = &l;
            break;
        }
    if (!link) throw InvalidDataset("table " + secondary + " is not a secondary of any link");

    int pi = dataset.table_index(link->primary);
    if (pi < 0) throw InvalidDataset("link primary " + link->primary + " missing");
    const TableData& primary = dataset.tables[pi];
    const TableData& sec = dataset.tables[si];

    // Under conditions 2 and 3 each secondary row matches exactly one primary row.
    TableData joined = join_tables(primary, sec, link->identifier);
    if (joined.rows.size() != sec.rows.size())
        throw InvalidDataset("join produced " + std::to_string(joined.rows.size()) +
                             " rows for " + std::to_string(sec.rows.size()) +
                             " secondary rows; dataset violates relational conditions");
    return joined;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    h ^= 0x1F;
    h *= kFnvPrime;
}

}  // namespace

std::uint64_t schema_fingerprint(const RelationalDataset& dataset) {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, dataset.name);
    fnv_mix(h, dataset.primary_table);
    fnv_mix(h, dataset.identifier_attribute);
    for (const auto& table : dataset.tables) {
        fnv_mix(h, "T");
        fnv_mix(h, table.name);
        for (const auto& attr : table.attributes) {
            fnv_mix(h, attr.name);
            fnv_mix(h, to_string(attr.kind));
            fnv_mix(h, attr.unique ? "u" : "-");
        }
    }
    for (const auto& link : dataset.links) {
        fnv_mix(h, "L");
        fnv_mix(h, link.primary);
        fnv_mix(h, link.identifier);
        fnv_mix(h, link.secondary);
    }
    return h;
}

}  // namespace relsynth
