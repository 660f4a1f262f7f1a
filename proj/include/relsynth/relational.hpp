#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// In-memory model of relational datasets: tables, typed attribute values,
// identifier links between tables, and structural validation.

namespace relsynth {

enum class AttributeKind { Numeric, Categorical, DateTime, Identifier };

const char* to_string(AttributeKind kind);

/// Undefined value; a cell holding Missing has no value for its attribute.
struct Missing {
    bool operator==(const Missing&) const = default;
};

struct Category {
    std::string label;
    bool operator==(const Category&) const = default;
};

/// DateTime value, seconds since the Unix epoch (UTC).
struct Timestamp {
    std::int64_t seconds = 0;
    bool operator==(const Timestamp&) const = default;
};

/// Identifier token. Compares by exact equality only; never coerced to a number.
struct Identifier {
    std::string token;
    bool operator==(const Identifier&) const = default;
};

using Value = std::variant<Missing, double, Category, Timestamp, Identifier>;

bool is_missing(const Value& v);
bool matches_kind(const Value& v, AttributeKind kind);
std::string value_to_text(const Value& v);

struct AttributeSpec {
    std::string name;
    AttributeKind kind = AttributeKind::Numeric;
    bool unique = false;
};

struct Row {
    std::vector<Value> values;
};

struct TableData {
    std::string name;
    std::vector<AttributeSpec> attributes;
    std::vector<Row> rows;

    int attribute_index(const std::string& attr) const;  // -1 if absent
};

/// One primary/secondary relationship: rows of `secondary` reference rows of
/// `primary` through the shared identifier attribute.
struct LinkTriple {
    std::string primary;
    std::string identifier;
    std::string secondary;
};

struct RelationalDataset {
    std::string name;
    std::vector<TableData> tables;
    std::string primary_table;
    std::string identifier_attribute;
    std::vector<LinkTriple> links;

    int table_index(const std::string& table) const;  // -1 if absent

    /// Single-primary convenience: links every other table to `primary` via `identifier`.
    static RelationalDataset single_primary(std::string name, std::vector<TableData> tables,
                                            const std::string& primary,
                                            const std::string& identifier);
};

struct Violation {
    std::string table;
    long row = -1;  // -1 when the violation is not row-specific
    std::string attribute;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_text() const;
};

/// Checks the relational conditions: at least two tables, identifier
/// uniqueness in each link's primary table, referential integrity of every
/// secondary row, declared-unique attributes, and row/kind consistency.
/// Violations are data, not errors; the report is empty iff the dataset is valid.
ValidationReport validate(const RelationalDataset& dataset);

class UnknownTable : public std::runtime_error {
public:
    explicit UnknownTable(const std::string& table)
        : std::runtime_error("unknown table: " + table) {}
};

class InvalidDataset : public std::runtime_error {
public:
    explicit InvalidDataset(const std::string& what) : std::runtime_error(what) {}
};

/// Inner-joins `secondary` against the dataset's primary table on the link's
/// identifier attribute. One output row per secondary row; attribute order is
/// primary attributes then secondary attributes minus the identifier.
TableData join_on_identifier(const RelationalDataset& dataset, const std::string& secondary);

/// General single-key equi-join used by join_on_identifier and by evaluation
/// (left attributes first, right attributes minus the key).
TableData join_tables(const TableData& left, const TableData& right, const std::string& key);

/// Structural hash of the dataset schema (table names, attribute names/kinds/
/// uniqueness, link triples). File locations do not participate, so a dataset
/// keeps its fingerprint when its CSVs move.
std::uint64_t schema_fingerprint(const RelationalDataset& dataset);

}  // namespace relsynth
