#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "relsynth/graph.hpp"
#include "relsynth/relational.hpp"
#include "relsynth/tensor.hpp"

// Invertible preprocessing: per-table typed->numeric normalization into [0,1]
// with exact inverses, and the merge of all encoded tables into one matrix
// with per-row origin tags and adjacency payload.
//
// Numerics are min-max scaled, categoricals one-hot over a first-appearance
// category list, datetimes epoch-scaled. A nullable attribute gets one extra
// indicator column (1 = missing). Identifier attributes are structural: they
// occupy no feature columns and ride along as per-row token metadata.

namespace relsynth {

class UnseenCategory : public std::runtime_error {
public:
    UnseenCategory(const std::string& attr, const std::string& label)
        : std::runtime_error("category '" + label + "' unseen by codec for " + attr) {}
};

class ShapeMismatch : public std::runtime_error {
public:
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

class GraphRowMismatch : public std::runtime_error {
public:
    explicit GraphRowMismatch(const std::string& what) : std::runtime_error(what) {}
};

class MissingOriginTag : public std::runtime_error {
public:
    explicit MissingOriginTag(const std::string& what) : std::runtime_error(what) {}
};

struct ColumnSpan {
    std::size_t offset = 0;  // first value column
    std::size_t width = 0;   // value columns (0 for identifiers)
    int flag_column = -1;    // missingness indicator, -1 when the attribute is not nullable
};

struct AttributeCodec {
    std::string name;
    AttributeKind kind = AttributeKind::Numeric;
    bool unique = false;
    bool nullable = false;
    double num_min = 0.0, num_max = 0.0;        // Numeric
    std::int64_t dt_min = 0, dt_max = 0;        // DateTime (epoch offset = dt_min)
    std::vector<std::string> categories;        // Categorical, first-appearance order
    ColumnSpan span;
};

struct TableCodec {
    std::string table;
    std::vector<AttributeCodec> attributes;  // aligned with A(T)
    std::size_t encoded_width = 0;
};

struct EncodedTable {
    std::string table;
    std::vector<std::string> attribute_names;  // every source attribute, identifiers included
    Matrix features;                           // rows x encoded_width, entries in [0,1]
    // Identifier attribute tokens, by attribute name, one entry per row.
    std::vector<std::pair<std::string, std::vector<Value>>> identifier_columns;

    std::size_t rows() const { return features.rows(); }
};

enum class EncodeMode {
    Strict,    // unseen category -> UnseenCategory
    Tolerant,  // unseen category -> zero span (+ flag when nullable)
};

TableCodec fit_codecs(const TableData& table);
EncodedTable encode_table(const TableData& table, const TableCodec& codec,
                          EncodeMode mode = EncodeMode::Strict);
std::pair<EncodedTable, TableCodec> encode_table(const TableData& table);
TableData decode_table(const EncodedTable& encoded, const TableCodec& codec);

struct RowOrigin {
    std::uint32_t table = 0;
    std::uint32_t row = 0;
};

struct MergedTable {
    Matrix features;  // vertices x total width, zero outside the origin table's block
    std::vector<RowOrigin> origins;
    std::vector<std::vector<std::uint32_t>> adjacency;  // a-dagger payload, per merged row
    struct TableSlot {
        std::string table;
        std::vector<std::string> attribute_names;
        std::size_t column_offset = 0;
        std::size_t width = 0;
        std::size_t row_offset = 0;
        std::size_t rows = 0;
        std::vector<std::pair<std::string, std::vector<Value>>> identifier_columns;
    };
    std::vector<TableSlot> slots;
    std::size_t logical_attribute_count = 0;  // |A(X)|, distinct attribute names + a-dagger
};

/// Vertical concatenation of all encoded tables in graph vertex order, with
/// zero fill outside each row's origin block and the adjacency list attached.
MergedTable merge_tables(const std::vector<EncodedTable>& encoded, const RelationalGraph& graph);

/// Exact inverse of merge_tables: every row returns to its origin table with
/// only that table's columns retained.
std::vector<EncodedTable> split_tables(const MergedTable& merged);

}  // namespace relsynth
