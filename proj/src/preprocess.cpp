#include "relsynth/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace relsynth {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

TableCodec fit_codecs(const TableData& table) {
    TableCodec codec;
    codec.table = table.name;
    codec.attributes.reserve(table.attributes.size());
    std::size_t offset = 0;
    for (std::size_t a = 0; a < table.attributes.size(); ++a) {
        const AttributeSpec& spec = table.attributes[a];
        AttributeCodec ac;
        ac.name = spec.name;
        ac.kind = spec.kind;
        ac.unique = spec.unique;
        bool seen_value = false;
        std::set<std::string> seen_categories;
        for (const Row& row : table.rows) {
            const Value& v = row.values[a];
            if (is_missing(v)) {
                ac.nullable = true;
                continue;
            }
            switch (spec.kind) {
                case AttributeKind::Numeric: {
                    double x = std::get<double>(v);
                    if (!seen_value) {
                        ac.num_min = ac.num_max = x;
                    } else {
                        ac.num_min = std::min(ac.num_min, x);
                        ac.num_max = std::max(ac.num_max, x);
                    }
                    break;
                }
                case AttributeKind::DateTime: {
                    std::int64_t s = std::get<Timestamp>(v).seconds;
                    if (!seen_value) {
                        ac.dt_min = ac.dt_max = s;
                    } else {
                        ac.dt_min = std::min(ac.dt_min, s);
                        ac.dt_max = std::max(ac.dt_max, s);
                    }
                    break;
                }
                case AttributeKind::Categorical: {
                    const std::string& label = std::get<Category>(v).label;
                    if (seen_categories.insert(label).second) ac.categories.push_back(label);
                    break;
                }
                case AttributeKind::Identifier:
                    break;
            }
            seen_value = true;
        }
        switch (spec.kind) {
            case AttributeKind::Numeric:
            case AttributeKind::DateTime:
                ac.span.width = 1;
                break;
            case AttributeKind::Categorical:
                ac.span.width = ac.categories.size();
                break;
            case AttributeKind::Identifier:
                ac.span.width = 0;
                ac.nullable = false;
                break;
        }
        ac.span.offset = offset;
        offset += ac.span.width;
        if (ac.nullable) {
            ac.span.flag_column = static_cast<int>(offset);
            ++offset;
        }
        codec.attributes.push_back(std::move(ac));
    }
    codec.encoded_width = offset;
    return codec;
}

EncodedTable encode_table(const TableData& table, const TableCodec& codec, EncodeMode mode) {
    if (table.attributes.size() != codec.attributes.size())
        throw ShapeMismatch("encode: " + table.name + " has " +
                            std::to_string(table.attributes.size()) + " attributes, codec has " +
                            std::to_string(codec.attributes.size()));
    for (std::size_t a = 0; a < codec.attributes.size(); ++a)
        if (table.attributes[a].name != codec.attributes[a].name ||
            table.attributes[a].kind != codec.attributes[a].kind)
            throw ShapeMismatch("encode: attribute " + table.attributes[a].name +
                                " does not match codec attribute " + codec.attributes[a].name);

    EncodedTable out;
    out.table = table.name;
    for (const AttributeSpec& spec : table.attributes) out.attribute_names.push_back(spec.name);
    out.features = Matrix(table.rows.size(), codec.encoded_width);
    for (const AttributeCodec& ac : codec.attributes)
        if (ac.kind == AttributeKind::Identifier)
            out.identifier_columns.emplace_back(ac.name, std::vector<Value>());

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const Row& row = table.rows[r];
        std::size_t id_col = 0;
        for (std::size_t a = 0; a < codec.attributes.size(); ++a) {
            const AttributeCodec& ac = codec.attributes[a];
            const Value& v = row.values[a];
            if (ac.kind == AttributeKind::Identifier) {
                out.identifier_columns[id_col++].second.push_back(v);
                continue;
            }
            if (is_missing(v)) {
                if (ac.span.flag_column < 0) {
                    if (mode == EncodeMode::Strict)
                        throw ShapeMismatch("encode: missing value in non-nullable attribute " +
                                            ac.name + " of " + table.name);
                    continue;  // zero span, no flag to raise
                }
                out.features(r, static_cast<std::size_t>(ac.span.flag_column)) = 1.0;
                continue;
            }
            switch (ac.kind) {
                case AttributeKind::Numeric: {
                    double x = std::get<double>(v);
                    double scaled = ac.num_max > ac.num_min
                                        ? (x - ac.num_min) / (ac.num_max - ac.num_min)
                                        : 0.5;
                    out.features(r, ac.span.offset) = clamp01(scaled);
                    break;
                }
                case AttributeKind::DateTime: {
                    double s = static_cast<double>(std::get<Timestamp>(v).seconds);
                    double scaled = ac.dt_max > ac.dt_min
                                        ? (s - static_cast<double>(ac.dt_min)) /
                                              static_cast<double>(ac.dt_max - ac.dt_min)
                                        : 0.5;
                    out.features(r, ac.span.offset) = clamp01(scaled);
                    break;
                }
                case AttributeKind::Categorical: {
                    const std::string& label = std::get<Category>(v).label;
                    auto it = std::find(ac.categories.begin(), ac.categories.end(), label);
                    if (it == ac.categories.end()) {
                        if (mode == EncodeMode::Strict) throw UnseenCategory(ac.name, label);
                        if (ac.span.flag_column >= 0)
                            out.features(r, static_cast<std::size_t>(ac.span.flag_column)) = 1.0;
                        break;
                    }
                    out.features(r, ac.span.offset +
                                        static_cast<std::size_t>(it - ac.categories.begin())) = 1.0;
                    break;
                }
                case AttributeKind::Identifier:
                    break;
            }
        }
    }
    return out;
}

std::pair<EncodedTable, TableCodec> encode_table(const TableData& table) {
    TableCodec codec = fit_codecs(table);
    EncodedTable encoded = encode_table(table, codec, EncodeMode::Strict);
    return {std::move(encoded), std::move(codec)};
}

TableData decode_table(const EncodedTable& encoded, const TableCodec& codec) {
    if (encoded.features.cols() != codec.encoded_width)
        throw ShapeMismatch("decode: " + std::to_string(encoded.features.cols()) +
                            " columns, codec expects " + std::to_string(codec.encoded_width));
    TableData out;
    out.name = codec.table;
    for (const AttributeCodec& ac : codec.attributes)
        out.attributes.push_back({ac.name, ac.kind, ac.unique});

    std::vector<const std::vector<Value>*> id_sources;
    for (const AttributeCodec& ac : codec.attributes) {
        if (ac.kind != AttributeKind::Identifier) continue;
        const std::vector<Value>* found = nullptr;
        for (const auto& [name, tokens] : encoded.identifier_columns)
            if (name == ac.name) found = &tokens;
        if (!found || found->size() != encoded.rows())
            throw ShapeMismatch("decode: identifier tokens absent for " + ac.name);
        id_sources.push_back(found);
    }

    out.rows.reserve(encoded.rows());
    for (std::size_t r = 0; r < encoded.rows(); ++r) {
        Row row;
        row.values.reserve(codec.attributes.size());
        std::size_t id_col = 0;
        for (const AttributeCodec& ac : codec.attributes) {
            if (ac.kind == AttributeKind::Identifier) {
                row.values.push_back((*id_sources[id_col++])[r]);
                continue;
            }
            if (ac.span.flag_column >= 0 &&
                encoded.features(r, static_cast<std::size_t>(ac.span.flag_column)) >= 0.5) {
                row.values.push_back(Missing{});
                continue;
            }
            switch (ac.kind) {
                case AttributeKind::Numeric: {
                    double x = clamp01(encoded.features(r, ac.span.offset));
                    double v = ac.num_max > ac.num_min
                                   ? ac.num_min + x * (ac.num_max - ac.num_min)
                                   : ac.num_min;
                    row.values.push_back(v);
                    break;
                }
                case AttributeKind::DateTime: {
                    double x = clamp01(encoded.features(r, ac.span.offset));
                    std::int64_t s =
                        ac.dt_max > ac.dt_min
                            ? ac.dt_min + static_cast<std::int64_t>(std::llround(
                                              x * static_cast<double>(ac.dt_max - ac.dt_min)))
                            : ac.dt_min;
                    row.values.push_back(Timestamp{s});
                    break;
                }
                case AttributeKind::Categorical: {
                    if (ac.categories.empty()) {
                        row.values.push_back(Missing{});
                        break;
                    }
                    std::size_t best = 0;
                    double best_v = encoded.features(r, ac.span.offset);
                    for (std::size_t j = 1; j < ac.categories.size(); ++j) {
                        double v = encoded.features(r, ac.span.offset + j);
                        if (v > best_v) {
                            best_v = v;
                            best = j;
                        }
                    }
                    row.values.push_back(Category{ac.categories[best]});
                    break;
                }
                case AttributeKind::Identifier:
                    break;
            }
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

MergedTable merge_tables(const std::vector<EncodedTable>& encoded, const RelationalGraph& graph) {
    if (encoded.size() + 1 != graph.table_offsets.size())
        throw GraphRowMismatch("merge: " + std::to_string(encoded.size()) +
                               " tables, graph has " +
                               std::to_string(graph.table_offsets.size() - 1));
    for (std::size_t t = 0; t < encoded.size(); ++t) {
        std::size_t expected = graph.table_offsets[t + 1] - graph.table_offsets[t];
        if (encoded[t].rows() != expected)
            throw GraphRowMismatch("merge: table " + encoded[t].table + " has " +
                                   std::to_string(encoded[t].rows()) + " rows, graph expects " +
                                   std::to_string(expected));
    }

    MergedTable merged;
    std::size_t total_width = 0;
    for (const EncodedTable& et : encoded) total_width += et.features.cols();
    merged.features = Matrix(graph.vertex_count(), total_width);
    merged.origins.reserve(graph.vertex_count());
    merged.slots.reserve(encoded.size());

    std::size_t col = 0;
    for (std::size_t t = 0; t < encoded.size(); ++t) {
        const EncodedTable& et = encoded[t];
        MergedTable::TableSlot slot;
        slot.table = et.table;
        slot.attribute_names = et.attribute_names;
        slot.column_offset = col;
        slot.width = et.features.cols();
        slot.row_offset = graph.table_offsets[t];
        slot.rows = et.rows();
        slot.identifier_columns = et.identifier_columns;
        for (std::size_t r = 0; r < et.rows(); ++r) {
            std::size_t v = slot.row_offset + r;
            std::copy(et.features.row(r), et.features.row(r) + slot.width,
                      merged.features.row(v) + col);
            merged.origins.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(r)});
        }
        merged.slots.push_back(std::move(slot));
        col += et.features.cols();
    }

    merged.adjacency = graph.adjacency;

    std::set<std::string> names;
    for (const EncodedTable& et : encoded)
        names.insert(et.attribute_names.begin(), et.attribute_names.end());
    merged.logical_attribute_count = names.size() + 1;  // + the adjacency payload column
    return merged;
}

std::vector<EncodedTable> split_tables(const MergedTable& merged) {
    if (merged.origins.size() != merged.features.rows())
        throw MissingOriginTag("split: " + std::to_string(merged.origins.size()) +
                               " origin tags for " + std::to_string(merged.features.rows()) +
                               " rows");
    std::vector<EncodedTable> out;
    out.reserve(merged.slots.size());
    for (const MergedTable::TableSlot& slot : merged.slots) {
        EncodedTable et;
        et.table = slot.table;
        et.attribute_names = slot.attribute_names;
        et.identifier_columns = slot.identifier_columns;
        et.features = Matrix(slot.rows, slot.width);
        for (std::size_t r = 0; r < slot.rows; ++r) {
            const RowOrigin& origin = merged.origins[slot.row_offset + r];
            if (origin.row != r || merged.slots[origin.table].table != slot.table)
                throw MissingOriginTag("split: origin tag out of place at merged row " +
                                       std::to_string(slot.row_offset + r));
            std::copy(merged.features.row(slot.row_offset + r) + slot.column_offset,
                      merged.features.row(slot.row_offset + r) + slot.column_offset + slot.width,
                      et.features.row(r));
        }
        out.push_back(std::move(et));
    }
    return out;
}

}  // namespace relsynth
