#pragma once

#include <cstdint>
#include <vector>

#include "relsynth/relational.hpp"

// The relational graph: one vertex per row of any table, and an undirected
// edge between a primary row and each secondary row sharing its identifier
// value. Built with a hash join on the identifier; the definitional all-pairs
// scan lives in the tests as the oracle.

namespace relsynth {

struct VertexRef {
    std::uint32_t table = 0;
    std::uint32_t row = 0;
    bool operator==(const VertexRef&) const = default;
};

struct GraphEdge {
    std::uint32_t a = 0;  // vertex ids with a < b
    std::uint32_t b = 0;
    std::uint32_t link = 0;  // index into dataset.links
};

struct RelationalGraph {
    std::vector<std::uint32_t> table_offsets;  // size = tables + 1
    std::vector<GraphEdge> edges;
    std::vector<std::vector<std::uint32_t>> adjacency;  // sorted neighbor ids

    std::size_t vertex_count() const { return adjacency.size(); }
    std::uint32_t vertex_id(std::uint32_t table, std::uint32_t row) const {
        return table_offsets[table] + row;
    }
    VertexRef vertex(std::uint32_t id) const;
};

RelationalGraph build_graph(const RelationalDataset& dataset);

/// Per-vertex adjacency lists, emitted for every vertex (isolated ones get an
/// empty list).
std::vector<std::vector<std::uint32_t>> edge_list_attribute(const RelationalGraph& graph);

}  // namespace relsynth
