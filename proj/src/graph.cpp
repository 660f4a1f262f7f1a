#include "relsynth/graph.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>

namespace relsynth {

VertexRef RelationalGraph::vertex(std::uint32_t id) const {
    std::uint32_t t = 0;
    while (t + 1 < table_offsets.size() && table_offsets[t + 1] <= id) ++t;
    return {t, id - table_offsets[t]};
}

RelationalGraph build_graph(const RelationalDataset& dataset) {
    ValidationReport report = validate(dataset);
    if (!report.ok()) throw InvalidDataset("cannot build graph:\n" + report.to_text());

    RelationalGraph graph;
    graph.table_offsets.resize(dataset.tables.size() + 1, 0);
    for (std::size_t t = 0; t < dataset.tables.size(); ++t)
        graph.table_offsets[t + 1] =
            graph.table_offsets[t] + static_cast<std::uint32_t>(dataset.tables[t].rows.size());
    graph.adjacency.resize(graph.table_offsets.back());

    for (std::size_t li = 0; li < dataset.links.size(); ++li) {
        const LinkTriple& link = dataset.links[li];
        const TableData& primary = dataset.tables[dataset.table_index(link.primary)];
        const TableData& secondary = dataset.tables[dataset.table_index(link.secondary)];
        const int pa = primary.attribute_index(link.identifier);
        const int sa = secondary.attribute_index(link.identifier);
        const std::uint32_t poff =
            graph.table_offsets[static_cast<std::size_t>(dataset.table_index(link.primary))];
        const std::uint32_t soff =
            graph.table_offsets[static_cast<std::size_t>(dataset.table_index(link.secondary))];

        std::unordered_map<std::string, std::uint32_t> key_to_vertex;
        key_to_vertex.reserve(primary.rows.size());
        for (std::size_t r = 0; r < primary.rows.size(); ++r) {
            const Value& v = primary.rows[r].values[pa];
            key_to_vertex.emplace(std::to_string(v.index()) + "|" + value_to_text(v),
                                  poff + static_cast<std::uint32_t>(r));
        }
        for (std::size_t r = 0; r < secondary.rows.size(); ++r) {
            const Value& v = secondary.rows[r].values[sa];
            auto it = key_to_vertex.find(std::to_string(v.index()) + "|" + value_to_text(v));
            if (it == key_to_vertex.end()) continue;  // validate already passed; defensive only
            std::uint32_t s = it->second;
            std::uint32_t t = soff + static_cast<std::uint32_t>(r);
            graph.edges.push_back({std::min(s, t), std::max(s, t), static_cast<std::uint32_t>(li)});
            graph.adjacency[s].push_back(t);
            graph.adjacency[t].push_back(s);
        }
    }

    // Edges form a set of unordered pairs; the same pair reached through two
    // links counts once.
    std::sort(graph.edges.begin(), graph.edges.end(), [](const GraphEdge& x, const GraphEdge& y) {
        return std::tie(x.a, x.b, x.link) < std::tie(y.a, y.b, y.link);
    });
    graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end(),
                                  [](const GraphEdge& x, const GraphEdge& y) {
                                      return x.a == y.a && x.b == y.b;
                                  }),
                      graph.edges.end());

    // Sorted neighbor lists; vertex id order equals (table, row-index) order.
    for (auto& list : graph.adjacency) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return graph;
}

std::vector<std::vector<std::uint32_t>> edge_list_attribute(const RelationalGraph& graph) {
    return graph.adjacency;
}

}  // namespace relsynth
