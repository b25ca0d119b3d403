#include "pathrag/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace pathrag {

namespace {

double sq_dist(const Nucleus& a, const Nucleus& b) {
    double dx = a.centroid_x - b.centroid_x;
    double dy = a.centroid_y - b.centroid_y;
    return dx * dx + dy * dy;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

NucleiGraph build_nuclei_graph(const std::vector<Nucleus>& nuclei, const GraphParams& params) {
    NucleiGraph graph;
    graph.nodes = nuclei;
    const int n = static_cast<int>(nuclei.size());
    if (n < 2 || params.k < 1) return graph;

    const double max_sq = params.max_distance * params.max_distance;
    std::set<std::pair<int, int>> edge_set;

    // Images hold hundreds of nuclei, so the quadratic scan is fine.
    std::vector<std::pair<double, int>> candidates;
    for (int i = 0; i < n; ++i) {
        candidates.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            candidates.emplace_back(sq_dist(nuclei[i], nuclei[j]), j);
        }
        int take = std::min<int>(params.k, n - 1);
        std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end());
        for (int t = 0; t < take; ++t) {
            if (candidates[t].first > max_sq) break;
            int j = candidates[t].second;
            edge_set.insert({std::min(i, j), std::max(i, j)});
        }
    }

    graph.edges.reserve(edge_set.size());
    for (const auto& [a, b] : edge_set) {
        graph.edges.push_back({a, b, std::sqrt(sq_dist(nuclei[a], nuclei[b]))});
    }
    return graph;
}

GraphStats graph_stats(const NucleiGraph& graph) {
    GraphStats stats;
    stats.node_count = static_cast<int>(graph.nodes.size());
    stats.edge_count = static_cast<int>(graph.edges.size());
    if (stats.node_count == 0) return stats;

    std::vector<int> degree(graph.nodes.size(), 0);
    UnionFind uf(stats.node_count);
    for (const auto& e : graph.edges) {
        ++degree[e.a];
        ++degree[e.b];
        uf.unite(e.a, e.b);
    }
    stats.max_degree = *std::max_element(degree.begin(), degree.end());
    stats.mean_degree = 2.0 * stats.edge_count / stats.node_count;

    std::set<int> roots;
    for (int i = 0; i < stats.node_count; ++i) roots.insert(uf.find(i));
    stats.connected_components = static_cast<int>(roots.size());
    return stats;
}

std::string graph_to_json(const NucleiGraph& graph) {
    nlohmann::json doc;
    doc["nodes"] = nlohmann::json::array();
    for (const auto& node : graph.nodes) {
        doc["nodes"].push_back(
            {{"x", node.centroid_x}, {"y", node.centroid_y}, {"area", node.area}});
    }
    doc["edges"] = nlohmann::json::array();
    for (const auto& e : graph.edges) {
        doc["edges"].push_back({e.a, e.b, e.distance});
    }
    return doc.dump();
}

}  // namespace pathrag
