#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathrag/nuclei.hpp"

namespace pathrag {

struct GraphEdge {
    int a = 0;  // node ids with a < b
    int b = 0;
    double distance = 0.0;  // Euclidean centroid distance, pixels
};

/// Undirected spatial graph over nucleus centroids. Node id = index into
/// `nodes`; edges are unique, loop-free, and distance-bounded.
struct NucleiGraph {
    std::vector<Nucleus> nodes;
    std::vector<GraphEdge> edges;  // sorted by (a, b)
};

struct GraphParams {
    int k = 5;
    double max_distance = 50.0;
};

/// Union of the two directed KNN relations, restricted to the distance
/// threshold. Distance ties resolve toward the smaller node id.
NucleiGraph build_nuclei_graph(const std::vector<Nucleus>& nuclei, const GraphParams& params = {});

struct GraphStats {
    int node_count = 0;
    int edge_count = 0;
    double mean_degree = 0.0;
    int max_degree = 0;
    int connected_components = 0;
};

GraphStats graph_stats(const NucleiGraph& graph);

/// JSON document {nodes:[{x,y,area}...], edges:[[a,b,dist]...]} for
/// inspection and fixtures.
std::string graph_to_json(const NucleiGraph& graph);

}  // namespace pathrag
