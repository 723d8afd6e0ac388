#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "critsup/types.hpp"

namespace critsup {

/// Undirected kNN graph over deep features. Nodes are stored in ascending
/// SampleId order; adjacency lists hold node positions, sorted ascending.
struct KnnGraph {
    std::vector<SampleId> nodes;
    std::vector<std::vector<std::uint32_t>> adjacency;
    int k = 0;

    std::size_t size() const noexcept { return nodes.size(); }
    std::optional<std::uint32_t> index_of(const SampleId& id) const;
    std::size_t edge_count() const;
};

/// Builds the union-rule kNN graph: u and v are adjacent when either is among
/// the other's k nearest neighbours by Euclidean distance. Ties at the k-th
/// neighbour go to the smaller SampleId. Rows are processed in parallel.
///
/// Throws Error("invalid_argument") for fewer than two nodes, k < 1,
/// k >= node count, mismatched feature dimensions or duplicate ids.
KnnGraph build_knn_graph(std::span<const DetectionRecord> records, int k);

/// Hop distance from each node to its nearest labeled node.
class LdistField {
public:
    static constexpr std::int32_t kUnreached = std::numeric_limits<std::int32_t>::max();

    LdistField() = default;

    std::size_t size() const noexcept { return dist_.size(); }
    std::int32_t at(std::uint32_t node) const { return dist_.at(node); }
    const std::vector<std::int32_t>& distances() const noexcept { return dist_; }
    bool is_labeled(std::uint32_t node) const { return dist_.at(node) == 0; }
    bool reached(std::uint32_t node) const { return dist_.at(node) != kUnreached; }

    /// Mean over reachable unlabeled nodes; +infinity when there are none.
    double mean_ldist() const noexcept;

    friend LdistField compute_ldist(const KnnGraph& graph, std::span<const SampleId> labeled);
    friend void update_ldist_in_place(LdistField& field, const KnnGraph& graph,
                                      const SampleId& new_label);

private:
    std::vector<std::int32_t> dist_;
    // Sum and count of finite positive distances, maintained exactly.
    std::int64_t finite_sum_ = 0;
    std::int64_t finite_count_ = 0;
};

/// Multi-source BFS from the labeled set. Labels that are not graph nodes
/// are ignored.
LdistField compute_ldist(const KnnGraph& graph, std::span<const SampleId> labeled);

/// Adds one label and relaxes only the nodes whose distance drops.
void update_ldist_in_place(LdistField& field, const KnnGraph& graph, const SampleId& new_label);

inline LdistField update_ldist(LdistField field, const KnnGraph& graph, const SampleId& new_label) {
    update_ldist_in_place(field, graph, new_label);
    return field;
}

}  // namespace critsup
