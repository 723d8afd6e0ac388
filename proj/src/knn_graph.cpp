#include "critsup/knn_graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace critsup {

std::optional<std::uint32_t> KnnGraph::index_of(const SampleId& id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id) return std::nullopt;
    return static_cast<std::uint32_t>(it - nodes.begin());
}

std::size_t KnnGraph::edge_count() const {
    std::size_t deg = 0;
    for (const auto& a : adjacency) deg += a.size();
    return deg / 2;
}

namespace {

constexpr std::size_t kRowBlock = 64;

double squared_distance(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = double(a[d]) - double(b[d]);
        s += diff * diff;
    }
    return s;
}

}  // namespace

KnnGraph build_knn_graph(std::span<const DetectionRecord> records, int k) {
    const std::size_t n = records.size();
    if (n < 2) throw Error("invalid_argument", "kNN graph needs at least two nodes");
    if (k < 1) throw Error("invalid_argument", "k must be >= 1");
    if (static_cast<std::size_t>(k) >= n)
        throw Error("invalid_argument",
                    "k = " + std::to_string(k) + " must be smaller than the node count " +
                        std::to_string(n));
    const std::size_t dim = records[0].ft.size();
    for (const auto& r : records)
        if (r.ft.size() != dim) throw Error("invalid_argument", "feature dimensions differ");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return records[a].sample < records[b].sample; });

    KnnGraph g;
    g.k = k;
    g.nodes.reserve(n);
    for (auto i : order) g.nodes.push_back(records[i].sample);
    for (std::size_t i = 1; i < n; ++i)
        if (g.nodes[i] == g.nodes[i - 1])
            throw Error("invalid_argument", "duplicate sample id " + to_string(g.nodes[i]));

    // Node positions are ordered by SampleId, so comparing positions breaks
    // distance ties by SampleId.
    std::vector<std::vector<std::uint32_t>> nearest(n);
    const std::size_t kk = static_cast<std::size_t>(k);
    const auto blocks = static_cast<std::int64_t>((n + kRowBlock - 1) / kRowBlock);

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        std::vector<std::pair<double, std::uint32_t>> row(n - 1);
        const std::size_t begin = static_cast<std::size_t>(blk) * kRowBlock;
        const std::size_t end = std::min(n, begin + kRowBlock);
        for (std::size_t u = begin; u < end; ++u) {
            const auto& fu = records[order[u]].ft;
            std::size_t m = 0;
            for (std::size_t v = 0; v < n; ++v) {
                if (v == u) continue;
                row[m++] = {squared_distance(fu, records[order[v]].ft), static_cast<std::uint32_t>(v)};
            }
            std::partial_sort(row.begin(), row.begin() + kk, row.end());
            auto& out = nearest[u];
            out.reserve(kk);
            for (std::size_t t = 0; t < kk; ++t) out.push_back(row[t].second);
        }
    }

    g.adjacency.assign(n, {});
    for (std::size_t u = 0; u < n; ++u) {
        for (auto v : nearest[u]) {
            g.adjacency[u].push_back(v);
            g.adjacency[v].push_back(static_cast<std::uint32_t>(u));
        }
    }
    for (auto& adj : g.adjacency) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return g;
}

double LdistField::mean_ldist() const noexcept {
    if (finite_count_ == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(finite_sum_) / static_cast<double>(finite_count_);
}

namespace {

// BFS that only lowers distances; keeps the running sum/count in step.
void relax_from(std::vector<std::int32_t>& dist, std::int64_t& sum, std::int64_t& count,
                const KnnGraph& graph, std::deque<std::uint32_t> queue) {
    auto set = [&](std::uint32_t node, std::int32_t d) {
        const auto old = dist[node];
        if (old != LdistField::kUnreached && old > 0) {
            sum -= old;
            --count;
        }
        dist[node] = d;
        if (d > 0) {
            sum += d;
            ++count;
        }
    };
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        const auto next = dist[u] + 1;
        for (auto v : graph.adjacency[u]) {
            if (dist[v] > next) {
                set(v, next);
                queue.push_back(v);
            }
        }
    }
}

}  // namespace

LdistField compute_ldist(const KnnGraph& graph, std::span<const SampleId> labeled) {
    LdistField f;
    f.dist_.assign(graph.size(), LdistField::kUnreached);
    std::deque<std::uint32_t> queue;
    for (const auto& id : labeled) {
        auto idx = graph.index_of(id);
        if (!idx || f.dist_[*idx] == 0) continue;
        f.dist_[*idx] = 0;
        queue.push_back(*idx);
    }
    relax_from(f.dist_, f.finite_sum_, f.finite_count_, graph, std::move(queue));
    return f;
}

void update_ldist_in_place(LdistField& field, const KnnGraph& graph, const SampleId& new_label) {
    auto idx = graph.index_of(new_label);
    if (!idx) throw Error("invalid_argument", "label " + to_string(new_label) + " is not a graph node");
    if (field.dist_.size() != graph.size())
        throw Error("invalid_argument", "ldist field does not match graph");
    if (field.dist_[*idx] == 0) return;
    const auto old = field.dist_[*idx];
    if (old != LdistField::kUnreached) {
        field.finite_sum_ -= old;
        --field.finite_count_;
    }
    field.dist_[*idx] = 0;
    relax_from(field.dist_, field.finite_sum_, field.finite_count_, graph, {*idx});
}

}  // namespace critsup
