#include "critsup/knn_graph.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace critsup;
using namespace testkit;

TEST_CASE("kNN graph equals the exhaustive oracle") {
    testkit::Gen g(21);
    const int ks[] = {1, 4, 8};
    for (int inst = 0; inst < 50; ++inst) {
        const int n = g.integer(10, 200);
        const int dim = g.integer(1, 64);
        const int k = ks[inst % 3];
        const auto recs = random_records(g, n, dim, inst % 5 == 0);
        const auto graph = build_knn_graph(recs, k);
        std::vector<SampleId> nodes;
        const auto adj = oracle_graph(recs, k, nodes);
        REQUIRE(graph.nodes == nodes);
        for (std::size_t u = 0; u < nodes.size(); ++u) {
            std::set<SampleId> got;
            for (auto v : graph.adjacency[u]) got.insert(graph.nodes[v]);
            REQUIRE(got == adj[u]);
            REQUIRE(graph.adjacency[u].size() >= static_cast<std::size_t>(k));
        }
    }
}

TEST_CASE("distance ties go to the smaller sample id") {
    // (0,1) and (0,3) are equidistant from the origin; each has a closer
    // partner of its own, so only the origin's choice creates an edge.
    std::vector<DetectionRecord> recs{{{0, 0}, {}, {0, 0}},   {{0, 3}, {}, {10, 0}}, {{0, 4}, {}, {11, 0}},
                                      {{0, 1}, {}, {-10, 0}}, {{0, 5}, {}, {-11, 0}}};
    const auto graph = build_knn_graph(recs, 1);
    const auto u = *graph.index_of({0, 0});
    const auto& adj = graph.adjacency[u];
    CHECK(adj.size() == 1);
    CHECK(std::find(adj.begin(), adj.end(), *graph.index_of({0, 1})) != adj.end());
}

TEST_CASE("graph construction errors") {
    testkit::Gen g(1);
    auto recs = random_records(g, 5, 3, false);
    CHECK_THROWS_AS(build_knn_graph(recs, 5), Error);
    CHECK_THROWS_AS(build_knn_graph(recs, 0), Error);
    CHECK_THROWS_AS(build_knn_graph(std::vector<DetectionRecord>(recs.begin(), recs.begin() + 1), 1), Error);
    auto dup = recs;
    dup[1].sample = dup[0].sample;
    CHECK_THROWS_AS(build_knn_graph(dup, 2), Error);
    auto ragged = recs;
    ragged[2].ft.push_back(1);
    CHECK_THROWS_AS(build_knn_graph(ragged, 2), Error);
}

TEST_CASE("Ldist equals the all-pairs minimum over labels") {
    testkit::Gen g(22);
    for (int inst = 0; inst < 50; ++inst) {
        const int n = g.integer(10, 120);
        const auto recs = random_records(g, n, g.integer(1, 16), false);
        const auto graph = build_knn_graph(recs, inst % 3 == 0 ? 1 : 2);
        std::set<std::uint32_t> labeled;
        std::vector<SampleId> ids;
        for (int i = g.integer(0, 6); i > 0; --i) {
            const auto u = static_cast<std::uint32_t>(g.integer(0, n - 1));
            labeled.insert(u);
            ids.push_back(graph.nodes[u]);
        }
        const auto field = compute_ldist(graph, ids);
        const auto expect = floyd_ldist(graph, labeled);
        REQUIRE(field.distances() == expect);
        const double mean = oracle_mean(expect);
        if (std::isinf(mean))
            REQUIRE(std::isinf(field.mean_ldist()));
        else
            REQUIRE(field.mean_ldist() == doctest::Approx(mean));
    }
}

TEST_CASE("incremental Ldist equals batch recomputation after every insertion") {
    testkit::Gen g(23);
    for (int inst = 0; inst < 10; ++inst) {
        const int n = g.integer(110, 200);
        const auto recs = random_records(g, n, g.integer(2, 32), inst % 2 == 0);
        const auto graph = build_knn_graph(recs, inst % 2 ? 1 : 4);
        std::vector<SampleId> labeled;
        auto field = compute_ldist(graph, labeled);
        CHECK(std::isinf(field.mean_ldist()));
        for (int step = 0; step < 100; ++step) {
            const auto id = graph.nodes[static_cast<std::size_t>(g.integer(0, n - 1))];
            labeled.push_back(id);
            field = update_ldist(field, graph, id);
            const auto batch = compute_ldist(graph, labeled);
            REQUIRE(field.distances() == batch.distances());
            REQUIRE(field.mean_ldist() == batch.mean_ldist());
        }
    }
}

TEST_CASE("Ldist on a path graph") {
    // Points on a line with k = 1 link consecutive points only.
    std::vector<DetectionRecord> recs;
    for (int i = 0; i < 6; ++i) recs.push_back({{0, i}, {}, {float(i * i)}});
    const auto graph = build_knn_graph(recs, 1);
    CHECK(graph.edge_count() == 5);
    auto f = compute_ldist(graph, std::vector<SampleId>{{0, 0}});
    CHECK(f.distances() == std::vector<std::int32_t>{0, 1, 2, 3, 4, 5});
    CHECK(f.mean_ldist() == doctest::Approx(3.0));
    f = update_ldist(f, graph, {0, 5});
    CHECK(f.distances() == std::vector<std::int32_t>{0, 1, 2, 2, 1, 0});
    CHECK(f.mean_ldist() == doctest::Approx(1.5));
    CHECK_THROWS_AS(update_ldist(f, graph, {9, 9}), Error);
    // Labeling an already labeled node changes nothing.
    CHECK(update_ldist(f, graph, {0, 5}).distances() == f.distances());
}
