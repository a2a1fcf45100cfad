#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graingraph/errors.hpp"
#include "graingraph/graph_build.hpp"
#include "graingraph/microsynth.hpp"
#include "graingraph/scan.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace graingraph;

namespace {

// Linear scan over bin edges; the reference for the closed-form binning.
int brute_force_bin(double v, double lo, double hi, int n) {
    const double w = (hi - lo) / n;
    if (v <= lo) {
        return 1;
    }
    for (int k = 1; k <= n; ++k) {
        if (v <= lo + k * w) {
            return k;
        }
    }
    return n;
}

// Four grains: sizes bin to categories {1, 1, 5, 10} (two sharing a node),
// orientations to four distinct categories. Boundary fractions straddle the
// default lambda in both directions across the 3-4 pair.
GrainTable four_grain_fixture() {
    GrainTable t;
    t.provenance = "fixture";
    t.grains.push_back(Grain{1, 0, 10.0, EulerDeg{10.0, 10.0, 10.0}, 40.0, 0.0, 0.0});
    t.grains.push_back(Grain{2, 0, 10.5, EulerDeg{100.0, 10.0, 10.0}, 50.0, 0.0, 0.0});
    t.grains.push_back(Grain{3, 0, 15.0, EulerDeg{10.0, 100.0, 10.0}, 36.0, 0.0, 0.0});
    t.grains.push_back(Grain{4, 0, 20.0, EulerDeg{10.0, 10.0, 100.0}, 60.0, 0.0, 0.0});
    t.adjacency.push_back(AdjacencyRecord{1, 2, 10.0}); // 0.25 and 0.2: strong both ways
    t.adjacency.push_back(AdjacencyRecord{3, 4, 8.0});  // 0.222 strong, 0.133 weak
    t.adjacency.push_back(AdjacencyRecord{2, 3, 2.0});  // 0.04 and 0.056: weak both ways
    return t;
}

DiscretizationConfig fixture_disc() {
    DiscretizationConfig cfg;
    cfg.size_min = 10.0;
    cfg.size_max = 20.0;
    return cfg;
}

GrainTable random_table(std::mt19937_64& rng) {
    SynthConfig cfg;
    cfg.rows = 32 + static_cast<int>(rng() % 32);
    cfg.cols = 32 + static_cast<int>(rng() % 32);
    cfg.n_grains = 5 + static_cast<int>(rng() % 20);
    cfg.orientation_noise_deg = 1.0;
    cfg.seed = rng();
    const VoronoiResult vor = gen_voronoi(cfg);
    const ScanField f = assign_orientations(vor.labels, cfg);
    return grain_metrics(f, vor.labels);
}

} // namespace

TEST_CASE("size binning matches a brute-force edge scan") {
    DiscretizationConfig cfg;
    cfg.size_min = 3.0;
    cfg.size_max = 19.0;
    cfg.n_size = 10;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> v(0.0, 25.0); // beyond both ends
    for (int i = 0; i < 10000; ++i) {
        const double s = v(rng);
        CHECK(size_category(s, cfg) == brute_force_bin(s, 3.0, 19.0, 10));
    }
    CHECK(size_category(3.0, cfg) == 1);
    CHECK(size_category(19.0, cfg) == 10);
    CHECK(size_category(-5.0, cfg) == 1);
    CHECK(size_category(100.0, cfg) == 10);
}

TEST_CASE("orientation binning matches brute force per axis") {
    DiscretizationConfig cfg;
    cfg.n_phi = 4;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> a360(0.0, 360.0);
    std::uniform_real_distribution<double> a180(0.0, 180.0);
    for (int i = 0; i < 10000; ++i) {
        const EulerDeg e{a360(rng), a180(rng), a360(rng)};
        const OriCategory got = orientation_category(e, cfg);
        const int i1 = brute_force_bin(e.phi1, 0.0, 360.0, 4);
        const int i2 = brute_force_bin(e.Phi, 0.0, 180.0, 4);
        const int i3 = brute_force_bin(e.phi2, 0.0, 360.0, 4);
        CHECK(got.i == i1);
        CHECK(got.j == i2);
        CHECK(got.k == i3);
        CHECK(got.flat == (i1 - 1) * 16 + (i2 - 1) * 4 + i3);
    }
}

TEST_CASE("discretization validation rejects degenerate configs") {
    DiscretizationConfig cfg = fixture_disc();
    cfg.n_size = 0;
    CHECK_THROWS_AS(validate_discretization(cfg), ValueError);
    cfg = fixture_disc();
    cfg.size_max = cfg.size_min;
    CHECK_THROWS_AS(validate_discretization(cfg), ValueError);
    cfg = fixture_disc();
    cfg.phi_ranges[1] = {90.0, 90.0};
    CHECK_THROWS_AS(validate_discretization(cfg), ValueError);
    cfg = fixture_disc();
    cfg.lambda = -0.1;
    CHECK_THROWS_AS(validate_discretization(cfg), ValueError);
}

TEST_CASE("fit_discretization spans the global size range") {
    GrainTable a, b;
    a.grains.push_back(Grain{1, 0, 5.0, EulerDeg{}, 10.0, 0.0, 0.0});
    a.grains.push_back(Grain{2, 0, 9.0, EulerDeg{}, 10.0, 0.0, 0.0});
    b.grains.push_back(Grain{1, 0, 2.0, EulerDeg{}, 10.0, 0.0, 0.0});
    b.grains.push_back(Grain{2, 0, 14.0, EulerDeg{}, 10.0, 0.0, 0.0});
    const DiscretizationConfig cfg =
        fit_discretization({a, b}, 10, 4, 0.2, PhiRangeMode::Fixed);
    CHECK(cfg.size_min == 2.0);
    CHECK(cfg.size_max == 14.0);
    CHECK(cfg.phi_ranges[0].first == 0.0);
    CHECK(cfg.phi_ranges[0].second == 360.0);
    CHECK(cfg.phi_ranges[1].second == 180.0);
}

TEST_CASE("fitted phi mode tracks the observed angle ranges") {
    GrainTable a;
    a.grains.push_back(Grain{1, 0, 5.0, EulerDeg{10.0, 20.0, 30.0}, 10.0, 0.0, 0.0});
    a.grains.push_back(Grain{2, 0, 9.0, EulerDeg{50.0, 70.0, 90.0}, 10.0, 0.0, 0.0});
    const DiscretizationConfig cfg =
        fit_discretization({a}, 10, 4, 0.2, PhiRangeMode::Fitted);
    CHECK(cfg.phi_ranges[0].first == 10.0);
    CHECK(cfg.phi_ranges[0].second == 50.0);
    CHECK(cfg.phi_ranges[1].first == 20.0);
    CHECK(cfg.phi_ranges[1].second == 70.0);
    CHECK(cfg.phi_ranges[2].first == 30.0);
    CHECK(cfg.phi_ranges[2].second == 90.0);
}

TEST_CASE("edge classification is directional with a closed threshold") {
    CHECK(classify_edge(10.0, 40.0, 0.2) == EdgeType::Strong); // 0.25
    CHECK(classify_edge(10.0, 50.0, 0.2) == EdgeType::Strong); // exactly 0.2
    CHECK(classify_edge(10.0, 51.0, 0.2) == EdgeType::Weak);
    CHECK_THROWS_AS(classify_edge(1.0, 0.0, 0.2), ValueError);
    CHECK_THROWS_AS(classify_edge(1.0, -3.0, 0.2), ValueError);
}

TEST_CASE("four-grain fixture builds the expected heterogeneous graph") {
    const GrainTable t = four_grain_fixture();
    const GrainGraph g = build_graph(t, fixture_disc(), 100.0);
    CHECK(g.grain_count == 4);
    CHECK(g.size_node_count == 3); // grains 1 and 2 share one size node
    CHECK(g.ori_node_count == 4);
    CHECK(g.label == 100.0);

    // one HasSize and one HasOri per grain, with exact reverses
    CHECK(g.edges_of(EdgeType::HasSize).size() == 4);
    CHECK(g.edges_of(EdgeType::SizeOf).size() == 4);
    CHECK(g.edges_of(EdgeType::HasOri).size() == 4);
    CHECK(g.edges_of(EdgeType::OriOf).size() == 4);
    CHECK(g.grain_size_node[0] == g.grain_size_node[1]);
    CHECK(g.grain_size_node[0] != g.grain_size_node[2]);
    CHECK(g.grain_size_node[2] != g.grain_size_node[3]);
    std::set<int> ori_nodes(g.grain_ori_node.begin(), g.grain_ori_node.end());
    CHECK(ori_nodes.size() == 4);

    // categories bin as computed by hand
    CHECK(g.size_category_of_node == std::vector<int>{1, 5, 10});

    // directional strong/weak: 1<->2 strong both ways, 3->4 strong only one way
    const auto& strong = g.edges_of(EdgeType::Strong);
    const auto& weak = g.edges_of(EdgeType::Weak);
    const auto has_edge = [](const std::vector<TypedEdge>& es, int src, int dst) {
        return std::any_of(es.begin(), es.end(), [&](const TypedEdge& e) {
            return e.src == src && e.dst == dst;
        });
    };
    CHECK(strong.size() == 3);
    CHECK(weak.size() == 3);
    CHECK(has_edge(strong, 0, 1));
    CHECK(has_edge(strong, 1, 0));
    CHECK(has_edge(strong, 2, 3)); // 8/36 over lambda
    CHECK(has_edge(weak, 3, 2));   // 8/60 under lambda
    CHECK(has_edge(weak, 1, 2));
    CHECK(has_edge(weak, 2, 1));

    validate_graph(g);
}

TEST_CASE("grain features carry the intercept, normalized size, and angle pair") {
    const GrainTable t = four_grain_fixture();
    const DiscretizationConfig cfg = fixture_disc();
    const GrainGraph g = build_graph(t, cfg, std::nullopt);
    REQUIRE(g.grain_dim == 8);
    const double* row = g.grain_features.data(); // grain 1: size 10 = range min
    CHECK(row[0] == 1.0);
    CHECK(row[1] == 0.0); // (10 - 10) / (20 - 10)
    const double rad = 10.0 * 3.14159265358979323846 / 180.0;
    CHECK(row[2] == doctest::Approx(std::sin(rad)));
    CHECK(row[3] == doctest::Approx(std::cos(rad)));
    const double* row4 = g.grain_features.data() + 3 * 8; // grain 4: size at max
    CHECK(row4[1] == 1.0);
}

TEST_CASE("attribute features are exact one-hots") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const GrainTable t = random_table(rng);
        const DiscretizationConfig cfg =
            fit_discretization({t}, 10, 4, 0.2, PhiRangeMode::Fixed);
        const GrainGraph g = build_graph(t, cfg, std::nullopt);
        validate_graph(g);
        for (int i = 0; i < g.size_node_count; ++i) {
            int ones = 0;
            for (int j = 0; j < g.size_dim; ++j) {
                const double v = g.size_features[static_cast<std::size_t>(i) * g.size_dim + j];
                CHECK((v == 0.0 || v == 1.0));
                ones += v == 1.0;
            }
            CHECK(ones == 1);
        }
        // every grain's category agrees with its attribute node
        for (int i = 0; i < g.grain_count; ++i) {
            const int node = g.grain_size_node[static_cast<std::size_t>(i)];
            CHECK(g.size_category_of_node[static_cast<std::size_t>(node)] ==
                  size_category(t.grains[static_cast<std::size_t>(i)].size, cfg));
        }
    }
}

TEST_CASE("strong and weak unions are symmetric and loop-free") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const GrainTable t = random_table(rng);
        const DiscretizationConfig cfg =
            fit_discretization({t}, 10, 4, 0.2, PhiRangeMode::Fixed);
        const GrainGraph g = build_graph(t, cfg, std::nullopt);
        std::set<std::pair<int, int>> directed;
        for (const EdgeType et : {EdgeType::Strong, EdgeType::Weak}) {
            for (const TypedEdge& e : g.edges_of(et)) {
                CHECK(e.src != e.dst);
                CHECK(directed.insert({e.src, e.dst}).second); // no duplicates
            }
        }
        CHECK(directed.size() == 2 * t.adjacency.size());
        for (const auto& [s, d] : directed) {
            CHECK(directed.count({d, s}) == 1);
        }
    }
}

TEST_CASE("graph JSON round trip is lossless and canonical") {
    const GrainTable t = four_grain_fixture();
    const GrainGraph g = build_graph(t, fixture_disc(), 123.25);
    const std::string text = export_graph(g);
    const GrainGraph back = import_graph(text);
    CHECK(back == g);
    CHECK(export_graph(back) == text); // canonical: stable bytes
    // unlabeled graphs round-trip the missing label
    const GrainGraph g2 = build_graph(t, fixture_disc(), std::nullopt);
    CHECK(!import_graph(export_graph(g2)).label.has_value());
}

TEST_CASE("import rejects structural tampering") {
    const GrainTable t = four_grain_fixture();
    const GrainGraph g = build_graph(t, fixture_disc(), std::nullopt);
    const std::string text = export_graph(g);

    {
        nlohmann::json j = nlohmann::json::parse(text);
        j["version"] = 2;
        CHECK_THROWS_AS(import_graph(j.dump()), FormatError);
    }
    {
        // flip a one-hot bit on the first size node
        nlohmann::json j = nlohmann::json::parse(text);
        for (auto& node : j["nodes"]) {
            if (node["type"] == "size") {
                node["feature"][1] = 1.0; // second bit joins the first
                break;
            }
        }
        CHECK_THROWS_AS(import_graph(j.dump()), ValidationError);
    }
    {
        // drop one SizeOf edge: reverses no longer match
        nlohmann::json j = nlohmann::json::parse(text);
        auto& edges = j["edges"];
        for (std::size_t i = 0; i < edges.size(); ++i) {
            if (edges[i]["type"] == "size_of") {
                edges.erase(i);
                break;
            }
        }
        CHECK_THROWS_AS(import_graph(j.dump()), ValidationError);
    }
    {
        // self loop in the strong set
        nlohmann::json j = nlohmann::json::parse(text);
        for (auto& e : j["edges"]) {
            if (e["type"] == "strong") {
                e["dst"] = e["src"];
                break;
            }
        }
        CHECK_THROWS_AS(import_graph(j.dump()), ValidationError);
    }
    {
        // edge endpoint of the wrong node type
        nlohmann::json j = nlohmann::json::parse(text);
        for (auto& e : j["edges"]) {
            if (e["type"] == "has_size") {
                e["dst"] = 0; // grain ids come first: points at a grain node
                break;
            }
        }
        CHECK_THROWS_AS(import_graph(j.dump()), ValidationError);
    }
}

TEST_CASE("discretization JSON round trip and fingerprint sensitivity") {
    DiscretizationConfig cfg = fixture_disc();
    cfg.n_phi = 6;
    cfg.lambda = 0.31;
    const DiscretizationConfig back = parse_discretization(serialize_discretization(cfg));
    CHECK(back == cfg);

    const std::string fp = discretization_fingerprint(cfg);
    CHECK(fp.size() == 16);
    DiscretizationConfig other = cfg;
    other.lambda = 0.32;
    CHECK(discretization_fingerprint(other) != fp);
    other = cfg;
    other.n_size = 9;
    CHECK(discretization_fingerprint(other) != fp);
    CHECK(discretization_fingerprint(cfg) == fp); // stable
}

TEST_CASE("build_graph validates its inputs") {
    GrainTable empty;
    CHECK_THROWS_AS(build_graph(empty, fixture_disc(), std::nullopt), ValueError);

    GrainTable bad = four_grain_fixture();
    bad.grains[0].perimeter = 0.0;
    CHECK_THROWS_AS(build_graph(bad, fixture_disc(), std::nullopt), ValueError);
}

TEST_CASE("edge type metadata is consistent") {
    for (const EdgeType et : kEdgeTypes) {
        CHECK(edge_type_from_string(to_string(et)) == et);
    }
    CHECK(edge_src_type(EdgeType::HasSize) == NodeType::Grain);
    CHECK(edge_dst_type(EdgeType::HasSize) == NodeType::Size);
    CHECK(edge_src_type(EdgeType::SizeOf) == NodeType::Size);
    CHECK(edge_dst_type(EdgeType::OriOf) == NodeType::Grain);
    CHECK_THROWS_AS(edge_type_from_string("bogus"), FormatError);
    CHECK_THROWS_AS(node_type_from_string("bogus"), FormatError);
}
