#include "graingraph/graph_build.hpp"

#include "graingraph/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace graingraph {
namespace {

constexpr double kPi = 3.14159265358979323846;

int clamped_bin(double v, double lo, double hi, int n) {
    const double w = (hi - lo) / static_cast<double>(n);
    const int cat = static_cast<int>(std::ceil((v - lo) / w));
    return std::clamp(cat, 1, n);
}

nlohmann::ordered_json discretization_json(const DiscretizationConfig& cfg) {
    nlohmann::ordered_json j;
    j["n_size"] = cfg.n_size;
    j["size_min"] = cfg.size_min;
    j["size_max"] = cfg.size_max;
    j["n_phi"] = cfg.n_phi;
    j["phi_ranges"] = {{cfg.phi_ranges[0].first, cfg.phi_ranges[0].second},
                       {cfg.phi_ranges[1].first, cfg.phi_ranges[1].second},
                       {cfg.phi_ranges[2].first, cfg.phi_ranges[2].second}};
    j["lambda"] = cfg.lambda;
    return j;
}

DiscretizationConfig discretization_from_json(const nlohmann::json& j) {
    DiscretizationConfig cfg;
    try {
        cfg.n_size = j.at("n_size").get<int>();
        cfg.size_min = j.at("size_min").get<double>();
        cfg.size_max = j.at("size_max").get<double>();
        cfg.n_phi = j.at("n_phi").get<int>();
        const auto& pr = j.at("phi_ranges");
        if (!pr.is_array() || pr.size() != 3) {
            throw FormatError("phi_ranges must be a 3-element array");
        }
        for (std::size_t a = 0; a < 3; ++a) {
            if (!pr[a].is_array() || pr[a].size() != 2) {
                throw FormatError("phi_ranges entries must be [min, max] pairs");
            }
            cfg.phi_ranges[a] = {pr[a][0].get<double>(), pr[a][1].get<double>()};
        }
        cfg.lambda = j.at("lambda").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad discretization config: ") + e.what());
    }
    validate_discretization(cfg);
    return cfg;
}

} // namespace

std::string to_string(NodeType t) {
    switch (t) {
    case NodeType::Grain: return "grain";
    case NodeType::Size: return "size";
    case NodeType::Orientation: return "orientation";
    }
    throw ValueError("bad node type");
}

std::string to_string(EdgeType t) {
    switch (t) {
    case EdgeType::Strong: return "strong";
    case EdgeType::Weak: return "weak";
    case EdgeType::HasSize: return "has_size";
    case EdgeType::SizeOf: return "size_of";
    case EdgeType::HasOri: return "has_ori";
    case EdgeType::OriOf: return "ori_of";
    }
    throw ValueError("bad edge type");
}

NodeType node_type_from_string(const std::string& s) {
    if (s == "grain") return NodeType::Grain;
    if (s == "size") return NodeType::Size;
    if (s == "orientation") return NodeType::Orientation;
    throw FormatError("unknown node type: " + s);
}

EdgeType edge_type_from_string(const std::string& s) {
    if (s == "strong") return EdgeType::Strong;
    if (s == "weak") return EdgeType::Weak;
    if (s == "has_size") return EdgeType::HasSize;
    if (s == "size_of") return EdgeType::SizeOf;
    if (s == "has_ori") return EdgeType::HasOri;
    if (s == "ori_of") return EdgeType::OriOf;
    throw FormatError("unknown edge type: " + s);
}

NodeType edge_src_type(EdgeType t) {
    switch (t) {
    case EdgeType::Strong:
    case EdgeType::Weak:
    case EdgeType::HasSize:
    case EdgeType::HasOri: return NodeType::Grain;
    case EdgeType::SizeOf: return NodeType::Size;
    case EdgeType::OriOf: return NodeType::Orientation;
    }
    throw ValueError("bad edge type");
}

NodeType edge_dst_type(EdgeType t) {
    switch (t) {
    case EdgeType::Strong:
    case EdgeType::Weak:
    case EdgeType::SizeOf:
    case EdgeType::OriOf: return NodeType::Grain;
    case EdgeType::HasSize: return NodeType::Size;
    case EdgeType::HasOri: return NodeType::Orientation;
    }
    throw ValueError("bad edge type");
}

void validate_discretization(const DiscretizationConfig& cfg) {
    if (cfg.n_size < 1) {
        throw ValueError("n_size must be at least 1");
    }
    if (cfg.n_phi < 1) {
        throw ValueError("n_phi must be at least 1");
    }
    if (!(cfg.size_max > cfg.size_min)) {
        throw ValueError("degenerate size range: size_max " + format_double(cfg.size_max) +
                         " must exceed size_min " + format_double(cfg.size_min));
    }
    for (std::size_t a = 0; a < 3; ++a) {
        if (!(cfg.phi_ranges[a].second > cfg.phi_ranges[a].first)) {
            throw ValueError("degenerate angle range on axis " + std::to_string(a));
        }
    }
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) {
        throw ValueError("lambda must lie in [0, 1]");
    }
}

DiscretizationConfig fit_discretization(const std::vector<GrainTable>& tables, int n_size,
                                        int n_phi, double lambda, PhiRangeMode phi_mode) {
    DiscretizationConfig cfg;
    cfg.n_size = n_size;
    cfg.n_phi = n_phi;
    cfg.lambda = lambda;

    bool any = false;
    double smin = std::numeric_limits<double>::infinity();
    double smax = -std::numeric_limits<double>::infinity();
    std::array<double, 3> pmin{smin, smin, smin};
    std::array<double, 3> pmax{smax, smax, smax};
    for (const GrainTable& t : tables) {
        for (const Grain& g : t.grains) {
            any = true;
            smin = std::min(smin, g.size);
            smax = std::max(smax, g.size);
            const std::array<double, 3> ang{g.euler_mean.phi1, g.euler_mean.Phi,
                                            g.euler_mean.phi2};
            for (std::size_t a = 0; a < 3; ++a) {
                pmin[a] = std::min(pmin[a], ang[a]);
                pmax[a] = std::max(pmax[a], ang[a]);
            }
        }
    }
    if (!any) {
        throw ValueError("fit_discretization: no grains in any table");
    }
    cfg.size_min = smin;
    cfg.size_max = smax;
    if (phi_mode == PhiRangeMode::Fitted) {
        for (std::size_t a = 0; a < 3; ++a) {
            cfg.phi_ranges[a] = {pmin[a], pmax[a]};
        }
    }
    validate_discretization(cfg);
    return cfg;
}

int size_category(double size, const DiscretizationConfig& cfg) {
    return clamped_bin(size, cfg.size_min, cfg.size_max, cfg.n_size);
}

OriCategory orientation_category(const EulerDeg& euler, const DiscretizationConfig& cfg) {
    OriCategory c;
    c.i = clamped_bin(euler.phi1, cfg.phi_ranges[0].first, cfg.phi_ranges[0].second, cfg.n_phi);
    c.j = clamped_bin(euler.Phi, cfg.phi_ranges[1].first, cfg.phi_ranges[1].second, cfg.n_phi);
    c.k = clamped_bin(euler.phi2, cfg.phi_ranges[2].first, cfg.phi_ranges[2].second, cfg.n_phi);
    c.flat = (c.i - 1) * cfg.n_phi * cfg.n_phi + (c.j - 1) * cfg.n_phi + c.k;
    return c;
}

EdgeType classify_edge(double bound_length, double perimeter, double lambda) {
    if (!(perimeter > 0.0)) {
        throw ValueError("classify_edge: perimeter must be positive");
    }
    const double lp = bound_length / perimeter;
    return lp >= lambda ? EdgeType::Strong : EdgeType::Weak;
}

int GrainGraph::node_count(NodeType t) const {
    switch (t) {
    case NodeType::Grain: return grain_count;
    case NodeType::Size: return size_node_count;
    case NodeType::Orientation: return ori_node_count;
    }
    throw ValueError("bad node type");
}

int GrainGraph::feature_dim(NodeType t) const {
    switch (t) {
    case NodeType::Grain: return grain_dim;
    case NodeType::Size: return size_dim;
    case NodeType::Orientation: return ori_dim;
    }
    throw ValueError("bad node type");
}

const std::vector<double>& GrainGraph::features_of(NodeType t) const {
    switch (t) {
    case NodeType::Grain: return grain_features;
    case NodeType::Size: return size_features;
    case NodeType::Orientation: return ori_features;
    }
    throw ValueError("bad node type");
}

std::size_t GrainGraph::total_edge_count() const {
    std::size_t n = 0;
    for (const auto& e : edges) {
        n += e.size();
    }
    return n;
}

std::vector<double> grain_feature_row(const Grain& g, const DiscretizationConfig& cfg) {
    const double span = cfg.size_max - cfg.size_min;
    const double size_norm = std::clamp((g.size - cfg.size_min) / span, 0.0, 1.0);
    const double p1 = g.euler_mean.phi1 * kPi / 180.0;
    const double P = g.euler_mean.Phi * kPi / 180.0;
    const double p2 = g.euler_mean.phi2 * kPi / 180.0;
    return {1.0,          size_norm,    std::sin(p1), std::cos(p1),
            std::sin(P),  std::cos(P),  std::sin(p2), std::cos(p2)};
}

GrainGraph build_graph(const GrainTable& table, const DiscretizationConfig& cfg,
                       std::optional<double> label) {
    if (table.grains.empty()) {
        throw ValueError("build_graph: empty grain table");
    }
    validate_discretization(cfg);

    GrainGraph g;
    g.discretization = cfg;
    g.label = label;
    g.source_id = table.provenance;
    g.grain_count = static_cast<int>(table.grains.size());
    g.grain_dim = 8;
    g.size_dim = cfg.n_size;
    g.ori_dim = cfg.ori_category_count();

    std::vector<int> size_cats(table.grains.size());
    std::vector<int> ori_cats(table.grains.size());
    std::map<int, int> size_node_of_cat; // category -> node index, ordered by category
    std::map<int, int> ori_node_of_cat;
    for (std::size_t i = 0; i < table.grains.size(); ++i) {
        size_cats[i] = size_category(table.grains[i].size, cfg);
        ori_cats[i] = orientation_category(table.grains[i].euler_mean, cfg).flat;
        size_node_of_cat.emplace(size_cats[i], 0);
        ori_node_of_cat.emplace(ori_cats[i], 0);
    }
    int idx = 0;
    for (auto& [cat, node] : size_node_of_cat) {
        node = idx++;
        g.size_category_of_node.push_back(cat);
    }
    idx = 0;
    for (auto& [cat, node] : ori_node_of_cat) {
        node = idx++;
        g.ori_category_of_node.push_back(cat);
    }
    g.size_node_count = static_cast<int>(size_node_of_cat.size());
    g.ori_node_count = static_cast<int>(ori_node_of_cat.size());

    g.grain_features.reserve(table.grains.size() * 8);
    for (const Grain& grain : table.grains) {
        const auto row = grain_feature_row(grain, cfg);
        g.grain_features.insert(g.grain_features.end(), row.begin(), row.end());
    }
    g.size_features.assign(static_cast<std::size_t>(g.size_node_count) * g.size_dim, 0.0);
    for (int s = 0; s < g.size_node_count; ++s) {
        g.size_features[static_cast<std::size_t>(s) * g.size_dim +
                        (g.size_category_of_node[static_cast<std::size_t>(s)] - 1)] = 1.0;
    }
    g.ori_features.assign(static_cast<std::size_t>(g.ori_node_count) * g.ori_dim, 0.0);
    for (int o = 0; o < g.ori_node_count; ++o) {
        g.ori_features[static_cast<std::size_t>(o) * g.ori_dim +
                       (g.ori_category_of_node[static_cast<std::size_t>(o)] - 1)] = 1.0;
    }

    g.grain_size_node.resize(table.grains.size());
    g.grain_ori_node.resize(table.grains.size());
    for (std::size_t i = 0; i < table.grains.size(); ++i) {
        const int s = size_node_of_cat.at(size_cats[i]);
        const int o = ori_node_of_cat.at(ori_cats[i]);
        g.grain_size_node[i] = s;
        g.grain_ori_node[i] = o;
        g.edges_of(EdgeType::HasSize).push_back({static_cast<int>(i), s});
        g.edges_of(EdgeType::SizeOf).push_back({s, static_cast<int>(i)});
        g.edges_of(EdgeType::HasOri).push_back({static_cast<int>(i), o});
        g.edges_of(EdgeType::OriOf).push_back({o, static_cast<int>(i)});
    }

    std::map<int, int> grain_index_of_id;
    for (std::size_t i = 0; i < table.grains.size(); ++i) {
        grain_index_of_id.emplace(table.grains[i].id, static_cast<int>(i));
    }
    for (const AdjacencyRecord& rec : table.adjacency) {
        if (!grain_index_of_id.contains(rec.grain_a) || !grain_index_of_id.contains(rec.grain_b)) {
            throw ReferenceError("adjacency references grain id missing from table");
        }
        const int ia = grain_index_of_id.at(rec.grain_a);
        const int ib = grain_index_of_id.at(rec.grain_b);
        const EdgeType ab =
            classify_edge(rec.shared_length, table.grains[static_cast<std::size_t>(ia)].perimeter,
                          cfg.lambda);
        const EdgeType ba =
            classify_edge(rec.shared_length, table.grains[static_cast<std::size_t>(ib)].perimeter,
                          cfg.lambda);
        g.edges_of(ab).push_back({ia, ib});
        g.edges_of(ba).push_back({ib, ia});
    }
    return g;
}

void validate_graph(const GrainGraph& g) {
    auto fail = [](const std::string& msg) { throw ValidationError(msg); };
    if (g.grain_count < 1) {
        fail("graph must have at least one grain node");
    }
    if (g.size_dim < 1 || g.ori_dim < 1 || g.grain_dim != 8) {
        fail("bad feature dimensions");
    }
    if (g.discretization.n_size != g.size_dim ||
        g.discretization.ori_category_count() != g.ori_dim) {
        fail("feature dims disagree with discretization config");
    }
    try {
        validate_discretization(g.discretization);
    } catch (const Error& e) {
        fail(std::string("bad discretization: ") + e.what());
    }
    if (g.grain_features.size() !=
        static_cast<std::size_t>(g.grain_count) * static_cast<std::size_t>(g.grain_dim)) {
        fail("grain feature matrix has wrong element count");
    }
    if (g.size_features.size() !=
        static_cast<std::size_t>(g.size_node_count) * static_cast<std::size_t>(g.size_dim)) {
        fail("size feature matrix has wrong element count");
    }
    if (g.ori_features.size() !=
        static_cast<std::size_t>(g.ori_node_count) * static_cast<std::size_t>(g.ori_dim)) {
        fail("orientation feature matrix has wrong element count");
    }
    for (const double v : g.grain_features) {
        if (!std::isfinite(v)) {
            fail("non-finite grain feature");
        }
    }
    if (g.size_category_of_node.size() != static_cast<std::size_t>(g.size_node_count) ||
        g.ori_category_of_node.size() != static_cast<std::size_t>(g.ori_node_count)) {
        fail("category arrays have wrong length");
    }

    auto check_onehot = [&](const std::vector<double>& feats, int count, int dim,
                            const std::vector<int>& cats, const char* what) {
        for (int n = 0; n < count; ++n) {
            int ones = 0;
            int pos = -1;
            for (int d = 0; d < dim; ++d) {
                const double v = feats[static_cast<std::size_t>(n) * dim + d];
                if (v == 1.0) {
                    ++ones;
                    pos = d;
                } else if (v != 0.0) {
                    fail(std::string(what) + " one-hot has entry outside {0,1}");
                }
            }
            if (ones != 1) {
                fail(std::string(what) + " one-hot must have exactly one 1");
            }
            if (cats[static_cast<std::size_t>(n)] != pos + 1) {
                fail(std::string(what) + " category disagrees with one-hot position");
            }
        }
    };
    check_onehot(g.size_features, g.size_node_count, g.size_dim, g.size_category_of_node, "size");
    check_onehot(g.ori_features, g.ori_node_count, g.ori_dim, g.ori_category_of_node,
                 "orientation");

    for (const EdgeType t : kEdgeTypes) {
        const int src_n = g.node_count(edge_src_type(t));
        const int dst_n = g.node_count(edge_dst_type(t));
        for (const TypedEdge& e : g.edges_of(t)) {
            if (e.src < 0 || e.src >= src_n || e.dst < 0 || e.dst >= dst_n) {
                fail("edge endpoint out of range for type " + to_string(t));
            }
        }
    }

    const auto& has_size = g.edges_of(EdgeType::HasSize);
    const auto& size_of = g.edges_of(EdgeType::SizeOf);
    const auto& has_ori = g.edges_of(EdgeType::HasOri);
    const auto& ori_of = g.edges_of(EdgeType::OriOf);
    if (has_size.size() != static_cast<std::size_t>(g.grain_count) ||
        has_ori.size() != static_cast<std::size_t>(g.grain_count)) {
        fail("every grain must have exactly one HasSize and one HasOri edge");
    }
    std::vector<char> seen(static_cast<std::size_t>(g.grain_count));
    auto check_unique_src = [&](const std::vector<TypedEdge>& edges, const char* what) {
        std::fill(seen.begin(), seen.end(), 0);
        for (const TypedEdge& e : edges) {
            if (seen[static_cast<std::size_t>(e.src)]) {
                fail(std::string("grain has multiple ") + what + " edges");
            }
            seen[static_cast<std::size_t>(e.src)] = 1;
        }
    };
    check_unique_src(has_size, "HasSize");
    check_unique_src(has_ori, "HasOri");
    auto check_reverse = [&](const std::vector<TypedEdge>& fw, const std::vector<TypedEdge>& bw,
                             const char* what) {
        if (fw.size() != bw.size()) {
            fail(std::string(what) + " reverse edge count mismatch");
        }
        std::set<std::pair<int, int>> fwd;
        for (const TypedEdge& e : fw) {
            fwd.emplace(e.src, e.dst);
        }
        for (const TypedEdge& e : bw) {
            if (!fwd.contains({e.dst, e.src})) {
                fail(std::string(what) + " reverse edge without forward partner");
            }
        }
    };
    check_reverse(has_size, size_of, "HasSize/SizeOf");
    check_reverse(has_ori, ori_of, "HasOri/OriOf");

    // Strong and Weak: disjoint as directed pairs, union symmetric.
    std::set<std::pair<int, int>> grain_pairs;
    for (const EdgeType t : {EdgeType::Strong, EdgeType::Weak}) {
        for (const TypedEdge& e : g.edges_of(t)) {
            if (e.src == e.dst) {
                fail("self loop in grain-grain edges");
            }
            if (!grain_pairs.emplace(e.src, e.dst).second) {
                fail("duplicate grain-grain directed edge");
            }
        }
    }
    for (const auto& [s, d] : grain_pairs) {
        if (!grain_pairs.contains({d, s})) {
            fail("grain-grain edge missing its opposite direction");
        }
    }

    // attribute node usefulness: every attribute node referenced by some grain
    std::set<int> used_size, used_ori;
    for (const TypedEdge& e : has_size) {
        used_size.insert(e.dst);
    }
    for (const TypedEdge& e : has_ori) {
        used_ori.insert(e.dst);
    }
    if (static_cast<int>(used_size.size()) != g.size_node_count ||
        static_cast<int>(used_ori.size()) != g.ori_node_count) {
        fail("attribute node not referenced by any grain");
    }
    if (g.label && !std::isfinite(*g.label)) {
        fail("non-finite label");
    }
}

bool operator==(const TypedEdge& a, const TypedEdge& b) {
    return a.src == b.src && a.dst == b.dst;
}

bool operator==(const DiscretizationConfig& a, const DiscretizationConfig& b) {
    return a.n_size == b.n_size && a.size_min == b.size_min && a.size_max == b.size_max &&
           a.n_phi == b.n_phi && a.phi_ranges == b.phi_ranges && a.lambda == b.lambda;
}

bool operator==(const GrainGraph& a, const GrainGraph& b) {
    return a.grain_count == b.grain_count && a.size_node_count == b.size_node_count &&
           a.ori_node_count == b.ori_node_count && a.grain_dim == b.grain_dim &&
           a.size_dim == b.size_dim && a.ori_dim == b.ori_dim &&
           a.grain_features == b.grain_features && a.size_features == b.size_features &&
           a.ori_features == b.ori_features && a.edges == b.edges &&
           a.size_category_of_node == b.size_category_of_node &&
           a.ori_category_of_node == b.ori_category_of_node &&
           a.grain_size_node == b.grain_size_node && a.grain_ori_node == b.grain_ori_node &&
           a.label == b.label && a.source_id == b.source_id &&
           a.discretization == b.discretization;
}

std::string export_graph(const GrainGraph& g) {
    validate_graph(g);
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["meta"] = {{"source_id", g.source_id},
                 {"discretization", discretization_json(g.discretization)}};

    // global node ids: grain block, then size block, then orientation block
    const int size_base = g.grain_count;
    const int ori_base = g.grain_count + g.size_node_count;
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (int i = 0; i < g.grain_count; ++i) {
        nlohmann::ordered_json n;
        n["id"] = i;
        n["type"] = "grain";
        n["feature"] = std::vector<double>(
            g.grain_features.begin() + static_cast<std::ptrdiff_t>(i) * g.grain_dim,
            g.grain_features.begin() + static_cast<std::ptrdiff_t>(i + 1) * g.grain_dim);
        nodes.push_back(std::move(n));
    }
    for (int s = 0; s < g.size_node_count; ++s) {
        nlohmann::ordered_json n;
        n["id"] = size_base + s;
        n["type"] = "size";
        n["category"] = g.size_category_of_node[static_cast<std::size_t>(s)];
        n["feature"] = std::vector<double>(
            g.size_features.begin() + static_cast<std::ptrdiff_t>(s) * g.size_dim,
            g.size_features.begin() + static_cast<std::ptrdiff_t>(s + 1) * g.size_dim);
        nodes.push_back(std::move(n));
    }
    for (int o = 0; o < g.ori_node_count; ++o) {
        nlohmann::ordered_json n;
        n["id"] = ori_base + o;
        n["type"] = "orientation";
        n["category"] = g.ori_category_of_node[static_cast<std::size_t>(o)];
        n["feature"] = std::vector<double>(
            g.ori_features.begin() + static_cast<std::ptrdiff_t>(o) * g.ori_dim,
            g.ori_features.begin() + static_cast<std::ptrdiff_t>(o + 1) * g.ori_dim);
        nodes.push_back(std::move(n));
    }
    j["nodes"] = std::move(nodes);

    auto global_id = [&](NodeType t, int index) {
        switch (t) {
        case NodeType::Grain: return index;
        case NodeType::Size: return size_base + index;
        case NodeType::Orientation: return ori_base + index;
        }
        throw ValueError("bad node type");
    };
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const EdgeType t : kEdgeTypes) {
        for (const TypedEdge& e : g.edges_of(t)) {
            nlohmann::ordered_json je;
            je["src"] = global_id(edge_src_type(t), e.src);
            je["dst"] = global_id(edge_dst_type(t), e.dst);
            je["type"] = to_string(t);
            edges.push_back(std::move(je));
        }
    }
    j["edges"] = std::move(edges);
    if (g.label) {
        j["label"] = *g.label;
    } else {
        j["label"] = nullptr;
    }
    return j.dump(2) + "\n";
}

GrainGraph import_graph(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("graph JSON parse failure: ") + e.what());
    }
    try {
        if (!j.contains("version") || !j.at("version").is_number_integer()) {
            throw FormatError("graph JSON missing integer version");
        }
        if (j.at("version").get<int>() != 1) {
            throw FormatError("unsupported graph schema version " +
                              j.at("version").dump());
        }
        GrainGraph g;
        g.source_id = j.at("meta").at("source_id").get<std::string>();
        g.discretization = discretization_from_json(j.at("meta").at("discretization"));
        g.grain_dim = 8;
        g.size_dim = g.discretization.n_size;
        g.ori_dim = g.discretization.ori_category_count();

        const auto& nodes = j.at("nodes");
        if (!nodes.is_array() || nodes.empty()) {
            throw FormatError("graph JSON needs a non-empty node array");
        }
        // canonical block order: grains, then sizes, then orientations, ids 0..n-1
        int expect_id = 0;
        int phase = 0; // 0 grain, 1 size, 2 orientation
        for (const auto& n : nodes) {
            if (n.at("id").get<int>() != expect_id++) {
                throw ValidationError("node ids must be contiguous and ordered");
            }
            const NodeType t = node_type_from_string(n.at("type").get<std::string>());
            const int want_phase = t == NodeType::Grain ? 0 : (t == NodeType::Size ? 1 : 2);
            if (want_phase < phase) {
                throw ValidationError("node blocks must be ordered grain, size, orientation");
            }
            phase = want_phase;
            const auto feature = n.at("feature").get<std::vector<double>>();
            switch (t) {
            case NodeType::Grain:
                if (static_cast<int>(feature.size()) != g.grain_dim) {
                    throw ValidationError("grain feature must have length 8");
                }
                g.grain_features.insert(g.grain_features.end(), feature.begin(), feature.end());
                ++g.grain_count;
                break;
            case NodeType::Size:
                if (static_cast<int>(feature.size()) != g.size_dim) {
                    throw ValidationError("size feature length disagrees with n_size");
                }
                g.size_features.insert(g.size_features.end(), feature.begin(), feature.end());
                g.size_category_of_node.push_back(n.at("category").get<int>());
                ++g.size_node_count;
                break;
            case NodeType::Orientation:
                if (static_cast<int>(feature.size()) != g.ori_dim) {
                    throw ValidationError("orientation feature length disagrees with n_phi^3");
                }
                g.ori_features.insert(g.ori_features.end(), feature.begin(), feature.end());
                g.ori_category_of_node.push_back(n.at("category").get<int>());
                ++g.ori_node_count;
                break;
            }
        }

        const int size_base = g.grain_count;
        const int ori_base = g.grain_count + g.size_node_count;
        const int total = ori_base + g.ori_node_count;
        auto to_local = [&](int id, NodeType want) {
            if (id < 0 || id >= total) {
                throw ValidationError("edge endpoint id out of range");
            }
            NodeType have;
            int local;
            if (id < size_base) {
                have = NodeType::Grain;
                local = id;
            } else if (id < ori_base) {
                have = NodeType::Size;
                local = id - size_base;
            } else {
                have = NodeType::Orientation;
                local = id - ori_base;
            }
            if (have != want) {
                throw ValidationError("edge endpoint has node type " + to_string(have) +
                                      ", expected " + to_string(want));
            }
            return local;
        };
        for (const auto& e : j.at("edges")) {
            const EdgeType t = edge_type_from_string(e.at("type").get<std::string>());
            TypedEdge te;
            te.src = to_local(e.at("src").get<int>(), edge_src_type(t));
            te.dst = to_local(e.at("dst").get<int>(), edge_dst_type(t));
            g.edges_of(t).push_back(te);
        }

        if (j.contains("label") && !j.at("label").is_null()) {
            g.label = j.at("label").get<double>();
        }

        g.grain_size_node.assign(static_cast<std::size_t>(g.grain_count), -1);
        g.grain_ori_node.assign(static_cast<std::size_t>(g.grain_count), -1);
        for (const TypedEdge& e : g.edges_of(EdgeType::HasSize)) {
            if (e.src >= 0 && e.src < g.grain_count) {
                g.grain_size_node[static_cast<std::size_t>(e.src)] = e.dst;
            }
        }
        for (const TypedEdge& e : g.edges_of(EdgeType::HasOri)) {
            if (e.src >= 0 && e.src < g.grain_count) {
                g.grain_ori_node[static_cast<std::size_t>(e.src)] = e.dst;
            }
        }
        validate_graph(g);
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad graph JSON: ") + e.what());
    }
}

GrainGraph read_graph_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open graph file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return import_graph(ss.str());
}

void write_graph_file(const GrainGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << export_graph(g);
    if (!out) {
        throw IoError("failed writing graph file: " + path);
    }
}

std::string serialize_discretization(const DiscretizationConfig& cfg) {
    return discretization_json(cfg).dump(2) + "\n";
}

DiscretizationConfig parse_discretization(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("discretization JSON parse failure: ") + e.what());
    }
    return discretization_from_json(j);
}

DiscretizationConfig read_discretization_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open discretization file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_discretization(ss.str());
}

void write_discretization_file(const DiscretizationConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << serialize_discretization(cfg);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string discretization_fingerprint(const DiscretizationConfig& cfg) {
    const std::uint64_t h = fnv1a64(discretization_json(cfg).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace graingraph
