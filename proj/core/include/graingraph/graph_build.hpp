#pragma once

#include "graingraph/orientation.hpp"
#include "graingraph/scan.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace graingraph {

enum class NodeType { Grain, Size, Orientation };
enum class EdgeType { Strong, Weak, HasSize, SizeOf, HasOri, OriOf };

inline constexpr std::array<EdgeType, 6> kEdgeTypes{EdgeType::Strong,  EdgeType::Weak,
                                                    EdgeType::HasSize, EdgeType::SizeOf,
                                                    EdgeType::HasOri,  EdgeType::OriOf};

std::string to_string(NodeType t);
std::string to_string(EdgeType t);
NodeType node_type_from_string(const std::string& s);
EdgeType edge_type_from_string(const std::string& s);

// Binning recipe shared by graph construction and the descriptor baselines.
// Sizes bin into n_size categories over [size_min, size_max]; Euler angles bin
// per axis into n_phi categories over phi_ranges. lambda is the strong-edge
// threshold on boundary fraction.
struct DiscretizationConfig {
    int n_size = 10;
    double size_min = 0.0;
    double size_max = 0.0;
    int n_phi = 4;
    std::array<std::pair<double, double>, 3> phi_ranges{
        {{0.0, 360.0}, {0.0, 180.0}, {0.0, 360.0}}};
    double lambda = 0.2;

    int ori_category_count() const { return n_phi * n_phi * n_phi; }
};

enum class PhiRangeMode { Fixed, Fitted };

// Throws ValueError when ranges are degenerate or counts invalid.
void validate_discretization(const DiscretizationConfig& cfg);

// size range always from the global min/max over all grains; phi ranges either
// the fixed crystallographic (0,360),(0,180),(0,360) or fitted min/max per axis.
DiscretizationConfig fit_discretization(const std::vector<GrainTable>& tables, int n_size,
                                        int n_phi, double lambda, PhiRangeMode phi_mode);

// ceil((v - min)/w) with w = (max-min)/n, clamped to [1, n]; total for any
// finite input.
int size_category(double size, const DiscretizationConfig& cfg);

struct OriCategory {
    int i = 0, j = 0, k = 0; // per-axis categories, 1-based
    int flat = 0;            // (i-1)*n^2 + (j-1)*n + k, in [1, n^3]
};
OriCategory orientation_category(const EulerDeg& euler, const DiscretizationConfig& cfg);

// Directional: the caller passes the source grain's perimeter. Strong iff
// bound_length/perimeter >= lambda.
EdgeType classify_edge(double bound_length, double perimeter, double lambda);

struct TypedEdge {
    int src = 0; // index within the source node type
    int dst = 0; // index within the destination node type
};

NodeType edge_src_type(EdgeType t);
NodeType edge_dst_type(EdgeType t);

// Heterogeneous grain graph. Node indices are type-local and contiguous;
// grains keep the order of the source table, attribute nodes are ordered by
// ascending category. Immutable by convention once built.
struct GrainGraph {
    int grain_count = 0;
    int size_node_count = 0;
    int ori_node_count = 0;

    int grain_dim = 8;
    int size_dim = 0; // == n_size
    int ori_dim = 0;  // == n_phi^3

    // row-major feature matrices, one row per node of the type
    std::vector<double> grain_features;
    std::vector<double> size_features;
    std::vector<double> ori_features;

    std::array<std::vector<TypedEdge>, 6> edges; // indexed by EdgeType order

    std::vector<int> size_category_of_node; // per size node, 1-based category
    std::vector<int> ori_category_of_node;  // per orientation node, 1-based flat category
    std::vector<int> grain_size_node;       // per grain, its size node index
    std::vector<int> grain_ori_node;        // per grain, its orientation node index

    std::optional<double> label; // MPa
    std::string source_id;
    DiscretizationConfig discretization;

    std::vector<TypedEdge>& edges_of(EdgeType t) { return edges[static_cast<std::size_t>(t)]; }
    const std::vector<TypedEdge>& edges_of(EdgeType t) const {
        return edges[static_cast<std::size_t>(t)];
    }
    int node_count(NodeType t) const;
    int feature_dim(NodeType t) const;
    const std::vector<double>& features_of(NodeType t) const;
    std::size_t total_edge_count() const;
};

// Grain row feature: [1, size_norm, sin phi1, cos phi1, sin Phi, cos Phi,
// sin phi2, cos phi2] with size_norm clamped to [0,1].
std::vector<double> grain_feature_row(const Grain& g, const DiscretizationConfig& cfg);

GrainGraph build_graph(const GrainTable& table, const DiscretizationConfig& cfg,
                       std::optional<double> label = std::nullopt);

// Throws ValidationError when any structural invariant fails.
void validate_graph(const GrainGraph& g);

// Versioned JSON round trip; export is canonical (stable field order) so equal
// graphs serialize to identical bytes.
std::string export_graph(const GrainGraph& g);
GrainGraph import_graph(const std::string& json_text);
GrainGraph read_graph_file(const std::string& path);
void write_graph_file(const GrainGraph& g, const std::string& path);

bool operator==(const TypedEdge& a, const TypedEdge& b);
bool operator==(const DiscretizationConfig& a, const DiscretizationConfig& b);
bool operator==(const GrainGraph& a, const GrainGraph& b);

std::string serialize_discretization(const DiscretizationConfig& cfg);
DiscretizationConfig parse_discretization(const std::string& json_text);
DiscretizationConfig read_discretization_file(const std::string& path);
void write_discretization_file(const DiscretizationConfig& cfg, const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
// 16 hex chars over the canonical config JSON; embedded in reports/checkpoints.
std::string discretization_fingerprint(const DiscretizationConfig& cfg);

} // namespace graingraph
