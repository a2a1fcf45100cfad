#pragma once

#include "graingraph/diffcore.hpp"
#include "graingraph/graph_build.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace graingraph {

struct ModelConfig {
    int layers = 2;      // message-passing rounds K
    int hidden_dim = 32; // shared embedding width d
    double dropout_p = 0.1;
    double leaky_slope = 0.2;
    int head_hidden = 16;
    double layer_norm_eps = 1e-5;
    std::uint64_t seed = 0;
};

bool operator==(const ModelConfig& a, const ModelConfig& b);

// Borrowed view of one edge type; does not own the edge list.
struct EdgeView {
    EdgeType type{};
    NodeType src_type{};
    NodeType dst_type{};
    const std::vector<TypedEdge>* edges = nullptr;

    bool empty() const { return edges == nullptr || edges->empty(); }
    std::size_t size() const { return edges ? edges->size() : 0; }
};

std::array<EdgeView, 6> split_by_edge_type(const GrainGraph& g);

// Attention audit data captured during a forward pass: every per-destination
// attention segment sum and every path-weight set sum (each should be 1).
struct ForwardTrace {
    std::vector<double> alpha_segment_sums;
    std::vector<double> beta_set_sums;
};

struct AttentionResult {
    Var messages;              // n_dst × d
    std::vector<char> present; // per destination node: has at least one in-edge
};

// One edge-type attention round: z = W·h on both endpoints, logits
// a·[z_dst ∥ z_src] through LeakyReLU, per-destination softmax, then the
// activated weighted sum of source projections. Destinations without in-edges
// come out as zero rows. View must be non-empty.
AttentionResult node_level_attention(Tape& tape, const EdgeView& view, Var h_src, Var h_dst,
                                     Var w_src, Var w_dst, Var a, double slope,
                                     int n_dst, ForwardTrace* trace);

// Fuses per-path embeddings for one node type: path score = mean over nodes of
// q·tanh(W_sem·h + b), softmax over present paths, weighted sum. Returns the
// fused n×d embedding.
Var path_level_attention(Tape& tape, const std::vector<Var>& path_embeddings, Var q, Var w_sem,
                         Var b, ForwardTrace* trace);

// Glorot-uniform matrices and attention vectors, zero biases, layer-norm scale
// 1/shift 0. Parameter names and draw order are fixed, so one seed gives one
// store. Input dims come from the graph feature layout.
ParamStore init_params(const ModelConfig& cfg, int grain_dim, int size_dim, int ori_dim);
ParamStore init_params(const ModelConfig& cfg, const GrainGraph& g);

// Full model: K rounds of per-edge-type attention + per-node-type path fusion,
// then the grain-node head (layer_norm -> affine -> LeakyReLU -> dropout ->
// linear) averaged over grain nodes. Returns the scalar prediction node.
Var forward_on_tape(Tape& tape, const GrainGraph& g, ParamStore& params, const ModelConfig& cfg,
                    bool train, std::mt19937_64& rng, ForwardTrace* trace = nullptr);

// Eval-mode forward on a fresh tape.
double predict(const GrainGraph& g, ParamStore& params, const ModelConfig& cfg,
               ForwardTrace* trace = nullptr);

// Checkpoint round trip: model config + parameter tensors + the fingerprint of
// the discretization the model was trained against.
std::string save_checkpoint(const ParamStore& params, const ModelConfig& cfg,
                            const std::string& discretization_fingerprint);
struct Checkpoint {
    ParamStore params;
    ModelConfig model_cfg;
    std::string discretization_fingerprint;
};
Checkpoint load_checkpoint(const std::string& json_text);
Checkpoint read_checkpoint_file(const std::string& path);
void write_checkpoint_file(const ParamStore& params, const ModelConfig& cfg,
                           const std::string& discretization_fingerprint,
                           const std::string& path);

} // namespace graingraph
