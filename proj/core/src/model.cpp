#include "graingraph/model.hpp"

#include "graingraph/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace graingraph {
namespace {

void validate_model_config(const ModelConfig& cfg) {
    if (cfg.layers < 1) {
        throw ValueError("model: layers must be at least 1");
    }
    if (cfg.hidden_dim < 1) {
        throw ValueError("model: hidden_dim must be at least 1");
    }
    if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0)) {
        throw ValueError("model: dropout_p must lie in [0, 1)");
    }
    if (!(cfg.leaky_slope > 0.0)) {
        throw ValueError("model: leaky_slope must be positive");
    }
    if (cfg.head_hidden < 1) {
        throw ValueError("model: head_hidden must be at least 1");
    }
    if (!(cfg.layer_norm_eps > 0.0)) {
        throw ValueError("model: layer_norm_eps must be positive");
    }
}

std::string layer_prefix(int k, EdgeType t) {
    return "layer" + std::to_string(k) + "." + to_string(t);
}

std::string layer_prefix(int k, NodeType t) {
    return "layer" + std::to_string(k) + "." + to_string(t);
}

Tensor glorot(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::size_t fan_in,
              std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t = Tensor::zeros(cols == 0 ? std::vector<std::size_t>{rows}
                                       : std::vector<std::size_t>{rows, cols});
    for (double& v : t.data) {
        v = u(rng);
    }
    return t;
}

// per-type input width entering layer k
int layer_input_dim(const ModelConfig& cfg, NodeType t, int k, int grain_dim, int size_dim,
                    int ori_dim) {
    if (k > 0) {
        return cfg.hidden_dim;
    }
    switch (t) {
    case NodeType::Grain: return grain_dim;
    case NodeType::Size: return size_dim;
    case NodeType::Orientation: return ori_dim;
    }
    throw ValueError("bad node type");
}

const std::array<EdgeType, 4> kGrainPaths{EdgeType::Strong, EdgeType::Weak, EdgeType::SizeOf,
                                          EdgeType::OriOf};

} // namespace

bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.layers == b.layers && a.hidden_dim == b.hidden_dim && a.dropout_p == b.dropout_p &&
           a.leaky_slope == b.leaky_slope && a.head_hidden == b.head_hidden &&
           a.layer_norm_eps == b.layer_norm_eps && a.seed == b.seed;
}

std::array<EdgeView, 6> split_by_edge_type(const GrainGraph& g) {
    std::array<EdgeView, 6> views;
    for (std::size_t i = 0; i < kEdgeTypes.size(); ++i) {
        const EdgeType t = kEdgeTypes[i];
        views[i] = EdgeView{t, edge_src_type(t), edge_dst_type(t), &g.edges_of(t)};
    }
    return views;
}

AttentionResult node_level_attention(Tape& tape, const EdgeView& view, Var h_src, Var h_dst,
                                     Var w_src, Var w_dst, Var a, double slope, int n_dst,
                                     ForwardTrace* trace) {
    if (view.empty()) {
        throw UsageError("node_level_attention: empty edge view for type " +
                         to_string(view.type));
    }
    std::vector<int> src_idx(view.size()), dst_idx(view.size());
    for (std::size_t e = 0; e < view.size(); ++e) {
        src_idx[e] = (*view.edges)[e].src;
        dst_idx[e] = (*view.edges)[e].dst;
    }

    const Var z_src = tape.matmul(h_src, w_src);
    const Var z_dst = tape.matmul(h_dst, w_dst);
    const Var zs = tape.gather_rows(z_src, src_idx);
    const Var zd = tape.gather_rows(z_dst, dst_idx);
    const Var cat = tape.concat(zd, zs, 1);
    const Var logits = tape.leaky_relu(tape.matvec(cat, a), slope);
    const Var alpha = tape.segment_softmax(logits, dst_idx);
    const Var summed = tape.segment_sum_rows(tape.scale_rows(zs, alpha), dst_idx, n_dst);

    AttentionResult out;
    out.messages = tape.leaky_relu(summed, slope);
    out.present.assign(static_cast<std::size_t>(n_dst), 0);
    for (const int d : dst_idx) {
        out.present[static_cast<std::size_t>(d)] = 1;
    }
    if (trace) {
        std::map<int, double> sums;
        const Tensor& av = tape.value(alpha);
        for (std::size_t e = 0; e < dst_idx.size(); ++e) {
            sums[dst_idx[e]] += av.data[e];
        }
        for (const auto& [dst, s] : sums) {
            trace->alpha_segment_sums.push_back(s);
        }
    }
    return out;
}

Var path_level_attention(Tape& tape, const std::vector<Var>& path_embeddings, Var q, Var w_sem,
                         Var b, ForwardTrace* trace) {
    if (path_embeddings.empty()) {
        throw UsageError("path_level_attention: no present paths");
    }
    std::vector<Var> scores;
    scores.reserve(path_embeddings.size());
    for (const Var h : path_embeddings) {
        const Var t = tape.tanh(tape.add_rowvec(tape.matmul(h, w_sem), b));
        scores.push_back(tape.reduce_mean(tape.matvec(t, q)));
    }
    const Var beta = tape.segment_softmax(
        tape.stack_scalars(scores), std::vector<int>(path_embeddings.size(), 0));
    if (trace) {
        double s = 0.0;
        for (const double v : tape.value(beta).data) {
            s += v;
        }
        trace->beta_set_sums.push_back(s);
    }
    Var fused = tape.mul(path_embeddings[0], tape.index(beta, 0));
    for (std::size_t i = 1; i < path_embeddings.size(); ++i) {
        fused = tape.add(fused, tape.mul(path_embeddings[i], tape.index(beta, i)));
    }
    return fused;
}

ParamStore init_params(const ModelConfig& cfg, int grain_dim, int size_dim, int ori_dim) {
    validate_model_config(cfg);
    if (grain_dim < 1 || size_dim < 1 || ori_dim < 1) {
        throw ValueError("init_params: feature dims must be positive");
    }
    ParamStore store;
    store.seed = cfg.seed;
    std::mt19937_64 rng(cfg.seed);
    const std::size_t d = static_cast<std::size_t>(cfg.hidden_dim);

    for (int k = 0; k < cfg.layers; ++k) {
        for (const EdgeType t : kEdgeTypes) {
            const NodeType st = edge_src_type(t);
            const NodeType dt = edge_dst_type(t);
            const std::size_t d_src = static_cast<std::size_t>(
                layer_input_dim(cfg, st, k, grain_dim, size_dim, ori_dim));
            const std::size_t d_dst = static_cast<std::size_t>(
                layer_input_dim(cfg, dt, k, grain_dim, size_dim, ori_dim));
            const std::string prefix = layer_prefix(k, t);
            if (st == dt) {
                store.add(prefix + ".w", glorot(rng, d_src, d, d_src, d));
            } else {
                store.add(prefix + ".w_src", glorot(rng, d_src, d, d_src, d));
                store.add(prefix + ".w_dst", glorot(rng, d_dst, d, d_dst, d));
            }
            store.add(prefix + ".a", glorot(rng, 2 * d, 0, 2 * d, 1));
        }
        for (const NodeType t : {NodeType::Grain, NodeType::Size, NodeType::Orientation}) {
            const std::string prefix = layer_prefix(k, t);
            store.add(prefix + ".q", glorot(rng, d, 0, d, 1));
            store.add(prefix + ".w_sem", glorot(rng, d, d, d, d));
            store.add(prefix + ".b", Tensor::zeros({d}));
        }
    }
    const std::size_t hh = static_cast<std::size_t>(cfg.head_hidden);
    store.add("head.ln_scale", Tensor::full({d}, 1.0));
    store.add("head.ln_shift", Tensor::zeros({d}));
    store.add("head.w1", glorot(rng, d, hh, d, hh));
    store.add("head.b1", Tensor::zeros({hh}));
    store.add("head.w2", glorot(rng, hh, 1, hh, 1));
    store.add("head.b2", Tensor::zeros({1}));
    return store;
}

ParamStore init_params(const ModelConfig& cfg, const GrainGraph& g) {
    return init_params(cfg, g.grain_dim, g.size_dim, g.ori_dim);
}

Var forward_on_tape(Tape& tape, const GrainGraph& g, ParamStore& params, const ModelConfig& cfg,
                    bool train, std::mt19937_64& rng, ForwardTrace* trace) {
    validate_model_config(cfg);
    if (g.grain_count < 1) {
        throw ValueError("forward: graph has no grain nodes");
    }
    const auto views = split_by_edge_type(g);
    auto view_of = [&](EdgeType t) -> const EdgeView& {
        return views[static_cast<std::size_t>(t)];
    };

    std::array<Var, 3> h;
    h[0] = tape.constant(Tensor::matrix(static_cast<std::size_t>(g.grain_count),
                                        static_cast<std::size_t>(g.grain_dim),
                                        g.grain_features));
    h[1] = tape.constant(Tensor::matrix(static_cast<std::size_t>(g.size_node_count),
                                        static_cast<std::size_t>(g.size_dim), g.size_features));
    h[2] = tape.constant(Tensor::matrix(static_cast<std::size_t>(g.ori_node_count),
                                        static_cast<std::size_t>(g.ori_dim), g.ori_features));
    auto h_of = [&](NodeType t) -> Var { return h[static_cast<std::size_t>(t)]; };

    for (int k = 0; k < cfg.layers; ++k) {
        std::array<std::vector<Var>, 3> paths; // per node type, in fixed path order
        auto run_edge_type = [&](EdgeType t) {
            const EdgeView& view = view_of(t);
            if (view.empty()) {
                return;
            }
            const std::string prefix = layer_prefix(k, t);
            Var w_src, w_dst;
            if (view.src_type == view.dst_type) {
                w_src = w_dst = tape.param(params, prefix + ".w");
            } else {
                w_src = tape.param(params, prefix + ".w_src");
                w_dst = tape.param(params, prefix + ".w_dst");
            }
            const Var a = tape.param(params, prefix + ".a");
            const AttentionResult res = node_level_attention(
                tape, view, h_of(view.src_type), h_of(view.dst_type), w_src, w_dst, a,
                cfg.leaky_slope, g.node_count(view.dst_type), trace);
            paths[static_cast<std::size_t>(view.dst_type)].push_back(res.messages);
        };
        // grain paths in declared order, then the attribute-node paths
        for (const EdgeType t : kGrainPaths) {
            run_edge_type(t);
        }
        run_edge_type(EdgeType::HasSize);
        run_edge_type(EdgeType::HasOri);

        std::array<Var, 3> h_next;
        for (const NodeType t : {NodeType::Grain, NodeType::Size, NodeType::Orientation}) {
            const std::size_t ti = static_cast<std::size_t>(t);
            if (paths[ti].empty()) {
                throw UsageError("node type " + to_string(t) +
                                 " has no present paths; graph violates its invariants");
            }
            const std::string prefix = layer_prefix(k, t);
            h_next[ti] = path_level_attention(tape, paths[ti], tape.param(params, prefix + ".q"),
                                              tape.param(params, prefix + ".w_sem"),
                                              tape.param(params, prefix + ".b"), trace);
        }
        h = h_next;
    }

    const Var ln = tape.layer_norm(h_of(NodeType::Grain), cfg.layer_norm_eps);
    const Var scaled = tape.add_rowvec(tape.mul_rowvec(ln, tape.param(params, "head.ln_scale")),
                                       tape.param(params, "head.ln_shift"));
    const Var h1 = tape.leaky_relu(
        tape.add_rowvec(tape.matmul(scaled, tape.param(params, "head.w1")),
                        tape.param(params, "head.b1")),
        cfg.leaky_slope);
    const Var h1d = tape.dropout(h1, cfg.dropout_p, train, rng);
    const Var out = tape.add_rowvec(tape.matmul(h1d, tape.param(params, "head.w2")),
                                    tape.param(params, "head.b2"));
    return tape.reduce_mean(out);
}

double predict(const GrainGraph& g, ParamStore& params, const ModelConfig& cfg,
               ForwardTrace* trace) {
    Tape tape;
    std::mt19937_64 rng(0);
    const Var out = forward_on_tape(tape, g, params, cfg, false, rng, trace);
    return tape.value(out).scalar_value();
}

std::string save_checkpoint(const ParamStore& params, const ModelConfig& cfg,
                            const std::string& discretization_fingerprint) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["model_cfg"] = {{"layers", cfg.layers},
                      {"hidden_dim", cfg.hidden_dim},
                      {"dropout_p", cfg.dropout_p},
                      {"leaky_slope", cfg.leaky_slope},
                      {"head_hidden", cfg.head_hidden},
                      {"layer_norm_eps", cfg.layer_norm_eps},
                      {"seed", cfg.seed}};
    j["discretization_fingerprint"] = discretization_fingerprint;
    nlohmann::ordered_json tensors;
    for (const auto& [name, t] : params.params) {
        tensors[name] = {{"shape", t.shape}, {"data", t.data}};
    }
    j["tensors"] = std::move(tensors);
    return j.dump(2) + "\n";
}

Checkpoint load_checkpoint(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint JSON parse failure: ") + e.what());
    }
    try {
        if (!j.contains("version") || j.at("version").get<int>() != 1) {
            throw FormatError("unsupported checkpoint version");
        }
        Checkpoint ck;
        const auto& mc = j.at("model_cfg");
        ck.model_cfg.layers = mc.at("layers").get<int>();
        ck.model_cfg.hidden_dim = mc.at("hidden_dim").get<int>();
        ck.model_cfg.dropout_p = mc.at("dropout_p").get<double>();
        ck.model_cfg.leaky_slope = mc.at("leaky_slope").get<double>();
        ck.model_cfg.head_hidden = mc.at("head_hidden").get<int>();
        ck.model_cfg.layer_norm_eps = mc.at("layer_norm_eps").get<double>();
        ck.model_cfg.seed = mc.at("seed").get<std::uint64_t>();
        validate_model_config(ck.model_cfg);
        ck.discretization_fingerprint = j.at("discretization_fingerprint").get<std::string>();
        for (const auto& [name, tj] : j.at("tensors").items()) {
            Tensor t(tj.at("shape").get<std::vector<std::size_t>>(),
                     tj.at("data").get<std::vector<double>>());
            ck.params.add(name, std::move(t));
        }
        ck.params.seed = ck.model_cfg.seed;
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint JSON: ") + e.what());
    }
}

Checkpoint read_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_checkpoint(ss.str());
}

void write_checkpoint_file(const ParamStore& params, const ModelConfig& cfg,
                           const std::string& discretization_fingerprint,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << save_checkpoint(params, cfg, discretization_fingerprint);
    if (!out) {
        throw IoError("failed writing checkpoint: " + path);
    }
}

} // namespace graingraph
