#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace graingraph {

// Dense float64 tensor, row-major, rank 1 or 2.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor scalar(double v);
    static Tensor vector(std::vector<double> d);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> d);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;
    bool is_scalar() const { return data.size() == 1; }
    double scalar_value() const;
};

bool operator==(const Tensor& a, const Tensor& b);
std::string shape_str(const std::vector<std::size_t>& shape);

// Named parameter set. Map ordering fixes iteration order everywhere
// (initialization, optimizer steps, serialization), which keeps runs
// reproducible.
struct ParamStore {
    std::map<std::string, Tensor> params;
    std::uint64_t seed = 0;

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    void add(const std::string& name, Tensor t);
    bool contains(const std::string& name) const { return params.contains(name); }
};

class Tape;

// Handle to a tape node. Valid only while its tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

// Define-by-run reverse-mode tape. Creation order is the topological order;
// backward() walks it once in reverse. One tape per forward pass.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    // Registers the named tensor as a leaf; repeated calls return the same node
    // so gradient contributions accumulate.
    Var param(ParamStore& store, const std::string& name);

    Var matmul(Var a, Var b);           // (r×k)·(k×c)
    Var matvec(Var m, Var v);           // (r×c)·{c} -> {r}
    Var dot(Var a, Var b);              // {n}·{n} -> scalar
    Var add(Var a, Var b);              // same shape, or scalar broadcast
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var square(Var a);
    Var add_rowvec(Var m, Var v);       // m + broadcast row vector {cols}
    Var mul_rowvec(Var m, Var v);
    Var scale_rows(Var m, Var s);       // row i scaled by s[i], s rank-1 {rows}
    Var concat(Var a, Var b, int axis); // rank-2 only; axis 0 or 1
    Var stack_scalars(const std::vector<Var>& xs); // {n} from n scalars
    Var index(Var v, std::size_t i);    // scalar pick from rank-1
    Var tanh(Var a);
    Var leaky_relu(Var a, double slope); // derivative uses slope at x <= 0
    Var reduce_mean(Var a, std::optional<int> axis = std::nullopt);
    Var layer_norm(Var a, double eps);  // per-row normalization, rank-2
    // Training mode zeroes entries with probability p and scales the rest by
    // 1/(1-p); eval mode returns the input node untouched. Any training-mode
    // application with p > 0 marks the tape stochastic.
    Var dropout(Var a, double p, bool train, std::mt19937_64& rng);
    // Softmax within each segment (max-subtracted). segments[i] is the segment
    // id of logits[i]; ids need not be contiguous or sorted.
    Var segment_softmax(Var logits, const std::vector<int>& segments);
    Var gather_rows(Var a, const std::vector<int>& rows);
    // out[seg[e], :] += a[e, :]; n_segments fixes the output row count.
    Var segment_sum_rows(Var a, const std::vector<int>& segments, int n_segments);

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const; // valid after backward()

    // Seeds d(out)=1 and accumulates gradients for every node. Scalar outputs
    // only; a second call on the same tape is a usage error.
    void backward(Var out);
    // Gradients for every parameter in the store; parameters absent from the
    // tape get zeros.
    std::map<std::string, Tensor> param_grads(const ParamStore& store) const;

    bool stochastic() const { return stochastic_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> backprop; // null for leaves
        std::string param_name;              // non-empty for param leaves
    };

    Var push(Tensor value, std::function<void(Tape&)> backprop, std::string param_name = {});
    Var ew_binary_(Var a, Var b, int kind, const char* name);
    Tensor& grad_mut(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    void check_mine(Var v) const;
    void check_finite(const Tensor& t, const char* op) const;

    std::vector<Node> nodes_;
    std::map<std::string, int> param_nodes_;
    int cursor_ = -1; // node whose backprop is currently running
    bool stochastic_ = false;
    bool backward_done_ = false;
};

// Central finite differences against tape gradients for a deterministic scalar
// function of the store. Samples at most `max_elements_per_tensor` entries per
// tensor (all entries when the tensor is smaller). Returns the max relative
// error with denominator max(|analytic|, |numeric|, 1e-4).
double grad_check(const std::function<Var(Tape&, ParamStore&)>& f, ParamStore& store,
                  double eps = 1e-5, std::size_t max_elements_per_tensor = 100);

} // namespace graingraph
