#include "graingraph/diffcore.hpp"

#include "graingraph/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace graingraph {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::uint64_t fnv_mix(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape) + " and " +
                     shape_str(b.shape));
}

void require_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape));
    }
}

void require_rank1(const char* op, const Tensor& t) {
    if (t.rank() != 1) {
        throw ShapeError(std::string(op) + ": expected rank-1 tensor, got " + shape_str(t.shape));
    }
}

void axpy(Tensor& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst.data[i] += src[i];
    }
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    std::size_t n = 1;
    for (const std::size_t dim : shape) {
        n *= dim;
    }
    if (n != data.size()) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (const std::size_t dim : shape) {
        n *= dim;
    }
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    std::size_t n = 1;
    for (const std::size_t dim : shape) {
        n *= dim;
    }
    return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> d) {
    const std::size_t n = d.size();
    return Tensor({n}, std::move(d));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> d) {
    return Tensor({rows, cols}, std::move(d));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) {
        throw ShapeError("rows(): tensor is not rank-2: " + shape_str(shape));
    }
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) {
        throw ShapeError("cols(): tensor is not rank-2: " + shape_str(shape));
    }
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

double Tensor::scalar_value() const {
    if (!is_scalar()) {
        throw ShapeError("scalar_value(): tensor has shape " + shape_str(shape));
    }
    return data[0];
}

bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            out += ", ";
        }
        out += std::to_string(shape[i]);
    }
    out += ")";
    return out;
}

Tensor& ParamStore::at(const std::string& name) {
    const auto it = params.find(name);
    if (it == params.end()) {
        throw UsageError("unknown parameter: " + name);
    }
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    const auto it = params.find(name);
    if (it == params.end()) {
        throw UsageError("unknown parameter: " + name);
    }
    return it->second;
}

void ParamStore::add(const std::string& name, Tensor t) {
    if (params.contains(name)) {
        throw UsageError("duplicate parameter: " + name);
    }
    params.emplace(name, std::move(t));
}

void Tape::check_mine(Var v) const {
    if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
        throw UsageError("Var does not belong to this tape");
    }
}

void Tape::check_finite(const Tensor& t, const char* op) const {
    for (const double v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + " produced a non-finite value");
        }
    }
}

Var Tape::push(Tensor value, std::function<void(Tape&)> backprop, std::string param_name) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backprop), std::move(param_name)});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
    check_finite(value, "constant");
    return push(std::move(value), nullptr);
}

Var Tape::param(ParamStore& store, const std::string& name) {
    const auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) {
        return Var{this, it->second};
    }
    const Tensor& t = store.at(name);
    check_finite(t, "param");
    const Var v = push(t, nullptr, name);
    param_nodes_.emplace(name, v.id);
    return v;
}

const Tensor& Tape::value(Var v) const {
    check_mine(v);
    return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) const {
    check_mine(v);
    if (!backward_done_) {
        throw UsageError("grad() before backward()");
    }
    return nodes_[static_cast<std::size_t>(v.id)].grad;
}

Var Tape::matmul(Var a, Var b) {
    check_mine(a);
    check_mine(b);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    require_rank2("matmul", A);
    require_rank2("matmul", B);
    if (A.cols() != B.rows()) {
        shape_fail("matmul", A, B);
    }
    const std::size_t r = A.rows(), k = A.cols(), c = B.cols();
    Tensor out = Tensor::zeros({r, c});
    {
        ConstMap ma(A.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
        ConstMap mb(B.data.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
        MutMap mo(out.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        mo.noalias() = ma * mb;
    }
    check_finite(out, "matmul");
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib, r, k, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        ConstMap mg(g.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        ConstMap ma(t.val(ia).data.data(), static_cast<Eigen::Index>(r),
                    static_cast<Eigen::Index>(k));
        ConstMap mb(t.val(ib).data.data(), static_cast<Eigen::Index>(k),
                    static_cast<Eigen::Index>(c));
        MutMap da(t.grad_mut(ia).data.data(), static_cast<Eigen::Index>(r),
                  static_cast<Eigen::Index>(k));
        MutMap db(t.grad_mut(ib).data.data(), static_cast<Eigen::Index>(k),
                  static_cast<Eigen::Index>(c));
        da.noalias() += mg * mb.transpose();
        db.noalias() += ma.transpose() * mg;
    });
}

Var Tape::matvec(Var m, Var v) {
    check_mine(m);
    check_mine(v);
    const Tensor& M = val(m.id);
    const Tensor& V = val(v.id);
    require_rank2("matvec", M);
    require_rank1("matvec", V);
    if (M.cols() != V.size()) {
        shape_fail("matvec", M, V);
    }
    const std::size_t r = M.rows(), c = M.cols();
    Tensor out = Tensor::zeros({r});
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            s += M.data[i * c + j] * V.data[j];
        }
        out.data[i] = s;
    }
    check_finite(out, "matvec");
    const int im = m.id, iv = v.id;
    return push(std::move(out), [im, iv, r, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        const Tensor& M = t.val(im);
        const Tensor& V = t.val(iv);
        Tensor& dm = t.grad_mut(im);
        Tensor& dv = t.grad_mut(iv);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                dm.data[i * c + j] += g.data[i] * V.data[j];
                dv.data[j] += g.data[i] * M.data[i * c + j];
            }
        }
    });
}

Var Tape::dot(Var a, Var b) {
    check_mine(a);
    check_mine(b);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    require_rank1("dot", A);
    require_rank1("dot", B);
    if (A.size() != B.size()) {
        shape_fail("dot", A, B);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        s += A.data[i] * B.data[i];
    }
    Tensor out = Tensor::scalar(s);
    check_finite(out, "dot");
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib](Tape& t) {
        const double g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad.data[0];
        const Tensor& A = t.val(ia);
        const Tensor& B = t.val(ib);
        Tensor& da = t.grad_mut(ia);
        Tensor& db = t.grad_mut(ib);
        for (std::size_t i = 0; i < A.size(); ++i) {
            da.data[i] += g * B.data[i];
            db.data[i] += g * A.data[i];
        }
    });
}

namespace {
enum class EwKind { Add, Sub, Mul };
}

Var Tape::add(Var a, Var b) { return ew_binary_(a, b, static_cast<int>(EwKind::Add), "add"); }
Var Tape::sub(Var a, Var b) { return ew_binary_(a, b, static_cast<int>(EwKind::Sub), "sub"); }
Var Tape::mul(Var a, Var b) { return ew_binary_(a, b, static_cast<int>(EwKind::Mul), "mul"); }

Var Tape::ew_binary_(Var a, Var b, int kind_i, const char* name) {
    check_mine(a);
    check_mine(b);
    const EwKind kind = static_cast<EwKind>(kind_i);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    const bool a_scalar = A.is_scalar();
    const bool b_scalar = B.is_scalar();
    if (!(A.shape == B.shape || a_scalar || b_scalar)) {
        shape_fail(name, A, B);
    }
    const std::size_t n = std::max(A.size(), B.size());
    const std::vector<std::size_t>& out_shape = A.size() >= B.size() ? A.shape : B.shape;
    Tensor out = Tensor::zeros(out_shape);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = A.data[a_scalar ? 0 : i];
        const double y = B.data[b_scalar ? 0 : i];
        out.data[i] = kind == EwKind::Add ? x + y : (kind == EwKind::Sub ? x - y : x * y);
    }
    check_finite(out, name);
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib, kind, a_scalar, b_scalar, n](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        const Tensor& A = t.val(ia);
        const Tensor& B = t.val(ib);
        Tensor& da = t.grad_mut(ia);
        Tensor& db = t.grad_mut(ib);
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g.data[i];
            switch (kind) {
            case EwKind::Add:
                da.data[a_scalar ? 0 : i] += gi;
                db.data[b_scalar ? 0 : i] += gi;
                break;
            case EwKind::Sub:
                da.data[a_scalar ? 0 : i] += gi;
                db.data[b_scalar ? 0 : i] -= gi;
                break;
            case EwKind::Mul:
                da.data[a_scalar ? 0 : i] += gi * B.data[b_scalar ? 0 : i];
                db.data[b_scalar ? 0 : i] += gi * A.data[a_scalar ? 0 : i];
                break;
            }
        }
    });
}

Var Tape::square(Var a) {
    check_mine(a);
    const Tensor& A = val(a.id);
    Tensor out = Tensor::zeros(A.shape);
    for (std::size_t i = 0; i < A.size(); ++i) {
        out.data[i] = A.data[i] * A.data[i];
    }
    check_finite(out, "square");
    const int ia = a.id;
    return push(std::move(out), [ia](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        const Tensor& A = t.val(ia);
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < A.size(); ++i) {
            da.data[i] += g.data[i] * 2.0 * A.data[i];
        }
    });
}

Var Tape::add_rowvec(Var m, Var v) {
    check_mine(m);
    check_mine(v);
    const Tensor& M = val(m.id);
    const Tensor& V = val(v.id);
    require_rank2("add_rowvec", M);
    require_rank1("add_rowvec", V);
    if (M.cols() != V.size()) {
        shape_fail("add_rowvec", M, V);
    }
    const std::size_t r = M.rows(), c = M.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out.data[i * c + j] = M.data[i * c + j] + V.data[j];
        }
    }
    check_finite(out, "add_rowvec");
    const int im = m.id, iv = v.id;
    return push(std::move(out), [im, iv, r, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        Tensor& dm = t.grad_mut(im);
        Tensor& dv = t.grad_mut(iv);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                dm.data[i * c + j] += g.data[i * c + j];
                dv.data[j] += g.data[i * c + j];
            }
        }
    });
}

Var Tape::mul_rowvec(Var m, Var v) {
    check_mine(m);
    check_mine(v);
    const Tensor& M = val(m.id);
    const Tensor& V = val(v.id);
    require_rank2("mul_rowvec", M);
    require_rank1("mul_rowvec", V);
    if (M.cols() != V.size()) {
        shape_fail("mul_rowvec", M, V);
    }
    const std::size_t r = M.rows(), c = M.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out.data[i * c + j] = M.data[i * c + j] * V.data[j];
        }
    }
    check_finite(out, "mul_rowvec");
    const int im = m.id, iv = v.id;
    return push(std::move(out), [im, iv, r, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        const Tensor& M = t.val(im);
        const Tensor& V = t.val(iv);
        Tensor& dm = t.grad_mut(im);
        Tensor& dv = t.grad_mut(iv);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                dm.data[i * c + j] += g.data[i * c + j] * V.data[j];
                dv.data[j] += g.data[i * c + j] * M.data[i * c + j];
            }
        }
    });
}

Var Tape::scale_rows(Var m, Var s) {
    check_mine(m);
    check_mine(s);
    const Tensor& M = val(m.id);
    const Tensor& S = val(s.id);
    require_rank2("scale_rows", M);
    require_rank1("scale_rows", S);
    if (M.rows() != S.size()) {
        shape_fail("scale_rows", M, S);
    }
    const std::size_t r = M.rows(), c = M.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out.data[i * c + j] = M.data[i * c + j] * S.data[i];
        }
    }
    check_finite(out, "scale_rows");
    const int im = m.id, is = s.id;
    return push(std::move(out), [im, is, r, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        const Tensor& M = t.val(im);
        const Tensor& S = t.val(is);
        Tensor& dm = t.grad_mut(im);
        Tensor& ds = t.grad_mut(is);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                dm.data[i * c + j] += g.data[i * c + j] * S.data[i];
                ds.data[i] += g.data[i * c + j] * M.data[i * c + j];
            }
        }
    });
}

Var Tape::concat(Var a, Var b, int axis) {
    check_mine(a);
    check_mine(b);
    if (axis != 0 && axis != 1) {
        throw UsageError("concat: axis must be 0 or 1");
    }
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    require_rank2("concat", A);
    require_rank2("concat", B);
    Tensor out;
    if (axis == 0) {
        if (A.cols() != B.cols()) {
            shape_fail("concat", A, B);
        }
        out = Tensor::zeros({A.rows() + B.rows(), A.cols()});
        std::copy(A.data.begin(), A.data.end(), out.data.begin());
        std::copy(B.data.begin(), B.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(A.size()));
    } else {
        if (A.rows() != B.rows()) {
            shape_fail("concat", A, B);
        }
        const std::size_t r = A.rows(), ca = A.cols(), cb = B.cols();
        out = Tensor::zeros({r, ca + cb});
        for (std::size_t i = 0; i < r; ++i) {
            std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(i * ca),
                      A.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * ca),
                      out.data.begin() + static_cast<std::ptrdiff_t>(i * (ca + cb)));
            std::copy(B.data.begin() + static_cast<std::ptrdiff_t>(i * cb),
                      B.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cb),
                      out.data.begin() + static_cast<std::ptrdiff_t>(i * (ca + cb) + ca));
        }
    }
    check_finite(out, "concat");
    const int ia = a.id, ib = b.id;
    const std::size_t ra = A.rows(), ca = A.cols(), cb = B.cols(), na = A.size();
    return push(std::move(out), [ia, ib, axis, ra, ca, cb, na](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        Tensor& da = t.grad_mut(ia);
        Tensor& db = t.grad_mut(ib);
        if (axis == 0) {
            for (std::size_t i = 0; i < na; ++i) {
                da.data[i] += g.data[i];
            }
            for (std::size_t i = 0; i < db.data.size(); ++i) {
                db.data[i] += g.data[na + i];
            }
        } else {
            const std::size_t cw = ca + cb;
            for (std::size_t i = 0; i < ra; ++i) {
                for (std::size_t j = 0; j < ca; ++j) {
                    da.data[i * ca + j] += g.data[i * cw + j];
                }
                for (std::size_t j = 0; j < cb; ++j) {
                    db.data[i * cb + j] += g.data[i * cw + ca + j];
                }
            }
        }
    });
}

Var Tape::stack_scalars(const std::vector<Var>& xs) {
    if (xs.empty()) {
        throw UsageError("stack_scalars: empty input");
    }
    Tensor out = Tensor::zeros({xs.size()});
    std::vector<int> ids(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        check_mine(xs[i]);
        const Tensor& x = val(xs[i].id);
        if (!x.is_scalar()) {
            throw ShapeError("stack_scalars: element " + std::to_string(i) + " has shape " +
                             shape_str(x.shape));
        }
        out.data[i] = x.data[0];
        ids[i] = xs[i].id;
    }
    check_finite(out, "stack_scalars");
    return push(std::move(out), [ids](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            t.grad_mut(ids[i]).data[0] += g.data[i];
        }
    });
}

Var Tape::index(Var v, std::size_t i) {
    check_mine(v);
    const Tensor& V = val(v.id);
    require_rank1("index", V);
    if (i >= V.size()) {
        throw ShapeError("index: position " + std::to_string(i) + " out of range for " +
                         shape_str(V.shape));
    }
    Tensor out = Tensor::scalar(V.data[i]);
    const int iv = v.id;
    return push(std::move(out), [iv, i](Tape& t) {
        const double g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad.data[0];
        t.grad_mut(iv).data[i] += g;
    });
}

Var Tape::tanh(Var a) {
    check_mine(a);
    const Tensor& A = val(a.id);
    Tensor out = Tensor::zeros(A.shape);
    for (std::size_t i = 0; i < A.size(); ++i) {
        out.data[i] = std::tanh(A.data[i]);
    }
    check_finite(out, "tanh");
    const int ia = a.id;
    return push(std::move(out), [ia](Tape& t) {
        const std::size_t self = static_cast<std::size_t>(t.cursor_);
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < y.size(); ++i) {
            da.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
        }
    });
}

Var Tape::leaky_relu(Var a, double slope) {
    check_mine(a);
    if (!(slope > 0.0)) {
        throw ValueError("leaky_relu: slope must be positive");
    }
    const Tensor& A = val(a.id);
    Tensor out = Tensor::zeros(A.shape);
    for (std::size_t i = 0; i < A.size(); ++i) {
        const double x = A.data[i];
        out.data[i] = x > 0.0 ? x : slope * x;
    }
    check_finite(out, "leaky_relu");
    const int ia = a.id;
    return push(std::move(out), [ia, slope](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        const Tensor& A = t.val(ia);
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < A.size(); ++i) {
            da.data[i] += g.data[i] * (A.data[i] > 0.0 ? 1.0 : slope);
        }
    });
}

Var Tape::reduce_mean(Var a, std::optional<int> axis) {
    check_mine(a);
    const Tensor& A = val(a.id);
    if (!axis) {
        const std::size_t n = A.size();
        if (n == 0) {
            throw ShapeError("reduce_mean: empty tensor");
        }
        double s = 0.0;
        for (const double v : A.data) {
            s += v;
        }
        Tensor out = Tensor::scalar(s / static_cast<double>(n));
        check_finite(out, "reduce_mean");
        const int ia = a.id;
        return push(std::move(out), [ia, n](Tape& t) {
            const double g =
                t.nodes_[static_cast<std::size_t>(t.cursor_)].grad.data[0] / static_cast<double>(n);
            Tensor& da = t.grad_mut(ia);
            for (double& v : da.data) {
                v += g;
            }
        });
    }
    require_rank2("reduce_mean", A);
    if (*axis != 0 && *axis != 1) {
        throw UsageError("reduce_mean: axis must be 0 or 1");
    }
    const std::size_t r = A.rows(), c = A.cols();
    const int ia = a.id;
    if (*axis == 0) {
        Tensor out = Tensor::zeros({c});
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                out.data[j] += A.data[i * c + j];
            }
        }
        for (double& v : out.data) {
            v /= static_cast<double>(r);
        }
        check_finite(out, "reduce_mean");
        return push(std::move(out), [ia, r, c](Tape& t) {
            const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
            Tensor& da = t.grad_mut(ia);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    da.data[i * c + j] += g.data[j] / static_cast<double>(r);
                }
            }
        });
    }
    Tensor out = Tensor::zeros({r});
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            s += A.data[i * c + j];
        }
        out.data[i] = s / static_cast<double>(c);
    }
    check_finite(out, "reduce_mean");
    return push(std::move(out), [ia, r, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                da.data[i * c + j] += g.data[i] / static_cast<double>(c);
            }
        }
    });
}

Var Tape::layer_norm(Var a, double eps) {
    check_mine(a);
    if (!(eps > 0.0)) {
        throw ValueError("layer_norm: eps must be positive");
    }
    const Tensor& A = val(a.id);
    require_rank2("layer_norm", A);
    const std::size_t r = A.rows(), c = A.cols();
    Tensor out = Tensor::zeros({r, c});
    std::vector<double> inv_sigma(r);
    for (std::size_t i = 0; i < r; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            mu += A.data[i * c + j];
        }
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = A.data[i * c + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        inv_sigma[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            out.data[i * c + j] = (A.data[i * c + j] - mu) * inv_sigma[i];
        }
    }
    check_finite(out, "layer_norm");
    const int ia = a.id;
    return push(std::move(out), [ia, r, c, inv_sigma](Tape& t) {
        const std::size_t self = static_cast<std::size_t>(t.cursor_);
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < r; ++i) {
            double g_mean = 0.0, gy_mean = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                g_mean += g.data[i * c + j];
                gy_mean += g.data[i * c + j] * y.data[i * c + j];
            }
            g_mean /= static_cast<double>(c);
            gy_mean /= static_cast<double>(c);
            for (std::size_t j = 0; j < c; ++j) {
                da.data[i * c + j] += inv_sigma[i] * (g.data[i * c + j] - g_mean -
                                                      y.data[i * c + j] * gy_mean);
            }
        }
    });
}

Var Tape::dropout(Var a, double p, bool train, std::mt19937_64& rng) {
    check_mine(a);
    if (!(p >= 0.0 && p < 1.0)) {
        throw ValueError("dropout: p must lie in [0, 1)");
    }
    if (!train || p == 0.0) {
        return a;
    }
    stochastic_ = true;
    const Tensor& A = val(a.id);
    std::vector<char> keep(A.size());
    std::bernoulli_distribution drop(p);
    const double scale = 1.0 / (1.0 - p);
    Tensor out = Tensor::zeros(A.shape);
    for (std::size_t i = 0; i < A.size(); ++i) {
        keep[i] = drop(rng) ? 0 : 1;
        out.data[i] = keep[i] ? A.data[i] * scale : 0.0;
    }
    check_finite(out, "dropout");
    const int ia = a.id;
    return push(std::move(out), [ia, keep, scale](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (keep[i]) {
                da.data[i] += g.data[i] * scale;
            }
        }
    });
}

Var Tape::segment_softmax(Var logits, const std::vector<int>& segments) {
    check_mine(logits);
    const Tensor& L = val(logits.id);
    require_rank1("segment_softmax", L);
    if (L.size() != segments.size()) {
        throw ShapeError("segment_softmax: " + std::to_string(L.size()) + " logits vs " +
                         std::to_string(segments.size()) + " segment ids");
    }
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        groups[segments[i]].push_back(i);
    }
    Tensor out = Tensor::zeros(L.shape);
    for (const auto& [seg, idxs] : groups) {
        double m = L.data[idxs.front()];
        for (const std::size_t i : idxs) {
            m = std::max(m, L.data[i]);
        }
        double sum = 0.0;
        for (const std::size_t i : idxs) {
            out.data[i] = std::exp(L.data[i] - m);
            sum += out.data[i];
        }
        for (const std::size_t i : idxs) {
            out.data[i] /= sum;
        }
    }
    check_finite(out, "segment_softmax");
    const int il = logits.id;
    // copy the grouping into the closure; s_i (g_i - sum_j g_j s_j) per segment
    std::vector<std::vector<std::size_t>> grouped;
    grouped.reserve(groups.size());
    for (auto& [seg, idxs] : groups) {
        grouped.push_back(std::move(idxs));
    }
    return push(std::move(out), [il, grouped](Tape& t) {
        const std::size_t self = static_cast<std::size_t>(t.cursor_);
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& s = t.nodes_[self].value;
        Tensor& dl = t.grad_mut(il);
        for (const auto& idxs : grouped) {
            double gs = 0.0;
            for (const std::size_t i : idxs) {
                gs += g.data[i] * s.data[i];
            }
            for (const std::size_t i : idxs) {
                dl.data[i] += s.data[i] * (g.data[i] - gs);
            }
        }
    });
}

Var Tape::gather_rows(Var a, const std::vector<int>& rows) {
    check_mine(a);
    const Tensor& A = val(a.id);
    require_rank2("gather_rows", A);
    const std::size_t c = A.cols();
    Tensor out = Tensor::zeros({rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        if (r < 0 || static_cast<std::size_t>(r) >= A.rows()) {
            throw ShapeError("gather_rows: row " + std::to_string(r) + " out of range for " +
                             shape_str(A.shape));
        }
        std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * c),
                  A.data.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(r) + 1) * c),
                  out.data.begin() + static_cast<std::ptrdiff_t>(i * c));
    }
    const int ia = a.id;
    const std::vector<int> idx = rows;
    return push(std::move(out), [ia, idx, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                da.data[static_cast<std::size_t>(idx[i]) * c + j] += g.data[i * c + j];
            }
        }
    });
}

Var Tape::segment_sum_rows(Var a, const std::vector<int>& segments, int n_segments) {
    check_mine(a);
    const Tensor& A = val(a.id);
    require_rank2("segment_sum_rows", A);
    if (A.rows() != segments.size()) {
        throw ShapeError("segment_sum_rows: " + std::to_string(A.rows()) + " rows vs " +
                         std::to_string(segments.size()) + " segment ids");
    }
    if (n_segments < 0) {
        throw UsageError("segment_sum_rows: negative segment count");
    }
    const std::size_t c = A.cols();
    Tensor out = Tensor::zeros({static_cast<std::size_t>(n_segments), c});
    for (std::size_t e = 0; e < segments.size(); ++e) {
        const int s = segments[e];
        if (s < 0 || s >= n_segments) {
            throw ShapeError("segment_sum_rows: segment id " + std::to_string(s) +
                             " out of range [0, " + std::to_string(n_segments) + ")");
        }
        for (std::size_t j = 0; j < c; ++j) {
            out.data[static_cast<std::size_t>(s) * c + j] += A.data[e * c + j];
        }
    }
    check_finite(out, "segment_sum_rows");
    const int ia = a.id;
    const std::vector<int> seg = segments;
    return push(std::move(out), [ia, seg, c](Tape& t) {
        const Tensor& g = t.nodes_[static_cast<std::size_t>(t.cursor_)].grad;
        Tensor& da = t.grad_mut(ia);
        for (std::size_t e = 0; e < seg.size(); ++e) {
            for (std::size_t j = 0; j < c; ++j) {
                da.data[e * c + j] += g.data[static_cast<std::size_t>(seg[e]) * c + j];
            }
        }
    });
}

void Tape::backward(Var out) {
    check_mine(out);
    if (backward_done_) {
        throw UsageError("backward() already ran on this tape");
    }
    if (!nodes_[static_cast<std::size_t>(out.id)].value.is_scalar()) {
        throw UsageError("backward() requires a scalar output, got shape " +
                         shape_str(nodes_[static_cast<std::size_t>(out.id)].value.shape));
    }
    for (Node& n : nodes_) {
        n.grad = Tensor::zeros(n.value.shape);
    }
    nodes_[static_cast<std::size_t>(out.id)].grad.data[0] = 1.0;
    backward_done_ = true;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.backprop) {
            cursor_ = i;
            n.backprop(*this);
        }
    }
}

std::map<std::string, Tensor> Tape::param_grads(const ParamStore& store) const {
    if (!backward_done_) {
        throw UsageError("param_grads() before backward()");
    }
    std::map<std::string, Tensor> out;
    for (const auto& [name, tensor] : store.params) {
        const auto it = param_nodes_.find(name);
        if (it != param_nodes_.end()) {
            out.emplace(name, nodes_[static_cast<std::size_t>(it->second)].grad);
        } else {
            out.emplace(name, Tensor::zeros(tensor.shape));
        }
    }
    return out;
}

double grad_check(const std::function<Var(Tape&, ParamStore&)>& f, ParamStore& store, double eps,
                  std::size_t max_elements_per_tensor) {
    if (!(eps > 0.0)) {
        throw ValueError("grad_check: eps must be positive");
    }
    std::map<std::string, Tensor> analytic;
    {
        Tape tape;
        const Var out = f(tape, store);
        if (tape.stochastic()) {
            throw UsageError("grad_check requires a deterministic function; "
                             "training-mode dropout was applied");
        }
        if (!tape.value(out).is_scalar()) {
            throw UsageError("grad_check: function must return a scalar");
        }
        tape.backward(out);
        analytic = tape.param_grads(store);
    }

    const auto eval = [&]() {
        Tape tape;
        const Var out = f(tape, store);
        return tape.value(out).scalar_value();
    };

    double max_rel = 0.0;
    for (auto& [name, tensor] : store.params) {
        std::vector<std::size_t> idxs;
        if (tensor.size() <= max_elements_per_tensor) {
            idxs.resize(tensor.size());
            for (std::size_t i = 0; i < tensor.size(); ++i) {
                idxs[i] = i;
            }
        } else {
            std::mt19937_64 rng(fnv_mix(name) ^ 0x9e3779b97f4a7c15ULL);
            std::uniform_int_distribution<std::size_t> pick(0, tensor.size() - 1);
            std::set<std::size_t> chosen;
            while (chosen.size() < max_elements_per_tensor) {
                chosen.insert(pick(rng));
            }
            idxs.assign(chosen.begin(), chosen.end());
        }
        const Tensor& grad = analytic.at(name);
        for (const std::size_t i : idxs) {
            const double orig = tensor.data[i];
            tensor.data[i] = orig + eps;
            const double fp = eval();
            tensor.data[i] = orig - eps;
            const double fm = eval();
            tensor.data[i] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = grad.data[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
    }
    return max_rel;
}

} // namespace graingraph
