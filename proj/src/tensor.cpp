#include "qagnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "qagnn/errors.hpp"

namespace qagnn {

struct Tensor::Impl {
    std::vector<size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until touched
    bool requires_grad = false;
};

namespace {

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

void check_rank2(const Tensor& t, const char* what) {
    if (t.shape().size() != 2) throw UsageError(std::string(what) + ": rank-2 tensor required");
}

}  // namespace

Tensor Tensor::zeros(std::vector<size_t> shape, bool requires_grad) {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->data.assign(shape_numel(shape), 0.0);
    t.impl_->shape = std::move(shape);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(std::vector<size_t> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

Tensor Tensor::from_data(std::vector<size_t> shape, std::vector<double> data,
                         bool requires_grad) {
    if (shape_numel(shape) != data.size()) throw UsageError("from_data: shape/data mismatch");
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const std::vector<size_t>& Tensor::shape() const { return impl_->shape; }
size_t Tensor::numel() const { return impl_->data.size(); }

size_t Tensor::rows() const {
    check_rank2(*this, "rows");
    return impl_->shape[0];
}

size_t Tensor::cols() const {
    check_rank2(*this, "cols");
    return impl_->shape[1];
}

double Tensor::value() const {
    if (!is_scalar()) throw UsageError("value() on a non-scalar tensor");
    return impl_->data[0];
}

std::vector<double>& Tensor::data() { return impl_->data; }
const std::vector<double>& Tensor::data() const { return impl_->data; }

std::vector<double>& Tensor::grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
}

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool v) { impl_->requires_grad = v; }

double Tensor::at(size_t i) const { return impl_->data.at(i); }
double Tensor::at(size_t i, size_t j) const { return impl_->data.at(i * cols() + j); }
double& Tensor::at_mut(size_t i, size_t j) { return impl_->data.at(i * cols() + j); }

void ensure_finite(const Tensor& t, const char* what) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value in ") + what);
        }
    }
}

bool Tape::any_grad(std::initializer_list<const Tensor*> ts) {
    for (const Tensor* t : ts) {
        if (t->defined() && t->requires_grad()) return true;
    }
    return false;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    check_rank2(a, "matmul lhs");
    check_rank2(b, "matmul rhs");
    size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) throw UsageError("matmul: inner dimensions differ");
    Tensor out = Tensor::zeros({m, n});
    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    for (size_t i = 0; i < m; ++i) {
        for (size_t kk = 0; kk < k; ++kk) {
            double av = ad[i * k + kk];
            if (av == 0.0) continue;
            const double* brow = bd.data() + kk * n;
            double* orow = od.data() + i * n;
            for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    ensure_finite(out, "matmul");
    if (any_grad({&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        record([ac, bc, oc, m, k, n]() mutable {
            const auto& og = oc.grad();
            if (ac.requires_grad()) {
                auto& ag = ac.grad();
                const auto& bd2 = bc.data();
                for (size_t i = 0; i < m; ++i) {
                    for (size_t kk = 0; kk < k; ++kk) {
                        double acc = 0.0;
                        const double* orow = og.data() + i * n;
                        const double* brow = bd2.data() + kk * n;
                        for (size_t j = 0; j < n; ++j) acc += orow[j] * brow[j];
                        ag[i * k + kk] += acc;
                    }
                }
            }
            if (bc.requires_grad()) {
                auto& bg = bc.grad();
                const auto& ad2 = ac.data();
                for (size_t i = 0; i < m; ++i) {
                    const double* orow = og.data() + i * n;
                    for (size_t kk = 0; kk < k; ++kk) {
                        double av = ad2[i * k + kk];
                        if (av == 0.0) continue;
                        double* brow = bg.data() + kk * n;
                        for (size_t j = 0; j < n; ++j) brow[j] += av * orow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw UsageError("add: shape mismatch");
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    ensure_finite(out, "add");
    if (any_grad({&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        record([ac, bc, oc]() mutable {
            const auto& og = oc.grad();
            if (ac.requires_grad()) {
                auto& g = ac.grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += og[i];
            }
            if (bc.requires_grad()) {
                auto& g = bc.grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += og[i];
            }
        });
    }
    return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw UsageError("sub: shape mismatch");
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    ensure_finite(out, "sub");
    if (any_grad({&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        record([ac, bc, oc]() mutable {
            const auto& og = oc.grad();
            if (ac.requires_grad()) {
                auto& g = ac.grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += og[i];
            }
            if (bc.requires_grad()) {
                auto& g = bc.grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] -= og[i];
            }
        });
    }
    return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw UsageError("mul: shape mismatch");
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    ensure_finite(out, "mul");
    if (any_grad({&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        record([ac, bc, oc]() mutable {
            const auto& og = oc.grad();
            if (ac.requires_grad()) {
                auto& g = ac.grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += og[i] * bc.data()[i];
            }
            if (bc.requires_grad()) {
                auto& g = bc.grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += og[i] * ac.data()[i];
            }
        });
    }
    return out;
}

Tensor Tape::add_rowvec(const Tensor& m, const Tensor& v) {
    check_rank2(m, "add_rowvec");
    if (v.shape().size() != 1 || v.numel() != m.cols()) {
        throw UsageError("add_rowvec: vector length must equal column count");
    }
    size_t n = m.rows(), d = m.cols();
    Tensor out = Tensor::zeros({n, d});
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < d; ++j) out.data()[i * d + j] = m.data()[i * d + j] + v.data()[j];
    }
    ensure_finite(out, "add_rowvec");
    if (any_grad({&m, &v})) {
        out.set_requires_grad(true);
        Tensor mc = m, vc = v, oc = out;
        record([mc, vc, oc, n, d]() mutable {
            const auto& og = oc.grad();
            if (mc.requires_grad()) {
                auto& g = mc.grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += og[i];
            }
            if (vc.requires_grad()) {
                auto& g = vc.grad();
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = 0; j < d; ++j) g[j] += og[i * d + j];
                }
            }
        });
    }
    return out;
}

Tensor Tape::scale(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * c;
    ensure_finite(out, "scale");
    if (any_grad({&a})) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        record([ac, oc, c]() mutable {
            if (!ac.requires_grad()) return;
            auto& g = ac.grad();
            const auto& og = oc.grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += og[i] * c;
        });
    }
    return out;
}

Tensor Tape::relu(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    if (any_grad({&a})) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        record([ac, oc]() mutable {
            if (!ac.requires_grad()) return;
            auto& g = ac.grad();
            const auto& og = oc.grad();
            for (size_t i = 0; i < g.size(); ++i) {
                if (ac.data()[i] > 0.0) g[i] += og[i];
            }
        });
    }
    return out;
}

Tensor Tape::softmax_rows(const Tensor& a) {
    size_t n, d;
    if (a.shape().size() == 1) {
        n = 1;
        d = a.numel();
    } else {
        check_rank2(a, "softmax_rows");
        n = a.rows();
        d = a.cols();
    }
    if (d == 0) throw UsageError("softmax over an empty axis");
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < n; ++i) {
        const double* row = a.data().data() + i * d;
        double* orow = out.data().data() + i * d;
        double mx = row[0];
        for (size_t j = 1; j < d; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (size_t j = 0; j < d; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (size_t j = 0; j < d; ++j) orow[j] /= sum;
    }
    ensure_finite(out, "softmax");
    if (any_grad({&a})) {
        out.set_requires_grad(true);
        Tensor ac = a, oc = out;
        record([ac, oc, n, d]() mutable {
            if (!ac.requires_grad()) return;
            auto& g = ac.grad();
            const auto& og = oc.grad();
            const auto& y = oc.data();
            for (size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (size_t j = 0; j < d; ++j) dot += og[i * d + j] * y[i * d + j];
                for (size_t j = 0; j < d; ++j) {
                    g[i * d + j] += y[i * d + j] * (og[i * d + j] - dot);
                }
            }
        });
    }
    return out;
}

Tensor Tape::segment_softmax(const Tensor& scores, const std::vector<int>& group,
                             size_t num_groups) {
    if (scores.shape().size() != 1) throw UsageError("segment_softmax: rank-1 scores required");
    if (group.size() != scores.numel()) throw UsageError("segment_softmax: group size mismatch");
    size_t n = scores.numel();
    std::vector<double> mx(num_groups, -std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < n; ++i) {
        mx[static_cast<size_t>(group[i])] = std::max(mx[static_cast<size_t>(group[i])],
                                                     scores.data()[i]);
    }
    Tensor out = Tensor::zeros(scores.shape());
    std::vector<double> sums(num_groups, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double e = std::exp(scores.data()[i] - mx[static_cast<size_t>(group[i])]);
        out.data()[i] = e;
        sums[static_cast<size_t>(group[i])] += e;
    }
    for (size_t i = 0; i < n; ++i) out.data()[i] /= sums[static_cast<size_t>(group[i])];
    ensure_finite(out, "segment_softmax");
    if (any_grad({&scores})) {
        out.set_requires_grad(true);
        Tensor sc = scores, oc = out;
        record([sc, oc, group, num_groups]() mutable {
            if (!sc.requires_grad()) return;
            auto& g = sc.grad();
            const auto& og = oc.grad();
            const auto& y = oc.data();
            std::vector<double> dots(num_groups, 0.0);
            for (size_t i = 0; i < y.size(); ++i) {
                dots[static_cast<size_t>(group[i])] += og[i] * y[i];
            }
            for (size_t i = 0; i < y.size(); ++i) {
                g[i] += y[i] * (og[i] - dots[static_cast<size_t>(group[i])]);
            }
        });
    }
    return out;
}

Tensor Tape::rowwise_dot(const Tensor& a, const Tensor& b) {
    check_rank2(a, "rowwise_dot");
    if (a.shape() != b.shape()) throw UsageError("rowwise_dot: shape mismatch");
    size_t n = a.rows(), d = a.cols();
    Tensor out = Tensor::zeros({n});
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < d; ++j) acc += a.data()[i * d + j] * b.data()[i * d + j];
        out.data()[i] = acc;
    }
    ensure_finite(out, "rowwise_dot");
    if (any_grad({&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        record([ac, bc, oc, n, d]() mutable {
            const auto& og = oc.grad();
            if (ac.requires_grad()) {
                auto& g = ac.grad();
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = 0; j < d; ++j) g[i * d + j] += og[i] * bc.data()[i * d + j];
                }
            }
            if (bc.requires_grad()) {
                auto& g = bc.grad();
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = 0; j < d; ++j) g[i * d + j] += og[i] * ac.data()[i * d + j];
                }
            }
        });
    }
    return out;
}

Tensor Tape::scale_rows(const Tensor& m, const Tensor& s) {
    check_rank2(m, "scale_rows");
    if (s.shape().size() != 1 || s.numel() != m.rows()) {
        throw UsageError("scale_rows: scale length must equal row count");
    }
    size_t n = m.rows(), d = m.cols();
    Tensor out = Tensor::zeros({n, d});
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < d; ++j) out.data()[i * d + j] = m.data()[i * d + j] * s.data()[i];
    }
    ensure_finite(out, "scale_rows");
    if (any_grad({&m, &s})) {
        out.set_requires_grad(true);
        Tensor mc = m, sc = s, oc = out;
        record([mc, sc, oc, n, d]() mutable {
            const auto& og = oc.grad();
            if (mc.requires_grad()) {
                auto& g = mc.grad();
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = 0; j < d; ++j) g[i * d + j] += og[i * d + j] * sc.data()[i];
                }
            }
            if (sc.requires_grad()) {
                auto& g = sc.grad();
                for (size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (size_t j = 0; j < d; ++j) acc += og[i * d + j] * mc.data()[i * d + j];
                    g[i] += acc;
                }
            }
        });
    }
    return out;
}

Tensor Tape::gather_rows(const Tensor& t, const std::vector<int>& ids) {
    check_rank2(t, "gather_rows");
    size_t d = t.cols();
    Tensor out = Tensor::zeros({ids.size(), d});
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= t.rows()) {
            throw UsageError("gather_rows: index out of range");
        }
        const double* src = t.data().data() + static_cast<size_t>(ids[i]) * d;
        std::copy(src, src + d, out.data().data() + i * d);
    }
    if (any_grad({&t})) {
        out.set_requires_grad(true);
        Tensor tc = t, oc = out;
        record([tc, oc, ids, d]() mutable {
            if (!tc.requires_grad()) return;
            auto& g = tc.grad();
            const auto& og = oc.grad();
            for (size_t i = 0; i < ids.size(); ++i) {
                double* dst = g.data() + static_cast<size_t>(ids[i]) * d;
                const double* src = og.data() + i * d;
                for (size_t j = 0; j < d; ++j) dst[j] += src[j];
            }
        });
    }
    return out;
}

Tensor Tape::scatter_add_rows(const Tensor& src, const std::vector<int>& dst, size_t n_out) {
    check_rank2(src, "scatter_add_rows");
    if (dst.size() != src.rows()) throw UsageError("scatter_add_rows: index count mismatch");
    size_t d = src.cols();
    Tensor out = Tensor::zeros({n_out, d});
    for (size_t i = 0; i < dst.size(); ++i) {
        if (dst[i] < 0 || static_cast<size_t>(dst[i]) >= n_out) {
            throw UsageError("scatter_add_rows: index out of range");
        }
        double* o = out.data().data() + static_cast<size_t>(dst[i]) * d;
        const double* s = src.data().data() + i * d;
        for (size_t j = 0; j < d; ++j) o[j] += s[j];
    }
    ensure_finite(out, "scatter_add_rows");
    if (any_grad({&src})) {
        out.set_requires_grad(true);
        Tensor sc = src, oc = out;
        record([sc, oc, dst, d]() mutable {
            if (!sc.requires_grad()) return;
            auto& g = sc.grad();
            const auto& og = oc.grad();
            for (size_t i = 0; i < dst.size(); ++i) {
                const double* o = og.data() + static_cast<size_t>(dst[i]) * d;
                double* s = g.data() + i * d;
                for (size_t j = 0; j < d; ++j) s[j] += o[j];
            }
        });
    }
    return out;
}

Tensor Tape::concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw UsageError("concat_cols: no inputs");
    size_t n = parts[0].rows();
    size_t total = 0;
    for (const Tensor& p : parts) {
        check_rank2(p, "concat_cols");
        if (p.rows() != n) throw UsageError("concat_cols: row count mismatch");
        total += p.cols();
    }
    Tensor out = Tensor::zeros({n, total});
    size_t off = 0;
    bool grad = false;
    for (const Tensor& p : parts) {
        size_t d = p.cols();
        for (size_t i = 0; i < n; ++i) {
            std::copy(p.data().data() + i * d, p.data().data() + (i + 1) * d,
                      out.data().data() + i * total + off);
        }
        off += d;
        grad = grad || p.requires_grad();
    }
    if (grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> ps(parts.begin(), parts.end());
        Tensor oc = out;
        record([ps, oc, n, total]() mutable {
            const auto& og = oc.grad();
            size_t off2 = 0;
            for (Tensor& p : ps) {
                size_t d = p.cols();
                if (p.requires_grad()) {
                    auto& g = p.grad();
                    for (size_t i = 0; i < n; ++i) {
                        const double* src = og.data() + i * total + off2;
                        double* dst = g.data() + i * d;
                        for (size_t j = 0; j < d; ++j) dst[j] += src[j];
                    }
                }
                off2 += d;
            }
        });
    }
    return out;
}

Tensor Tape::concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw UsageError("concat_rows: no inputs");
    size_t d = parts[0].cols();
    size_t total = 0;
    for (const Tensor& p : parts) {
        check_rank2(p, "concat_rows");
        if (p.cols() != d) throw UsageError("concat_rows: column count mismatch");
        total += p.rows();
    }
    Tensor out = Tensor::zeros({total, d});
    size_t off = 0;
    bool grad = false;
    for (const Tensor& p : parts) {
        std::copy(p.data().begin(), p.data().end(), out.data().begin() + off * d);
        off += p.rows();
        grad = grad || p.requires_grad();
    }
    if (grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> ps(parts.begin(), parts.end());
        Tensor oc = out;
        record([ps, oc, d]() mutable {
            const auto& og = oc.grad();
            size_t off2 = 0;
            for (Tensor& p : ps) {
                if (p.requires_grad()) {
                    auto& g = p.grad();
                    for (size_t i = 0; i < g.size(); ++i) g[i] += og[off2 * d + i];
                }
                off2 += p.rows();
            }
        });
    }
    return out;
}

Tensor Tape::slice_rows(const Tensor& t, size_t begin, size_t end) {
    check_rank2(t, "slice_rows");
    if (begin > end || end > t.rows()) throw UsageError("slice_rows: bad range");
    size_t d = t.cols();
    Tensor out = Tensor::zeros({end - begin, d});
    std::copy(t.data().begin() + begin * d, t.data().begin() + end * d, out.data().begin());
    if (any_grad({&t})) {
        out.set_requires_grad(true);
        Tensor tc = t, oc = out;
        record([tc, oc, begin, d]() mutable {
            if (!tc.requires_grad()) return;
            auto& g = tc.grad();
            const auto& og = oc.grad();
            for (size_t i = 0; i < og.size(); ++i) g[begin * d + i] += og[i];
        });
    }
    return out;
}

Tensor Tape::sum(const Tensor& t) {
    double acc = 0.0;
    for (double v : t.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    ensure_finite(out, "sum");
    if (any_grad({&t})) {
        out.set_requires_grad(true);
        Tensor tc = t, oc = out;
        record([tc, oc]() mutable {
            if (!tc.requires_grad()) return;
            auto& g = tc.grad();
            double og = oc.grad()[0];
            for (size_t i = 0; i < g.size(); ++i) g[i] += og;
        });
    }
    return out;
}

Tensor Tape::mean_rows(const Tensor& t) {
    check_rank2(t, "mean_rows");
    size_t n = t.rows(), d = t.cols();
    if (n == 0) throw UsageError("mean_rows: empty tensor");
    Tensor out = Tensor::zeros({1, d});
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < d; ++j) out.data()[j] += t.data()[i * d + j];
    }
    for (size_t j = 0; j < d; ++j) out.data()[j] /= static_cast<double>(n);
    ensure_finite(out, "mean_rows");
    if (any_grad({&t})) {
        out.set_requires_grad(true);
        Tensor tc = t, oc = out;
        record([tc, oc, n, d]() mutable {
            if (!tc.requires_grad()) return;
            auto& g = tc.grad();
            const auto& og = oc.grad();
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < d; ++j) g[i * d + j] += og[j] / static_cast<double>(n);
            }
        });
    }
    return out;
}

Tensor Tape::stack_scalars(std::span<const Tensor> parts) {
    if (parts.empty()) throw UsageError("stack_scalars: no inputs");
    Tensor out = Tensor::zeros({parts.size()});
    bool grad = false;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (!parts[i].is_scalar()) throw UsageError("stack_scalars: scalar inputs required");
        out.data()[i] = parts[i].value();
        grad = grad || parts[i].requires_grad();
    }
    if (grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> ps(parts.begin(), parts.end());
        Tensor oc = out;
        record([ps, oc]() mutable {
            const auto& og = oc.grad();
            for (size_t i = 0; i < ps.size(); ++i) {
                if (ps[i].requires_grad()) ps[i].grad()[0] += og[i];
            }
        });
    }
    return out;
}

Tensor Tape::cross_entropy_with_logits(const Tensor& logits, int target) {
    if (logits.shape().size() != 1) throw UsageError("cross_entropy: rank-1 logits required");
    size_t c = logits.numel();
    if (target < 0 || static_cast<size_t>(target) >= c) {
        throw UsageError("cross_entropy: target index out of range");
    }
    double mx = logits.data()[0];
    for (double v : logits.data()) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : logits.data()) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    Tensor out = Tensor::scalar(lse - logits.data()[static_cast<size_t>(target)]);
    ensure_finite(out, "cross_entropy");
    if (any_grad({&logits})) {
        out.set_requires_grad(true);
        Tensor lc = logits, oc = out;
        record([lc, oc, target, mx, lse]() mutable {
            if (!lc.requires_grad()) return;
            auto& g = lc.grad();
            double og = oc.grad()[0];
            (void)mx;
            for (size_t j = 0; j < g.size(); ++j) {
                double p = std::exp(lc.data()[j] - lse);
                g[j] += og * (p - (static_cast<size_t>(target) == j ? 1.0 : 0.0));
            }
        });
    }
    return out;
}

Tensor Tape::dropout(const Tensor& t, double p, std::mt19937_64& rng) {
    if (p < 0.0 || p >= 1.0) throw UsageError("dropout: probability must be in [0,1)");
    if (p == 0.0) return t;
    Tensor out = Tensor::zeros(t.shape());
    auto mask = std::make_shared<std::vector<char>>(t.numel(), 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double keep_scale = 1.0 / (1.0 - p);
    for (size_t i = 0; i < t.numel(); ++i) {
        if (uni(rng) >= p) {
            (*mask)[i] = 1;
            out.data()[i] = t.data()[i] * keep_scale;
        }
    }
    ensure_finite(out, "dropout");
    if (any_grad({&t})) {
        out.set_requires_grad(true);
        Tensor tc = t, oc = out;
        record([tc, oc, mask, keep_scale]() mutable {
            if (!tc.requires_grad()) return;
            auto& g = tc.grad();
            const auto& og = oc.grad();
            for (size_t i = 0; i < g.size(); ++i) {
                if ((*mask)[i]) g[i] += og[i] * keep_scale;
            }
        });
    }
    return out;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.is_scalar()) throw UsageError("backward: loss must be scalar");
    if (entries_.empty()) throw UsageError("backward: empty tape");
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
}

ParamStore::ParamStore(uint64_t seed) : seed_(seed), rng_(seed) {}

Tensor ParamStore::insert(const std::string& name, Tensor t, bool buffer) {
    if (tensors_.count(name)) throw UsageError("duplicate parameter name: " + name);
    order_.push_back(name);
    tensors_.emplace(name, t);
    buffer_flags_.emplace(name, buffer);
    return t;
}

Tensor ParamStore::create(const std::string& name, std::vector<size_t> shape) {
    // Xavier-uniform over the last two dims; rank-1 tensors use fan = numel.
    size_t fan_in = shape.size() == 2 ? shape[0] : shape.empty() ? 1 : shape[0];
    size_t fan_out = shape.size() == 2 ? shape[1] : fan_in;
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(shape, true);
    std::uniform_real_distribution<double> uni(-limit, limit);
    for (auto& v : t.data()) v = uni(rng_);
    return insert(name, t, false);
}

Tensor ParamStore::create_zeros(const std::string& name, std::vector<size_t> shape) {
    return insert(name, Tensor::zeros(std::move(shape), true), false);
}

Tensor ParamStore::create_full(const std::string& name, std::vector<size_t> shape, double v) {
    return insert(name, Tensor::full(std::move(shape), v, true), false);
}

Tensor ParamStore::create_buffer(const std::string& name, std::vector<size_t> shape, double v) {
    return insert(name, Tensor::full(std::move(shape), v, false), true);
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
}

bool ParamStore::has(const std::string& name) const { return tensors_.count(name) > 0; }

bool ParamStore::is_buffer(const std::string& name) const {
    auto it = buffer_flags_.find(name);
    if (it == buffer_flags_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (const auto& name : order_) tensors_.at(name).zero_grad();
}

}  // namespace qagnn
