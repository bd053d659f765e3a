#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qagnn {

// Dense double-precision tensor participating in reverse-mode autodiff.
// Rank 1 and 2 cover everything the model needs; a scalar is numel() == 1.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<size_t> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<size_t> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<size_t>& shape() const;
    size_t numel() const;
    size_t rows() const;  // rank-2 only
    size_t cols() const;  // rank-2 only
    bool is_scalar() const { return defined() && numel() == 1; }
    double value() const;  // scalar only

    std::vector<double>& data();
    const std::vector<double>& data() const;
    std::vector<double>& grad();  // allocated (zeros) on first access
    bool has_grad() const;
    void zero_grad();

    bool requires_grad() const;
    void set_requires_grad(bool v);

    double at(size_t i) const;
    double at(size_t i, size_t j) const;
    double& at_mut(size_t i, size_t j);

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    friend class Tape;
};

// Records forward operations and replays their backward closures in exact
// reverse order. One tape per forward/backward; not thread-shared.
class Tape {
public:
    // -- construction ops ------------------------------------------------
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor add(const Tensor& a, const Tensor& b);            // same shape
    Tensor sub(const Tensor& a, const Tensor& b);            // same shape
    Tensor mul(const Tensor& a, const Tensor& b);            // elementwise
    Tensor add_rowvec(const Tensor& m, const Tensor& v);     // m[n,d] + v[d] per row
    Tensor scale(const Tensor& a, double c);
    Tensor relu(const Tensor& a);
    Tensor softmax_rows(const Tensor& a);                    // rank1 or rank2 per row
    Tensor segment_softmax(const Tensor& scores, const std::vector<int>& group,
                           size_t num_groups);
    Tensor rowwise_dot(const Tensor& a, const Tensor& b);    // [n,d],[n,d] -> [n]
    Tensor scale_rows(const Tensor& m, const Tensor& s);     // m[n,d] * s[n] per row
    Tensor gather_rows(const Tensor& t, const std::vector<int>& ids);
    Tensor scatter_add_rows(const Tensor& src, const std::vector<int>& dst, size_t n_out);
    Tensor concat_cols(std::span<const Tensor> parts);
    Tensor concat_rows(std::span<const Tensor> parts);
    Tensor slice_rows(const Tensor& t, size_t begin, size_t end);
    Tensor sum(const Tensor& t);                             // -> scalar
    Tensor mean_rows(const Tensor& t);                       // [n,d] -> [1,d]
    Tensor stack_scalars(std::span<const Tensor> parts);     // -> [n]
    Tensor cross_entropy_with_logits(const Tensor& logits, int target);  // rank1 -> scalar
    Tensor dropout(const Tensor& t, double p, std::mt19937_64& rng);     // train-mode mask
    Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
        return gather_rows(table, ids);
    }

    // Seeds d(loss)/d(loss) = 1 and runs the recorded closures in reverse.
    void backward(const Tensor& loss);

    // Appends a raw backward closure; composite layers with custom backward
    // math (batch norm) use this.
    void record(std::function<void()> fn) { entries_.push_back(std::move(fn)); }

    size_t size() const { return entries_.size(); }
    void clear() { entries_.clear(); }

private:
    static bool any_grad(std::initializer_list<const Tensor*> ts);
    std::vector<std::function<void()>> entries_;
};

// Throws NumericError when t contains NaN/Inf. Every op output passes
// through this; call sites in the model may also use it on inputs.
void ensure_finite(const Tensor& t, const char* what);

// Named trainable parameters plus non-trainable buffers (running stats).
// Iteration order is insertion order so checkpoints and optimizer sweeps
// are deterministic.
class ParamStore {
public:
    explicit ParamStore(uint64_t seed = 0);

    Tensor create(const std::string& name, std::vector<size_t> shape);        // xavier init
    Tensor create_zeros(const std::string& name, std::vector<size_t> shape);
    Tensor create_full(const std::string& name, std::vector<size_t> shape, double v);
    Tensor create_buffer(const std::string& name, std::vector<size_t> shape, double v = 0.0);

    Tensor get(const std::string& name) const;
    bool has(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }  // params + buffers
    bool is_buffer(const std::string& name) const;

    void zero_grads();
    uint64_t seed() const { return seed_; }
    std::mt19937_64& rng() { return rng_; }

private:
    Tensor insert(const std::string& name, Tensor t, bool buffer);
    uint64_t seed_;
    std::mt19937_64 rng_;
    std::vector<std::string> order_;
    std::unordered_map<std::string, Tensor> tensors_;
    std::unordered_map<std::string, bool> buffer_flags_;
};

}  // namespace qagnn
