#pragma once

#include <string>

#include "qagnn/tensor.hpp"

namespace qagnn {

struct Linear {
    Tensor W;  // [in, out]
    Tensor b;  // [out]

    static Linear create(ParamStore& params, const std::string& name, size_t in, size_t out);
    static Linear from_store(const ParamStore& params, const std::string& name);
    Tensor apply(Tape& tape, const Tensor& x) const;  // x[n,in] -> [n,out]
    size_t in_dim() const { return W.rows(); }
    size_t out_dim() const { return W.cols(); }
};

// Two linear layers with a ReLU between them.
struct Mlp2 {
    Linear l1, l2;

    static Mlp2 create(ParamStore& params, const std::string& name, size_t in, size_t hidden,
                       size_t out);
    static Mlp2 from_store(const ParamStore& params, const std::string& name);
    Tensor apply(Tape& tape, const Tensor& x) const;
};

enum class BatchNormMode {
    train,     // batch statistics, running stats updated
    eval,      // running statistics
    identity,  // exact pass-through (diagnostic mode)
};

// Column-wise batch normalization with learned scale/shift and running
// statistics (momentum 0.1, eps 1e-5). A train-mode batch of one row falls
// back to the running statistics.
struct BatchNorm {
    Tensor gamma;         // [d]
    Tensor beta;          // [d]
    Tensor running_mean;  // buffer [d]
    Tensor running_var;   // buffer [d]
    double momentum = 0.1;
    double eps = 1e-5;

    static BatchNorm create(ParamStore& params, const std::string& name, size_t d);
    static BatchNorm from_store(const ParamStore& params, const std::string& name);
    Tensor apply(Tape& tape, const Tensor& x, BatchNormMode mode) const;
    size_t dim() const { return gamma.numel(); }
};

}  // namespace qagnn
