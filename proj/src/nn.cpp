#include "qagnn/nn.hpp"

#include <cmath>

#include "qagnn/errors.hpp"

namespace qagnn {

Linear Linear::create(ParamStore& params, const std::string& name, size_t in, size_t out) {
    Linear l;
    l.W = params.create(name + ".W", {in, out});
    l.b = params.create_zeros(name + ".b", {out});
    return l;
}

Linear Linear::from_store(const ParamStore& params, const std::string& name) {
    return {params.get(name + ".W"), params.get(name + ".b")};
}

Tensor Linear::apply(Tape& tape, const Tensor& x) const {
    if (x.cols() != W.rows()) {
        throw UsageError("linear: input width " + std::to_string(x.cols()) +
                         " does not match weight " + std::to_string(W.rows()));
    }
    return tape.add_rowvec(tape.matmul(x, W), b);
}

Mlp2 Mlp2::create(ParamStore& params, const std::string& name, size_t in, size_t hidden,
                  size_t out) {
    Mlp2 m;
    m.l1 = Linear::create(params, name + ".l1", in, hidden);
    m.l2 = Linear::create(params, name + ".l2", hidden, out);
    return m;
}

Mlp2 Mlp2::from_store(const ParamStore& params, const std::string& name) {
    return {Linear::from_store(params, name + ".l1"), Linear::from_store(params, name + ".l2")};
}

Tensor Mlp2::apply(Tape& tape, const Tensor& x) const {
    return l2.apply(tape, tape.relu(l1.apply(tape, x)));
}

BatchNorm BatchNorm::create(ParamStore& params, const std::string& name, size_t d) {
    BatchNorm bn;
    bn.gamma = params.create_full(name + ".gamma", {d}, 1.0);
    bn.beta = params.create_zeros(name + ".beta", {d});
    bn.running_mean = params.create_buffer(name + ".running_mean", {d}, 0.0);
    bn.running_var = params.create_buffer(name + ".running_var", {d}, 1.0);
    return bn;
}

BatchNorm BatchNorm::from_store(const ParamStore& params, const std::string& name) {
    BatchNorm bn;
    bn.gamma = params.get(name + ".gamma");
    bn.beta = params.get(name + ".beta");
    bn.running_mean = params.get(name + ".running_mean");
    bn.running_var = params.get(name + ".running_var");
    return bn;
}

Tensor BatchNorm::apply(Tape& tape, const Tensor& x, BatchNormMode mode) const {
    if (mode == BatchNormMode::identity) return x;
    size_t n = x.rows(), d = x.cols();
    if (d != dim()) {
        throw UsageError("batch_norm: feature width " + std::to_string(d) +
                         " does not match state " + std::to_string(dim()));
    }
    bool use_batch_stats = mode == BatchNormMode::train && n >= 2;
    Tensor out = Tensor::zeros({n, d});
    bool needs_grad = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();

    if (use_batch_stats) {
        std::vector<double> mean(d, 0.0), var(d, 0.0);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) mean[j] += x.data()[i * d + j];
        }
        for (size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) {
                double c = x.data()[i * d + j] - mean[j];
                var[j] += c * c;
            }
        }
        for (size_t j = 0; j < d; ++j) var[j] /= static_cast<double>(n);

        // Running stats take the unbiased variance estimate.
        Tensor rm = running_mean, rv = running_var;
        double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
        for (size_t j = 0; j < d; ++j) {
            rm.data()[j] = (1.0 - momentum) * rm.data()[j] + momentum * mean[j];
            rv.data()[j] = (1.0 - momentum) * rv.data()[j] + momentum * var[j] * unbias;
        }

        auto inv_std = std::make_shared<std::vector<double>>(d);
        for (size_t j = 0; j < d; ++j) (*inv_std)[j] = 1.0 / std::sqrt(var[j] + eps);
        auto xhat = std::make_shared<std::vector<double>>(n * d);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) {
                (*xhat)[i * d + j] = (x.data()[i * d + j] - mean[j]) * (*inv_std)[j];
                out.data()[i * d + j] = gamma.data()[j] * (*xhat)[i * d + j] + beta.data()[j];
            }
        }
        ensure_finite(out, "batch_norm");
        if (needs_grad) {
            out.set_requires_grad(true);
            Tensor xc = x, oc = out, gc = gamma, bc = beta;
            tape.record([xc, oc, gc, bc, xhat, inv_std, n, d]() mutable {
                const auto& og = oc.grad();
                if (gc.requires_grad()) {
                    auto& gg = gc.grad();
                    for (size_t i = 0; i < n; ++i) {
                        for (size_t j = 0; j < d; ++j) gg[j] += og[i * d + j] * (*xhat)[i * d + j];
                    }
                }
                if (bc.requires_grad()) {
                    auto& bg = bc.grad();
                    for (size_t i = 0; i < n; ++i) {
                        for (size_t j = 0; j < d; ++j) bg[j] += og[i * d + j];
                    }
                }
                if (xc.requires_grad()) {
                    auto& xg = xc.grad();
                    std::vector<double> sum_dxhat(d, 0.0), sum_dxhat_xhat(d, 0.0);
                    for (size_t i = 0; i < n; ++i) {
                        for (size_t j = 0; j < d; ++j) {
                            double dxhat = og[i * d + j] * gc.data()[j];
                            sum_dxhat[j] += dxhat;
                            sum_dxhat_xhat[j] += dxhat * (*xhat)[i * d + j];
                        }
                    }
                    double inv_n = 1.0 / static_cast<double>(n);
                    for (size_t i = 0; i < n; ++i) {
                        for (size_t j = 0; j < d; ++j) {
                            double dxhat = og[i * d + j] * gc.data()[j];
                            xg[i * d + j] +=
                                (*inv_std)[j] * (dxhat - inv_n * sum_dxhat[j] -
                                                 inv_n * (*xhat)[i * d + j] * sum_dxhat_xhat[j]);
                        }
                    }
                }
            });
        }
        return out;
    }

    // Eval path (and train-mode batches of one row): affine via running stats.
    auto inv_std = std::make_shared<std::vector<double>>(d);
    for (size_t j = 0; j < d; ++j) {
        (*inv_std)[j] = 1.0 / std::sqrt(running_var.data()[j] + eps);
    }
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < d; ++j) {
            double xhat = (x.data()[i * d + j] - running_mean.data()[j]) * (*inv_std)[j];
            out.data()[i * d + j] = gamma.data()[j] * xhat + beta.data()[j];
        }
    }
    ensure_finite(out, "batch_norm");
    if (needs_grad) {
        out.set_requires_grad(true);
        Tensor xc = x, oc = out, gc = gamma, bc = beta, rm = running_mean;
        tape.record([xc, oc, gc, bc, rm, inv_std, n, d]() mutable {
            const auto& og = oc.grad();
            if (gc.requires_grad()) {
                auto& gg = gc.grad();
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = 0; j < d; ++j) {
                        double xhat = (xc.data()[i * d + j] - rm.data()[j]) * (*inv_std)[j];
                        gg[j] += og[i * d + j] * xhat;
                    }
                }
            }
            if (bc.requires_grad()) {
                auto& bg = bc.grad();
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = 0; j < d; ++j) bg[j] += og[i * d + j];
                }
            }
            if (xc.requires_grad()) {
                auto& xg = xc.grad();
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = 0; j < d; ++j) {
                        xg[i * d + j] += og[i * d + j] * gc.data()[j] * (*inv_std)[j];
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace qagnn
