#pragma once

// Central finite-difference gradient oracle for the autodiff tape.

#include <cmath>
#include <functional>
#include <vector>

#include "qagnn/tensor.hpp"

namespace qagnn_test {

// build must rebuild the scalar loss from the leaves' current values using
// the tape it is given; it runs many times with perturbed leaf entries.
inline double gradcheck_max_rel_err(std::vector<qagnn::Tensor> leaves,
                                    const std::function<qagnn::Tensor(qagnn::Tape&)>& build,
                                    double h = 1e-4) {
    for (auto& leaf : leaves) {
        leaf.set_requires_grad(true);
        leaf.zero_grad();
    }
    qagnn::Tape tape;
    qagnn::Tensor loss = build(tape);
    tape.backward(loss);

    std::vector<std::vector<double>> analytic;
    for (auto& leaf : leaves) analytic.push_back(leaf.grad());

    double worst = 0.0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto& data = leaves[li].data();
        for (size_t i = 0; i < data.size(); ++i) {
            double old = data[i];
            data[i] = old + h;
            qagnn::Tape t_plus;
            double up = build(t_plus).value();
            data[i] = old - h;
            qagnn::Tape t_minus;
            double down = build(t_minus).value();
            data[i] = old;
            double fd = (up - down) / (2.0 * h);
            double g = analytic[li][i];
            double denom = std::max({1.0, std::fabs(fd), std::fabs(g)});
            worst = std::max(worst, std::fabs(fd - g) / denom);
        }
    }
    return worst;
}

}  // namespace qagnn_test
