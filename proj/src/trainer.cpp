#include "qagnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "qagnn/checkpoint.hpp"
#include "qagnn/errors.hpp"

namespace qagnn {

void TrainConfig::validate() const {
    if (batch_size == 0) throw UsageError("batch_size must be positive");
    if (lr_encoder <= 0.0 || lr_gnn <= 0.0) throw UsageError("learning rates must be positive");
    if (epochs == 0) throw UsageError("epochs must be positive");
    if (grad_clip_norm < 0.0) throw UsageError("grad_clip_norm must be >= 0");
}

Tensor choice_loss(Tape& tape, const Tensor& logits, int answer_index) {
    return tape.cross_entropy_with_logits(logits, answer_index);
}

void optimizer_step(ParamStore& params, AdamState& state, const TrainConfig& cfg) {
    for (const auto& name : params.names()) {
        if (params.is_buffer(name)) continue;
        Tensor t = params.get(name);
        if (!t.has_grad()) continue;
        for (double g : t.grad()) {
            if (!std::isfinite(g)) throw NumericError("NaN gradient in parameter " + name);
        }
    }
    if (cfg.grad_clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& name : params.names()) {
            if (params.is_buffer(name)) continue;
            Tensor t = params.get(name);
            if (!t.has_grad()) continue;
            for (double g : t.grad()) sq += g * g;
        }
        double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip_norm) {
            double scale = cfg.grad_clip_norm / norm;
            for (const auto& name : params.names()) {
                if (params.is_buffer(name)) continue;
                Tensor t = params.get(name);
                if (!t.has_grad()) continue;
                for (double& g : t.grad()) g *= scale;
            }
        }
    }

    ++state.step;
    double bc1 = 1.0 - std::pow(state.beta1, state.step);
    double bc2 = 1.0 - std::pow(state.beta2, state.step);
    for (const auto& name : params.names()) {
        if (params.is_buffer(name)) continue;
        Tensor t = params.get(name);
        double lr = name.rfind("encoder.", 0) == 0 ? cfg.lr_encoder : cfg.lr_gnn;
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.empty()) m.assign(t.numel(), 0.0);
        if (v.empty()) v.assign(t.numel(), 0.0);
        if (!t.has_grad()) continue;  // untouched parameters keep zero moments
        auto& grad = t.grad();
        auto& data = t.data();
        for (size_t i = 0; i < data.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

namespace {

std::vector<GraphInput> make_inputs(const TrainExample& ex) {
    std::vector<GraphInput> inputs(ex.choice_graphs.size());
    for (size_t c = 0; c < ex.choice_graphs.size(); ++c) {
        inputs[c].wg = &ex.choice_graphs[c];
        inputs[c].token_ids = ex.choice_token_ids[c];
        if (c < ex.choice_zlm.size() && ex.choice_zlm[c]) {
            inputs[c].external_zlm = &*ex.choice_zlm[c];
        }
    }
    return inputs;
}

}  // namespace

TrainResult train(Model& model, const std::vector<TrainExample>& train_set,
                  const std::vector<TrainExample>& dev_set, const TrainConfig& cfg,
                  const std::string& checkpoint_path, const std::string& curve_csv_path,
                  bool encoder_only, bool quiet) {
    cfg.validate();
    if (train_set.empty()) throw DataError("training set is empty");

    std::mt19937_64 shuffle_rng(cfg.seed + 1);
    std::mt19937_64 dropout_rng(cfg.seed + 2);
    AdamState adam;
    TrainResult result;
    result.best_dev_accuracy = -1.0;

    std::ofstream curve;
    if (!curve_csv_path.empty()) {
        curve.open(curve_csv_path);
        if (!curve) throw DataError("cannot open loss curve file: " + curve_csv_path);
        curve << "epoch,train_loss,dev_acc\n";
    }

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    ForwardOptions fwd_opts;
    fwd_opts.skip_gnn = encoder_only;

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        size_t seen = 0;
        for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
            size_t b_end = std::min(order.size(), b + cfg.batch_size);
            Tape tape;
            // All (question, choice) graphs of the mini-batch share one
            // forward pass so batch norm sees every node row.
            std::vector<GraphInput> inputs;
            std::vector<std::pair<size_t, size_t>> spans;  // logit range per question
            for (size_t qi = b; qi < b_end; ++qi) {
                const TrainExample& ex = train_set[order[qi]];
                auto ins = make_inputs(ex);
                spans.emplace_back(inputs.size(), ins.size());
                inputs.insert(inputs.end(), ins.begin(), ins.end());
            }
            auto outs = model.forward(tape, inputs, RunMode::train, &dropout_rng, fwd_opts);
            std::vector<Tensor> losses;
            for (size_t qi = b; qi < b_end; ++qi) {
                const TrainExample& ex = train_set[order[qi]];
                auto [begin, count] = spans[qi - b];
                std::vector<Tensor> logit_parts;
                for (size_t c = 0; c < count; ++c) logit_parts.push_back(outs[begin + c].logit);
                Tensor logits = tape.stack_scalars(logit_parts);
                losses.push_back(choice_loss(tape, logits, ex.answer_index));
            }
            Tensor batch_loss = tape.scale(tape.sum(tape.stack_scalars(losses)),
                                           1.0 / static_cast<double>(losses.size()));
            model.params().zero_grads();
            tape.backward(batch_loss);
            optimizer_step(model.params(), adam, cfg);
            epoch_loss += batch_loss.value() * static_cast<double>(losses.size());
            seen += losses.size();
        }
        epoch_loss /= static_cast<double>(seen);

        double dev_acc = 0.0;
        if (!dev_set.empty()) {
            dev_acc = evaluate(model, dev_set, {}, encoder_only).accuracy;
        }
        result.curve.push_back({epoch, epoch_loss, dev_acc});
        if (curve.is_open()) {
            char row[128];
            std::snprintf(row, sizeof(row), "%zu,%.12g,%.12g\n", epoch, epoch_loss, dev_acc);
            curve << row;
        }
        if (!quiet) {
            std::printf("epoch %3zu  loss %.6f  dev_acc %.4f\n", epoch, epoch_loss, dev_acc);
        }
        if (dev_acc > result.best_dev_accuracy) {
            result.best_dev_accuracy = dev_acc;
            result.best_epoch = epoch;
            if (!checkpoint_path.empty()) {
                checkpoint::save_file(checkpoint_path, model.params());
            }
        }
    }
    return result;
}

EvalReport evaluate(Model& model, const std::vector<TrainExample>& dataset,
                    const std::vector<int>& hit_ks, bool encoder_only) {
    EvalReport report;
    if (dataset.empty()) return report;
    ForwardOptions fwd_opts;
    fwd_opts.skip_gnn = encoder_only;
    size_t correct = 0;
    std::map<int, size_t> hits;
    for (int k : hit_ks) hits[k] = 0;

    for (const TrainExample& ex : dataset) {
        Tape tape;
        auto inputs = make_inputs(ex);
        auto outs = model.forward(tape, inputs, RunMode::eval, nullptr, fwd_opts);
        EvalReport::PerExample rec;
        rec.id = ex.id;
        rec.gold = ex.answer_index;
        for (const auto& o : outs) rec.logits.push_back(o.logit.value());

        // Rank by descending logit, ties broken by ascending index.
        std::vector<int> rank(rec.logits.size());
        std::iota(rank.begin(), rank.end(), 0);
        std::stable_sort(rank.begin(), rank.end(), [&rec](int a, int b) {
            return rec.logits[static_cast<size_t>(a)] > rec.logits[static_cast<size_t>(b)];
        });
        rec.predicted = rank[0];
        rec.gold_rank = static_cast<int>(
            std::find(rank.begin(), rank.end(), rec.gold) - rank.begin());
        if (rec.predicted == rec.gold) ++correct;
        for (int k : hit_ks) {
            if (rec.gold_rank < k) ++hits[k];
        }
        report.per_example.push_back(std::move(rec));
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    for (int k : hit_ks) {
        report.hit_at_k[k] =
            static_cast<double>(hits[k]) / static_cast<double>(dataset.size());
    }
    return report;
}

}  // namespace qagnn
