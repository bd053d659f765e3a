#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qagnn/model.hpp"

namespace qagnn {

struct TrainConfig {
    size_t batch_size = 32;
    double lr_encoder = 1e-3;  // parameters named encoder.*
    double lr_gnn = 1e-3;      // everything else
    size_t epochs = 50;
    uint64_t seed = 0;
    double grad_clip_norm = 0.0;  // 0 disables clipping

    void validate() const;
};

// One preprocessed question: per-choice working graphs plus encoded context.
struct TrainExample {
    std::string id;
    int answer_index = 0;
    std::vector<WorkingGraph> choice_graphs;
    std::vector<std::vector<int>> choice_token_ids;
    std::vector<std::optional<std::vector<double>>> choice_zlm;  // optional per choice
};

struct EvalReport {
    double accuracy = 0.0;
    std::map<int, double> hit_at_k;
    struct PerExample {
        std::string id;
        int gold = 0;
        int predicted = 0;
        int gold_rank = 0;  // 0-based rank of the gold choice
        std::vector<double> logits;
    };
    std::vector<PerExample> per_example;
};

struct EpochRecord {
    size_t epoch = 0;
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> curve;
    double best_dev_accuracy = 0.0;
    size_t best_epoch = 0;
};

// -log softmax(logits)[answer_index]; logits is rank-1 over the choices.
Tensor choice_loss(Tape& tape, const Tensor& logits, int answer_index);

struct AdamState {
    std::unordered_map<std::string, std::vector<double>> m;
    std::unordered_map<std::string, std::vector<double>> v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Clips the global gradient norm when configured, then applies one Adam
// update with the per-group learning rate. NaN gradients abort before any
// parameter changes.
void optimizer_step(ParamStore& params, AdamState& state, const TrainConfig& cfg);

TrainResult train(Model& model, const std::vector<TrainExample>& train_set,
                  const std::vector<TrainExample>& dev_set, const TrainConfig& cfg,
                  const std::string& checkpoint_path = "",
                  const std::string& curve_csv_path = "", bool encoder_only = false,
                  bool quiet = true);

EvalReport evaluate(Model& model, const std::vector<TrainExample>& dataset,
                    const std::vector<int>& hit_ks, bool encoder_only = false);

}  // namespace qagnn
