#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "barembed/corpus.hpp"
#include "barembed/model.hpp"
#include "barembed/objectives.hpp"
#include "barembed/views.hpp"

namespace barembed::train {

enum class Variant { bert, aug, neighbor, dropout };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

struct TrainConfig {
    Variant variant = Variant::bert;
    double alpha = 0.1;       // weight of the contrastive term; unused for bert
    double temperature = 0.1;
    int batch_size = 16;
    int steps = 1000;
    double learning_rate = 1e-4;
    double warmup_fraction = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
    int eval_every = 100;     // 0 disables periodic validation
    int log_every = 1;
    model::ModelConfig model;

    bool contrastive() const { return variant != Variant::bert; }
};

struct AdamState {
    model::Parameters m, v;
    long step = 0;

    explicit AdamState(const model::Parameters& shape)
        : m(model::Parameters::zeros_like(shape)), v(model::Parameters::zeros_like(shape)) {}
};

// One optimizer update on params from accumulated grads, with linear warmup.
void adam_step(model::Parameters& params, const model::Parameters& grads, AdamState& state,
               const TrainConfig& config);

// Samples a batch and builds both views for the configured variant. Singleton
// songs are resampled for the neighbor variant.
views::PairBatch build_pair_batch(const TrainConfig& config, const Corpus& corpus,
                                  const std::vector<std::size_t>& rows, Rng& rng);

struct StepResult {
    objectives::LossReport report;
};

// Forward both views, combine MLM + contrastive losses, backprop, Adam.
StepResult train_step(model::Parameters& params, AdamState& adam,
                      const views::PairBatch& batch, const TrainConfig& config,
                      std::uint64_t dropout_seed);

// Deterministic song-level split: shuffled by seed, first `fraction` becomes
// validation. Returns (train_rows, val_rows).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_by_song(const Corpus& corpus, double fraction, std::uint64_t seed);

struct TrainResult {
    model::Parameters params;
    std::vector<objectives::LossReport> train_log;           // one row per step
    std::vector<std::pair<int, objectives::LossReport>> val_log;
};

using StepCallback = std::function<void(int step, const objectives::LossReport&)>;

// Full training run over a corpus. Deterministic given (config, corpus).
TrainResult train(const Corpus& corpus, const TrainConfig& config,
                  const StepCallback& on_step = nullptr);

// Masked-prediction and contrastive metrics over a row subset, computed the
// same way training batches are (fresh masks; dropout only where the variant
// depends on it). Used for the validation columns of the run log.
objectives::LossReport evaluate(const model::Parameters& params, const TrainConfig& config,
                                const Corpus& corpus, const std::vector<std::size_t>& rows,
                                std::uint64_t seed);

} // namespace barembed::train
