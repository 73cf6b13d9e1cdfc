#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "barembed/corpus.hpp"
#include "barembed/labels.hpp"
#include "barembed/model.hpp"

namespace barembed::probe {

using Eigen::MatrixXd;

// Metric order used everywhere: chords, groove patterns, instruments, tempo,
// mean velocity, mean duration, song clustering.
inline constexpr int kNumMetrics = 7;
inline constexpr std::array<const char*, kNumMetrics> kMetricNames = {"C", "GP", "I", "T", "MV", "MD", "SC"};
inline constexpr std::array<bool, kNumMetrics> kHigherBetter = {true, true, true, true, false, false, false};

struct EmbeddingTable {
    int layer = 0;
    MatrixXd rows; // one pooled vector per bar
    std::vector<std::pair<std::string, int>> row_keys; // (song_id, bar_index)
};

// Pooled per-bar embeddings for every layer 0..L, dropout off.
std::vector<EmbeddingTable> embed_all_layers(const model::Parameters& params,
                                             const model::ModelConfig& config,
                                             const Corpus& corpus,
                                             int batch_size = 64);

struct ProbeSplit {
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> test_rows;
};

// Song-level split; no song contributes rows to both sides.
ProbeSplit make_song_split(const std::vector<std::string>& row_songs, double test_fraction,
                           std::uint64_t seed);

// One-vs-rest ridge classification accuracy (tempo).
double probe_multiclass(const MatrixXd& emb, const std::vector<int>& labels, int n_classes,
                        const ProbeSplit& split, double lambda);

// Independent +/-1 ridge per label, threshold 0; macro-F1 over labels with at
// least one positive test example.
double probe_multilabel(const MatrixXd& emb, const std::vector<std::vector<int>>& positives,
                        int n_labels, const ProbeSplit& split, double lambda);

// Ridge regression MAE in raw target units. Rows may be excluded (no target).
double probe_regression(const MatrixXd& emb, const std::vector<double>& targets,
                        const std::vector<std::uint8_t>& has_target, const ProbeSplit& split,
                        double lambda);

struct ProbeOptions {
    double lambda = 1.0;
    int n_splits = 5;
    double test_fraction = 0.2;
    int kmeans_k = 0; // 0 -> min(100, number of songs)
    std::uint64_t seed = 0;
};

// All seven metrics for one layer's embeddings under one split seed.
std::array<double, kNumMetrics> run_probes(const EmbeddingTable& emb,
                                           const std::vector<labels::BarLabels>& labels,
                                           const ProbeOptions& options, std::uint64_t split_seed);

struct ProbeReport {
    int num_layers = 0;                                   // grid has num_layers + 1 rows
    MatrixXd grid;                                        // (L+1) x 7, mean over splits
    std::vector<std::array<double, kNumMetrics>> last_layer_by_split;
    ProbeOptions options;

    std::array<int, kNumMetrics> best_layers() const;     // direction-aware argopt per metric
    std::array<double, kNumMetrics> best_scores() const;
    std::array<double, kNumMetrics> last_layer_mean() const;
    std::array<double, kNumMetrics> last_layer_stderr() const;
};

// Layer sweep: probes every layer 0..L under n_splits seeded splits.
ProbeReport probe_all_layers(const model::Parameters& params, const model::ModelConfig& config,
                             const Corpus& corpus, const std::vector<labels::BarLabels>& labels,
                             const ProbeOptions& options);

} // namespace barembed::probe
