#include "barembed/probe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "barembed/errors.hpp"
#include "barembed/kmeans.hpp"
#include "barembed/ridge.hpp"
#include "barembed/rng.hpp"

namespace barembed::probe {

std::vector<EmbeddingTable> embed_all_layers(const model::Parameters& params,
                                             const model::ModelConfig& config,
                                             const Corpus& corpus, int batch_size) {
    const int n = static_cast<int>(corpus.size());
    std::vector<EmbeddingTable> tables(config.num_layers + 1);
    for (int l = 0; l <= config.num_layers; ++l) {
        tables[l].layer = l;
        tables[l].rows.resize(n, config.hidden_size);
        tables[l].row_keys.reserve(n);
    }
    for (int l = 0; l <= config.num_layers; ++l)
        for (const auto& bar : corpus.bars)
            tables[l].row_keys.emplace_back(bar.song_id, bar.bar_index);

    for (int at = 0; at < n; at += batch_size) {
        const int end = std::min(n, at + batch_size);
        std::vector<std::vector<int>> ids;
        ids.reserve(end - at);
        for (int i = at; i < end; ++i) ids.push_back(corpus.bars[i].ids);
        const auto fwd = model::forward(config, params, ids, /*dropout_on=*/false, 0,
                                        /*want_logits=*/false);
        for (int i = at; i < end; ++i)
            for (int l = 0; l <= config.num_layers; ++l)
                tables[l].rows.row(i) =
                    model::pool(fwd.seqs[i - at], l, config.pooling).transpose();
    }
    return tables;
}

ProbeSplit make_song_split(const std::vector<std::string>& row_songs, double test_fraction,
                           std::uint64_t seed) {
    std::vector<std::string> songs;
    {
        std::set<std::string> uniq(row_songs.begin(), row_songs.end());
        songs.assign(uniq.begin(), uniq.end());
    }
    Rng rng(mix_seed(seed, 0x59717));
    for (std::size_t i = songs.size(); i > 1; --i)
        std::swap(songs[i - 1], songs[rng.next_below(i)]);
    std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * songs.size()));
    if (test_fraction > 0.0 && n_test == 0 && songs.size() > 1) n_test = 1;
    std::set<std::string> test_songs(songs.begin(), songs.begin() + n_test);

    ProbeSplit split;
    for (std::size_t i = 0; i < row_songs.size(); ++i) {
        if (test_songs.count(row_songs[i]))
            split.test_rows.push_back(static_cast<Eigen::Index>(i));
        else
            split.train_rows.push_back(static_cast<Eigen::Index>(i));
    }
    return split;
}

namespace {

MatrixXd gather_rows(const MatrixXd& m, const std::vector<Eigen::Index>& rows) {
    MatrixXd out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
    return out;
}

} // namespace

double probe_multiclass(const MatrixXd& emb, const std::vector<int>& labels, int n_classes,
                        const ProbeSplit& split, double lambda) {
    if (split.train_rows.empty() || split.test_rows.empty())
        throw DataError("probe split has an empty side");
    const MatrixXd xtr = gather_rows(emb, split.train_rows);
    const MatrixXd xte = gather_rows(emb, split.test_rows);
    MatrixXd y = MatrixXd::Constant(xtr.rows(), n_classes, -1.0);
    for (std::size_t i = 0; i < split.train_rows.size(); ++i)
        y(static_cast<Eigen::Index>(i), labels[split.train_rows[i]]) = 1.0;
    const MatrixXd w = ridge_fit(xtr, y, lambda);
    const MatrixXd scores = ridge_predict(xte, w);
    long correct = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index argmax;
        scores.row(i).maxCoeff(&argmax);
        if (static_cast<int>(argmax) == labels[split.test_rows[i]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

double probe_multilabel(const MatrixXd& emb, const std::vector<std::vector<int>>& positives,
                        int n_labels, const ProbeSplit& split, double lambda) {
    if (split.train_rows.empty() || split.test_rows.empty())
        throw DataError("probe split has an empty side");
    const MatrixXd xtr = gather_rows(emb, split.train_rows);
    const MatrixXd xte = gather_rows(emb, split.test_rows);
    MatrixXd y = MatrixXd::Constant(xtr.rows(), n_labels, -1.0);
    for (std::size_t i = 0; i < split.train_rows.size(); ++i)
        for (int label : positives[split.train_rows[i]])
            y(static_cast<Eigen::Index>(i), label) = 1.0;
    const MatrixXd w = ridge_fit(xtr, y, lambda);
    const MatrixXd scores = ridge_predict(xte, w);

    double f1_sum = 0.0;
    int f1_count = 0;
    for (int label = 0; label < n_labels; ++label) {
        long tp = 0, fp = 0, fn = 0;
        bool any_positive = false;
        for (std::size_t i = 0; i < split.test_rows.size(); ++i) {
            const auto& pos = positives[split.test_rows[i]];
            const bool truth = std::find(pos.begin(), pos.end(), label) != pos.end();
            const bool pred = scores(static_cast<Eigen::Index>(i), label) > 0.0;
            any_positive |= truth;
            if (pred && truth) ++tp;
            else if (pred && !truth) ++fp;
            else if (!pred && truth) ++fn;
        }
        if (!any_positive) continue; // label absent from the test side
        const double denom = static_cast<double>(2 * tp + fp + fn);
        f1_sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
        ++f1_count;
    }
    return f1_count > 0 ? f1_sum / f1_count : 0.0;
}

double probe_regression(const MatrixXd& emb, const std::vector<double>& targets,
                        const std::vector<std::uint8_t>& has_target, const ProbeSplit& split,
                        double lambda) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index r : split.train_rows)
        if (has_target[r]) train.push_back(r);
    for (Eigen::Index r : split.test_rows)
        if (has_target[r]) test.push_back(r);
    if (train.empty() || test.empty())
        throw DataError("regression probe has no labeled rows on one side");
    const MatrixXd xtr = gather_rows(emb, train);
    const MatrixXd xte = gather_rows(emb, test);
    MatrixXd y(xtr.rows(), 1);
    for (std::size_t i = 0; i < train.size(); ++i) y(static_cast<Eigen::Index>(i), 0) = targets[train[i]];
    const MatrixXd w = ridge_fit(xtr, y, lambda);
    const MatrixXd pred = ridge_predict(xte, w);
    double mae = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i)
        mae += std::abs(pred(static_cast<Eigen::Index>(i), 0) - targets[test[i]]);
    return mae / static_cast<double>(test.size());
}

std::array<double, kNumMetrics> run_probes(const EmbeddingTable& emb,
                                           const std::vector<labels::BarLabels>& labels,
                                           const ProbeOptions& options, std::uint64_t split_seed) {
    const std::size_t n = labels.size();
    if (static_cast<std::size_t>(emb.rows.rows()) != n)
        throw DataError("labels and embeddings disagree on row count");

    std::vector<std::string> row_songs(n);
    std::vector<std::vector<int>> chords(n), groove(n), instruments(n);
    std::vector<int> tempo(n);
    std::vector<double> mv(n, 0.0), md(n, 0.0);
    std::vector<std::uint8_t> has_mv(n, 0), has_md(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = labels[i];
        row_songs[i] = row.song_id;
        chords[i] = row.chords;
        for (int p = 0; p < 48; ++p)
            if (row.groove.test(p)) groove[i].push_back(p);
        for (int p = 0; p < 129; ++p)
            if (row.instruments.test(p)) instruments[i].push_back(p);
        tempo[i] = row.tempo_class;
        if (row.mean_velocity) { mv[i] = *row.mean_velocity; has_mv[i] = 1; }
        if (row.mean_duration) { md[i] = *row.mean_duration; has_md[i] = 1; }
    }

    const ProbeSplit split = make_song_split(row_songs, options.test_fraction, split_seed);
    int k = options.kmeans_k;
    if (k <= 0) {
        std::set<std::string> songs(row_songs.begin(), row_songs.end());
        k = std::min<int>(100, static_cast<int>(songs.size()));
    }

    std::array<double, kNumMetrics> out{};
    out[0] = probe_multilabel(emb.rows, chords, labels::kNumChords, split, options.lambda);
    out[1] = probe_multilabel(emb.rows, groove, 48, split, options.lambda);
    out[2] = probe_multilabel(emb.rows, instruments, 129, split, options.lambda);
    out[3] = probe_multiclass(emb.rows, tempo, remi::kTempoBins, split, options.lambda);
    out[4] = probe_regression(emb.rows, mv, has_mv, split, options.lambda);
    out[5] = probe_regression(emb.rows, md, has_md, split, options.lambda);
    out[6] = song_clustering_entropy(emb.rows, row_songs, k, mix_seed(split_seed, 0x5c));
    return out;
}

std::array<int, kNumMetrics> ProbeReport::best_layers() const {
    std::array<int, kNumMetrics> best{};
    for (int m = 0; m < kNumMetrics; ++m) {
        int arg = 0;
        for (int l = 1; l < grid.rows(); ++l) {
            const bool better = kHigherBetter[m] ? grid(l, m) > grid(arg, m) : grid(l, m) < grid(arg, m);
            if (better) arg = l;
        }
        best[m] = arg;
    }
    return best;
}

std::array<double, kNumMetrics> ProbeReport::best_scores() const {
    const auto layers = best_layers();
    std::array<double, kNumMetrics> scores{};
    for (int m = 0; m < kNumMetrics; ++m) scores[m] = grid(layers[m], m);
    return scores;
}

std::array<double, kNumMetrics> ProbeReport::last_layer_mean() const {
    std::array<double, kNumMetrics> mean{};
    for (const auto& row : last_layer_by_split)
        for (int m = 0; m < kNumMetrics; ++m) mean[m] += row[m];
    for (int m = 0; m < kNumMetrics; ++m) mean[m] /= static_cast<double>(last_layer_by_split.size());
    return mean;
}

std::array<double, kNumMetrics> ProbeReport::last_layer_stderr() const {
    const auto mean = last_layer_mean();
    std::array<double, kNumMetrics> se{};
    const std::size_t s = last_layer_by_split.size();
    if (s < 2) return se;
    for (const auto& row : last_layer_by_split)
        for (int m = 0; m < kNumMetrics; ++m) se[m] += (row[m] - mean[m]) * (row[m] - mean[m]);
    for (int m = 0; m < kNumMetrics; ++m)
        se[m] = std::sqrt(se[m] / static_cast<double>(s - 1)) / std::sqrt(static_cast<double>(s));
    return se;
}

ProbeReport probe_all_layers(const model::Parameters& params, const model::ModelConfig& config,
                             const Corpus& corpus, const std::vector<labels::BarLabels>& labels,
                             const ProbeOptions& options) {
    if (corpus.size() != labels.size())
        throw DataError("corpus and labels files are not aligned");
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus.bars[i].song_id != labels[i].song_id ||
            corpus.bars[i].bar_index != labels[i].bar_index)
            throw DataError("corpus/labels mismatch at row " + std::to_string(i));

    const auto tables = embed_all_layers(params, config, corpus);
    ProbeReport report;
    report.num_layers = config.num_layers;
    report.options = options;
    report.grid = MatrixXd::Zero(config.num_layers + 1, kNumMetrics);
    report.last_layer_by_split.reserve(options.n_splits);

    for (int s = 0; s < options.n_splits; ++s) {
        const std::uint64_t split_seed = mix_seed(options.seed, 0xab0 + static_cast<unsigned>(s));
        for (int l = 0; l <= config.num_layers; ++l) {
            const auto scores = run_probes(tables[l], labels, options, split_seed);
            for (int m = 0; m < kNumMetrics; ++m) report.grid(l, m) += scores[m];
            if (l == config.num_layers) report.last_layer_by_split.push_back(scores);
        }
    }
    report.grid /= static_cast<double>(options.n_splits);
    return report;
}

} // namespace barembed::probe
