#include "barembed/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "barembed/errors.hpp"

namespace barembed::train {

Variant variant_from_string(const std::string& name) {
    if (name == "bert") return Variant::bert;
    if (name == "aug") return Variant::aug;
    if (name == "neighbor") return Variant::neighbor;
    if (name == "dropout") return Variant::dropout;
    throw UsageError("unknown variant: " + name + " (expected bert|aug|neighbor|dropout)");
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::bert: return "bert";
    case Variant::aug: return "aug";
    case Variant::neighbor: return "neighbor";
    case Variant::dropout: return "dropout";
    }
    return "?";
}

void adam_step(model::Parameters& params, const model::Parameters& grads, AdamState& state,
               const TrainConfig& config) {
    ++state.step;
    const long warmup = std::max<long>(1, std::lround(config.warmup_fraction * config.steps));
    const double lr = config.learning_rate *
                      std::min(1.0, static_cast<double>(state.step) / static_cast<double>(warmup));
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    auto update = [&](model::MatrixXd& p, const model::MatrixXd& g, model::MatrixXd& m, model::MatrixXd& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        const model::MatrixXd mhat = m / bc1;
        const model::MatrixXd vhat = v / bc2;
        p -= lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + config.adam_eps).matrix());
    };

    // walk the three parameter sets in lockstep
    std::vector<model::MatrixXd*> ps, ms, vs;
    std::vector<const model::MatrixXd*> gs;
    model::for_each_tensor(params, [&](const std::string&, model::MatrixXd& t) { ps.push_back(&t); });
    model::for_each_tensor(grads, [&](const std::string&, const model::MatrixXd& t) { gs.push_back(&t); });
    model::for_each_tensor(state.m, [&](const std::string&, model::MatrixXd& t) { ms.push_back(&t); });
    model::for_each_tensor(state.v, [&](const std::string&, model::MatrixXd& t) { vs.push_back(&t); });
    for (std::size_t i = 0; i < ps.size(); ++i) update(*ps[i], *gs[i], *ms[i], *vs[i]);
}

views::PairBatch build_pair_batch(const TrainConfig& config, const Corpus& corpus,
                                  const std::vector<std::size_t>& rows, Rng& rng) {
    if (rows.empty()) throw DataError("cannot build a batch from an empty corpus");
    views::PairBatch batch;
    batch.source_rows.reserve(config.batch_size);
    for (int i = 0; i < config.batch_size; ++i) {
        std::size_t row = rows[rng.next_below(rows.size())];
        if (config.variant == Variant::neighbor) {
            // resample anchors whose song cannot supply a neighbor
            int attempts = 0;
            while (corpus.rows_by_song.at(corpus.bars[row].song_id).size() < 2) {
                if (++attempts > 1000)
                    throw DataError("neighbor variant needs at least one multi-bar song");
                row = rows[rng.next_below(rows.size())];
            }
        }
        batch.source_rows.push_back(row);
    }
    // all of view_a first so that masked inputs are identical across variants
    for (std::size_t row : batch.source_rows)
        batch.view_a.push_back(views::mlm_mask(corpus.bars[row].ids, rng));
    switch (config.variant) {
    case Variant::bert:
        break;
    case Variant::aug:
        for (std::size_t row : batch.source_rows)
            batch.view_b.push_back(views::pitch_velocity_shift(corpus.bars[row], rng).ids);
        break;
    case Variant::neighbor:
        for (std::size_t row : batch.source_rows)
            batch.view_b.push_back(corpus.bars[views::sample_neighbor_row(corpus, row, rng)].ids);
        break;
    case Variant::dropout:
        for (const auto& view : batch.view_a)
            batch.view_b.push_back(view.input_ids);
        break;
    }
    return batch;
}

namespace {

objectives::LossReport joint_losses(const model::Parameters& params, const TrainConfig& config,
                                    const views::PairBatch& batch, std::uint64_t dropout_seed,
                                    bool dropout_on, bool want_grad,
                                    model::Parameters* grads) {
    const int n = static_cast<int>(batch.view_a.size());
    std::vector<std::vector<int>> ids_a(n);
    std::vector<std::vector<int>> targets(n);
    for (int i = 0; i < n; ++i) {
        ids_a[i] = batch.view_a[i].input_ids;
        targets[i] = batch.view_a[i].mlm_targets;
        if (static_cast<int>(targets[i].size()) > config.model.max_seq_len)
            targets[i].resize(config.model.max_seq_len);
    }

    auto fwd_a = model::forward(config.model, params, ids_a, dropout_on,
                                mix_seed(dropout_seed, 0), /*want_logits=*/true);
    auto mlm = objectives::mlm_loss(
        [&] {
            std::vector<model::MatrixXd> lg(n);
            for (int i = 0; i < n; ++i) lg[i] = fwd_a.seqs[i].logits;
            return lg;
        }(),
        targets, want_grad);

    objectives::LossReport report;
    report.mlm_loss = mlm.loss;
    report.mlm_accuracy = mlm.accuracy;

    std::vector<model::MatrixXd> dhidden_a;
    model::ForwardResult fwd_b;
    std::vector<model::MatrixXd> dhidden_b;
    objectives::NtXentResult nt;

    if (config.contrastive()) {
        fwd_b = model::forward(config.model, params, batch.view_b, dropout_on,
                               mix_seed(dropout_seed, 1), /*want_logits=*/false);
        const int H = config.model.hidden_size;
        model::MatrixXd z(2 * n, H);
        for (int i = 0; i < n; ++i)
            z.row(i) = model::pool(fwd_a.seqs[i], config.model.num_layers, config.model.pooling).transpose();
        for (int i = 0; i < n; ++i)
            z.row(n + i) = model::pool(fwd_b.seqs[i], config.model.num_layers, config.model.pooling).transpose();
        nt = objectives::nt_xent(z, config.temperature, want_grad);
        report.ntxent_loss = nt.loss;
        report.ntxent_accuracy = nt.accuracy;
        if (want_grad && config.alpha != 0.0) {
            dhidden_a.resize(n);
            dhidden_b.resize(n);
            for (int i = 0; i < n; ++i) {
                dhidden_a[i] = model::pool_backward(fwd_a.seqs[i],
                                                    config.alpha * nt.dz.row(i).transpose(),
                                                    config.model.pooling);
                dhidden_b[i] = model::pool_backward(fwd_b.seqs[i],
                                                    config.alpha * nt.dz.row(n + i).transpose(),
                                                    config.model.pooling);
            }
        }
    }

    report.total = objectives::total_loss(report.mlm_loss,
                                          config.contrastive() ? report.ntxent_loss : 0.0,
                                          config.contrastive() ? config.alpha : 0.0);
    if (!std::isfinite(report.total)) {
        std::ostringstream oss;
        oss << "non-finite loss: mlm=" << report.mlm_loss << " ntxent=" << report.ntxent_loss;
        throw NonFiniteLoss(oss.str());
    }

    if (want_grad) {
        model::backward(config.model, params, fwd_a, mlm.dlogits, dhidden_a, *grads);
        if (config.contrastive() && config.alpha != 0.0)
            model::backward(config.model, params, fwd_b, {}, dhidden_b, *grads);
    }
    return report;
}

} // namespace

StepResult train_step(model::Parameters& params, AdamState& adam,
                      const views::PairBatch& batch, const TrainConfig& config,
                      std::uint64_t dropout_seed) {
    model::Parameters grads = model::Parameters::zeros_like(params);
    StepResult result;
    result.report = joint_losses(params, config, batch, dropout_seed, /*dropout_on=*/true,
                                 /*want_grad=*/true, &grads);
    adam_step(params, grads, adam, config);
    return result;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_by_song(const Corpus& corpus, double fraction, std::uint64_t seed) {
    std::vector<std::string> songs = corpus.song_ids(); // sorted by map order
    Rng rng(mix_seed(seed, 0x5117));
    for (std::size_t i = songs.size(); i > 1; --i)
        std::swap(songs[i - 1], songs[rng.next_below(i)]);
    std::size_t n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(songs.size())));
    if (fraction > 0.0 && n_val == 0 && songs.size() > 1) n_val = 1;
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t i = 0; i < songs.size(); ++i) {
        const auto& rows = corpus.rows_by_song.at(songs[i]);
        auto& dst = i < n_val ? val_rows : train_rows;
        dst.insert(dst.end(), rows.begin(), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    return {std::move(train_rows), std::move(val_rows)};
}

objectives::LossReport evaluate(const model::Parameters& params, const TrainConfig& config,
                                const Corpus& corpus, const std::vector<std::size_t>& rows,
                                std::uint64_t seed) {
    if (rows.empty()) return {};
    Rng rng(mix_seed(seed, 0xe7a1));
    // fixed-size passes over the rows, batched like training
    objectives::LossReport sum;
    int batches = 0;
    // dropout only matters for the twin variant, where it is the augmentation
    const bool dropout_on = config.variant == Variant::dropout;
    for (std::size_t at = 0; at < rows.size(); at += config.batch_size) {
        const std::size_t end = std::min(rows.size(), at + config.batch_size);
        views::PairBatch batch;
        for (std::size_t i = at; i < end; ++i) batch.source_rows.push_back(rows[i]);
        for (std::size_t row : batch.source_rows)
            batch.view_a.push_back(views::mlm_mask(corpus.bars[row].ids, rng));
        switch (config.variant) {
        case Variant::bert:
            break;
        case Variant::aug:
            for (std::size_t row : batch.source_rows)
                batch.view_b.push_back(views::pitch_velocity_shift(corpus.bars[row], rng).ids);
            break;
        case Variant::neighbor:
            for (std::size_t row : batch.source_rows) {
                const auto& song_rows = corpus.rows_by_song.at(corpus.bars[row].song_id);
                if (song_rows.size() < 2) {
                    batch.view_b.push_back(corpus.bars[row].ids); // degenerate fallback
                } else {
                    batch.view_b.push_back(corpus.bars[views::sample_neighbor_row(corpus, row, rng)].ids);
                }
            }
            break;
        case Variant::dropout:
            for (const auto& view : batch.view_a) batch.view_b.push_back(view.input_ids);
            break;
        }
        const auto report = joint_losses(params, config, batch, rng.next_u64(), dropout_on,
                                         /*want_grad=*/false, nullptr);
        sum.mlm_loss += report.mlm_loss;
        sum.ntxent_loss += report.ntxent_loss;
        sum.total += report.total;
        sum.mlm_accuracy += report.mlm_accuracy;
        sum.ntxent_accuracy += report.ntxent_accuracy;
        ++batches;
    }
    sum.mlm_loss /= batches;
    sum.ntxent_loss /= batches;
    sum.total /= batches;
    sum.mlm_accuracy /= batches;
    sum.ntxent_accuracy /= batches;
    return sum;
}

TrainResult train(const Corpus& corpus, const TrainConfig& config, const StepCallback& on_step) {
    if (corpus.size() == 0) throw DataError("corpus is empty");
    config.model.validate();
    // alpha = 0 is allowed: it reduces any contrastive variant to plain MLM
    if (config.contrastive() && (config.alpha < 0.0 || config.temperature <= 0.0))
        throw UsageError("contrastive variants need alpha >= 0 and temperature > 0");

    auto [train_rows, val_rows] = split_by_song(corpus, config.validation_fraction, config.seed);
    if (train_rows.empty()) throw DataError("song split left no training rows");

    TrainResult result;
    result.params = model::Parameters::init(config.model, mix_seed(config.seed, 0x1417));
    AdamState adam(result.params);
    Rng rng(mix_seed(config.seed, 0xba7c4));

    for (int step = 0; step < config.steps; ++step) {
        const auto batch = build_pair_batch(config, corpus, train_rows, rng);
        const auto step_result = train_step(result.params, adam, batch, config,
                                            mix_seed(config.seed, 0x10000u + static_cast<unsigned>(step)));
        result.train_log.push_back(step_result.report);
        if (on_step) on_step(step, step_result.report);
        if (config.eval_every > 0 && !val_rows.empty() &&
            ((step + 1) % config.eval_every == 0 || step + 1 == config.steps)) {
            result.val_log.emplace_back(
                step + 1, evaluate(result.params, config, corpus, val_rows,
                                   mix_seed(config.seed, 0x20000000u + static_cast<unsigned>(step))));
        }
    }
    return result;
}

} // namespace barembed::train
