// barembed: tokenize MIDI into bar-level token corpora, train masked +
// contrastive encoder variants on them, and probe the learned embeddings.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "barembed/cli_commands.hpp"
#include "barembed/errors.hpp"
#include "barembed/manifest.hpp"
#include "barembed/toml_lite.hpp"

namespace {

using namespace barembed;

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr ? std::string(v) : fallback;
}

void apply_train_toml(const TomlLite& toml, train::TrainConfig& config) {
    config.alpha = toml.get_double("train.alpha", config.alpha);
    config.temperature = toml.get_double("train.temperature", config.temperature);
    config.batch_size = static_cast<int>(toml.get_int("train.batch_size", config.batch_size));
    config.steps = static_cast<int>(toml.get_int("train.steps", config.steps));
    config.learning_rate = toml.get_double("train.learning_rate", config.learning_rate);
    config.warmup_fraction = toml.get_double("train.warmup_fraction", config.warmup_fraction);
    config.validation_fraction = toml.get_double("train.validation_fraction", config.validation_fraction);
    config.eval_every = static_cast<int>(toml.get_int("train.eval_every", config.eval_every));
    config.log_every = static_cast<int>(toml.get_int("train.log_every", config.log_every));
    if (toml.has("train.variant"))
        config.variant = train::variant_from_string(toml.get_string("train.variant", "bert"));

    config.model.num_layers = static_cast<int>(toml.get_int("model.num_layers", config.model.num_layers));
    config.model.hidden_size = static_cast<int>(toml.get_int("model.hidden_size", config.model.hidden_size));
    config.model.num_heads = static_cast<int>(toml.get_int("model.num_heads", config.model.num_heads));
    config.model.ffn_size = static_cast<int>(toml.get_int("model.ffn_size", config.model.ffn_size));
    config.model.max_seq_len = static_cast<int>(toml.get_int("model.max_seq_len", config.model.max_seq_len));
    config.model.dropout_rate = toml.get_double("model.dropout_rate", config.model.dropout_rate);
    const std::string pooling = toml.get_string("model.pooling", "mean");
    if (pooling == "cls") config.model.pooling = model::Pooling::cls;
    else if (pooling == "mean") config.model.pooling = model::Pooling::mean;
    else throw UsageError("model.pooling must be mean or cls");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bar-level symbolic music embeddings: tokenize / train / probe / report"};
    app.require_subcommand(1);

    std::string workdir = env_or("BAREMBED_WORKDIR", "");
    std::uint64_t seed = std::strtoull(env_or("BAREMBED_SEED", "0").c_str(), nullptr, 10);
    int threads = static_cast<int>(std::strtol(env_or("BAREMBED_THREADS", "1").c_str(), nullptr, 10));
    std::string config_path;
    app.add_option("--workdir", workdir, "base directory for relative paths");
    app.add_option("--seed", seed, "global random seed");
    app.add_option("--threads", threads, "worker threads (tokenize/probe)");
    app.add_option("--config", config_path, "TOML config file");

    // tokenize
    auto* tokenize = app.add_subcommand("tokenize", "encode a directory of MIDI files");
    std::string in_dir, out_corpus, out_labels;
    tokenize->add_option("--in", in_dir, "directory with .mid/.midi files")->required();
    tokenize->add_option("--out", out_corpus, "output corpus.jsonl")->required();
    tokenize->add_option("--labels-out", out_labels, "output labels.jsonl (default: next to corpus)");

    // train
    auto* train_cmd = app.add_subcommand("train", "train an encoder variant on a corpus");
    std::string corpus_path, out_dir, variant_name;
    bool quiet = false;
    train_cmd->add_option("--corpus", corpus_path, "corpus.jsonl")->required();
    train_cmd->add_option("--variant", variant_name, "bert|aug|neighbor|dropout");
    train_cmd->add_option("--out", out_dir, "checkpoint directory")->required();
    train_cmd->add_flag("--quiet", quiet, "suppress progress lines");

    // probe
    auto* probe_cmd = app.add_subcommand("probe", "linear probing over checkpoint layers");
    std::vector<std::string> ckpts;
    std::string probe_corpus, probe_labels, probe_out;
    probe::ProbeOptions probe_options;
    bool sweep_lambda = false;
    probe_cmd->add_option("--ckpt", ckpts, "checkpoint file or directory (repeatable)")->required();
    probe_cmd->add_option("--corpus", probe_corpus, "corpus.jsonl")->required();
    probe_cmd->add_option("--labels", probe_labels, "labels.jsonl")->required();
    probe_cmd->add_option("--out", probe_out, "report directory")->required();
    probe_cmd->add_option("--lambda", probe_options.lambda, "ridge penalty");
    probe_cmd->add_option("--splits", probe_options.n_splits, "seeded probe splits");
    probe_cmd->add_option("--kmeans-k", probe_options.kmeans_k, "clusters (0 = min(100, songs))");
    probe_cmd->add_flag("--sweep-lambda", sweep_lambda, "emit extra reports over a lambda grid");

    // report
    auto* report_cmd = app.add_subcommand("report", "merge probe reports across variants");
    std::vector<std::string> report_dirs;
    std::string report_out;
    report_cmd->add_option("--in", report_dirs, "report directories (repeatable)")->required();
    report_cmd->add_option("--out", report_out, "merged output directory")->required();

    // synth (test corpora; hidden from help)
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    synth_cmd->group("");
    synth::SynthOptions synth_options;
    std::string synth_corpus, synth_labels;
    synth_cmd->add_option("--songs", synth_options.n_songs, "number of songs");
    synth_cmd->add_option("--bars", synth_options.bars_per_song, "bars per song");
    synth_cmd->add_option("--out", synth_corpus, "output corpus.jsonl")->required();
    synth_cmd->add_option("--labels-out", synth_labels, "output labels.jsonl");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*tokenize) {
            cli::TokenizeArgs args;
            args.in_dir = cli::resolve_path(workdir, in_dir);
            args.out_corpus = cli::resolve_path(workdir, out_corpus);
            args.out_labels = cli::resolve_path(workdir, out_labels);
            const auto stats = cli::cmd_tokenize(args);
            std::cout << "tokenized " << stats.files_ok << " files (" << stats.files_skipped
                      << " skipped), " << stats.bars << " bars\n";
        } else if (*train_cmd) {
            cli::TrainArgs args;
            args.corpus_path = cli::resolve_path(workdir, corpus_path);
            args.out_dir = cli::resolve_path(workdir, out_dir);
            args.quiet = quiet;
            args.config.seed = seed;
            if (!config_path.empty())
                apply_train_toml(TomlLite::parse_file(cli::resolve_path(workdir, config_path)), args.config);
            if (!variant_name.empty()) args.config.variant = train::variant_from_string(variant_name);
            cli::cmd_train(args);
        } else if (*probe_cmd) {
            cli::ProbeArgs args;
            for (const auto& c : ckpts) args.checkpoints.push_back(cli::resolve_path(workdir, c));
            args.corpus_path = cli::resolve_path(workdir, probe_corpus);
            args.labels_path = cli::resolve_path(workdir, probe_labels);
            args.out_dir = cli::resolve_path(workdir, probe_out);
            args.options = probe_options;
            args.options.seed = seed;
            args.sweep_lambda = sweep_lambda;
            cli::cmd_probe(args);
        } else if (*report_cmd) {
            cli::ReportArgs args;
            for (const auto& d : report_dirs) args.report_dirs.push_back(cli::resolve_path(workdir, d));
            args.out_dir = cli::resolve_path(workdir, report_out);
            cli::cmd_report(args);
        } else if (*synth_cmd) {
            cli::SynthArgs args;
            args.options = synth_options;
            args.options.seed = seed;
            args.out_corpus = cli::resolve_path(workdir, synth_corpus);
            args.out_labels = cli::resolve_path(workdir, synth_labels);
            cli::cmd_synth(args);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
