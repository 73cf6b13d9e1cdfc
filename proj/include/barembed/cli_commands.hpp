#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "barembed/probe.hpp"
#include "barembed/synth.hpp"
#include "barembed/trainer.hpp"

namespace barembed::cli {

struct TokenizeArgs {
    std::string in_dir;
    std::string out_corpus;
    std::string out_labels; // empty -> labels.jsonl next to out_corpus
};

struct TokenizeStats {
    int files_ok = 0;
    int files_skipped = 0;
    std::size_t bars = 0;
};

TokenizeStats cmd_tokenize(const TokenizeArgs& args);

struct TrainArgs {
    std::string corpus_path;
    std::string out_dir;
    train::TrainConfig config;
    bool quiet = false;
};

void cmd_train(const TrainArgs& args);

struct ProbeArgs {
    std::vector<std::string> checkpoints; // file or directory per entry
    std::string corpus_path;
    std::string labels_path;
    std::string out_dir;
    probe::ProbeOptions options;
    bool sweep_lambda = false;
};

void cmd_probe(const ProbeArgs& args);

struct ReportArgs {
    std::vector<std::string> report_dirs;
    std::string out_dir;
};

void cmd_report(const ReportArgs& args);

struct SynthArgs {
    synth::SynthOptions options;
    std::string out_corpus;
    std::string out_labels;
};

void cmd_synth(const SynthArgs& args);

// Shared helpers (also used by tests).
std::string resolve_path(const std::string& workdir, const std::string& path);
std::string format_double(double v);
void write_train_log(const train::TrainResult& result, const train::TrainConfig& config,
                     const std::string& dir);
void write_probe_report(const probe::ProbeReport& report, const std::string& variant_label,
                        const std::string& dir, bool first_checkpoint);

} // namespace barembed::cli
