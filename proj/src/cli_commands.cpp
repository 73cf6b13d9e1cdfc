#include "barembed/cli_commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "barembed/checkpoint.hpp"
#include "barembed/errors.hpp"
#include "barembed/manifest.hpp"
#include "barembed/midi.hpp"

namespace fs = std::filesystem;

namespace barembed::cli {

std::string resolve_path(const std::string& workdir, const std::string& path) {
    if (workdir.empty() || path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(workdir) / p).string();
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return bytes;
}

std::string checkpoint_file(const std::string& entry) {
    if (fs::is_directory(entry)) return (fs::path(entry) / "model.bin").string();
    return entry;
}

std::string checkpoint_label(const std::string& entry) {
    if (fs::is_directory(entry)) {
        try {
            const auto manifest = RunManifest::read(entry);
            const auto it = manifest.fields.find("variant");
            if (it != manifest.fields.end()) return it->second;
        } catch (const DataError&) {
        }
        return fs::path(entry).filename().string();
    }
    return fs::path(entry).stem().string();
}

} // namespace

TokenizeStats cmd_tokenize(const TokenizeArgs& args) {
    if (!fs::exists(args.in_dir) || !fs::is_directory(args.in_dir))
        throw DataError("input directory does not exist: " + args.in_dir);

    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(args.in_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".mid" || ext == ".midi") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());

    Corpus corpus;
    std::vector<labels::BarLabels> label_rows;
    TokenizeStats stats;
    for (const auto& file : files) {
        try {
            const auto bytes = read_file_bytes(file);
            const auto song = midi::parse_smf(bytes);
            auto [notes, tempo] = midi::extract_notes(song);
            std::string song_id = fs::relative(file, args.in_dir).replace_extension("").string();
            std::replace(song_id.begin(), song_id.end(), '/', '_');
            const auto bars = remi::encode_song(song_id, notes, tempo);
            for (const auto& bar : bars) {
                std::vector<midi::NoteEvent> bar_notes;
                const Fraction lo(4 * bar.bar_index);
                const Fraction hi(4 * (bar.bar_index + 1));
                for (const auto& n : notes)
                    if (n.onset >= lo && n.onset < hi) {
                        auto shifted = n;
                        shifted.onset = n.onset - lo;
                        bar_notes.push_back(shifted);
                    }
                label_rows.push_back(labels::label_bar(bar, bar_notes));
                corpus.push(bar);
                ++stats.bars;
            }
            ++stats.files_ok;
        } catch (const DataError& e) {
            std::cerr << "skip " << file << ": " << e.what() << "\n";
            ++stats.files_skipped;
        }
    }
    if (files.empty()) std::cerr << "warning: no .mid/.midi files under " << args.in_dir << "\n";

    const std::string labels_path = args.out_labels.empty()
        ? (fs::path(args.out_corpus).parent_path() / "labels.jsonl").string()
        : args.out_labels;
    if (const auto parent = fs::path(args.out_corpus).parent_path(); !parent.empty())
        fs::create_directories(parent);
    write_corpus_jsonl(corpus, args.out_corpus);
    labels::write_labels_jsonl(label_rows, labels_path);

    RunManifest manifest;
    manifest.command = "tokenize";
    manifest.fields["in_dir"] = args.in_dir;
    manifest.fields["corpus_hash"] = hash_hex(fnv1a_file(args.out_corpus));
    manifest.fields["labels_hash"] = hash_hex(fnv1a_file(labels_path));
    manifest.fields["files_ok"] = std::to_string(stats.files_ok);
    manifest.fields["files_skipped"] = std::to_string(stats.files_skipped);
    const auto dir = fs::path(args.out_corpus).parent_path();
    manifest.write(dir.empty() ? "." : dir.string());
    return stats;
}

void write_train_log(const train::TrainResult& result, const train::TrainConfig& config,
                     const std::string& dir) {
    {
        std::ofstream out(fs::path(dir) / "train_log.csv", std::ios::binary);
        out << "# ntxent_acc: top-1 in-batch retrieval of the positive among 2N-1 candidates\n";
        out << "step,mlm_loss,ntxent_loss,total,mlm_acc,ntxent_acc\n";
        for (std::size_t i = 0; i < result.train_log.size(); ++i) {
            if (config.log_every > 1 && (i + 1) % config.log_every != 0 &&
                i + 1 != result.train_log.size())
                continue;
            const auto& r = result.train_log[i];
            out << (i + 1) << "," << format_double(r.mlm_loss) << "," << format_double(r.ntxent_loss)
                << "," << format_double(r.total) << "," << format_double(r.mlm_accuracy) << ","
                << format_double(r.ntxent_accuracy) << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "val_log.csv", std::ios::binary);
        out << "step,mlm_loss,ntxent_loss,total,mlm_acc,ntxent_acc\n";
        for (const auto& [step, r] : result.val_log)
            out << step << "," << format_double(r.mlm_loss) << "," << format_double(r.ntxent_loss)
                << "," << format_double(r.total) << "," << format_double(r.mlm_accuracy) << ","
                << format_double(r.ntxent_accuracy) << "\n";
    }
}

void cmd_train(const TrainArgs& args) {
    const Corpus corpus = read_corpus_jsonl(args.corpus_path);
    fs::create_directories(args.out_dir);

    const auto on_step = args.quiet
        ? train::StepCallback()
        : [&](int step, const objectives::LossReport& r) {
              if ((step + 1) % 50 == 0 || step == 0)
                  std::cout << "step " << (step + 1) << "/" << args.config.steps
                            << " mlm " << r.mlm_loss << " acc " << r.mlm_accuracy
                            << (args.config.contrastive()
                                    ? " ntxent " + format_double(r.ntxent_loss)
                                    : std::string())
                            << "\n";
          };

    const auto result = train::train(corpus, args.config, on_step);
    save_checkpoint(result.params, args.config.model, (fs::path(args.out_dir) / "model.bin").string());
    write_train_log(result, args.config, args.out_dir);

    RunManifest manifest;
    manifest.command = "train";
    manifest.fields["variant"] = train::to_string(args.config.variant);
    manifest.fields["seed"] = std::to_string(args.config.seed);
    manifest.fields["steps"] = std::to_string(args.config.steps);
    manifest.fields["corpus_hash"] = hash_hex(fnv1a_file(args.corpus_path));
    manifest.fields["checkpoint_hash"] =
        hash_hex(fnv1a_file((fs::path(args.out_dir) / "model.bin").string()));
    manifest.write(args.out_dir);

    if (!result.train_log.empty()) {
        const auto& last = result.train_log.back();
        std::cout << "final train: mlm_acc " << format_double(last.mlm_accuracy);
        if (args.config.contrastive())
            std::cout << " ntxent_acc " << format_double(last.ntxent_accuracy);
        std::cout << "\n";
    }
    if (!result.val_log.empty()) {
        const auto& last = result.val_log.back().second;
        std::cout << "final val:   mlm_acc " << format_double(last.mlm_accuracy);
        if (args.config.contrastive())
            std::cout << " ntxent_acc " << format_double(last.ntxent_accuracy);
        std::cout << "\n";
    }
}

void write_probe_report(const probe::ProbeReport& report, const std::string& variant_label,
                        const std::string& dir, bool first_checkpoint) {
    fs::create_directories(dir);
    const std::string suffix = first_checkpoint ? "" : "_" + variant_label;
    {
        std::ofstream out(fs::path(dir) / ("grid" + suffix + ".csv"), std::ios::binary);
        out << "# multilabel: macro-F1 over labels with a positive test example; threshold 0\n";
        out << "# regression: mean absolute error in raw units (velocity 1-127, duration beats)\n";
        out << "# sc: mean per-song entropy of k-means assignments, normalized by ln K\n";
        out << "# ridge lambda: " << format_double(report.options.lambda)
            << "  splits: " << report.options.n_splits << "\n";
        out << "layer";
        for (const char* m : probe::kMetricNames) out << "," << m;
        out << "\n";
        for (int l = 0; l <= report.num_layers; ++l) {
            out << l;
            for (int m = 0; m < probe::kNumMetrics; ++m)
                out << "," << format_double(report.grid(l, m));
            out << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / ("summary" + suffix + ".csv"), std::ios::binary);
        out << "metric,direction,best_layer,best_score\n";
        const auto layers = report.best_layers();
        const auto scores = report.best_scores();
        for (int m = 0; m < probe::kNumMetrics; ++m)
            out << probe::kMetricNames[m] << "," << (probe::kHigherBetter[m] ? "up" : "down") << ","
                << layers[m] << "," << format_double(scores[m]) << "\n";
    }
    {
        const auto path = fs::path(dir) / "last_layer.csv";
        const bool fresh = first_checkpoint || !fs::exists(path);
        std::ofstream out(path, fresh ? std::ios::binary : (std::ios::binary | std::ios::app));
        if (fresh) {
            out << "checkpoint";
            for (const char* m : probe::kMetricNames) out << "," << m << "," << m << "_se";
            out << "\n";
        }
        const auto mean = report.last_layer_mean();
        const auto se = report.last_layer_stderr();
        out << variant_label;
        for (int m = 0; m < probe::kNumMetrics; ++m)
            out << "," << format_double(mean[m]) << "," << format_double(se[m]);
        out << "\n";
    }
}

void cmd_probe(const ProbeArgs& args) {
    if (args.checkpoints.empty()) throw UsageError("probe needs at least one --ckpt");
    const Corpus corpus = read_corpus_jsonl(args.corpus_path);
    const auto label_rows = labels::read_labels_jsonl(args.labels_path);
    fs::create_directories(args.out_dir);

    int expected_layers = -1;
    for (std::size_t i = 0; i < args.checkpoints.size(); ++i) {
        auto [params, config] = train::load_checkpoint(checkpoint_file(args.checkpoints[i]));
        if (expected_layers < 0) expected_layers = config.num_layers;
        else if (expected_layers != config.num_layers)
            throw MixedConfig("checkpoints disagree on layer count");
        const std::string label = checkpoint_label(args.checkpoints[i]);

        if (args.sweep_lambda) {
            for (double lambda : {0.01, 0.1, 1.0, 10.0, 100.0}) {
                auto options = args.options;
                options.lambda = lambda;
                const auto report = probe::probe_all_layers(params, config, corpus, label_rows, options);
                std::ostringstream tag;
                tag << label << "_lambda" << format_double(lambda);
                write_probe_report(report, tag.str(), args.out_dir, false);
            }
        }
        const auto report = probe::probe_all_layers(params, config, corpus, label_rows, args.options);
        write_probe_report(report, label, args.out_dir, i == 0);
    }

    RunManifest manifest;
    manifest.command = "probe";
    manifest.fields["corpus_hash"] = hash_hex(fnv1a_file(args.corpus_path));
    manifest.fields["labels_hash"] = hash_hex(fnv1a_file(args.labels_path));
    manifest.fields["seed"] = std::to_string(args.options.seed);
    manifest.fields["grid_hash"] = hash_hex(fnv1a_file((fs::path(args.out_dir) / "grid.csv").string()));
    manifest.write(args.out_dir);
}

namespace {

struct LastLayerRow {
    std::string label;
    std::array<double, probe::kNumMetrics> mean;
    std::array<double, probe::kNumMetrics> se;
};

std::vector<LastLayerRow> read_last_layer_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<LastLayerRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) { header = false; continue; }
        std::istringstream ss(line);
        LastLayerRow row;
        std::string cell;
        if (!std::getline(ss, row.label, ',')) throw DataError("bad row in " + path);
        for (int m = 0; m < probe::kNumMetrics; ++m) {
            if (!std::getline(ss, cell, ',')) throw DataError("bad row in " + path);
            row.mean[m] = std::stod(cell);
            if (!std::getline(ss, cell, ',')) throw DataError("bad row in " + path);
            row.se[m] = std::stod(cell);
        }
        rows.push_back(row);
    }
    return rows;
}

int count_grid_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    int rows = 0;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) { header = false; continue; }
        ++rows;
    }
    return rows;
}

} // namespace

void cmd_report(const ReportArgs& args) {
    if (args.report_dirs.empty()) throw UsageError("report needs at least one directory");
    fs::create_directories(args.out_dir);

    int expected_rows = -1;
    std::vector<LastLayerRow> rows;
    for (const auto& dir : args.report_dirs) {
        const int grid_rows = count_grid_rows((fs::path(dir) / "grid.csv").string());
        if (expected_rows < 0) expected_rows = grid_rows;
        else if (grid_rows != expected_rows)
            throw MixedConfig("report dirs have different layer counts");
        for (auto& row : read_last_layer_csv((fs::path(dir) / "last_layer.csv").string()))
            rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("no rows found in the given report dirs");

    std::array<std::size_t, probe::kNumMetrics> best{};
    for (int m = 0; m < probe::kNumMetrics; ++m)
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const bool better = probe::kHigherBetter[m] ? rows[r].mean[m] > rows[best[m]].mean[m]
                                                        : rows[r].mean[m] < rows[best[m]].mean[m];
            if (better) best[m] = r;
        }

    {
        std::ofstream out(fs::path(args.out_dir) / "merged.csv", std::ios::binary);
        out << "variant";
        for (int m = 0; m < probe::kNumMetrics; ++m)
            out << "," << probe::kMetricNames[m] << (probe::kHigherBetter[m] ? "_up" : "_down")
                << "," << probe::kMetricNames[m] << "_se";
        out << "\n";
        for (const auto& row : rows) {
            out << row.label;
            for (int m = 0; m < probe::kNumMetrics; ++m)
                out << "," << format_double(row.mean[m]) << "," << format_double(row.se[m]);
            out << "\n";
        }
        out << "best";
        for (int m = 0; m < probe::kNumMetrics; ++m) out << "," << rows[best[m]].label << ",";
        out << "\n";
    }
    {
        std::ofstream out(fs::path(args.out_dir) / "merged.txt", std::ios::binary);
        out << "variant          ";
        for (int m = 0; m < probe::kNumMetrics; ++m) {
            char cell[32];
            std::snprintf(cell, sizeof(cell), "%6s%s", probe::kMetricNames[m],
                          probe::kHigherBetter[m] ? "(^)" : "(v)");
            out << cell << " ";
        }
        out << "\n";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            char label[32];
            std::snprintf(label, sizeof(label), "%-16s", rows[r].label.c_str());
            out << label << " ";
            for (int m = 0; m < probe::kNumMetrics; ++m) {
                char cell[32];
                std::snprintf(cell, sizeof(cell), "%8.3f%s", rows[r].mean[m],
                              best[m] == r ? "*" : " ");
                out << cell << " ";
            }
            out << "\n";
        }
        out << "(* best per column)\n";
    }

    RunManifest manifest;
    manifest.command = "report";
    manifest.fields["inputs"] = std::to_string(args.report_dirs.size());
    manifest.write(args.out_dir);
}

void cmd_synth(const SynthArgs& args) {
    const auto data = synth::make_corpus(args.options);
    if (const auto parent = fs::path(args.out_corpus).parent_path(); !parent.empty())
        fs::create_directories(parent);
    write_corpus_jsonl(data.corpus, args.out_corpus);
    const std::string labels_path = args.out_labels.empty()
        ? (fs::path(args.out_corpus).parent_path() / "labels.jsonl").string()
        : args.out_labels;
    labels::write_labels_jsonl(data.labels, labels_path);

    RunManifest manifest;
    manifest.command = "synth";
    manifest.fields["seed"] = std::to_string(args.options.seed);
    manifest.fields["songs"] = std::to_string(args.options.n_songs);
    manifest.fields["corpus_hash"] = hash_hex(fnv1a_file(args.out_corpus));
    const auto dir = fs::path(args.out_corpus).parent_path();
    manifest.write(dir.empty() ? "." : dir.string());
}

} // namespace barembed::cli
