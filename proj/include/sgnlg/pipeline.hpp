#pragma once

#include <string>
#include <vector>

#include "sgnlg/dstc8.hpp"
#include "sgnlg/eval_report.hpp"
#include "sgnlg/run_config.hpp"

namespace sgnlg::cli {

struct PreprocessCounters {
    long long dialogs = 0;
    long long system_turns = 0;
    long long span_errors = 0;      // delexicalization mismatches, turn dropped
    long long schema_misses = 0;    // schema lookup failures, turn dropped
    long long render_errors = 0;    // unknown dialogue act, turn dropped
    long long raw_values_kept = 0;  // action values without spans, kept verbatim
    long long duplicates = 0;       // identical references pooled under one MR
};

struct PreprocessResult {
    std::vector<SGNLGRecord> train, dev, test;
    PreprocessCounters counters;
    std::vector<dstc8::SplitStats> stats;
};

// Raw DSTC8 dialogues -> grouped SGNLGRecord files (train/dev/test JSONL),
// statistics (CSV + Markdown), all under cfg.out_dir. The dev split carves
// whole dialogues out of the training set, seeded by cfg.train.seed.
PreprocessResult run_preprocess(const RunConfig& cfg);

// Recomputes statistics from the preprocessed record files.
std::string run_stats(const RunConfig& cfg);

struct TrainSummary {
    std::string family;
    long long instances = 0;  // (record, reference) pairs per epoch
    int epochs = 0;
    double first_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
    std::string checkpoint_path;
};

TrainSummary run_train(const RunConfig& cfg);

struct GenerateSummary {
    std::string family;
    std::string decode_mode;
    long long records = 0;
    std::string output_path;
};

GenerateSummary run_generate(const RunConfig& cfg);

eval::EvalReport run_evaluate(const RunConfig& cfg);

// Side-by-side Markdown comparison of previously written eval JSON reports,
// plus a per-service reference-count distribution CSV; both land in
// cfg.out_dir and the Markdown is returned.
std::string run_report(const RunConfig& cfg, const std::vector<std::string>& eval_json_paths,
                       const std::vector<std::string>& labels);

// Clones the public corpus repository into dest_dir (requires network and
// git). Throws on a nonzero exit.
void download_dstc8(const std::string& dest_dir);

}  // namespace sgnlg::cli
