#pragma once

#include <string>
#include <vector>

#include "sgnlg/gen_common.hpp"

namespace sgnlg::cli {

// One declarative config per run: flat key namespace, loadable from JSON,
// overridable by CLI flags. The FNV-1a hash of the canonical JSON dump,
// minus filesystem locations, is stamped into every artifact the run
// produces.
struct RunConfig {
    // Paths.
    std::string raw_train_dir;  // DSTC8-format dialogue dir (dialogues_*.json + schema.json)
    std::string raw_test_dir;
    std::string out_dir = "out";      // preprocessed records and reports
    std::string cache_dir = ".cache"; // sentence-embedding cache
    std::string checkpoint = "out/model.ckpt";
    std::string generations = "out/generations.jsonl";
    std::string rules_file;           // optional NL-MR rule overrides

    // Preprocessing.
    double dev_fraction = 0.1;
    bool dedupe_references = false;

    // Model and training (flattened into the same namespace).
    gen::TrainConfig train;

    // Decoding.
    std::string decode_mode = "beam";  // beam | topk | greedy

    // Desk-scale guard: cap on (record, reference) training instances and on
    // generated test records; 0 = no cap.
    long long limit = 0;

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig from_file(const std::string& path);
    void save(const std::string& path) const;

    // Hash of the canonical dump; stable across key order.
    std::string hash() const;
};

}  // namespace sgnlg::cli
