#pragma once

#include <string>
#include <vector>

#include "sgnlg/metrics.hpp"

namespace sgnlg::eval {

// One generated output with everything needed to score it.
struct InstanceEval {
    std::string service;
    std::string split;  // seen | partially_unseen | fully_unseen
    std::vector<MRTriple> mr;
    std::vector<std::string> output_tokens;
    std::vector<std::vector<std::string>> reference_tokens;
};

struct ServiceRow {
    std::string service;
    std::string split;
    long long instances = 0;
    long long references = 0;
    double bleu = 0.0;
    double meteor = 0.0;
    double ser = 0.0;  // mean over instances with defined SER
    double slot_match = 0.0;
    long long ser_excluded = 0;
};

// Reference-count-weighted means over the split's service rows.
struct SplitRow {
    std::string split;
    long long services = 0;
    long long instances = 0;
    long long references = 0;
    double bleu = 0.0;
    double meteor = 0.0;
    double ser = 0.0;
    double slot_match = 0.0;
};

struct EvalReport {
    long long instances = 0;
    double bleu = 0.0;
    double meteor = 0.0;
    double ser = 0.0;
    double slot_match = 0.0;
    SlotErrorBreakdown totals;
    long long ser_excluded = 0;
    DiversityReport div;
    std::vector<ServiceRow> services;
    std::vector<SplitRow> splits;
    std::string config_hash;
    long long seed = 0;
};

// Scores every instance (METEOR, SER breakdown, slot match) and folds the
// results into corpus, per-service, and per-split figures. Novelty compares
// against `train_references`.
EvalReport aggregate_report(const std::vector<InstanceEval>& instances,
                            const std::vector<std::string>& train_references);

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string report_to_markdown(const EvalReport& report);

}  // namespace sgnlg::eval
