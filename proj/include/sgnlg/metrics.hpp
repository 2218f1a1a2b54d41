#pragma once

#include <string>
#include <vector>

#include "sgnlg/schema.hpp"

namespace sgnlg::eval {

// ---------------------------------------------------------------------------
// Slot error rate and slot match

struct SlotErrorBreakdown {
    long long deletions = 0;
    long long repetitions = 0;
    long long hallucinations = 0;
    long long total_explicit_slots = 0;

    // SER is undefined when the MR has no explicit slots; such instances are
    // excluded from corpus means and counted separately.
    bool defined() const { return total_explicit_slots > 0; }
    double ser() const;
};

SlotErrorBreakdown ser_breakdown(const std::vector<std::string>& output_tokens,
                                 const std::vector<MRTriple>& mr);
SlotErrorBreakdown ser_breakdown(const std::string& output, const std::vector<MRTriple>& mr);

bool slots_match(const std::vector<std::string>& output_tokens, const std::vector<MRTriple>& mr);
double slot_match_rate(const std::vector<std::vector<std::string>>& outputs,
                       const std::vector<std::vector<MRTriple>>& mrs);

// ---------------------------------------------------------------------------
// BLEU

// Corpus BLEU-4: clipped modified n-gram precisions pooled over the corpus,
// geometric mean, brevity penalty against the closest reference length
// (ties resolved toward the shorter reference). Any zero pooled precision
// zeroes the score; no smoothing at corpus level.
double corpus_bleu(const std::vector<std::vector<std::string>>& outputs,
                   const std::vector<std::vector<std::vector<std::string>>>& references,
                   int max_n = 4);

// Per-sentence diagnostic with add-one smoothing on higher-order precisions.
double sentence_bleu(const std::vector<std::string>& output,
                     const std::vector<std::vector<std::string>>& references, int max_n = 4);

// ---------------------------------------------------------------------------
// METEOR (exact + Porter-stem matching)

struct MeteorConfig {
    double alpha = 0.9;  // precision weight in the harmonic mean
    double beta = 3.0;   // penalty exponent
    double gamma = 0.5;  // penalty weight
};

// Single-reference score. Unigrams align in two deterministic stages (exact,
// then stem), each greedy left-to-right to the leftmost unmatched reference
// token; the chunk count is the number of maximal monotone contiguous runs.
double meteor(const std::vector<std::string>& output, const std::vector<std::string>& reference,
              const MeteorConfig& cfg = {});
// Multi-reference: best reference wins.
double meteor_multi(const std::vector<std::string>& output,
                    const std::vector<std::vector<std::string>>& references,
                    const MeteorConfig& cfg = {});
double mean_meteor(const std::vector<std::vector<std::string>>& outputs,
                   const std::vector<std::vector<std::vector<std::string>>>& references,
                   const MeteorConfig& cfg = {});

// ---------------------------------------------------------------------------
// Diversity and novelty

struct DiversityReport {
    long long vocab1 = 0;  // distinct unigrams
    long long vocab2 = 0;  // distinct bigrams
    double distinct1 = 0.0;
    double distinct2 = 0.0;
    double novelty = 0.0;      // after placeholder-index normalization
    double novelty_raw = 0.0;  // raw-string uniqueness, reported alongside
    long long distinct_outputs = 0;
};

// Placeholder-index normalization for novelty: every placeholder token loses
// its index ($date_3 -> $date); other tokens pass through. Returns the
// space-joined normalized token sequence.
std::string normalize_template_text(const std::string& text);

DiversityReport diversity(const std::vector<std::vector<std::string>>& output_tokens,
                          const std::vector<std::string>& train_references);

}  // namespace sgnlg::eval
