#include "sgnlg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "sgnlg/porter.hpp"

namespace sgnlg::eval {

namespace {

std::map<std::string, long long> output_placeholder_counts(
    const std::vector<std::string>& tokens) {
    std::map<std::string, long long> counts;
    for (const auto& tok : tokens)
        if (is_placeholder_token(tok)) ++counts[normalize_placeholder(tok)];
    return counts;
}

std::map<std::string, long long> expected_placeholder_counts(const std::vector<MRTriple>& mr) {
    std::map<std::string, long long> counts;
    for (const auto& p : explicit_slots(mr)) ++counts[p];
    return counts;
}

}  // namespace

double SlotErrorBreakdown::ser() const {
    if (!defined()) return 0.0;
    return static_cast<double>(deletions + repetitions + hallucinations) /
           static_cast<double>(total_explicit_slots);
}

SlotErrorBreakdown ser_breakdown(const std::vector<std::string>& output_tokens,
                                 const std::vector<MRTriple>& mr) {
    SlotErrorBreakdown b;
    auto expected = expected_placeholder_counts(mr);
    auto got = output_placeholder_counts(output_tokens);
    for (const auto& [p, n] : expected) {
        b.total_explicit_slots += n;
        auto it = got.find(p);
        long long have = it == got.end() ? 0 : it->second;
        if (have < n) b.deletions += n - have;
        if (have > n) b.repetitions += have - n;
    }
    for (const auto& [p, n] : got)
        if (!expected.count(p)) b.hallucinations += n;
    return b;
}

SlotErrorBreakdown ser_breakdown(const std::string& output, const std::vector<MRTriple>& mr) {
    return ser_breakdown(tokenize(output), mr);
}

bool slots_match(const std::vector<std::string>& output_tokens, const std::vector<MRTriple>& mr) {
    return output_placeholder_counts(output_tokens) == expected_placeholder_counts(mr);
}

double slot_match_rate(const std::vector<std::vector<std::string>>& outputs,
                       const std::vector<std::vector<MRTriple>>& mrs) {
    if (outputs.empty()) return 0.0;
    long long hits = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i)
        if (slots_match(outputs[i], mrs[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(outputs.size());
}

// ---------------------------------------------------------------------------
// BLEU

namespace {

using NgramCounts = std::map<std::vector<std::string>, long long>;

NgramCounts ngram_counts(const std::vector<std::string>& tokens, int n) {
    NgramCounts counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                          tokens.begin() + static_cast<long>(i) + n)];
    return counts;
}

// Closest reference length; ties go to the shorter reference.
long long best_match_length(std::size_t out_len,
                            const std::vector<std::vector<std::string>>& refs) {
    long long best = 0;
    long long best_diff = -1;
    for (const auto& ref : refs) {
        long long len = static_cast<long long>(ref.size());
        long long diff = std::llabs(len - static_cast<long long>(out_len));
        if (best_diff < 0 || diff < best_diff || (diff == best_diff && len < best)) {
            best = len;
            best_diff = diff;
        }
    }
    return best;
}

}  // namespace

double corpus_bleu(const std::vector<std::vector<std::string>>& outputs,
                   const std::vector<std::vector<std::vector<std::string>>>& references,
                   int max_n) {
    std::vector<long long> clipped(static_cast<std::size_t>(max_n), 0);
    std::vector<long long> total(static_cast<std::size_t>(max_n), 0);
    long long out_len = 0, ref_len = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const auto& out = outputs[i];
        const auto& refs = references[i];
        out_len += static_cast<long long>(out.size());
        ref_len += best_match_length(out.size(), refs);
        for (int n = 1; n <= max_n; ++n) {
            auto out_counts = ngram_counts(out, n);
            NgramCounts max_ref;
            for (const auto& ref : refs)
                for (const auto& [gram, c] : ngram_counts(ref, n))
                    max_ref[gram] = std::max(max_ref[gram], c);
            for (const auto& [gram, c] : out_counts) {
                total[static_cast<std::size_t>(n - 1)] += c;
                auto it = max_ref.find(gram);
                if (it != max_ref.end())
                    clipped[static_cast<std::size_t>(n - 1)] += std::min(c, it->second);
            }
        }
    }
    double log_sum = 0.0;
    for (int n = 0; n < max_n; ++n) {
        if (total[static_cast<std::size_t>(n)] == 0 || clipped[static_cast<std::size_t>(n)] == 0)
            return 0.0;
        log_sum += std::log(static_cast<double>(clipped[static_cast<std::size_t>(n)]) /
                            static_cast<double>(total[static_cast<std::size_t>(n)]));
    }
    double bp = 1.0;
    if (out_len == 0) return 0.0;
    if (out_len < ref_len)
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(out_len));
    return bp * std::exp(log_sum / max_n);
}

double sentence_bleu(const std::vector<std::string>& output,
                     const std::vector<std::vector<std::string>>& references, int max_n) {
    if (output.empty()) return 0.0;
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        auto out_counts = ngram_counts(output, n);
        NgramCounts max_ref;
        for (const auto& ref : references)
            for (const auto& [gram, c] : ngram_counts(ref, n))
                max_ref[gram] = std::max(max_ref[gram], c);
        long long clipped = 0, total = 0;
        for (const auto& [gram, c] : out_counts) {
            total += c;
            auto it = max_ref.find(gram);
            if (it != max_ref.end()) clipped += std::min(c, it->second);
        }
        double p;
        if (n == 1) {
            if (total == 0 || clipped == 0) return 0.0;
            p = static_cast<double>(clipped) / static_cast<double>(total);
        } else {
            p = static_cast<double>(clipped + 1) / static_cast<double>(total + 1);
        }
        log_sum += std::log(p);
    }
    long long ref_len = best_match_length(output.size(), references);
    double bp = 1.0;
    if (static_cast<long long>(output.size()) < ref_len)
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(output.size()));
    return bp * std::exp(log_sum / max_n);
}

// ---------------------------------------------------------------------------
// METEOR

namespace {

struct Alignment {
    long long matches = 0;
    long long chunks = 0;
};

// Two-stage one-to-one alignment: exact matches first, then Porter-stem
// matches over the leftovers; each hypothesis token takes the leftmost
// unmatched reference token. Chunks are maximal runs where both sides
// advance by one.
Alignment align_meteor(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    std::vector<int> hyp_to_ref(hyp.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);
    for (std::size_t i = 0; i < hyp.size(); ++i)
        for (std::size_t j = 0; j < ref.size(); ++j)
            if (!ref_used[j] && hyp[i] == ref[j]) {
                hyp_to_ref[i] = static_cast<int>(j);
                ref_used[j] = true;
                break;
            }
    std::vector<std::string> hyp_stem(hyp.size()), ref_stem(ref.size());
    for (std::size_t i = 0; i < hyp.size(); ++i) hyp_stem[i] = porter_stem(hyp[i]);
    for (std::size_t j = 0; j < ref.size(); ++j) ref_stem[j] = porter_stem(ref[j]);
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        if (hyp_to_ref[i] >= 0) continue;
        for (std::size_t j = 0; j < ref.size(); ++j)
            if (!ref_used[j] && hyp_stem[i] == ref_stem[j]) {
                hyp_to_ref[i] = static_cast<int>(j);
                ref_used[j] = true;
                break;
            }
    }
    Alignment a;
    int prev_ref = -2;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        if (hyp_to_ref[i] < 0) {
            prev_ref = -2;
            continue;
        }
        ++a.matches;
        if (hyp_to_ref[i] != prev_ref + 1) ++a.chunks;
        prev_ref = hyp_to_ref[i];
    }
    return a;
}

}  // namespace

double meteor(const std::vector<std::string>& output, const std::vector<std::string>& reference,
              const MeteorConfig& cfg) {
    if (output.empty() || reference.empty()) return 0.0;
    Alignment a = align_meteor(output, reference);
    if (a.matches == 0) return 0.0;
    double m = static_cast<double>(a.matches);
    double precision = m / static_cast<double>(output.size());
    double recall = m / static_cast<double>(reference.size());
    double fmean = precision * recall / (cfg.alpha * precision + (1.0 - cfg.alpha) * recall);
    double penalty =
        cfg.gamma * std::pow(static_cast<double>(a.chunks) / m, cfg.beta);
    return fmean * (1.0 - penalty);
}

double meteor_multi(const std::vector<std::string>& output,
                    const std::vector<std::vector<std::string>>& references,
                    const MeteorConfig& cfg) {
    double best = 0.0;
    for (const auto& ref : references) best = std::max(best, meteor(output, ref, cfg));
    return best;
}

double mean_meteor(const std::vector<std::vector<std::string>>& outputs,
                   const std::vector<std::vector<std::vector<std::string>>>& references,
                   const MeteorConfig& cfg) {
    if (outputs.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i)
        sum += meteor_multi(outputs[i], references[i], cfg);
    return sum / static_cast<double>(outputs.size());
}

// ---------------------------------------------------------------------------
// Diversity

std::string normalize_template_text(const std::string& text) {
    auto tokens = tokenize(text);
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        if (is_placeholder_token(tokens[i]))
            out += placeholder_base(tokens[i]);
        else
            out += tokens[i];
    }
    return out;
}

DiversityReport diversity(const std::vector<std::vector<std::string>>& output_tokens,
                          const std::vector<std::string>& train_references) {
    DiversityReport rep;
    std::set<std::vector<std::string>> grams1, grams2;
    long long total1 = 0, total2 = 0;
    for (const auto& out : output_tokens) {
        for (const auto& [gram, c] : ngram_counts(out, 1)) {
            grams1.insert(gram);
            total1 += c;
        }
        for (const auto& [gram, c] : ngram_counts(out, 2)) {
            grams2.insert(gram);
            total2 += c;
        }
    }
    rep.vocab1 = static_cast<long long>(grams1.size());
    rep.vocab2 = static_cast<long long>(grams2.size());
    rep.distinct1 = total1 ? static_cast<double>(rep.vocab1) / static_cast<double>(total1) : 0.0;
    rep.distinct2 = total2 ? static_cast<double>(rep.vocab2) / static_cast<double>(total2) : 0.0;

    std::set<std::string> train_norm, train_raw;
    for (const auto& ref : train_references) {
        train_norm.insert(normalize_template_text(ref));
        auto toks = tokenize(ref);
        std::string joined;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i > 0) joined += ' ';
            joined += toks[i];
        }
        train_raw.insert(joined);
    }
    std::set<std::string> out_norm, out_raw;
    for (const auto& out : output_tokens) {
        std::string joined;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (i > 0) joined += ' ';
            joined += out[i];
        }
        out_raw.insert(joined);
        out_norm.insert(normalize_template_text(joined));
    }
    rep.distinct_outputs = static_cast<long long>(out_norm.size());
    if (!out_norm.empty()) {
        long long novel = 0;
        for (const auto& s : out_norm)
            if (!train_norm.count(s)) ++novel;
        rep.novelty = static_cast<double>(novel) / static_cast<double>(out_norm.size());
    }
    if (!out_raw.empty()) {
        long long novel = 0;
        for (const auto& s : out_raw)
            if (!train_raw.count(s)) ++novel;
        rep.novelty_raw = static_cast<double>(novel) / static_cast<double>(out_raw.size());
    }
    return rep;
}

}  // namespace sgnlg::eval
