#pragma once

// Flat encoding of a SchemaInstance: one timestep per MR triple carrying
// [act | slot | value | service | intent] symbolic segments plus
// [service description | intent description | slot description] sentence
// segments, followed by the encoded NL-MR (a single pooled timestep by
// default, or one timestep per NL-MR token). Every timestep shares one
// width: 5 * symbolic_dim + 4 * sentence_dim; a segment that does not apply
// at a timestep is zero.

#include <array>
#include <string>
#include <vector>

#include "sgnlg/schema.hpp"
#include "sgnlg/sentence_encoder.hpp"
#include "sgnlg/vocab.hpp"

namespace sgnlg {

// Which schema enrichments feed the encoder; the MR core (act, slot, value)
// is always on. mr_only() disables all of them.
struct FeatureFlags {
    bool service = true;
    bool service_description = true;
    bool intent = true;
    bool intent_description = true;
    bool slot_descriptions = true;
    bool nl_mr = true;

    static FeatureFlags full() { return {}; }
    static FeatureFlags mr_only() { return {false, false, false, false, false, false}; }

    bool operator==(const FeatureFlags&) const = default;
};

FeatureFlags features_from_list(const std::vector<std::string>& enabled);
std::vector<std::string> features_to_list(const FeatureFlags& f);

enum class NlMrMode { kPooled, kTokens };
NlMrMode nl_mr_mode_from_name(const std::string& name);
std::string nl_mr_mode_name(NlMrMode m);

struct EncoderConfig {
    int symbolic_dim = 64;
    NlMrMode nl_mr_mode = NlMrMode::kPooled;
    FeatureFlags features;
};

// Symbolic segments carry vocab ids; kZeroSegment renders as zeros (masked
// or not applicable). Sentence segments are stored as vectors, empty when
// zero. copy_token names the source token copyable from this timestep
// (the triple's value token, or a placeholder token of the NL-MR in token
// mode); empty when nothing is copyable.
struct EncodedStep {
    static constexpr int kZeroSegment = -1;
    std::array<int, 5> sym = {kZeroSegment, kZeroSegment, kZeroSegment, kZeroSegment,
                              kZeroSegment};
    std::array<std::vector<double>, 4> sent;
    std::string copy_token;
};

struct EncodedSchema {
    std::vector<EncodedStep> steps;
    int symbolic_dim = 0;
    int sentence_dim = 0;
    int mr_steps = 0;  // leading timesteps that correspond to MR triples

    int width() const { return 5 * symbolic_dim + 4 * sentence_dim; }
};

// Materializes one timestep as a dense vector given a symbolic embedding
// table (row per vocab id, symbolic_dim wide).
std::vector<double> materialize_step(const EncodedSchema& enc, int step,
                                     const std::vector<std::vector<double>>& sym_table);

class FlatEncoder {
  public:
    FlatEncoder(const SymbolicVocab& vocab, const SentenceEncoder& sentence_encoder,
                EncoderConfig config);

    EncodedSchema encode(const SchemaInstance& schema) const;
    int width() const;
    const EncoderConfig& config() const { return config_; }

  private:
    const SymbolicVocab& vocab_;
    const SentenceEncoder& sentence_encoder_;
    EncoderConfig config_;
};

}  // namespace sgnlg
