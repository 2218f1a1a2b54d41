#pragma once

// Decoding over a stepwise model interface: beam search with slot-repetition
// pruning (an expansion whose next token is a placeholder already emitted by
// the hypothesis gets probability zero), and seeded top-k sampling. PAD and
// BOS are never emitted; hypotheses end at EOS or the length cap.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sgnlg/autodiff.hpp"

namespace sgnlg::dec {

// One decoding step: distribution over the (extended) output vocabulary and
// the successor state. States are opaque flat vectors so hypotheses copy
// cheaply.
class StepDecoder {
  public:
    virtual ~StepDecoder() = default;
    virtual int vocab_size() const = 0;
    virtual std::string token_name(int id) const = 0;
    virtual int pad_id() const = 0;
    virtual int bos_id() const = 0;
    virtual int eos_id() const = 0;
    virtual std::vector<double> initial_state() const = 0;
    virtual std::pair<std::vector<double>, std::vector<double>> step(
        const std::vector<double>& state, int prev_token) const = 0;
};

struct DecodeResult {
    std::vector<std::string> tokens;  // without BOS/EOS
    std::string text;                 // tokens joined by single spaces
    double log_prob = 0.0;
    bool ended = false;               // EOS reached (false: length cap or fallback)
};

struct BeamNode {
    std::vector<int> prefix;
    double log_prob = 0.0;
    std::vector<double> state;
    std::vector<std::string> emitted_placeholders;  // sorted multiset
    bool ended = false;
};

DecodeResult constrained_beam_decode(const StepDecoder& model, int beam_width, int max_len);

DecodeResult topk_sample_decode(const StepDecoder& model, int k, std::uint64_t seed, int max_len);

// Greedy loop with the same repetition mask; reference implementation for
// the beam-width-1 equivalence property.
DecodeResult masked_greedy_decode(const StepDecoder& model, int max_len);

}  // namespace sgnlg::dec
