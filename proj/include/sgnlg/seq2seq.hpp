#pragma once

// Attention + copy Seq2Seq over flat-encoded schemas. The encoder is a GRU
// over projected timestep vectors; the decoder attends with a bilinear (or
// dot) alignment, gates between generating from the target vocabulary and
// copying input tokens with p_gen, and emits a mixture distribution over
// the extended vocabulary. Training and decoding share one step builder.

#include <memory>

#include "sgnlg/decoding.hpp"
#include "sgnlg/gen_common.hpp"

namespace sgnlg::gen {

class Seq2SeqModel {
  public:
    Seq2SeqModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab);
    static Seq2SeqModel from_checkpoint(const Checkpoint& ckpt);

    // Teacher-forced mean token NLL over target ⊕ EOS.
    double loss(const EncodedSchema& enc, const std::vector<std::string>& target_tokens);
    double train_step(const EncodedSchema& enc, const std::vector<std::string>& target_tokens,
                      ad::Adam& opt);

    std::unique_ptr<dec::StepDecoder> make_decoder(const EncodedSchema& enc);

    void save(const std::string& path) const;
    const TrainConfig& config() const { return config_; }
    const GenVocab& vocab() const { return gen_vocab_; }
    const SymbolicVocab& sym_vocab() const { return sym_vocab_; }
    ad::ParamStore& params() { return params_; }

    // Exposed for the step-level diagnostics and tests.
    struct StepBuild {
        int dist = -1;   // P(w) over the extended vocabulary
        int state = -1;  // s_t
        int attn = -1;   // a_t
        int p_gen = -1;
    };
    std::vector<int> build_encoder(ad::Graph& g, const EncodedSchema& enc) const;
    int initial_decoder_state(ad::Graph& g, int h_last) const;
    int embed_prev(ad::Graph& g, int token_id) const;
    StepBuild build_step(ad::Graph& g, const std::vector<int>& h_nodes, int s_prev, int x,
                         const ExtendedVocab& ext) const;

  private:
    Seq2SeqModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab,
                 ad::ParamStore params);
    void bind_params();
    double sequence_loss(ad::Graph& g, const EncodedSchema& enc,
                         const std::vector<std::string>& target_tokens, int* loss_node);

    TrainConfig config_;
    GenVocab gen_vocab_;
    SymbolicVocab sym_vocab_;
    ad::ParamStore params_;

    int sym_embed_ = -1, tok_embed_ = -1;
    LinearParams enc_in_, dec_init_, out_;
    GruParams enc_gru_, dec_gru_;
    int attn_w_ = -1;
    int ptr_wh_ = -1, ptr_ws_ = -1, ptr_wx_ = -1, ptr_b_ = -1;
};

}  // namespace sgnlg::gen
