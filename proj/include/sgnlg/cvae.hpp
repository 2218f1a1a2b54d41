#pragma once

// Conditional VAE generator. The condition c is the last hidden state of a
// GRU over the flat-encoded schema; a recognition GRU over the target yields
// q(z | x, c); the prior is a learned diagonal Gaussian. The decoder starts
// from [z ⊕ c], attends with align(h_t, s̃_t) = w · (W_e h_t + s̃_t) and
// shares the copy mixture with the Seq2Seq family. Loss = reconstruction
// NLL + KL(q || prior), the KL weight annealed by the trainer.

#include <memory>

#include "sgnlg/decoding.hpp"
#include "sgnlg/gen_common.hpp"

namespace sgnlg::gen {

struct CvaeLoss {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total(double kl_weight) const { return reconstruction + kl_weight * kl; }
};

class CvaeModel {
  public:
    CvaeModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab);
    static CvaeModel from_checkpoint(const Checkpoint& ckpt);

    CvaeLoss loss(const EncodedSchema& enc, const std::vector<std::string>& target_tokens);
    CvaeLoss train_step(const EncodedSchema& enc, const std::vector<std::string>& target_tokens,
                        double kl_weight, ad::Adam& opt);

    // z is drawn from the learned prior with the given seed; fixed seed,
    // fixed output.
    std::unique_ptr<dec::StepDecoder> make_decoder(const EncodedSchema& enc, std::uint64_t seed);

    void save(const std::string& path) const;
    const TrainConfig& config() const { return config_; }
    const GenVocab& vocab() const { return gen_vocab_; }
    const SymbolicVocab& sym_vocab() const { return sym_vocab_; }
    ad::ParamStore& params() { return params_; }

    struct StepBuild {
        int dist = -1;
        int state = -1;
        int attn = -1;
        int p_gen = -1;
    };
    std::vector<int> build_encoder(ad::Graph& g, const EncodedSchema& enc) const;
    // Alignment scores before softmax, one per encoder timestep.
    std::vector<int> build_align_scores(ad::Graph& g, const std::vector<int>& h_nodes,
                                        int s) const;
    int initial_decoder_state(ad::Graph& g, int z, int c) const;
    int embed_prev(ad::Graph& g, int token_id) const;
    StepBuild build_step(ad::Graph& g, const std::vector<int>& h_nodes, int s_prev, int x,
                         const ExtendedVocab& ext) const;

  private:
    CvaeModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab,
              ad::ParamStore params);
    void bind_params();
    CvaeLoss sequence_loss(ad::Graph& g, const EncodedSchema& enc,
                           const std::vector<std::string>& target_tokens, double kl_weight,
                           int* total_node, ad::DetRng& rng);

    TrainConfig config_;
    GenVocab gen_vocab_;
    SymbolicVocab sym_vocab_;
    ad::ParamStore params_;
    long long loss_calls_ = 0;  // reparameterization noise stream position

    int sym_embed_ = -1, tok_embed_ = -1;
    LinearParams enc_in_, dec_init_, out_, mu_q_, logvar_q_;
    GruParams enc_gru_, dec_gru_, recog_gru_;
    int align_We_ = -1, align_w_ = -1;
    int prior_mu_ = -1, prior_logvar_ = -1;
    int ptr_wh_ = -1, ptr_ws_ = -1, ptr_wx_ = -1, ptr_b_ = -1;
};

}  // namespace sgnlg::gen
