#pragma once

// Shared generator machinery: target-side vocabulary (placeholders are
// structurally excluded, so the only way to emit one is the copy path),
// per-instance extended vocabulary for copied tokens, GRU/linear graph
// builders, training configuration and versioned checkpoints.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgnlg/autodiff.hpp"
#include "sgnlg/flat_encoder.hpp"
#include "sgnlg/schema.hpp"
#include "sgnlg/vocab.hpp"

namespace sgnlg::gen {

class GenVocab {
  public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr int kBosId = 2;
    static constexpr int kEosId = 3;

    GenVocab();
    // Token frequency order (desc), ties lexicographic. Placeholder tokens
    // are skipped regardless of frequency.
    static GenVocab from_references(const std::vector<SGNLGRecord>& records);
    static GenVocab from_tokens(const std::vector<std::string>& tokens);

    int id(const std::string& token) const;  // kUnkId when unknown
    const std::string& token(int id) const;
    bool contains(const std::string& token) const;
    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

  private:
    void push(const std::string& token);
    std::vector<std::string> tokens_;
    std::map<std::string, int> ids_;
};

// Extended vocabulary of one encoded instance: base vocab plus the copyable
// input tokens absent from it (placeholders always are). copy_ids[t] is the
// extended id receiving timestep t's copy mass; timesteps without a
// copyable token route their mass to UNK so the mixture still sums to 1.
struct ExtendedVocab {
    const GenVocab* base = nullptr;
    std::vector<std::string> extra;
    std::map<std::string, int> extra_ids;
    std::vector<int> copy_ids;

    int size() const { return base->size() + static_cast<int>(extra.size()); }
    int id(const std::string& token) const;
    std::string token(int id) const;
};

ExtendedVocab build_extended(const GenVocab& base, const EncodedSchema& enc);

std::vector<int> encode_target(const std::vector<std::string>& tokens, const ExtendedVocab& ext);

// ---------------------------------------------------------------------------
// Graph building blocks

struct LinearParams {
    int w = -1, b = -1;
    int out = 0, in = 0;
};
LinearParams make_linear(ad::ParamStore& store, const std::string& prefix, int out, int in,
                         ad::DetRng& rng);
int linear(ad::Graph& g, const LinearParams& p, int x);

struct GruParams {
    LinearParams z, r, n;  // each maps [x ⊕ h] -> hidden
    int in = 0, hidden = 0;
};
GruParams make_gru(ad::ParamStore& store, const std::string& prefix, int in, int hidden,
                   ad::DetRng& rng);
int gru_step(ad::Graph& g, const GruParams& p, int x, int h);

// Bind-or-create: reuse the stored tensor when the name exists (checkpoint
// load), otherwise create it freshly initialized. Shapes are validated.
int bind_tensor(ad::ParamStore& store, const std::string& name, int rows, int cols,
                double init_scale, ad::DetRng& rng);
LinearParams bind_linear(ad::ParamStore& store, const std::string& prefix, int out, int in,
                         ad::DetRng& rng);
GruParams bind_gru(ad::ParamStore& store, const std::string& prefix, int in, int hidden,
                   ad::DetRng& rng);

// ---------------------------------------------------------------------------

enum class AlignForm { kBilinear, kDot };
AlignForm align_from_name(const std::string& name);
std::string align_name(AlignForm a);

struct TrainConfig {
    std::string family = "seq2seq";  // seq2seq | cvae | lm
    int symbolic_dim = 16;
    int sentence_dim = 16;
    int model_dim = 128;
    int embed_dim = 32;
    int latent_dim = 16;
    double lr = 1e-3;
    int epochs = 30;
    long long seed = 13;
    double kl_anneal_fraction = 0.2;
    AlignForm align = AlignForm::kBilinear;
    NlMrMode nl_mr_mode = NlMrMode::kPooled;
    FeatureFlags features;
    int top_k = 5;
    int beam_width = 5;
    int max_len = 60;
};

TrainConfig train_config_from_json(const std::string& json_text);
std::string train_config_to_json(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints: 8-byte magic "SGCKPT01", uint32 JSON header length, JSON
// header (family, config, vocabularies, tensor shapes), then tensor values
// as raw doubles in header order.

struct Checkpoint {
    TrainConfig config;
    std::vector<std::string> gen_vocab_tokens;
    std::vector<std::string> sym_vocab_tokens;
    ad::ParamStore params;
};

void save_checkpoint(const std::string& path, const TrainConfig& config,
                     const std::vector<std::string>& gen_vocab_tokens,
                     const std::vector<std::string>& sym_vocab_tokens,
                     const ad::ParamStore& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sgnlg::gen
