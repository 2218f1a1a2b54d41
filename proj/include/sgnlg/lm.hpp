#pragma once

// Causal-LM fine-tuning path. Schemas are flattened to natural-language
// strings and joined with the target as "[BOS] schema [SEP] target [EOS]";
// the backbone is reached only through a narrow interface (token ids,
// per-step distribution, parameter update), so a tiny recurrent stand-in
// slots in where a large pretrained model would.

#include <memory>

#include "sgnlg/decoding.hpp"
#include "sgnlg/gen_common.hpp"

namespace sgnlg::gen {

inline constexpr const char* kLmPad = "[PAD]";
inline constexpr const char* kLmUnk = "[UNK]";
inline constexpr const char* kLmBos = "[BOS]";
inline constexpr const char* kLmSep = "[SEP]";
inline constexpr const char* kLmEos = "[EOS]";

struct LMSerialization {
    std::vector<std::string> schema_tokens;  // natural-language side only
    std::string schema_text;                 // the same flattening, one string
};

// Deterministic flattening in labeled order: service description, intent
// description, slot descriptions, NL-MR, honoring the feature flags. When
// every enabled block is empty the NL-MR is used regardless, so the schema
// side is never empty.
LMSerialization serialize_for_lm(const SchemaInstance& schema, const FeatureFlags& features);

std::vector<std::string> build_lm_sequence(const LMSerialization& ser,
                                           const std::vector<std::string>& target_tokens);

// Violations of the serialization shape: starts with [BOS], exactly one
// [SEP], ends with [EOS]. Empty result means valid.
std::vector<std::string> validate_lm_sequence(const std::vector<std::string>& tokens);

class LMBackbone {
  public:
    virtual ~LMBackbone() = default;
    virtual int vocab_size() const = 0;
    virtual std::string token_name(int id) const = 0;
    virtual const std::vector<std::string>& tokens() const = 0;
    virtual int pad_id() const = 0;
    virtual int unk_id() const = 0;
    virtual int bos_id() const = 0;
    virtual int sep_id() const = 0;
    virtual int eos_id() const = 0;
    virtual std::vector<int> encode(const std::vector<std::string>& tokens) const = 0;
    virtual std::vector<double> start_state() const = 0;
    // Distribution over the next token plus the successor state.
    virtual std::pair<std::vector<double>, std::vector<double>> step(
        const std::vector<double>& state, int token) const = 0;
    // One optimizer update on the full sequence; returns mean token NLL.
    virtual double train_sequence(const std::vector<int>& ids) = 0;
    virtual const ad::ParamStore& params() const = 0;
};

// GRU language model over the corpus vocabulary; the desk-scale stand-in
// for a pretrained backbone.
class TinyBackbone : public LMBackbone {
  public:
    TinyBackbone(const std::vector<std::string>& vocab_tokens, int embed_dim, int hidden_dim,
                 double lr, long long seed);
    static std::vector<std::string> vocab_from_sequences(
        const std::vector<std::vector<std::string>>& sequences);

    int vocab_size() const override { return static_cast<int>(tokens_.size()); }
    std::string token_name(int id) const override;
    const std::vector<std::string>& tokens() const override { return tokens_; }
    int pad_id() const override { return 0; }
    int unk_id() const override { return 1; }
    int bos_id() const override { return 2; }
    int sep_id() const override { return 3; }
    int eos_id() const override { return 4; }
    std::vector<int> encode(const std::vector<std::string>& tokens) const override;
    std::vector<double> start_state() const override;
    std::pair<std::vector<double>, std::vector<double>> step(const std::vector<double>& state,
                                                             int token) const override;
    double train_sequence(const std::vector<int>& ids) override;

    ad::ParamStore& params() { return params_; }
    const ad::ParamStore& params() const override { return params_; }
    int embed_dim() const { return embed_dim_; }
    int hidden_dim() const { return hidden_dim_; }

  private:
    std::vector<std::string> tokens_;
    std::map<std::string, int> ids_;
    int embed_dim_, hidden_dim_;
    ad::ParamStore params_;
    ad::Adam opt_;
    int embed_ = -1;
    GruParams gru_;
    LinearParams out_;
};

class LmModel {
  public:
    LmModel(TrainConfig config, std::unique_ptr<LMBackbone> backbone);
    // Builds a TinyBackbone whose vocabulary covers the serialized corpus.
    static LmModel with_tiny_backbone(TrainConfig config,
                                      const std::vector<SGNLGRecord>& train_records);
    static LmModel from_checkpoint(const Checkpoint& ckpt);

    // One update on a (schema, reference) pair; throws on malformed
    // serializations.
    double train_step(const SchemaInstance& schema, const std::vector<std::string>& target);

    // Decoder primed with "[BOS] schema [SEP]"; sampling or greedy runs on
    // top of it.
    std::unique_ptr<dec::StepDecoder> make_decoder(const SchemaInstance& schema) const;
    std::string generate(const SchemaInstance& schema, int top_k, std::uint64_t seed) const;

    void save(const std::string& path) const;
    const TrainConfig& config() const { return config_; }
    LMBackbone& backbone() { return *backbone_; }

  private:
    TrainConfig config_;
    std::unique_ptr<LMBackbone> backbone_;
};

}  // namespace sgnlg::gen
