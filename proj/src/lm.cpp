#include "sgnlg/lm.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "sgnlg/nlmr.hpp"

namespace sgnlg::gen {

namespace {

void append_tokens(std::vector<std::string>& out, const std::string& text) {
    for (auto& t : tokenize(text)) out.push_back(std::move(t));
}

}  // namespace

LMSerialization serialize_for_lm(const SchemaInstance& schema, const FeatureFlags& features) {
    LMSerialization ser;
    auto& toks = ser.schema_tokens;
    if (features.service_description && !schema.service_description.empty()) {
        toks.push_back("service");
        toks.push_back(":");
        append_tokens(toks, schema.service_description);
    }
    if (features.intent_description && !schema.intent_description.empty()) {
        toks.push_back("intent");
        toks.push_back(":");
        append_tokens(toks, schema.intent_description);
    }
    if (features.slot_descriptions && !schema.slot_descriptions.empty()) {
        toks.push_back("slots");
        toks.push_back(":");
        for (std::size_t i = 0; i < schema.slot_descriptions.size(); ++i) {
            if (i > 0) toks.push_back(";");
            const auto& sd = schema.slot_descriptions[i];
            append_tokens(toks, slot_phrase(sd.slot));
            toks.push_back(":");
            append_tokens(toks, sd.description);
        }
    }
    if (features.nl_mr && !schema.nl_mr.empty()) {
        toks.push_back("mr");
        toks.push_back(":");
        append_tokens(toks, schema.nl_mr);
    }
    if (toks.empty()) {
        // The schema side must never be empty: fall back to the NL-MR even
        // when the feature set excludes it.
        toks.push_back("mr");
        toks.push_back(":");
        append_tokens(toks, schema.nl_mr);
    }
    std::string text;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i > 0) text += ' ';
        text += toks[i];
    }
    ser.schema_text = std::move(text);
    return ser;
}

std::vector<std::string> build_lm_sequence(const LMSerialization& ser,
                                           const std::vector<std::string>& target_tokens) {
    std::vector<std::string> seq;
    seq.reserve(ser.schema_tokens.size() + target_tokens.size() + 3);
    seq.push_back(kLmBos);
    seq.insert(seq.end(), ser.schema_tokens.begin(), ser.schema_tokens.end());
    seq.push_back(kLmSep);
    seq.insert(seq.end(), target_tokens.begin(), target_tokens.end());
    seq.push_back(kLmEos);
    return seq;
}

std::vector<std::string> validate_lm_sequence(const std::vector<std::string>& tokens) {
    std::vector<std::string> violations;
    if (tokens.empty() || tokens.front() != kLmBos)
        violations.push_back("sequence must start with [BOS]");
    long long seps = std::count(tokens.begin(), tokens.end(), std::string(kLmSep));
    if (seps != 1) violations.push_back("sequence must contain exactly one [SEP]");
    if (tokens.empty() || tokens.back() != kLmEos)
        violations.push_back("sequence must end with [EOS]");
    return violations;
}

// ---------------------------------------------------------------------------
// TinyBackbone

std::vector<std::string> TinyBackbone::vocab_from_sequences(
    const std::vector<std::vector<std::string>>& sequences) {
    std::vector<std::string> specials = {kLmPad, kLmUnk, kLmBos, kLmSep, kLmEos};
    std::map<std::string, long long> counts;
    for (const auto& seq : sequences)
        for (const auto& tok : seq)
            if (std::find(specials.begin(), specials.end(), tok) == specials.end() &&
                !tok.empty())
                ++counts[tok];
    std::vector<std::pair<std::string, long long>> ordered(counts.begin(), counts.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (const auto& [tok, cnt] : ordered) specials.push_back(tok);
    return specials;
}

TinyBackbone::TinyBackbone(const std::vector<std::string>& vocab_tokens, int embed_dim,
                           int hidden_dim, double lr, long long seed)
    : tokens_(vocab_tokens), embed_dim_(embed_dim), hidden_dim_(hidden_dim), opt_(lr) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) ids_[tokens_[i]] = static_cast<int>(i);
    ad::DetRng rng(static_cast<std::uint64_t>(seed) * 0x1b9bULL + 101ULL);
    int v = vocab_size();
    embed_ = bind_tensor(params_, "lm.embed", v, embed_dim_, 0.1, rng);
    gru_ = bind_gru(params_, "lm.gru", embed_dim_, hidden_dim_, rng);
    out_ = bind_linear(params_, "lm.out", v, hidden_dim_, rng);
}

std::string TinyBackbone::token_name(int id) const {
    if (id < 0 || id >= vocab_size()) return kLmUnk;
    return tokens_[id];
}

std::vector<int> TinyBackbone::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens) {
        auto it = ids_.find(tok);
        ids.push_back(it == ids_.end() ? unk_id() : it->second);
    }
    return ids;
}

std::vector<double> TinyBackbone::start_state() const {
    return std::vector<double>(static_cast<std::size_t>(hidden_dim_), 0.0);
}

std::pair<std::vector<double>, std::vector<double>> TinyBackbone::step(
    const std::vector<double>& state, int token) const {
    auto& store = const_cast<ad::ParamStore&>(params_);
    ad::Graph g(&store);
    int tok = (token < 0 || token >= vocab_size()) ? unk_id() : token;
    int x = g.row(embed_, tok);
    int h = g.constant(state);
    int h2 = gru_step(g, gru_, x, h);
    int p = g.softmax(linear(g, out_, h2));
    return {g.value(p), g.value(h2)};
}

double TinyBackbone::train_sequence(const std::vector<int>& ids) {
    if (ids.size() < 2) throw std::invalid_argument("lm sequence needs at least two tokens");
    ad::Graph g(&params_);
    int h = g.zeros(hidden_dim_);
    int total = -1;
    for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
        int x = g.row(embed_, ids[t]);
        h = gru_step(g, gru_, x, h);
        int p = g.softmax(linear(g, out_, h));
        int nll = g.neg_log_pick(p, ids[t + 1]);
        total = total < 0 ? nll : g.add(total, nll);
    }
    int loss = g.scale(total, 1.0 / static_cast<double>(ids.size() - 1));
    params_.zero_grad();
    g.backward(loss);
    opt_.step(params_);
    return g.value(loss)[0];
}

// ---------------------------------------------------------------------------
// LmModel

namespace {

// Adapts the backbone to the step-decoder contract. The decoder's notion of
// BOS is mapped to [SEP]: the wrapped state has already consumed
// "[BOS] schema", so the first step feeds [SEP] and yields the distribution
// for the first target token.
class PrefixDecoder : public dec::StepDecoder {
  public:
    PrefixDecoder(const LMBackbone& bb, std::vector<double> primed) : bb_(bb), primed_(std::move(primed)) {}
    int vocab_size() const override { return bb_.vocab_size(); }
    std::string token_name(int id) const override { return bb_.token_name(id); }
    int pad_id() const override { return bb_.pad_id(); }
    int bos_id() const override { return bb_.sep_id(); }
    int eos_id() const override { return bb_.eos_id(); }
    std::vector<double> initial_state() const override { return primed_; }
    std::pair<std::vector<double>, std::vector<double>> step(const std::vector<double>& state,
                                                             int prev_token) const override {
        return bb_.step(state, prev_token);
    }

  private:
    const LMBackbone& bb_;
    std::vector<double> primed_;
};

}  // namespace

LmModel::LmModel(TrainConfig config, std::unique_ptr<LMBackbone> backbone)
    : config_(std::move(config)), backbone_(std::move(backbone)) {
    config_.family = "lm";
}

LmModel LmModel::with_tiny_backbone(TrainConfig config,
                                    const std::vector<SGNLGRecord>& train_records) {
    std::vector<std::vector<std::string>> sequences;
    for (const auto& rec : train_records) {
        auto ser = serialize_for_lm(rec.schema, config.features);
        for (const auto& ref : rec.references)
            sequences.push_back(build_lm_sequence(ser, tokenize(ref)));
    }
    auto vocab = TinyBackbone::vocab_from_sequences(sequences);
    auto bb = std::make_unique<TinyBackbone>(vocab, config.embed_dim, config.model_dim,
                                             config.lr, config.seed);
    return LmModel(std::move(config), std::move(bb));
}

LmModel LmModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.config.family != "lm")
        throw std::runtime_error("checkpoint family mismatch: expected lm, got " +
                                 ckpt.config.family);
    auto bb = std::make_unique<TinyBackbone>(ckpt.gen_vocab_tokens, ckpt.config.embed_dim,
                                             ckpt.config.model_dim, ckpt.config.lr,
                                             ckpt.config.seed);
    auto& dst = bb->params();
    for (int i = 0; i < static_cast<int>(ckpt.params.count()); ++i) {
        const auto& src = ckpt.params.tensor(i);
        int id = dst.find(src.name);
        if (id < 0) throw std::runtime_error("unknown tensor in lm checkpoint: " + src.name);
        auto& t = dst.tensor(id);
        if (t.rows != src.rows || t.cols != src.cols)
            throw std::runtime_error("tensor shape mismatch in lm checkpoint: " + src.name);
        t.value = src.value;
    }
    return LmModel(ckpt.config, std::move(bb));
}

double LmModel::train_step(const SchemaInstance& schema, const std::vector<std::string>& target) {
    auto ser = serialize_for_lm(schema, config_.features);
    auto seq = build_lm_sequence(ser, target);
    auto violations = validate_lm_sequence(seq);
    if (!violations.empty()) throw std::runtime_error("invalid lm sequence: " + violations[0]);
    return backbone_->train_sequence(backbone_->encode(seq));
}

std::unique_ptr<dec::StepDecoder> LmModel::make_decoder(const SchemaInstance& schema) const {
    auto ser = serialize_for_lm(schema, config_.features);
    std::vector<std::string> prefix;
    prefix.push_back(kLmBos);
    prefix.insert(prefix.end(), ser.schema_tokens.begin(), ser.schema_tokens.end());
    auto state = backbone_->start_state();
    for (int id : backbone_->encode(prefix)) state = backbone_->step(state, id).second;
    return std::make_unique<PrefixDecoder>(*backbone_, std::move(state));
}

std::string LmModel::generate(const SchemaInstance& schema, int top_k, std::uint64_t seed) const {
    auto decoder = make_decoder(schema);
    auto result = dec::topk_sample_decode(*decoder, top_k, seed, 128);
    return result.text;
}

void LmModel::save(const std::string& path) const {
    save_checkpoint(path, config_, backbone_->tokens(), {}, backbone_->params());
}

}  // namespace sgnlg::gen
