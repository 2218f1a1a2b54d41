#include "sgnlg/seq2seq.hpp"

#include <cmath>
#include <stdexcept>

namespace sgnlg::gen {

Seq2SeqModel::Seq2SeqModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab)
    : config_(std::move(config)),
      gen_vocab_(std::move(gen_vocab)),
      sym_vocab_(std::move(sym_vocab)) {
    bind_params();
}

Seq2SeqModel::Seq2SeqModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab,
                           ad::ParamStore params)
    : config_(std::move(config)),
      gen_vocab_(std::move(gen_vocab)),
      sym_vocab_(std::move(sym_vocab)),
      params_(std::move(params)) {
    bind_params();
}

Seq2SeqModel Seq2SeqModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.config.family != "seq2seq")
        throw std::runtime_error("checkpoint family is '" + ckpt.config.family +
                                 "', expected seq2seq");
    return Seq2SeqModel(ckpt.config, GenVocab::from_tokens(ckpt.gen_vocab_tokens),
                        SymbolicVocab::from_tokens(ckpt.sym_vocab_tokens), ckpt.params);
}

void Seq2SeqModel::bind_params() {
    ad::DetRng rng(static_cast<std::uint64_t>(config_.seed) * 0x9e37ULL + 17);
    int width = 5 * config_.symbolic_dim + 4 * config_.sentence_dim;
    int d = config_.model_dim;
    int e = config_.embed_dim;
    sym_embed_ = bind_tensor(params_, "sym_embed", sym_vocab_.size(), config_.symbolic_dim, 0.08,
                             rng);
    tok_embed_ = bind_tensor(params_, "tok_embed", gen_vocab_.size(), e, 0.08, rng);
    enc_in_ = bind_linear(params_, "enc.in", d, width, rng);
    enc_gru_ = bind_gru(params_, "enc.gru", d, d, rng);
    dec_init_ = bind_linear(params_, "dec.init", d, d, rng);
    dec_gru_ = bind_gru(params_, "dec.gru", e, d, rng);
    attn_w_ = bind_tensor(params_, "attn.w", d, d,
                          std::sqrt(6.0 / (static_cast<double>(d) + d)), rng);
    out_ = bind_linear(params_, "out", gen_vocab_.size(), 2 * d, rng);
    ptr_wh_ = bind_tensor(params_, "ptr.wh", d, 1, 0.08, rng);
    ptr_ws_ = bind_tensor(params_, "ptr.ws", d, 1, 0.08, rng);
    ptr_wx_ = bind_tensor(params_, "ptr.wx", e, 1, 0.08, rng);
    ptr_b_ = bind_tensor(params_, "ptr.b", 1, 1, 0.0, rng);
}

std::vector<int> Seq2SeqModel::build_encoder(ad::Graph& g, const EncodedSchema& enc) const {
    if (enc.symbolic_dim != config_.symbolic_dim || enc.sentence_dim != config_.sentence_dim)
        throw std::invalid_argument("encoded schema dims differ from model config");
    std::vector<int> h_nodes;
    int h = g.zeros(config_.model_dim);
    for (const auto& step : enc.steps) {
        std::vector<int> parts;
        for (int id : step.sym)
            parts.push_back(id == EncodedStep::kZeroSegment ? g.zeros(config_.symbolic_dim)
                                                            : g.row(sym_embed_, id));
        for (const auto& seg : step.sent)
            parts.push_back(seg.empty() ? g.zeros(config_.sentence_dim) : g.constant(seg));
        int x = g.tanh_(linear(g, enc_in_, g.concat(parts)));
        h = gru_step(g, enc_gru_, x, h);
        h_nodes.push_back(h);
    }
    return h_nodes;
}

int Seq2SeqModel::initial_decoder_state(ad::Graph& g, int h_last) const {
    return g.tanh_(linear(g, dec_init_, h_last));
}

int Seq2SeqModel::embed_prev(ad::Graph& g, int token_id) const {
    int safe = token_id >= 0 && token_id < gen_vocab_.size() ? token_id : GenVocab::kUnkId;
    return g.row(tok_embed_, safe);
}

Seq2SeqModel::StepBuild Seq2SeqModel::build_step(ad::Graph& g, const std::vector<int>& h_nodes,
                                                 int s_prev, int x,
                                                 const ExtendedVocab& ext) const {
    StepBuild b;
    int s = gru_step(g, dec_gru_, x, s_prev);
    std::vector<int> scores;
    scores.reserve(h_nodes.size());
    for (int h : h_nodes) {
        int aligned = config_.align == AlignForm::kBilinear
                          ? g.matvec(g.param(attn_w_), h, config_.model_dim, config_.model_dim)
                          : h;
        scores.push_back(g.dot(s, aligned));
    }
    int a = g.softmax(g.concat(scores));
    int ctx = g.weighted_sum(a, h_nodes);
    int p_vocab = g.softmax(linear(g, out_, g.concat({s, ctx})));
    int gate_in = g.add(g.add(g.dot(g.param(ptr_wh_), ctx), g.dot(g.param(ptr_ws_), s)),
                        g.add(g.dot(g.param(ptr_wx_), x), g.param(ptr_b_)));
    int p_gen = g.sigmoid(gate_in);
    int padded = g.pad(p_vocab, ext.size());
    b.dist = g.mix_copy(p_gen, padded, a, ext.copy_ids);
    b.state = s;
    b.attn = a;
    b.p_gen = p_gen;
    return b;
}

double Seq2SeqModel::sequence_loss(ad::Graph& g, const EncodedSchema& enc,
                                   const std::vector<std::string>& target_tokens,
                                   int* loss_node) {
    ExtendedVocab ext = build_extended(gen_vocab_, enc);
    auto h_nodes = build_encoder(g, enc);
    int s = initial_decoder_state(g, h_nodes.back());

    std::vector<int> target_ids = encode_target(target_tokens, ext);
    target_ids.push_back(GenVocab::kEosId);

    int prev = GenVocab::kBosId;
    std::vector<int> losses;
    for (int target : target_ids) {
        int x = embed_prev(g, prev);
        StepBuild step = build_step(g, h_nodes, s, x, ext);
        losses.push_back(g.neg_log_pick(step.dist, target));
        s = step.state;
        prev = target;
    }
    int total = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) total = g.add(total, losses[i]);
    int mean = g.scale(total, 1.0 / static_cast<double>(losses.size()));
    if (loss_node) *loss_node = mean;
    return g.value(mean)[0];
}

double Seq2SeqModel::loss(const EncodedSchema& enc,
                          const std::vector<std::string>& target_tokens) {
    ad::Graph g(&params_);
    return sequence_loss(g, enc, target_tokens, nullptr);
}

double Seq2SeqModel::train_step(const EncodedSchema& enc,
                                const std::vector<std::string>& target_tokens, ad::Adam& opt) {
    ad::Graph g(&params_);
    int loss_node = -1;
    double value = sequence_loss(g, enc, target_tokens, &loss_node);
    params_.zero_grad();
    g.backward(loss_node);
    opt.step(params_);
    return value;
}

namespace {

class Seq2SeqDecoder : public dec::StepDecoder {
  public:
    Seq2SeqDecoder(Seq2SeqModel& model, const EncodedSchema& enc)
        : model_(model), enc_(enc), ext_(build_extended(model.vocab(), enc)) {
        ad::Graph g(&model_.params());
        auto h_nodes = model_.build_encoder(g, enc_);
        for (int h : h_nodes) h_values_.push_back(g.value(h));
        int s0 = model_.initial_decoder_state(g, h_nodes.back());
        s0_ = g.value(s0);
    }

    int vocab_size() const override { return ext_.size(); }
    std::string token_name(int id) const override { return ext_.token(id); }
    int pad_id() const override { return GenVocab::kPadId; }
    int bos_id() const override { return GenVocab::kBosId; }
    int eos_id() const override { return GenVocab::kEosId; }
    std::vector<double> initial_state() const override { return s0_; }

    std::pair<std::vector<double>, std::vector<double>> step(const std::vector<double>& state,
                                                             int prev_token) const override {
        ad::Graph g(&model_.params());
        std::vector<int> h_nodes;
        h_nodes.reserve(h_values_.size());
        for (const auto& h : h_values_) h_nodes.push_back(g.constant(h));
        int s_prev = g.constant(state);
        int x = model_.embed_prev(g, prev_token);
        auto step = model_.build_step(g, h_nodes, s_prev, x, ext_);
        return {g.value(step.dist), g.value(step.state)};
    }

  private:
    Seq2SeqModel& model_;
    EncodedSchema enc_;
    ExtendedVocab ext_;
    std::vector<std::vector<double>> h_values_;
    std::vector<double> s0_;
};

}  // namespace

std::unique_ptr<dec::StepDecoder> Seq2SeqModel::make_decoder(const EncodedSchema& enc) {
    return std::make_unique<Seq2SeqDecoder>(*this, enc);
}

void Seq2SeqModel::save(const std::string& path) const {
    save_checkpoint(path, config_, gen_vocab_.tokens(), sym_vocab_.tokens(), params_);
}

}  // namespace sgnlg::gen
