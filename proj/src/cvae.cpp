#include "sgnlg/cvae.hpp"

#include <cmath>
#include <stdexcept>

namespace sgnlg::gen {

CvaeModel::CvaeModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab)
    : config_(std::move(config)),
      gen_vocab_(std::move(gen_vocab)),
      sym_vocab_(std::move(sym_vocab)) {
    bind_params();
}

CvaeModel::CvaeModel(TrainConfig config, GenVocab gen_vocab, SymbolicVocab sym_vocab,
                     ad::ParamStore params)
    : config_(std::move(config)),
      gen_vocab_(std::move(gen_vocab)),
      sym_vocab_(std::move(sym_vocab)),
      params_(std::move(params)) {
    bind_params();
}

CvaeModel CvaeModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.config.family != "cvae")
        throw std::runtime_error("checkpoint family is '" + ckpt.config.family +
                                 "', expected cvae");
    return CvaeModel(ckpt.config, GenVocab::from_tokens(ckpt.gen_vocab_tokens),
                     SymbolicVocab::from_tokens(ckpt.sym_vocab_tokens), ckpt.params);
}

void CvaeModel::bind_params() {
    ad::DetRng rng(static_cast<std::uint64_t>(config_.seed) * 0x51edULL + 29);
    int width = 5 * config_.symbolic_dim + 4 * config_.sentence_dim;
    int d = config_.model_dim;
    int e = config_.embed_dim;
    int zd = config_.latent_dim;
    sym_embed_ = bind_tensor(params_, "sym_embed", sym_vocab_.size(), config_.symbolic_dim, 0.08,
                             rng);
    tok_embed_ = bind_tensor(params_, "tok_embed", gen_vocab_.size(), e, 0.08, rng);
    enc_in_ = bind_linear(params_, "enc.in", d, width, rng);
    enc_gru_ = bind_gru(params_, "enc.gru", d, d, rng);
    recog_gru_ = bind_gru(params_, "recog.gru", e, d, rng);
    mu_q_ = bind_linear(params_, "recog.mu", zd, 2 * d, rng);
    logvar_q_ = bind_linear(params_, "recog.logvar", zd, 2 * d, rng);
    prior_mu_ = bind_tensor(params_, "prior.mu", zd, 1, 0.0, rng);
    prior_logvar_ = bind_tensor(params_, "prior.logvar", zd, 1, 0.0, rng);
    dec_init_ = bind_linear(params_, "dec.init", d, zd + d, rng);
    dec_gru_ = bind_gru(params_, "dec.gru", e, d, rng);
    align_We_ = bind_tensor(params_, "align.We", d, d,
                            std::sqrt(6.0 / (static_cast<double>(d) + d)), rng);
    align_w_ = bind_tensor(params_, "align.w", 1, d, std::sqrt(6.0 / (1.0 + d)), rng);
    out_ = bind_linear(params_, "out", gen_vocab_.size(), 2 * d, rng);
    ptr_wh_ = bind_tensor(params_, "ptr.wh", d, 1, 0.08, rng);
    ptr_ws_ = bind_tensor(params_, "ptr.ws", d, 1, 0.08, rng);
    ptr_wx_ = bind_tensor(params_, "ptr.wx", e, 1, 0.08, rng);
    ptr_b_ = bind_tensor(params_, "ptr.b", 1, 1, 0.0, rng);
}

std::vector<int> CvaeModel::build_encoder(ad::Graph& g, const EncodedSchema& enc) const {
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

std::vector<int> CvaeModel::build_align_scores(ad::Graph& g, const std::vector<int>& h_nodes,
                                               int s) const {
    int d = config_.model_dim;
    std::vector<int> scores;
    scores.reserve(h_nodes.size());
    for (int h : h_nodes) {
        int mixed = g.add(g.matvec(g.param(align_We_), h, d, d), s);
        scores.push_back(g.matvec(g.param(align_w_), mixed, 1, d));
    }
    return scores;
}

int CvaeModel::initial_decoder_state(ad::Graph& g, int z, int c) const {
    return g.tanh_(linear(g, dec_init_, g.concat({z, c})));
}

int CvaeModel::embed_prev(ad::Graph& g, int token_id) const {
    int safe = token_id >= 0 && token_id < gen_vocab_.size() ? token_id : GenVocab::kUnkId;
    return g.row(tok_embed_, safe);
}

CvaeModel::StepBuild CvaeModel::build_step(ad::Graph& g, const std::vector<int>& h_nodes,
                                           int s_prev, int x, const ExtendedVocab& ext) const {
    StepBuild b;
    int s = gru_step(g, dec_gru_, x, s_prev);
    int a = g.softmax(g.concat(build_align_scores(g, h_nodes, s)));
    int ctx = g.weighted_sum(a, h_nodes);
    int p_vocab = g.softmax(linear(g, out_, g.concat({s, ctx})));
    int gate_in = g.add(g.add(g.dot(g.param(ptr_wh_), ctx), g.dot(g.param(ptr_ws_), s)),
                        g.add(g.dot(g.param(ptr_wx_), x), g.param(ptr_b_)));
    int p_gen = g.sigmoid(gate_in);
    b.dist = g.mix_copy(p_gen, g.pad(p_vocab, ext.size()), a, ext.copy_ids);
    b.state = s;
    b.attn = a;
    b.p_gen = p_gen;
    return b;
}

CvaeLoss CvaeModel::sequence_loss(ad::Graph& g, const EncodedSchema& enc,
                                  const std::vector<std::string>& target_tokens,
                                  double kl_weight, int* total_node, ad::DetRng& rng) {
    ExtendedVocab ext = build_extended(gen_vocab_, enc);
    auto h_nodes = build_encoder(g, enc);
    int c = h_nodes.back();

    // Recognition pass over the gold target.
    std::vector<int> target_ids = encode_target(target_tokens, ext);
    int r = g.zeros(config_.model_dim);
    for (int id : target_ids) r = gru_step(g, recog_gru_, embed_prev(g, id), r);
    int rc = g.concat({r, c});
    int mu_q = linear(g, mu_q_, rc);
    int logvar_q = linear(g, logvar_q_, rc);

    int kl = g.gaussian_kl(mu_q, logvar_q, g.param(prior_mu_), g.param(prior_logvar_));

    // Reparameterized draw.
    std::vector<double> eps(config_.latent_dim);
    for (auto& v : eps) v = rng.normal();
    int z = g.add(mu_q, g.mul(g.exp_(g.scale(logvar_q, 0.5)), g.constant(eps)));

    int s = initial_decoder_state(g, z, c);
    std::vector<int> full_target = target_ids;
    full_target.push_back(GenVocab::kEosId);
    int prev = GenVocab::kBosId;
    std::vector<int> losses;
    for (int target : full_target) {
        int x = embed_prev(g, prev);
        StepBuild step = build_step(g, h_nodes, s, x, ext);
        losses.push_back(g.neg_log_pick(step.dist, target));
        s = step.state;
        prev = target;
    }
    int total_recon = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) total_recon = g.add(total_recon, losses[i]);
    int mean_recon = g.scale(total_recon, 1.0 / static_cast<double>(losses.size()));
    int total = g.add(mean_recon, g.scale(kl, kl_weight));
    if (total_node) *total_node = total;

    CvaeLoss result;
    result.reconstruction = g.value(mean_recon)[0];
    result.kl = g.value(kl)[0];
    return result;
}

CvaeLoss CvaeModel::loss(const EncodedSchema& enc,
                         const std::vector<std::string>& target_tokens) {
    ad::Graph g(&params_);
    ad::DetRng rng(static_cast<std::uint64_t>(config_.seed) ^ 0xc4aeULL);
    return sequence_loss(g, enc, target_tokens, 1.0, nullptr, rng);
}

CvaeLoss CvaeModel::train_step(const EncodedSchema& enc,
                               const std::vector<std::string>& target_tokens, double kl_weight,
                               ad::Adam& opt) {
    ad::Graph g(&params_);
    ad::DetRng rng(static_cast<std::uint64_t>(config_.seed) * 0xc4aeULL +
                   static_cast<std::uint64_t>(++loss_calls_));
    int total_node = -1;
    CvaeLoss value = sequence_loss(g, enc, target_tokens, kl_weight, &total_node, rng);
    params_.zero_grad();
    g.backward(total_node);
    opt.step(params_);
    return value;
}

namespace {

class CvaeDecoder : public dec::StepDecoder {
  public:
    CvaeDecoder(CvaeModel& model, const EncodedSchema& enc, std::uint64_t seed)
        : model_(model), enc_(enc), ext_(build_extended(model.vocab(), enc)) {
        ad::Graph g(&model_.params());
        auto h_nodes = model_.build_encoder(g, enc_);
        for (int h : h_nodes) h_values_.push_back(g.value(h));
        int c = h_nodes.back();

        ad::DetRng rng(seed);
        std::vector<double> eps(model_.config().latent_dim);
        for (auto& v : eps) v = rng.normal();
        int mu = g.param(model_.params().find("prior.mu"));
        int logvar = g.param(model_.params().find("prior.logvar"));
        int z = g.add(mu, g.mul(g.exp_(g.scale(logvar, 0.5)), g.constant(eps)));
        s0_ = g.value(model_.initial_decoder_state(g, z, c));
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
        auto step = model_.build_step(g, h_nodes, g.constant(state),
                                      model_.embed_prev(g, prev_token), ext_);
        return {g.value(step.dist), g.value(step.state)};
    }

  private:
    CvaeModel& model_;
    EncodedSchema enc_;
    ExtendedVocab ext_;
    std::vector<std::vector<double>> h_values_;
    std::vector<double> s0_;
};

}  // namespace

std::unique_ptr<dec::StepDecoder> CvaeModel::make_decoder(const EncodedSchema& enc,
                                                          std::uint64_t seed) {
    return std::make_unique<CvaeDecoder>(*this, enc, seed);
}

void CvaeModel::save(const std::string& path) const {
    save_checkpoint(path, config_, gen_vocab_.tokens(), sym_vocab_.tokens(), params_);
}

}  // namespace sgnlg::gen
