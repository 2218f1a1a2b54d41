#include "sgnlg/gen_common.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sgnlg::gen {

using nlohmann::json;

GenVocab::GenVocab() {
    push("<pad>");
    push("<unk>");
    push("<bos>");
    push("<eos>");
}

void GenVocab::push(const std::string& token) {
    ids_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

GenVocab GenVocab::from_references(const std::vector<SGNLGRecord>& records) {
    std::map<std::string, long long> counts;
    for (const auto& r : records)
        for (const auto& ref : r.references)
            for (const auto& token : tokenize(ref))
                if (!is_placeholder_token(token)) ++counts[token];
    std::vector<std::pair<std::string, long long>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    GenVocab v;
    for (const auto& [token, count] : items)
        if (!v.contains(token)) v.push(token);
    return v;
}

GenVocab GenVocab::from_tokens(const std::vector<std::string>& tokens) {
    GenVocab v;
    for (const auto& token : tokens)
        if (!v.contains(token) && !is_placeholder_token(token)) v.push(token);
    return v;
}

int GenVocab::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
}

const std::string& GenVocab::token(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("gen vocab id out of range");
    return tokens_[id];
}

bool GenVocab::contains(const std::string& token) const { return ids_.count(token) > 0; }

// ---------------------------------------------------------------------------

int ExtendedVocab::id(const std::string& token) const {
    if (base->contains(token)) return base->id(token);
    auto it = extra_ids.find(token);
    return it == extra_ids.end() ? GenVocab::kUnkId : it->second;
}

std::string ExtendedVocab::token(int id) const {
    if (id < base->size()) return base->token(id);
    int k = id - base->size();
    if (k >= static_cast<int>(extra.size()))
        throw std::out_of_range("extended vocab id out of range");
    return extra[k];
}

ExtendedVocab build_extended(const GenVocab& base, const EncodedSchema& enc) {
    ExtendedVocab ext;
    ext.base = &base;
    for (const auto& step : enc.steps) {
        if (step.copy_token.empty()) {
            ext.copy_ids.push_back(GenVocab::kUnkId);
            continue;
        }
        if (base.contains(step.copy_token)) {
            ext.copy_ids.push_back(base.id(step.copy_token));
            continue;
        }
        auto it = ext.extra_ids.find(step.copy_token);
        if (it == ext.extra_ids.end()) {
            int id = base.size() + static_cast<int>(ext.extra.size());
            ext.extra_ids[step.copy_token] = id;
            ext.extra.push_back(step.copy_token);
            ext.copy_ids.push_back(id);
        } else {
            ext.copy_ids.push_back(it->second);
        }
    }
    return ext;
}

std::vector<int> encode_target(const std::vector<std::string>& tokens, const ExtendedVocab& ext) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& token : tokens) ids.push_back(ext.id(token));
    return ids;
}

// ---------------------------------------------------------------------------

LinearParams make_linear(ad::ParamStore& store, const std::string& prefix, int out, int in,
                         ad::DetRng& rng) {
    LinearParams p;
    p.out = out;
    p.in = in;
    p.w = store.add_glorot(prefix + ".w", out, in, rng);
    p.b = store.add_zeros(prefix + ".b", out, 1);
    return p;
}

int linear(ad::Graph& g, const LinearParams& p, int x) {
    return g.add(g.matvec(g.param(p.w), x, p.out, p.in), g.param(p.b));
}

GruParams make_gru(ad::ParamStore& store, const std::string& prefix, int in, int hidden,
                   ad::DetRng& rng) {
    GruParams p;
    p.in = in;
    p.hidden = hidden;
    p.z = make_linear(store, prefix + ".z", hidden, in + hidden, rng);
    p.r = make_linear(store, prefix + ".r", hidden, in + hidden, rng);
    p.n = make_linear(store, prefix + ".n", hidden, in + hidden, rng);
    return p;
}

int gru_step(ad::Graph& g, const GruParams& p, int x, int h) {
    int xh = g.concat({x, h});
    int z = g.sigmoid(linear(g, p.z, xh));
    int r = g.sigmoid(linear(g, p.r, xh));
    int n = g.tanh_(linear(g, p.n, g.concat({x, g.mul(r, h)})));
    int ones = g.constant(std::vector<double>(g.size_of(z), 1.0));
    return g.add(g.mul(g.sub(ones, z), h), g.mul(z, n));
}

int bind_tensor(ad::ParamStore& store, const std::string& name, int rows, int cols,
                double init_scale, ad::DetRng& rng) {
    int id = store.find(name);
    if (id >= 0) {
        const ad::Tensor& t = store.tensor(id);
        if (t.rows != rows || t.cols != cols)
            throw std::runtime_error("tensor shape mismatch for " + name);
        return id;
    }
    return store.add(name, rows, cols, init_scale, rng);
}

LinearParams bind_linear(ad::ParamStore& store, const std::string& prefix, int out, int in,
                         ad::DetRng& rng) {
    double scale = std::sqrt(6.0 / (static_cast<double>(out) + static_cast<double>(in)));
    LinearParams p;
    p.out = out;
    p.in = in;
    p.w = bind_tensor(store, prefix + ".w", out, in, scale, rng);
    p.b = bind_tensor(store, prefix + ".b", out, 1, 0.0, rng);
    return p;
}

GruParams bind_gru(ad::ParamStore& store, const std::string& prefix, int in, int hidden,
                   ad::DetRng& rng) {
    GruParams p;
    p.in = in;
    p.hidden = hidden;
    p.z = bind_linear(store, prefix + ".z", hidden, in + hidden, rng);
    p.r = bind_linear(store, prefix + ".r", hidden, in + hidden, rng);
    p.n = bind_linear(store, prefix + ".n", hidden, in + hidden, rng);
    return p;
}

// ---------------------------------------------------------------------------

AlignForm align_from_name(const std::string& name) {
    if (name == "bilinear") return AlignForm::kBilinear;
    if (name == "dot") return AlignForm::kDot;
    throw std::invalid_argument("unknown align form: " + name);
}

std::string align_name(AlignForm a) { return a == AlignForm::kBilinear ? "bilinear" : "dot"; }

TrainConfig train_config_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    TrainConfig c;
    c.family = j.value("family", c.family);
    c.symbolic_dim = j.value("symbolic_dim", c.symbolic_dim);
    c.sentence_dim = j.value("sentence_dim", c.sentence_dim);
    c.model_dim = j.value("model_dim", c.model_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.lr = j.value("lr", c.lr);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.kl_anneal_fraction = j.value("kl_anneal_fraction", c.kl_anneal_fraction);
    c.align = align_from_name(j.value("align", align_name(c.align)));
    c.nl_mr_mode = nl_mr_mode_from_name(j.value("nl_mr_mode", nl_mr_mode_name(c.nl_mr_mode)));
    if (j.contains("features"))
        c.features = features_from_list(j["features"].get<std::vector<std::string>>());
    c.top_k = j.value("top_k", c.top_k);
    c.beam_width = j.value("beam_width", c.beam_width);
    c.max_len = j.value("max_len", c.max_len);
    return c;
}

std::string train_config_to_json(const TrainConfig& c) {
    json j;
    j["family"] = c.family;
    j["symbolic_dim"] = c.symbolic_dim;
    j["sentence_dim"] = c.sentence_dim;
    j["model_dim"] = c.model_dim;
    j["embed_dim"] = c.embed_dim;
    j["latent_dim"] = c.latent_dim;
    j["lr"] = c.lr;
    j["epochs"] = c.epochs;
    j["seed"] = c.seed;
    j["kl_anneal_fraction"] = c.kl_anneal_fraction;
    j["align"] = align_name(c.align);
    j["nl_mr_mode"] = nl_mr_mode_name(c.nl_mr_mode);
    j["features"] = features_to_list(c.features);
    j["top_k"] = c.top_k;
    j["beam_width"] = c.beam_width;
    j["max_len"] = c.max_len;
    return j.dump();
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kCkptMagic[8] = {'S', 'G', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_checkpoint(const std::string& path, const TrainConfig& config,
                     const std::vector<std::string>& gen_vocab_tokens,
                     const std::vector<std::string>& sym_vocab_tokens,
                     const ad::ParamStore& params) {
    json header;
    header["family"] = config.family;
    header["config"] = json::parse(train_config_to_json(config));
    header["gen_vocab"] = gen_vocab_tokens;
    header["sym_vocab"] = sym_vocab_tokens;
    json tensors = json::array();
    for (int i = 0; i < params.count(); ++i) {
        const ad::Tensor& t = params.tensor(i);
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    }
    header["tensors"] = tensors;
    std::string header_bytes = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCkptMagic, 8);
    std::uint32_t len = static_cast<std::uint32_t>(header_bytes.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    for (int i = 0; i < params.count(); ++i) {
        const ad::Tensor& t = params.tensor(i);
        out.write(reinterpret_cast<const char*>(t.value.data()),
                  static_cast<std::streamsize>(sizeof(double) * t.value.size()));
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
        throw std::runtime_error("bad checkpoint header: " + path);
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    std::string header_bytes(len, '\0');
    in.read(header_bytes.data(), len);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    json header = json::parse(header_bytes);

    Checkpoint ckpt;
    ckpt.config = train_config_from_json(header.at("config").dump());
    ckpt.gen_vocab_tokens = header.at("gen_vocab").get<std::vector<std::string>>();
    ckpt.sym_vocab_tokens = header.at("sym_vocab").get<std::vector<std::string>>();
    ad::DetRng rng(0);
    for (const auto& jt : header.at("tensors")) {
        int id = ckpt.params.add_zeros(jt.at("name").get<std::string>(),
                                       jt.at("rows").get<int>(), jt.at("cols").get<int>());
        ad::Tensor& t = ckpt.params.tensor(id);
        in.read(reinterpret_cast<char*>(t.value.data()),
                static_cast<std::streamsize>(sizeof(double) * t.value.size()));
        if (!in) throw std::runtime_error("truncated checkpoint tensors: " + path);
    }
    return ckpt;
}

}  // namespace sgnlg::gen
