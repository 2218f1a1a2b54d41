#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "sgnlg/cvae.hpp"
#include "sgnlg/flat_encoder.hpp"
#include "sgnlg/lm.hpp"
#include "sgnlg/seq2seq.hpp"
#include "sgnlg/sentence_encoder.hpp"

using namespace sgnlg;
using namespace sgnlg::gen;

namespace {

std::vector<SGNLGRecord> tiny_records() {
    std::vector<SGNLGRecord> out;
    {
        SGNLGRecord r;
        r.schema.service = "restaurants_1";
        r.schema.service_description = "Restaurant search";
        r.schema.intent = "FindRestaurants";
        r.schema.intent_description = "Find a restaurant";
        r.schema.mr = {{"REQUEST", "cuisine", "$cuisine_1"}};
        r.schema.slot_descriptions = {{"cuisine", "Cuisine of the restaurant", true}};
        r.schema.nl_mr = "what [cuisine] do you want?";
        r.references = {"What $cuisine_1 would you like?"};
        out.push_back(r);
    }
    {
        SGNLGRecord r;
        r.schema.service = "buses_1";
        r.schema.service_description = "Bus tickets";
        r.schema.intent = "FindBus";
        r.schema.intent_description = "Find a bus";
        r.schema.mr = {{"OFFER", "departure_time", "$departure_time_1"}};
        r.schema.slot_descriptions = {{"departure_time", "Departure time", false}};
        r.schema.nl_mr = "there is [$departure_time_1] for [departure time].";
        r.references = {"There is a bus at $departure_time_1."};
        out.push_back(r);
    }
    {
        SGNLGRecord r;
        r.schema.service = "buses_1";
        r.schema.service_description = "Bus tickets";
        r.schema.intent = "";
        r.schema.intent_description = "";
        r.schema.mr = {{"NOTIFY_SUCCESS", std::nullopt, std::nullopt}};
        r.schema.slot_descriptions = {};
        r.schema.nl_mr = "the request succeeded.";
        r.references = {"Your ticket is booked."};
        out.push_back(r);
    }
    return out;
}

TrainConfig small_config(const std::string& family) {
    TrainConfig cfg;
    cfg.family = family;
    cfg.symbolic_dim = 8;
    cfg.sentence_dim = 8;
    cfg.model_dim = 16;
    cfg.embed_dim = 8;
    cfg.latent_dim = 4;
    cfg.epochs = 1;
    cfg.seed = 13;
    return cfg;
}

struct Encoded {
    GenVocab gv;
    SymbolicVocab sv;
    std::vector<EncodedSchema> enc;
    std::vector<std::vector<std::string>> targets;
};

Encoded encode_all(const std::vector<SGNLGRecord>& records, const TrainConfig& cfg) {
    Encoded e;
    e.gv = GenVocab::from_references(records);
    e.sv = build_vocab(records);
    HashedSentenceEncoder senc(cfg.sentence_dim);
    EncoderConfig ec;
    ec.symbolic_dim = cfg.symbolic_dim;
    ec.nl_mr_mode = cfg.nl_mr_mode;
    ec.features = cfg.features;
    FlatEncoder fe(e.sv, senc, ec);
    for (const auto& r : records) {
        for (const auto& ref : r.references) {
            e.enc.push_back(fe.encode(r.schema));
            e.targets.push_back(tokenize(ref));
        }
    }
    return e;
}

}  // namespace

TEST_CASE("train config json round trip") {
    auto cfg = small_config("cvae");
    cfg.align = AlignForm::kDot;
    cfg.features = FeatureFlags::mr_only();
    cfg.top_k = 7;
    auto text = train_config_to_json(cfg);
    auto back = train_config_from_json(text);
    CHECK(back.family == "cvae");
    CHECK(back.symbolic_dim == 8);
    CHECK(back.align == AlignForm::kDot);
    CHECK(back.features == FeatureFlags::mr_only());
    CHECK(back.top_k == 7);
    CHECK(back.seed == 13);
}

TEST_CASE("seq2seq loss decreases under training") {
    auto records = tiny_records();
    auto cfg = small_config("seq2seq");
    auto e = encode_all(records, cfg);
    Seq2SeqModel model(cfg, e.gv, e.sv);
    ad::Adam opt(5e-3);
    double first = 0, last = 0;
    for (int epoch = 0; epoch < 30; ++epoch) {
        double sum = 0;
        for (size_t i = 0; i < e.enc.size(); ++i)
            sum += model.train_step(e.enc[i], e.targets[i], opt);
        if (epoch == 0) first = sum;
        last = sum;
    }
    CHECK(last < first * 0.5);
    CHECK(std::isfinite(last));
}

TEST_CASE("seq2seq checkpoint round trip preserves loss exactly") {
    auto records = tiny_records();
    auto cfg = small_config("seq2seq");
    auto e = encode_all(records, cfg);
    Seq2SeqModel model(cfg, e.gv, e.sv);
    ad::Adam opt(1e-3);
    for (int i = 0; i < 3; ++i) model.train_step(e.enc[0], e.targets[0], opt);
    double before = model.loss(e.enc[0], e.targets[0]);
    std::string path = "s2s_roundtrip.ckpt";
    model.save(path);
    auto ckpt = load_checkpoint(path);
    CHECK(ckpt.config.family == "seq2seq");
    CHECK(ckpt.gen_vocab_tokens == e.gv.tokens());
    CHECK(ckpt.sym_vocab_tokens == e.sv.tokens());
    auto loaded = Seq2SeqModel::from_checkpoint(ckpt);
    double after = loaded.loss(e.enc[0], e.targets[0]);
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("seq2seq step emits a proper mixture distribution") {
    auto records = tiny_records();
    auto cfg = small_config("seq2seq");
    auto e = encode_all(records, cfg);
    Seq2SeqModel model(cfg, e.gv, e.sv);
    auto ext = build_extended(e.gv, e.enc[0]);
    ad::Graph g(&model.params());
    auto h = model.build_encoder(g, e.enc[0]);
    int s = model.initial_decoder_state(g, h.back());
    int x = model.embed_prev(g, GenVocab::kBosId);
    auto sb = model.build_step(g, h, s, x, ext);
    const auto& dist = g.value(sb.dist);
    CHECK(static_cast<int>(dist.size()) == ext.size());
    double sum = 0;
    for (double p : dist) {
        CHECK(p >= 0.0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    double p_gen = g.value(sb.p_gen)[0];
    CHECK(p_gen > 0.0);
    CHECK(p_gen < 1.0);
    const auto& attn = g.value(sb.attn);
    CHECK(attn.size() == e.enc[0].steps.size());
    double asum = 0;
    for (double a : attn) asum += a;
    CHECK(asum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("seq2seq decoder reaches placeholders only through copying") {
    auto records = tiny_records();
    auto cfg = small_config("seq2seq");
    auto e = encode_all(records, cfg);
    Seq2SeqModel model(cfg, e.gv, e.sv);
    auto dec = model.make_decoder(e.enc[0]);
    auto ext = build_extended(e.gv, e.enc[0]);
    CHECK(dec->vocab_size() == ext.size());
    CHECK(dec->pad_id() == GenVocab::kPadId);
    CHECK(dec->bos_id() == GenVocab::kBosId);
    CHECK(dec->eos_id() == GenVocab::kEosId);
    CHECK(dec->token_name(ext.id("$cuisine_1")) == "$cuisine_1");
    auto st = dec->initial_state();
    auto [dist, next] = dec->step(st, dec->bos_id());
    CHECK(static_cast<int>(dist.size()) == ext.size());
    CHECK(dist[static_cast<size_t>(ext.id("$cuisine_1"))] > 0.0);
}

TEST_CASE("cvae loss decreases and kl stays non-negative") {
    auto records = tiny_records();
    auto cfg = small_config("cvae");
    auto e = encode_all(records, cfg);
    CvaeModel model(cfg, e.gv, e.sv);
    ad::Adam opt(5e-3);
    double first = 0, last = 0;
    for (int epoch = 0; epoch < 30; ++epoch) {
        double sum = 0;
        for (size_t i = 0; i < e.enc.size(); ++i) {
            double w = std::min(1.0, (epoch * 3 + static_cast<double>(i)) / 18.0);
            auto l = model.train_step(e.enc[i], e.targets[i], w, opt);
            CHECK(l.kl >= -1e-8);
            sum += l.reconstruction;
        }
        if (epoch == 0) first = sum;
        last = sum;
    }
    CHECK(last < first * 0.7);
    CHECK(std::isfinite(last));
}

TEST_CASE("cvae checkpoint round trip preserves reconstruction loss") {
    auto records = tiny_records();
    auto cfg = small_config("cvae");
    auto e = encode_all(records, cfg);
    CvaeModel model(cfg, e.gv, e.sv);
    ad::Adam opt(1e-3);
    for (int i = 0; i < 2; ++i) model.train_step(e.enc[0], e.targets[0], 0.5, opt);
    std::string path = "cvae_roundtrip.ckpt";
    model.save(path);
    auto loaded = CvaeModel::from_checkpoint(load_checkpoint(path));
    auto dec_a = model.make_decoder(e.enc[0], 7);
    auto dec_b = loaded.make_decoder(e.enc[0], 7);
    auto sa = dec_a->initial_state();
    auto sb = dec_b->initial_state();
    REQUIRE(sa.size() == sb.size());
    for (size_t i = 0; i < sa.size(); ++i) CHECK(sa[i] == doctest::Approx(sb[i]).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("cvae decoder is deterministic per seed and varies across seeds") {
    auto records = tiny_records();
    auto cfg = small_config("cvae");
    auto e = encode_all(records, cfg);
    CvaeModel model(cfg, e.gv, e.sv);
    auto a = model.make_decoder(e.enc[0], 21)->initial_state();
    auto b = model.make_decoder(e.enc[0], 21)->initial_state();
    auto c = model.make_decoder(e.enc[0], 22)->initial_state();
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("lm trains on serialized schema and generates text") {
    auto records = tiny_records();
    auto cfg = small_config("lm");
    auto model = LmModel::with_tiny_backbone(cfg, records);
    double first = 0, last = 0;
    for (int epoch = 0; epoch < 25; ++epoch) {
        double sum = 0;
        for (const auto& r : records) sum += model.train_step(r.schema, tokenize(r.references[0]));
        if (epoch == 0) first = sum;
        last = sum;
    }
    CHECK(last < first);
    auto text = model.generate(records[0].schema, 1, 5);
    CHECK_FALSE(text.empty());
    CHECK(text.find("[BOS]") == std::string::npos);
    CHECK(text.find("[SEP]") == std::string::npos);
    CHECK(text.find("[EOS]") == std::string::npos);

    auto same = model.generate(records[0].schema, 3, 11);
    auto again = model.generate(records[0].schema, 3, 11);
    CHECK(same == again);
}

TEST_CASE("lm checkpoint round trip preserves generations") {
    auto records = tiny_records();
    auto cfg = small_config("lm");
    auto model = LmModel::with_tiny_backbone(cfg, records);
    for (int i = 0; i < 5; ++i) model.train_step(records[0].schema, tokenize(records[0].references[0]));
    std::string path = "lm_roundtrip.ckpt";
    model.save(path);
    auto ckpt = load_checkpoint(path);
    CHECK(ckpt.config.family == "lm");
    auto loaded = LmModel::from_checkpoint(ckpt);
    CHECK(loaded.generate(records[0].schema, 2, 9) == model.generate(records[0].schema, 2, 9));
    std::remove(path.c_str());
}
