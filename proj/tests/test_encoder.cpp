#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "sgnlg/flat_encoder.hpp"
#include "sgnlg/gen_common.hpp"
#include "sgnlg/lm.hpp"
#include "sgnlg/sentence_encoder.hpp"
#include "sgnlg/vocab.hpp"

using namespace sgnlg;

namespace {
SGNLGRecord sample_record() {
    SGNLGRecord rec;
    rec.schema.service = "restaurants_1";
    rec.schema.service_description = "A leading provider for restaurant search and reservations";
    rec.schema.intent = "FindRestaurants";
    rec.schema.intent_description = "Find a restaurant of a particular cuisine in a city";
    rec.schema.mr = {{"REQUEST", "cuisine", "$cuisine_1"},
                     {"REQUEST", "cuisine", "$cuisine_2"}};
    rec.schema.slot_descriptions = {{"cuisine", "Cuisine of food served in the restaurant", true}};
    rec.schema.nl_mr = "what [cuisine] do you want? what [cuisine] do you want?";
    rec.references = {"Is there a cuisine you enjoy, such as $cuisine_1 or $cuisine_2?"};
    return rec;
}
}  // namespace

TEST_CASE("symbolic vocab reserves pad and unk, orders by frequency") {
    std::map<std::string, long long> counts = {{"zeta", 5}, {"alpha", 5}, {"beta", 9}};
    auto v = SymbolicVocab::from_counts(counts);
    CHECK(v.size() == 5);
    CHECK(v.token(SymbolicVocab::kPadId) == SymbolicVocab::kPadToken);
    CHECK(v.token(SymbolicVocab::kUnkId) == SymbolicVocab::kUnkToken);
    CHECK(v.token(2) == "beta");
    CHECK(v.token(3) == "alpha");
    CHECK(v.token(4) == "zeta");
    CHECK(v.id("beta") == 2);
    CHECK(v.id("missing") == SymbolicVocab::kUnkId);
    CHECK(v.contains("zeta"));
}

TEST_CASE("symbolic vocab json round trip") {
    auto v = SymbolicVocab::from_tokens({"a", "b", "c"});
    std::string path = "vocab_roundtrip.json";
    v.save_json_file(path);
    auto back = SymbolicVocab::from_json_file(path);
    CHECK(back.tokens() == v.tokens());
    std::remove(path.c_str());
}

TEST_CASE("build_vocab covers acts, slots and schema tokens of records") {
    auto rec = sample_record();
    auto v = build_vocab({rec});
    CHECK(v.contains("REQUEST"));
    CHECK(v.contains("cuisine"));
    CHECK(v.contains("$cuisine_1"));
    CHECK(v.contains("restaurants_1"));
    CHECK(v.contains("FindRestaurants"));
}

TEST_CASE("hashed sentence encoder is deterministic and bounded") {
    HashedSentenceEncoder enc(32);
    auto a = enc.encode("the cuisine is mexican");
    auto b = enc.encode("the cuisine is mexican");
    CHECK(a == b);
    CHECK(a.size() == 32);
    double peak = 0;
    for (double x : a) peak = std::max(peak, std::fabs(x));
    CHECK(peak > 0.0);
    CHECK(peak <= 1.0);
    auto c = enc.encode("a different sentence entirely");
    CHECK(a != c);
    CHECK(enc.encode("").size() == 32);
}

TEST_CASE("embedding cache round trips through disk") {
    EmbeddingCache cache(8);
    cache.put("hello", std::vector<double>(8, 0.5));
    cache.put("world", std::vector<double>(8, -1.25));
    std::string path = "cache_roundtrip.bin";
    cache.save(path);
    auto back = EmbeddingCache::load(path);
    CHECK(back.dim() == 8);
    CHECK(back.size() == 2);
    REQUIRE(back.find("hello") != nullptr);
    CHECK((*back.find("hello"))[0] == doctest::Approx(0.5));
    REQUIRE(back.find("world") != nullptr);
    CHECK((*back.find("world"))[7] == doctest::Approx(-1.25));
    CHECK(back.find("missing") == nullptr);
    std::remove(path.c_str());
}

TEST_CASE("caching encoder matches inner encoder and fills its cache") {
    auto inner = std::make_shared<HashedSentenceEncoder>(16);
    CachingSentenceEncoder cached(inner, EmbeddingCache(16));
    auto direct = inner->encode("some text");
    auto via = cached.encode("some text");
    CHECK(via == direct);
    CHECK(cached.cache().size() >= 1);
}

TEST_CASE("feature flag lists round trip") {
    auto full = FeatureFlags::full();
    auto list = features_to_list(full);
    CHECK(features_from_list(list) == full);
    auto none = features_from_list({});
    CHECK(none == FeatureFlags::mr_only());
    auto some = features_from_list({"service", "nl_mr"});
    CHECK(some.service);
    CHECK(some.nl_mr);
    CHECK_FALSE(some.intent);
    CHECK_FALSE(some.slot_descriptions);
}

TEST_CASE("flat encoder full schema emits mr steps plus context steps") {
    auto rec = sample_record();
    auto vocab = build_vocab({rec});
    HashedSentenceEncoder senc(16);
    EncoderConfig cfg;
    cfg.symbolic_dim = 8;
    FlatEncoder enc(vocab, senc, cfg);
    auto es = enc.encode(rec.schema);
    CHECK(es.symbolic_dim == 8);
    CHECK(es.sentence_dim == 16);
    CHECK(es.mr_steps == 2);
    CHECK(es.steps.size() > 2);
    CHECK(es.width() == 5 * 8 + 4 * 16);
    CHECK(es.steps[0].copy_token == "$cuisine_1");
    CHECK(es.steps[1].copy_token == "$cuisine_2");
}

TEST_CASE("flat encoder mr_only drops context steps and sentence segments") {
    auto rec = sample_record();
    auto vocab = build_vocab({rec});
    HashedSentenceEncoder senc(16);
    EncoderConfig cfg;
    cfg.symbolic_dim = 8;
    cfg.features = FeatureFlags::mr_only();
    FlatEncoder enc(vocab, senc, cfg);
    auto es = enc.encode(rec.schema);
    CHECK(es.mr_steps == 2);
    CHECK(es.steps.size() == 2);
    for (const auto& step : es.steps)
        for (const auto& seg : step.sent) CHECK(seg.empty());
}

TEST_CASE("materialize_step produces width-sized dense vectors") {
    auto rec = sample_record();
    auto vocab = build_vocab({rec});
    HashedSentenceEncoder senc(16);
    EncoderConfig cfg;
    cfg.symbolic_dim = 8;
    FlatEncoder enc(vocab, senc, cfg);
    auto es = enc.encode(rec.schema);
    std::vector<std::vector<double>> table(static_cast<std::size_t>(vocab.size()),
                                           std::vector<double>(8, 0.25));
    auto vec = materialize_step(es, 0, table);
    CHECK(static_cast<int>(vec.size()) == es.width());
    bool any_nonzero = false;
    for (double x : vec) any_nonzero |= x != 0.0;
    CHECK(any_nonzero);
}

TEST_CASE("gen vocab excludes placeholders so copy is the only path") {
    auto rec = sample_record();
    auto gv = gen::GenVocab::from_references({rec});
    CHECK(gv.token(gen::GenVocab::kPadId) == "<pad>");
    CHECK(gv.token(gen::GenVocab::kUnkId) == "<unk>");
    CHECK(gv.token(gen::GenVocab::kBosId) == "<bos>");
    CHECK(gv.token(gen::GenVocab::kEosId) == "<eos>");
    CHECK(gv.contains("cuisine"));
    CHECK_FALSE(gv.contains("$cuisine_1"));
    CHECK_FALSE(gv.contains("$cuisine_2"));
    CHECK(gv.id("$cuisine_1") == gen::GenVocab::kUnkId);
}

TEST_CASE("extended vocab assigns copy ids for placeholders") {
    auto rec = sample_record();
    auto gv = gen::GenVocab::from_references({rec});
    auto sv = build_vocab({rec});
    HashedSentenceEncoder senc(16);
    EncoderConfig cfg;
    cfg.symbolic_dim = 8;
    FlatEncoder enc(sv, senc, cfg);
    auto es = enc.encode(rec.schema);
    auto ext = gen::build_extended(gv, es);
    CHECK(ext.size() == gv.size() + 2);
    CHECK(ext.id("$cuisine_1") >= gv.size());
    CHECK(ext.id("$cuisine_2") >= gv.size());
    CHECK(ext.token(ext.id("$cuisine_1")) == "$cuisine_1");
    REQUIRE(ext.copy_ids.size() == es.steps.size());
    CHECK(ext.copy_ids[0] == ext.id("$cuisine_1"));
    CHECK(ext.copy_ids[1] == ext.id("$cuisine_2"));

    auto ids = gen::encode_target(tokenize(rec.references[0]), ext);
    bool saw_copy = false;
    for (int id : ids) saw_copy |= id >= gv.size();
    CHECK(saw_copy);
}

TEST_CASE("lm serialization emits labeled blocks between specials") {
    auto rec = sample_record();
    auto ser = gen::serialize_for_lm(rec.schema, FeatureFlags::full());
    REQUIRE_FALSE(ser.schema_tokens.empty());
    auto seq = gen::build_lm_sequence(ser, tokenize(rec.references[0]));
    CHECK(seq.front() == "[BOS]");
    CHECK(seq.back() == "[EOS]");
    CHECK(std::count(seq.begin(), seq.end(), "[SEP]") == 1);
    CHECK(gen::validate_lm_sequence(seq).empty());
    auto joined = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& t : v) s += t + " ";
        return s;
    }(ser.schema_tokens);
    CHECK(joined.find("service :") != std::string::npos);
    CHECK(joined.find("intent :") != std::string::npos);
    CHECK(joined.find("slots :") != std::string::npos);
    CHECK(joined.find("mr :") != std::string::npos);
}

TEST_CASE("lm serialization falls back to nl mr when features are off") {
    auto rec = sample_record();
    auto ser = gen::serialize_for_lm(rec.schema, FeatureFlags::mr_only());
    REQUIRE_FALSE(ser.schema_tokens.empty());
    std::string joined;
    for (const auto& t : ser.schema_tokens) joined += t + " ";
    CHECK(joined.rfind("mr :", 0) == 0);
}

TEST_CASE("tiny backbone vocabulary reserves specials and encodes unknowns") {
    std::vector<std::vector<std::string>> seqs = {{"the", "cat", "sat"}, {"the", "dog"}};
    auto tokens = gen::TinyBackbone::vocab_from_sequences(seqs);
    REQUIRE(tokens.size() >= 5);
    CHECK(tokens[0] == "[PAD]");
    CHECK(tokens[1] == "[UNK]");
    CHECK(tokens[2] == "[BOS]");
    CHECK(tokens[3] == "[SEP]");
    CHECK(tokens[4] == "[EOS]");
    gen::TinyBackbone bb(tokens, 8, 12, 0.01, 7);
    CHECK(bb.vocab_size() == static_cast<int>(tokens.size()));
    auto ids = bb.encode({"the", "never_seen"});
    REQUIRE(ids.size() == 2);
    CHECK(ids[1] == bb.unk_id());
    auto st = bb.start_state();
    CHECK(static_cast<int>(st.size()) == bb.hidden_dim());
    auto [dist, next] = bb.step(st, bb.bos_id());
    CHECK(static_cast<int>(dist.size()) == bb.vocab_size());
    double sum = 0;
    for (double p : dist) {
        CHECK(p >= 0.0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}
