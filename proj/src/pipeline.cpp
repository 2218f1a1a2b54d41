#include "sgnlg/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sgnlg/cvae.hpp"
#include "sgnlg/flat_encoder.hpp"
#include "sgnlg/lm.hpp"
#include "sgnlg/nlmr.hpp"
#include "sgnlg/seq2seq.hpp"
#include "sgnlg/sentence_encoder.hpp"
#include "sgnlg/vocab.hpp"

namespace sgnlg::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kLmMaxLen = 128;

struct Single {
    SGNLGRecord record;
    std::string dialog_id;
};

// One directory of DSTC8 dialogue files plus its schema.json -> one record
// per surviving system turn.
std::vector<Single> preprocess_dir(const std::string& dir, const NlMrRules& rules,
                                   PreprocessCounters& counters) {
    auto schemas = dstc8::load_schema_file((fs::path(dir) / "schema.json").string());
    auto dialogs = dstc8::load_dialog_dir(dir);
    counters.dialogs += static_cast<long long>(dialogs.size());
    std::vector<Single> singles;
    for (const auto& turn : dstc8::extract_system_turns(dialogs)) {
        ++counters.system_turns;
        dstc8::Delexicalized delex;
        try {
            delex = dstc8::delexicalize(turn.system.utterance, turn.system.slot_spans,
                                        turn.system.actions);
        } catch (const dstc8::SpanMismatchError&) {
            ++counters.span_errors;
            continue;
        }
        int raw = 0;
        auto mr = dstc8::build_mr(turn.system.actions, delex.assignment,
                                  dstc8::MissingValuePolicy::kKeepRaw, &raw);
        counters.raw_values_kept += raw;
        std::string intent = dstc8::propagate_intent(turn.system, turn.user);
        SchemaInstance schema;
        try {
            schema = dstc8::attach_schema_info(turn.system.service, intent, mr, schemas);
        } catch (const dstc8::SchemaLookupError&) {
            ++counters.schema_misses;
            continue;
        }
        try {
            schema.nl_mr = render_nl_mr(schema.mr, rules);
        } catch (const UnknownActError&) {
            ++counters.render_errors;
            continue;
        }
        singles.push_back({SGNLGRecord{std::move(schema), {delex.text}}, turn.dialog_id});
    }
    return singles;
}

std::vector<SGNLGRecord> records_of(const std::vector<Single>& singles) {
    std::vector<SGNLGRecord> recs;
    recs.reserve(singles.size());
    for (const auto& s : singles) recs.push_back(s.record);
    return recs;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

struct Instance {
    int record = 0;
    int reference = 0;
};

std::vector<Instance> make_instances(const std::vector<SGNLGRecord>& records, long long limit) {
    std::vector<Instance> out;
    for (std::size_t r = 0; r < records.size(); ++r)
        for (std::size_t i = 0; i < records[r].references.size(); ++i)
            out.push_back({static_cast<int>(r), static_cast<int>(i)});
    if (limit > 0 && static_cast<long long>(out.size()) > limit)
        out.resize(static_cast<std::size_t>(limit));
    return out;
}

void shuffle_instances(std::vector<Instance>& instances, ad::DetRng& rng) {
    for (std::size_t i = instances.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
        std::swap(instances[i - 1], instances[j]);
    }
}

// The sentence encoder behind a disk cache so repeated runs skip re-encoding.
struct EncoderBundle {
    std::shared_ptr<CachingSentenceEncoder> encoder;
    std::string cache_path;
};

EncoderBundle make_encoder(const RunConfig& cfg, int dim) {
    fs::create_directories(cfg.cache_dir);
    std::string path =
        (fs::path(cfg.cache_dir) / ("embeddings_" + std::to_string(dim) + ".bin")).string();
    EmbeddingCache cache(dim);
    if (fs::exists(path)) cache = EmbeddingCache::load(path);
    auto inner = std::make_shared<HashedSentenceEncoder>(dim);
    return {std::make_shared<CachingSentenceEncoder>(inner, std::move(cache)), path};
}

dec::DecodeResult decode_with_mode(dec::StepDecoder& decoder, const std::string& mode,
                                   const gen::TrainConfig& tc, int max_len, std::uint64_t seed) {
    if (mode == "beam") return dec::constrained_beam_decode(decoder, tc.beam_width, max_len);
    if (mode == "topk") return dec::topk_sample_decode(decoder, tc.top_k, seed, max_len);
    if (mode == "greedy") return dec::masked_greedy_decode(decoder, max_len);
    throw std::runtime_error("unknown decode mode: " + mode);
}

struct GenerationLine {
    long long index = 0;
    std::string service;
    std::string output;
    double log_prob = 0.0;
    bool ended = false;
};

std::vector<GenerationLine> read_generations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open generations file: " + path);
    std::vector<GenerationLine> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("header")) continue;
        GenerationLine g;
        g.index = j.at("index").get<long long>();
        g.service = j.value("service", "");
        g.output = j.at("output").get<std::string>();
        g.log_prob = j.value("log_prob", 0.0);
        g.ended = j.value("ended", false);
        lines.push_back(std::move(g));
    }
    return lines;
}

}  // namespace

PreprocessResult run_preprocess(const RunConfig& cfg) {
    if (cfg.raw_train_dir.empty() || cfg.raw_test_dir.empty())
        throw std::runtime_error("raw_train_dir and raw_test_dir must be set");
    NlMrRules rules =
        cfg.rules_file.empty() ? NlMrRules::defaults() : NlMrRules::from_json_file(cfg.rules_file);

    PreprocessResult result;
    auto train_singles = preprocess_dir(cfg.raw_train_dir, rules, result.counters);
    auto test_singles = preprocess_dir(cfg.raw_test_dir, rules, result.counters);

    // Seeded dialogue-level dev split: whole dialogues move so no MR leaks
    // references across the boundary.
    std::vector<std::string> dialog_ids;
    std::set<std::string> seen_ids;
    for (const auto& s : train_singles)
        if (seen_ids.insert(s.dialog_id).second) dialog_ids.push_back(s.dialog_id);
    ad::DetRng rng(static_cast<std::uint64_t>(cfg.train.seed) * 0xd1a706ULL + 1);
    for (std::size_t i = dialog_ids.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
        std::swap(dialog_ids[i - 1], dialog_ids[j]);
    }
    auto dev_count = static_cast<std::size_t>(cfg.dev_fraction *
                                              static_cast<double>(dialog_ids.size()));
    std::set<std::string> dev_ids(dialog_ids.begin(),
                                  dialog_ids.begin() + static_cast<long>(dev_count));

    std::vector<Single> train_part, dev_part;
    for (auto& s : train_singles)
        (dev_ids.count(s.dialog_id) ? dev_part : train_part).push_back(std::move(s));

    int dup = 0;
    result.train = dstc8::group_records(records_of(train_part), cfg.dedupe_references, &dup);
    result.counters.duplicates += dup;
    result.dev = dstc8::group_records(records_of(dev_part), cfg.dedupe_references, &dup);
    result.counters.duplicates += dup;
    result.test = dstc8::group_records(records_of(test_singles), cfg.dedupe_references, &dup);
    result.counters.duplicates += dup;

    result.stats.push_back(dstc8::corpus_stats("train", result.train));
    result.stats.push_back(dstc8::corpus_stats("dev", result.dev));
    result.stats.push_back(dstc8::corpus_stats("test", result.test));

    fs::create_directories(cfg.out_dir);
    std::string hash = cfg.hash();
    write_records((fs::path(cfg.out_dir) / "train.jsonl").string(), result.train, hash,
                  cfg.train.seed);
    write_records((fs::path(cfg.out_dir) / "dev.jsonl").string(), result.dev, hash,
                  cfg.train.seed);
    write_records((fs::path(cfg.out_dir) / "test.jsonl").string(), result.test, hash,
                  cfg.train.seed);
    {
        std::ofstream csv((fs::path(cfg.out_dir) / "stats.csv").string());
        csv << dstc8::stats_to_csv(result.stats, hash);
        std::ofstream md((fs::path(cfg.out_dir) / "stats.md").string());
        md << dstc8::stats_to_markdown(result.stats, hash);
    }
    return result;
}

std::string run_stats(const RunConfig& cfg) {
    std::vector<dstc8::SplitStats> stats;
    for (const char* name : {"train", "dev", "test"}) {
        auto path = fs::path(cfg.out_dir) / (std::string(name) + ".jsonl");
        if (!fs::exists(path)) continue;
        auto file = read_records(path.string());
        stats.push_back(dstc8::corpus_stats(name, file.records));
    }
    if (stats.empty())
        throw std::runtime_error("no preprocessed record files under " + cfg.out_dir);
    std::string hash = cfg.hash();
    std::string csv = dstc8::stats_to_csv(stats, hash);
    std::string md = dstc8::stats_to_markdown(stats, hash);
    std::ofstream csv_out((fs::path(cfg.out_dir) / "stats.csv").string());
    csv_out << csv;
    std::ofstream md_out((fs::path(cfg.out_dir) / "stats.md").string());
    md_out << md;
    return md;
}

TrainSummary run_train(const RunConfig& cfg) {
    auto train_file = read_records((fs::path(cfg.out_dir) / "train.jsonl").string());
    const auto& records = train_file.records;
    if (records.empty()) throw std::runtime_error("training set is empty");

    auto instances = make_instances(records, cfg.limit);
    TrainSummary summary;
    summary.family = cfg.train.family;
    summary.instances = static_cast<long long>(instances.size());
    summary.epochs = cfg.train.epochs;
    summary.checkpoint_path = cfg.checkpoint;
    if (fs::path(cfg.checkpoint).has_parent_path())
        fs::create_directories(fs::path(cfg.checkpoint).parent_path());

    auto epoch_rng_seed = [&](int epoch) {
        return static_cast<std::uint64_t>(cfg.train.seed) * 0x9e3779b97f4a7c15ULL +
               static_cast<std::uint64_t>(epoch) + 1;
    };

    if (cfg.train.family == "lm") {
        auto model = gen::LmModel::with_tiny_backbone(cfg.train, records);
        for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
            ad::DetRng rng(epoch_rng_seed(epoch));
            shuffle_instances(instances, rng);
            double sum = 0.0;
            for (const auto& inst : instances) {
                const auto& rec = records[static_cast<std::size_t>(inst.record)];
                sum += model.train_step(
                    rec.schema,
                    tokenize(rec.references[static_cast<std::size_t>(inst.reference)]));
            }
            double mean = sum / static_cast<double>(instances.size());
            if (epoch == 0) summary.first_epoch_loss = mean;
            summary.final_epoch_loss = mean;
            std::cout << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " loss " << mean
                      << "\n";
        }
        model.save(cfg.checkpoint);
        return summary;
    }

    gen::GenVocab gv = gen::GenVocab::from_references(records);
    SymbolicVocab sv = build_vocab(records);
    auto bundle = make_encoder(cfg, cfg.train.sentence_dim);
    EncoderConfig enc_cfg{cfg.train.symbolic_dim, cfg.train.nl_mr_mode, cfg.train.features};
    FlatEncoder flat(sv, *bundle.encoder, enc_cfg);
    std::vector<EncodedSchema> encs;
    encs.reserve(records.size());
    for (const auto& rec : records) encs.push_back(flat.encode(rec.schema));
    bundle.encoder->save_cache(bundle.cache_path);

    ad::Adam opt(cfg.train.lr);
    if (cfg.train.family == "seq2seq") {
        gen::Seq2SeqModel model(cfg.train, gv, sv);
        for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
            ad::DetRng rng(epoch_rng_seed(epoch));
            shuffle_instances(instances, rng);
            double sum = 0.0;
            for (const auto& inst : instances) {
                const auto& rec = records[static_cast<std::size_t>(inst.record)];
                sum += model.train_step(
                    encs[static_cast<std::size_t>(inst.record)],
                    tokenize(rec.references[static_cast<std::size_t>(inst.reference)]), opt);
            }
            double mean = sum / static_cast<double>(instances.size());
            if (epoch == 0) summary.first_epoch_loss = mean;
            summary.final_epoch_loss = mean;
            std::cout << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " loss " << mean
                      << "\n";
        }
        model.save(cfg.checkpoint);
        return summary;
    }
    if (cfg.train.family == "cvae") {
        gen::CvaeModel model(cfg.train, gv, sv);
        long long total_steps =
            static_cast<long long>(cfg.train.epochs) * static_cast<long long>(instances.size());
        long long anneal_steps = static_cast<long long>(
            cfg.train.kl_anneal_fraction * static_cast<double>(total_steps));
        long long step = 0;
        for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
            ad::DetRng rng(epoch_rng_seed(epoch));
            shuffle_instances(instances, rng);
            double sum = 0.0;
            for (const auto& inst : instances) {
                double klw = anneal_steps > 0
                                 ? std::min(1.0, static_cast<double>(step) /
                                                     static_cast<double>(anneal_steps))
                                 : 1.0;
                const auto& rec = records[static_cast<std::size_t>(inst.record)];
                auto loss = model.train_step(
                    encs[static_cast<std::size_t>(inst.record)],
                    tokenize(rec.references[static_cast<std::size_t>(inst.reference)]), klw, opt);
                sum += loss.total(klw);
                ++step;
            }
            double mean = sum / static_cast<double>(instances.size());
            if (epoch == 0) summary.first_epoch_loss = mean;
            summary.final_epoch_loss = mean;
            std::cout << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " loss " << mean
                      << "\n";
        }
        model.save(cfg.checkpoint);
        return summary;
    }
    throw std::runtime_error("unknown model family: " + cfg.train.family);
}

GenerateSummary run_generate(const RunConfig& cfg) {
    auto ckpt = gen::load_checkpoint(cfg.checkpoint);
    auto test_file = read_records((fs::path(cfg.out_dir) / "test.jsonl").string());
    auto records = test_file.records;
    if (cfg.limit > 0 && static_cast<long long>(records.size()) > cfg.limit)
        records.resize(static_cast<std::size_t>(cfg.limit));

    GenerateSummary summary;
    summary.family = ckpt.config.family;
    summary.records = static_cast<long long>(records.size());
    summary.output_path = cfg.generations;

    std::string mode = cfg.decode_mode;
    // The LM path samples; its output space is unconstrained text, so beam
    // search over it is deliberately unsupported.
    if (ckpt.config.family == "lm" && mode == "beam") {
        std::cerr << "note: lm family decodes by sampling; using topk\n";
        mode = "topk";
    }
    summary.decode_mode = mode;

    if (fs::path(cfg.generations).has_parent_path())
        fs::create_directories(fs::path(cfg.generations).parent_path());
    std::ofstream out(cfg.generations);
    if (!out) throw std::runtime_error("cannot write generations file: " + cfg.generations);
    json header;
    header["header"] = {{"config_hash", cfg.hash()},
                        {"seed", cfg.train.seed},
                        {"family", ckpt.config.family},
                        {"decode_mode", mode}};
    out << header.dump() << "\n";

    auto emit = [&](std::size_t i, const std::string& service, const dec::DecodeResult& res) {
        json j;
        j["index"] = static_cast<long long>(i);
        j["service"] = service;
        j["output"] = res.text;
        j["log_prob"] = res.log_prob;
        j["ended"] = res.ended;
        out << j.dump() << "\n";
    };
    auto seed_for = [&](std::size_t i) {
        return static_cast<std::uint64_t>(cfg.train.seed) * 0x100000001b3ULL +
               static_cast<std::uint64_t>(i);
    };

    if (ckpt.config.family == "lm") {
        auto model = gen::LmModel::from_checkpoint(ckpt);
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto decoder = model.make_decoder(records[i].schema);
            auto res = decode_with_mode(*decoder, mode, ckpt.config, kLmMaxLen, seed_for(i));
            emit(i, records[i].schema.service, res);
        }
        return summary;
    }

    auto bundle = make_encoder(cfg, ckpt.config.sentence_dim);
    EncoderConfig enc_cfg{ckpt.config.symbolic_dim, ckpt.config.nl_mr_mode, ckpt.config.features};
    if (ckpt.config.family == "seq2seq") {
        auto model = gen::Seq2SeqModel::from_checkpoint(ckpt);
        FlatEncoder flat(model.sym_vocab(), *bundle.encoder, enc_cfg);
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto enc = flat.encode(records[i].schema);
            auto decoder = model.make_decoder(enc);
            auto res =
                decode_with_mode(*decoder, mode, ckpt.config, ckpt.config.max_len, seed_for(i));
            emit(i, records[i].schema.service, res);
        }
    } else if (ckpt.config.family == "cvae") {
        auto model = gen::CvaeModel::from_checkpoint(ckpt);
        FlatEncoder flat(model.sym_vocab(), *bundle.encoder, enc_cfg);
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto enc = flat.encode(records[i].schema);
            auto decoder = model.make_decoder(enc, seed_for(i));
            auto res =
                decode_with_mode(*decoder, mode, ckpt.config, ckpt.config.max_len, seed_for(i));
            emit(i, records[i].schema.service, res);
        }
    } else {
        throw std::runtime_error("unknown model family in checkpoint: " + ckpt.config.family);
    }
    bundle.encoder->save_cache(bundle.cache_path);
    return summary;
}

eval::EvalReport run_evaluate(const RunConfig& cfg) {
    auto gens = read_generations(cfg.generations);
    auto test_file = read_records((fs::path(cfg.out_dir) / "test.jsonl").string());
    auto train_file = read_records((fs::path(cfg.out_dir) / "train.jsonl").string());

    std::set<std::string> train_services, train_domains;
    std::vector<std::string> train_references;
    for (const auto& rec : train_file.records) {
        train_services.insert(rec.schema.service);
        train_domains.insert(dstc8::domain_of(rec.schema.service));
        for (const auto& ref : rec.references) train_references.push_back(ref);
    }

    std::vector<eval::InstanceEval> instances;
    for (const auto& g : gens) {
        if (g.index < 0 || g.index >= static_cast<long long>(test_file.records.size()))
            throw std::runtime_error("generation index out of range: " + std::to_string(g.index));
        const auto& rec = test_file.records[static_cast<std::size_t>(g.index)];
        eval::InstanceEval in;
        in.service = rec.schema.service;
        in.split = dstc8::split_label_name(
            dstc8::classify_service_split(rec.schema.service, train_services, train_domains));
        in.mr = rec.schema.mr;
        in.output_tokens = tokenize(g.output);
        for (const auto& ref : rec.references) in.reference_tokens.push_back(tokenize(ref));
        instances.push_back(std::move(in));
    }

    auto report = eval::aggregate_report(instances, train_references);
    report.config_hash = cfg.hash();
    report.seed = cfg.train.seed;
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream f((fs::path(cfg.out_dir) / "eval.json").string());
        f << eval::report_to_json(report);
    }
    {
        std::ofstream f((fs::path(cfg.out_dir) / "eval.csv").string());
        f << eval::report_to_csv(report);
    }
    {
        std::ofstream f((fs::path(cfg.out_dir) / "eval.md").string());
        f << eval::report_to_markdown(report);
    }
    return report;
}

std::string run_report(const RunConfig& cfg, const std::vector<std::string>& eval_json_paths,
                       const std::vector<std::string>& labels) {
    if (eval_json_paths.size() != labels.size())
        throw std::runtime_error("each eval report needs a label");
    std::ostringstream md;
    md << "| Run | BLEU | METEOR | SER | Slot match | Distinct-1 | Distinct-2 | Novelty |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    std::vector<json> reports;
    for (std::size_t i = 0; i < eval_json_paths.size(); ++i) {
        std::ifstream in(eval_json_paths[i]);
        if (!in) throw std::runtime_error("cannot open eval report: " + eval_json_paths[i]);
        json j = json::parse(in);
        reports.push_back(j);
        md << "| " << labels[i] << " | " << j.value("bleu", 0.0) << " | " << j.value("meteor", 0.0)
           << " | " << j.value("ser", 0.0) << " | " << j.value("slot_match_rate", 0.0) << " | "
           << j["diversity"].value("distinct1", 0.0) << " | "
           << j["diversity"].value("distinct2", 0.0) << " | "
           << j["diversity"].value("novelty", 0.0) << " |\n";
    }
    md << "\n| Run | Split | BLEU | SER |\n|---|---|---|---|\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
        for (const auto& s : reports[i]["splits"])
            md << "| " << labels[i] << " | " << s.value("split", std::string()) << " | "
               << s.value("bleu", 0.0) << " | " << s.value("ser", 0.0) << " |\n";

    // Reference-count distribution per service: how many MRs have k
    // references, from the preprocessed record files.
    std::ostringstream csv;
    csv << "file,service,references_per_mr,mr_count\n";
    for (const char* name : {"train", "dev", "test"}) {
        auto path = fs::path(cfg.out_dir) / (std::string(name) + ".jsonl");
        if (!fs::exists(path)) continue;
        auto file = read_records(path.string());
        std::map<std::string, std::map<std::size_t, long long>> hist;
        for (const auto& rec : file.records) ++hist[rec.schema.service][rec.references.size()];
        for (const auto& [service, counts] : hist)
            for (const auto& [refs, n] : counts)
                csv << name << ',' << service << ',' << refs << ',' << n << '\n';
    }
    csv << "# config_hash=" << cfg.hash() << "\n";

    fs::create_directories(cfg.out_dir);
    std::string md_text = md.str();
    {
        std::ofstream f((fs::path(cfg.out_dir) / "report.md").string());
        f << md_text;
    }
    {
        std::ofstream f((fs::path(cfg.out_dir) / "reference_distribution.csv").string());
        f << csv.str();
    }
    return md_text;
}

void download_dstc8(const std::string& dest_dir) {
    std::string cmd =
        "git clone --depth 1 "
        "https://github.com/google-research-datasets/dstc8-schema-guided-dialogue \"" +
        dest_dir + "\"";
    int rc = std::system(cmd.c_str());
    if (rc != 0) throw std::runtime_error("git clone failed with exit status " +
                                          std::to_string(rc));
}

}  // namespace sgnlg::cli
