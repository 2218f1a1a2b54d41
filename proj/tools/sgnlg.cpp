#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgnlg/dstc8.hpp"
#include "sgnlg/nlmr.hpp"
#include "sgnlg/pipeline.hpp"
#include "sgnlg/sentence_encoder.hpp"

namespace {

using sgnlg::cli::RunConfig;

// Shared flag set: every subcommand accepts the full config surface so one
// declarative file plus targeted overrides drives any stage.
struct CommonOpts {
    std::string config_path;
    std::string raw_train_dir, raw_test_dir, out_dir, cache_dir, checkpoint, generations,
        rules_file;
    std::string family, decode_mode, align, nl_mr_mode, features;
    double dev_fraction = 0.0, lr = 0.0, kl_anneal_fraction = 0.0;
    long long seed = 0, limit = 0;
    int epochs = 0, model_dim = 0, embed_dim = 0, symbolic_dim = 0, sentence_dim = 0,
        latent_dim = 0, top_k = 0, beam_width = 0, max_len = 0;
    bool dedupe = false;
    std::map<std::string, CLI::Option*> opt;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    o.opt["config"] = cmd->add_option("--config", o.config_path, "JSON run config file");
    o.opt["raw_train_dir"] =
        cmd->add_option("--raw-train-dir", o.raw_train_dir, "DSTC8 training dialogue dir");
    o.opt["raw_test_dir"] =
        cmd->add_option("--raw-test-dir", o.raw_test_dir, "DSTC8 test dialogue dir");
    o.opt["out_dir"] = cmd->add_option("--out-dir", o.out_dir, "artifact directory");
    o.opt["cache_dir"] = cmd->add_option("--cache-dir", o.cache_dir, "embedding cache dir");
    o.opt["checkpoint"] = cmd->add_option("--checkpoint", o.checkpoint, "model checkpoint path");
    o.opt["generations"] =
        cmd->add_option("--generations", o.generations, "generation output JSONL");
    o.opt["rules_file"] = cmd->add_option("--rules-file", o.rules_file, "NL-MR rules JSON");
    o.opt["family"] =
        cmd->add_option("--family", o.family, "model family: seq2seq | cvae | lm");
    o.opt["decode_mode"] =
        cmd->add_option("--decode-mode", o.decode_mode, "beam | topk | greedy");
    o.opt["align"] = cmd->add_option("--align", o.align, "attention form: bilinear | dot");
    o.opt["nl_mr_mode"] =
        cmd->add_option("--nl-mr-mode", o.nl_mr_mode, "NL-MR encoding: pooled | tokens");
    o.opt["features"] = cmd->add_option(
        "--features", o.features,
        "mr_only, full_schema, or comma-separated feature names");
    o.opt["dev_fraction"] =
        cmd->add_option("--dev-fraction", o.dev_fraction, "dialogue share held out as dev");
    o.opt["lr"] = cmd->add_option("--lr", o.lr, "learning rate");
    o.opt["kl_anneal_fraction"] = cmd->add_option("--kl-anneal-fraction", o.kl_anneal_fraction,
                                                  "share of steps to anneal KL weight over");
    o.opt["seed"] = cmd->add_option("--seed", o.seed, "run seed");
    o.opt["limit"] =
        cmd->add_option("--limit", o.limit, "cap on training instances / generated records");
    o.opt["epochs"] = cmd->add_option("--epochs", o.epochs, "training epochs");
    o.opt["model_dim"] = cmd->add_option("--model-dim", o.model_dim, "GRU width");
    o.opt["embed_dim"] = cmd->add_option("--embed-dim", o.embed_dim, "token embedding dim");
    o.opt["symbolic_dim"] =
        cmd->add_option("--symbolic-dim", o.symbolic_dim, "symbolic embedding dim");
    o.opt["sentence_dim"] =
        cmd->add_option("--sentence-dim", o.sentence_dim, "sentence embedding dim");
    o.opt["latent_dim"] = cmd->add_option("--latent-dim", o.latent_dim, "CVAE latent dim");
    o.opt["top_k"] = cmd->add_option("--top-k", o.top_k, "sampling candidate count");
    o.opt["beam_width"] = cmd->add_option("--beam-width", o.beam_width, "beam width");
    o.opt["max_len"] = cmd->add_option("--max-len", o.max_len, "decode length cap");
    o.opt["dedupe"] =
        cmd->add_flag("--dedupe-references", o.dedupe, "drop duplicate references per MR");
}

sgnlg::FeatureFlags parse_features(const std::string& text) {
    if (text == "mr_only") return sgnlg::FeatureFlags::mr_only();
    if (text == "full_schema" || text == "full") return sgnlg::FeatureFlags::full();
    std::vector<std::string> names;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) names.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) names.push_back(cur);
    return sgnlg::features_from_list(names);
}

RunConfig build_config(const CommonOpts& o) {
    RunConfig cfg;
    if (o.opt.at("config")->count()) cfg = RunConfig::from_file(o.config_path);
    if (const char* env = std::getenv("SGNLG_CACHE_DIR")) cfg.cache_dir = env;
    auto on = [&](const char* name) { return o.opt.at(name)->count() > 0; };
    if (on("raw_train_dir")) cfg.raw_train_dir = o.raw_train_dir;
    if (on("raw_test_dir")) cfg.raw_test_dir = o.raw_test_dir;
    if (on("out_dir")) cfg.out_dir = o.out_dir;
    if (on("cache_dir")) cfg.cache_dir = o.cache_dir;
    if (on("checkpoint")) cfg.checkpoint = o.checkpoint;
    if (on("generations")) cfg.generations = o.generations;
    if (on("rules_file")) cfg.rules_file = o.rules_file;
    if (on("family")) cfg.train.family = o.family;
    if (on("decode_mode")) cfg.decode_mode = o.decode_mode;
    if (on("align")) cfg.train.align = sgnlg::gen::align_from_name(o.align);
    if (on("nl_mr_mode")) cfg.train.nl_mr_mode = sgnlg::nl_mr_mode_from_name(o.nl_mr_mode);
    if (on("features")) cfg.train.features = parse_features(o.features);
    if (on("dev_fraction")) cfg.dev_fraction = o.dev_fraction;
    if (on("lr")) cfg.train.lr = o.lr;
    if (on("kl_anneal_fraction")) cfg.train.kl_anneal_fraction = o.kl_anneal_fraction;
    if (on("seed")) cfg.train.seed = o.seed;
    if (on("limit")) cfg.limit = o.limit;
    if (on("epochs")) cfg.train.epochs = o.epochs;
    if (on("model_dim")) cfg.train.model_dim = o.model_dim;
    if (on("embed_dim")) cfg.train.embed_dim = o.embed_dim;
    if (on("symbolic_dim")) cfg.train.symbolic_dim = o.symbolic_dim;
    if (on("sentence_dim")) cfg.train.sentence_dim = o.sentence_dim;
    if (on("latent_dim")) cfg.train.latent_dim = o.latent_dim;
    if (on("top_k")) cfg.train.top_k = o.top_k;
    if (on("beam_width")) cfg.train.beam_width = o.beam_width;
    if (on("max_len")) cfg.train.max_len = o.max_len;
    if (on("dedupe")) cfg.dedupe_references = o.dedupe;
    return cfg;
}

int fail(const std::string& code, const std::string& message) {
    std::cerr << code << ": " << message << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"schema-guided template generation: preprocess, train, generate, evaluate"};
    app.require_subcommand(0, 1);

    std::string download_dest;
    auto* dl_opt = app.add_option("--download-dstc8", download_dest,
                                  "clone the public DSTC8 corpus into DIR and exit");

    CommonOpts pre_o, stats_o, train_o, gen_o, eval_o, report_o;
    auto* pre = app.add_subcommand("preprocess", "raw dialogues -> grouped record files");
    add_common(pre, pre_o);
    auto* stats = app.add_subcommand("stats", "recompute corpus statistics");
    add_common(stats, stats_o);
    auto* train = app.add_subcommand("train", "fit a generator family");
    add_common(train, train_o);
    auto* gen = app.add_subcommand("generate", "decode templates for the test records");
    add_common(gen, gen_o);
    auto* eval = app.add_subcommand("evaluate", "score generations against references");
    add_common(eval, eval_o);
    auto* report = app.add_subcommand("report", "compare eval reports side by side");
    add_common(report, report_o);
    std::vector<std::string> eval_paths, labels;
    report->add_option("--eval", eval_paths, "eval JSON paths")->expected(-1);
    report->add_option("--label", labels, "one label per eval path")->expected(-1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (dl_opt->count()) {
            sgnlg::cli::download_dstc8(download_dest);
            std::cout << "downloaded corpus into " << download_dest << "\n";
            return 0;
        }
        if (pre->parsed()) {
            auto cfg = build_config(pre_o);
            auto result = sgnlg::cli::run_preprocess(cfg);
            const auto& c = result.counters;
            std::cout << "dialogs " << c.dialogs << ", system turns " << c.system_turns
                      << ", span errors " << c.span_errors << ", schema misses "
                      << c.schema_misses << ", render errors " << c.render_errors
                      << ", raw values kept " << c.raw_values_kept << ", duplicate references "
                      << c.duplicates << "\n";
            std::cout << "train " << result.train.size() << " MRs, dev " << result.dev.size()
                      << " MRs, test " << result.test.size() << " MRs -> " << cfg.out_dir << "\n";
            std::cout << sgnlg::dstc8::stats_to_markdown(result.stats, cfg.hash());
            return 0;
        }
        if (stats->parsed()) {
            std::cout << sgnlg::cli::run_stats(build_config(stats_o));
            return 0;
        }
        if (train->parsed()) {
            auto summary = sgnlg::cli::run_train(build_config(train_o));
            std::cout << "trained " << summary.family << " on " << summary.instances
                      << " instances for " << summary.epochs << " epochs; loss "
                      << summary.first_epoch_loss << " -> " << summary.final_epoch_loss
                      << "; checkpoint " << summary.checkpoint_path << "\n";
            return 0;
        }
        if (gen->parsed()) {
            auto summary = sgnlg::cli::run_generate(build_config(gen_o));
            std::cout << "generated " << summary.records << " outputs (" << summary.family
                      << ", " << summary.decode_mode << ") -> " << summary.output_path << "\n";
            return 0;
        }
        if (eval->parsed()) {
            auto cfg = build_config(eval_o);
            auto rep = sgnlg::cli::run_evaluate(cfg);
            std::cout << sgnlg::eval::report_to_markdown(rep);
            return 0;
        }
        if (report->parsed()) {
            std::cout << sgnlg::cli::run_report(build_config(report_o), eval_paths, labels);
            return 0;
        }
        std::cout << app.help();
        return 0;
    } catch (const sgnlg::dstc8::SpanMismatchError& e) {
        return fail("E_SPAN", e.what());
    } catch (const sgnlg::dstc8::SchemaLookupError& e) {
        return fail("E_SCHEMA", e.what());
    } catch (const sgnlg::dstc8::CorpusError& e) {
        return fail("E_CORPUS", e.what());
    } catch (const sgnlg::UnknownActError& e) {
        return fail("E_ACT", e.what());
    } catch (const sgnlg::EncoderUnavailableError& e) {
        return fail("E_ENCODER", e.what());
    } catch (const std::exception& e) {
        return fail("E_RUNTIME", e.what());
    }
}
