#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sgnlg/pipeline.hpp"
#include "sgnlg/run_config.hpp"

using namespace sgnlg;
using namespace sgnlg::cli;
namespace fs = std::filesystem;

namespace {

const std::string kTrainDir = std::string(SGNLG_DATA_DIR) + "/fixture/train";
const std::string kTestDir = std::string(SGNLG_DATA_DIR) + "/fixture/test";

RunConfig fixture_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.raw_train_dir = kTrainDir;
    cfg.raw_test_dir = kTestDir;
    cfg.out_dir = out_dir;
    cfg.cache_dir = out_dir + "/cache";
    cfg.checkpoint = out_dir + "/model.ckpt";
    cfg.generations = out_dir + "/generations.jsonl";
    cfg.train.symbolic_dim = 8;
    cfg.train.sentence_dim = 8;
    cfg.train.model_dim = 16;
    cfg.train.embed_dim = 8;
    cfg.train.latent_dim = 4;
    cfg.train.epochs = 2;
    cfg.train.max_len = 30;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("run config json round trip and file io") {
    auto cfg = fixture_config("cfg_roundtrip_out");
    cfg.dev_fraction = 0.25;
    cfg.dedupe_references = true;
    cfg.decode_mode = "topk";
    cfg.limit = 7;
    auto json = cfg.to_json();
    auto back = RunConfig::from_json(json);
    CHECK(back.raw_train_dir == cfg.raw_train_dir);
    CHECK(back.dev_fraction == doctest::Approx(0.25));
    CHECK(back.dedupe_references);
    CHECK(back.decode_mode == "topk");
    CHECK(back.limit == 7);
    CHECK(back.train.model_dim == 16);
    CHECK(back.hash() == cfg.hash());

    std::string path = "runconfig_roundtrip.json";
    cfg.save(path);
    auto from_file = RunConfig::from_file(path);
    CHECK(from_file.hash() == cfg.hash());
    std::remove(path.c_str());
}

TEST_CASE("config hash is stable and feature-sensitive") {
    auto a = fixture_config("hash_out");
    auto b = fixture_config("hash_out");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    for (char c : a.hash()) CHECK(std::isxdigit(static_cast<unsigned char>(c)));

    auto mr_only = fixture_config("hash_out");
    mr_only.train.features = FeatureFlags::mr_only();
    CHECK(mr_only.hash() != a.hash());

    auto other_seed = fixture_config("hash_out");
    other_seed.train.seed = 14;
    CHECK(other_seed.hash() != a.hash());
}

TEST_CASE("preprocess on the fixture matches the frozen golden counts") {
    TempDir tmp("pp_golden_out");
    auto cfg = fixture_config(tmp.path.string());
    auto result = run_preprocess(cfg);

    CHECK(result.counters.dialogs == 6);
    CHECK(result.counters.system_turns == 9);
    CHECK(result.counters.span_errors == 0);
    CHECK(result.counters.schema_misses == 0);
    CHECK(result.counters.render_errors == 0);
    CHECK(result.counters.raw_values_kept == 1);
    CHECK(result.counters.duplicates == 0);

    REQUIRE(result.stats.size() == 3);
    const auto& train = result.stats[0];
    CHECK(train.name == "train");
    CHECK(train.templates == 6);
    CHECK(train.mrs == 5);
    CHECK(train.services == 2);
    CHECK(train.domains == 2);
    CHECK(train.refs_per_mr_mean == doctest::Approx(1.2));
    CHECK(train.refs_per_mr_max == 2);
    CHECK(train.unique_templates == 6);
    const auto& dev = result.stats[1];
    CHECK(dev.name == "dev");
    CHECK(dev.mrs == 0);
    const auto& test = result.stats[2];
    CHECK(test.name == "test");
    CHECK(test.templates == 3);
    CHECK(test.mrs == 3);
    CHECK(test.services == 3);
    CHECK(test.domains == 3);

    for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl", "stats.csv", "stats.md"})
        CHECK(fs::exists(tmp.path / f));

    // The Table-style cuisine REQUEST pools two dialog turns into one MR
    // with two references.
    bool found = false;
    for (const auto& rec : result.train) {
        if (rec.schema.mr.size() == 2 && rec.schema.mr[0].slot == "cuisine") {
            found = true;
            CHECK(rec.references.size() == 2);
            CHECK(rec.references[0] ==
                  "Is there a specific cuisine type you enjoy, such as $cuisine_1, $cuisine_2, "
                  "or something else?");
            CHECK(rec.schema.intent == "FindRestaurants");
        }
    }
    CHECK(found);
}

TEST_CASE("preprocess is deterministic byte for byte") {
    TempDir a("pp_det_a"), b("pp_det_b");
    auto cfg_a = fixture_config(a.path.string());
    auto cfg_b = fixture_config(b.path.string());
    run_preprocess(cfg_a);
    run_preprocess(cfg_b);
    for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl", "stats.csv"})
        CHECK(slurp((a.path / f).string()) == slurp((b.path / f).string()));
}

TEST_CASE("dev fraction carves whole dialogues out of train") {
    TempDir tmp("pp_dev_out");
    auto cfg = fixture_config(tmp.path.string());
    cfg.dev_fraction = 0.4;  // floor(0.4 * 3) = 1 dialog
    auto result = run_preprocess(cfg);
    CHECK(result.stats[1].mrs > 0);
    CHECK(result.stats[0].mrs < 5);
    // A reference pooled across two dialogues may split apart, so the
    // combined count can exceed the unsplit 5 by one.
    long long total = result.stats[0].mrs + result.stats[1].mrs;
    CHECK(total >= 5);
    CHECK(total <= 6);
}

TEST_CASE("run_stats recomputes statistics from record files") {
    TempDir tmp("stats_out");
    auto cfg = fixture_config(tmp.path.string());
    run_preprocess(cfg);
    auto md = run_stats(cfg);
    CHECK(md.find("| train | 6 | 5 |") != std::string::npos);
    CHECK(md.find("| test | 3 | 3 |") != std::string::npos);
}

TEST_CASE("full chain is deterministic and evaluates per split") {
    TempDir a("chain_a"), b("chain_b");
    for (const auto* dir : {&a, &b}) {
        auto cfg = fixture_config(dir->path.string());
        run_preprocess(cfg);
        auto summary = run_train(cfg);
        CHECK(summary.family == "seq2seq");
        CHECK(summary.instances == 6);
        CHECK(fs::exists(cfg.checkpoint));
        auto gen = run_generate(cfg);
        CHECK(gen.records == 3);
        CHECK(fs::exists(cfg.generations));
        auto report = run_evaluate(cfg);
        CHECK(report.instances == 3);
        REQUIRE(report.splits.size() == 3);
        CHECK(report.splits[0].split == "seen");
        CHECK(report.splits[1].split == "partially_unseen");
        CHECK(report.splits[2].split == "fully_unseen");
        CHECK(report.config_hash == cfg.hash());
        for (const char* f : {"eval.json", "eval.csv", "eval.md"})
            CHECK(fs::exists(dir->path / f));
    }
    CHECK(slurp((a.path / "eval.json").string()) == slurp((b.path / "eval.json").string()));
    CHECK(slurp("chain_a/generations.jsonl") == slurp("chain_b/generations.jsonl"));
}

TEST_CASE("rerunning generate and evaluate is idempotent") {
    TempDir tmp("idem_out");
    auto cfg = fixture_config(tmp.path.string());
    run_preprocess(cfg);
    run_train(cfg);
    run_generate(cfg);
    run_evaluate(cfg);
    auto first_gen = slurp(cfg.generations);
    auto first_eval = slurp((tmp.path / "eval.json").string());
    run_generate(cfg);
    run_evaluate(cfg);
    CHECK(slurp(cfg.generations) == first_gen);
    CHECK(slurp((tmp.path / "eval.json").string()) == first_eval);
}

TEST_CASE("cvae and lm families run the same pipeline") {
    for (const std::string family : {"cvae", "lm"}) {
        TempDir tmp("family_" + family);
        auto cfg = fixture_config(tmp.path.string());
        cfg.train.family = family;
        cfg.train.epochs = 1;
        if (family == "lm") cfg.decode_mode = "topk";
        run_preprocess(cfg);
        auto summary = run_train(cfg);
        CHECK(summary.family == family);
        auto gen = run_generate(cfg);
        CHECK(gen.records == 3);
        auto report = run_evaluate(cfg);
        CHECK(report.instances == 3);
    }
}

TEST_CASE("training limit caps the instances") {
    TempDir tmp("limit_out");
    auto cfg = fixture_config(tmp.path.string());
    cfg.limit = 2;
    run_preprocess(cfg);
    auto summary = run_train(cfg);
    CHECK(summary.instances == 2);
}

TEST_CASE("generation records carry the config hash header") {
    TempDir tmp("genhdr_out");
    auto cfg = fixture_config(tmp.path.string());
    run_preprocess(cfg);
    run_train(cfg);
    run_generate(cfg);
    std::ifstream in(cfg.generations);
    std::string first;
    std::getline(in, first);
    CHECK(first.find("\"header\"") != std::string::npos);
    CHECK(first.find(cfg.hash()) != std::string::npos);
}

TEST_CASE("run_report compares eval reports side by side") {
    TempDir tmp("report_out");
    auto cfg = fixture_config(tmp.path.string());
    run_preprocess(cfg);
    run_train(cfg);
    run_generate(cfg);
    run_evaluate(cfg);
    auto eval_path = (tmp.path / "eval.json").string();
    auto md = run_report(cfg, {eval_path, eval_path}, {"run_a", "run_b"});
    CHECK(md.find("run_a") != std::string::npos);
    CHECK(md.find("run_b") != std::string::npos);
    CHECK(fs::exists(tmp.path / "report.md"));
    CHECK(fs::exists(tmp.path / "reference_distribution.csv"));
}

TEST_CASE("cli binary drives the pipeline end to end") {
    TempDir tmp("cli_out");
    std::string bin = SGNLG_CLI_BIN;
    auto run = [&](const std::string& args) {
        std::string cmd = bin + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    std::string common = "--raw-train-dir " + kTrainDir + " --raw-test-dir " + kTestDir +
                         " --out-dir " + tmp.path.string() + " --model-dim 16 --embed-dim 8 " +
                         "--symbolic-dim 8 --sentence-dim 8 --epochs 1 --checkpoint " +
                         tmp.path.string() + "/model.ckpt --generations " + tmp.path.string() +
                         "/gen.jsonl --cache-dir " + tmp.path.string() + "/cache";
    CHECK(run("preprocess " + common) == 0);
    CHECK(fs::exists(tmp.path / "train.jsonl"));
    CHECK(run("stats " + common) == 0);
    CHECK(run("train " + common) == 0);
    CHECK(fs::exists(tmp.path / "model.ckpt"));
    CHECK(run("generate " + common) == 0);
    CHECK(fs::exists(tmp.path / "gen.jsonl"));
    CHECK(run("evaluate " + common) == 0);
    CHECK(fs::exists(tmp.path / "eval.json"));
    CHECK(run("report " + common + " --eval " + tmp.path.string() + "/eval.json --label base") ==
          0);

    CHECK(run("preprocess --raw-train-dir /no/such/dir --raw-test-dir /no/such/dir --out-dir " +
              tmp.path.string()) != 0);
    CHECK(run("nonsense-subcommand") != 0);
}
