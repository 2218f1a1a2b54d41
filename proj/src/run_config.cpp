#include "sgnlg/run_config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sgnlg/sentence_encoder.hpp"

namespace sgnlg::cli {

namespace {
using nlohmann::json;
}

std::string RunConfig::to_json() const {
    json j = json::parse(gen::train_config_to_json(train));
    j["raw_train_dir"] = raw_train_dir;
    j["raw_test_dir"] = raw_test_dir;
    j["out_dir"] = out_dir;
    j["cache_dir"] = cache_dir;
    j["checkpoint"] = checkpoint;
    j["generations"] = generations;
    j["rules_file"] = rules_file;
    j["dev_fraction"] = dev_fraction;
    j["dedupe_references"] = dedupe_references;
    j["decode_mode"] = decode_mode;
    j["limit"] = limit;
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    RunConfig c;
    c.train = gen::train_config_from_json(text);
    c.raw_train_dir = j.value("raw_train_dir", c.raw_train_dir);
    c.raw_test_dir = j.value("raw_test_dir", c.raw_test_dir);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.generations = j.value("generations", c.generations);
    c.rules_file = j.value("rules_file", c.rules_file);
    c.dev_fraction = j.value("dev_fraction", c.dev_fraction);
    c.dedupe_references = j.value("dedupe_references", c.dedupe_references);
    c.decode_mode = j.value("decode_mode", c.decode_mode);
    c.limit = j.value("limit", c.limit);
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << to_json();
}

std::string RunConfig::hash() const {
    json j = json::parse(to_json());
    // Filesystem locations do not change what a run computes, so two runs
    // that differ only in where artifacts land hash identically.
    for (const char* key : {"raw_train_dir", "raw_test_dir", "out_dir", "cache_dir",
                            "checkpoint", "generations"})
        j.erase(key);
    std::uint64_t h = fnv1a64(j.dump());
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace sgnlg::cli
