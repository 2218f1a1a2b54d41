#include "sgnlg/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sgnlg {

using nlohmann::json;

SymbolicVocab::SymbolicVocab() {
    push(kPadToken);
    push(kUnkToken);
}

void SymbolicVocab::push(const std::string& token) {
    ids_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

SymbolicVocab SymbolicVocab::from_counts(const std::map<std::string, long long>& counts) {
    std::vector<std::pair<std::string, long long>> items;
    for (const auto& [token, count] : counts)
        if (!token.empty() && token != kPadToken && token != kUnkToken)
            items.emplace_back(token, count);
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    SymbolicVocab v;
    for (const auto& [token, count] : items) v.push(token);
    return v;
}

SymbolicVocab SymbolicVocab::from_tokens(const std::vector<std::string>& tokens) {
    SymbolicVocab v;
    for (const auto& token : tokens) {
        if (token == kPadToken || token == kUnkToken || token.empty()) continue;
        v.push(token);
    }
    return v;
}

SymbolicVocab SymbolicVocab::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocab file: " + path);
    json j;
    in >> j;
    SymbolicVocab v;
    for (const auto& t : j.at("tokens")) {
        std::string token = t.get<std::string>();
        if (token == kPadToken || token == kUnkToken) continue;
        v.push(token);
    }
    return v;
}

void SymbolicVocab::save_json_file(const std::string& path) const {
    json j;
    j["tokens"] = tokens_;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocab file: " + path);
    out << j.dump(2) << '\n';
}

int SymbolicVocab::id(const std::string& token) const {
    if (token.empty()) return kUnkId;
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
}

bool SymbolicVocab::contains(const std::string& token) const { return ids_.count(token) > 0; }

const std::string& SymbolicVocab::token(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("vocab id out of range");
    return tokens_[id];
}

std::map<std::string, long long> symbolic_counts(const std::vector<SGNLGRecord>& records) {
    std::map<std::string, long long> counts;
    for (const auto& r : records) {
        for (const auto& t : r.schema.mr) {
            ++counts[t.act];
            ++counts[t.slot.value_or("null")];
            ++counts[t.value.value_or("null")];
        }
        ++counts[r.schema.service];
        if (!r.schema.intent.empty()) ++counts[r.schema.intent];
    }
    counts.erase("");
    return counts;
}

SymbolicVocab build_vocab(const std::vector<SGNLGRecord>& records) {
    return SymbolicVocab::from_counts(symbolic_counts(records));
}

}  // namespace sgnlg
