#pragma once

// Dense 0-based symbolic vocabulary over acts, slots, values, services and
// intents. Ordering is deterministic: frequency descending, then token
// lexicographic. Id 0 is PAD, id 1 is UNK; every out-of-vocabulary or empty
// token maps to UNK.

#include <map>
#include <string>
#include <vector>

#include "sgnlg/schema.hpp"

namespace sgnlg {

class SymbolicVocab {
  public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr const char* kPadToken = "<pad>";
    static constexpr const char* kUnkToken = "<unk>";

    SymbolicVocab();

    static SymbolicVocab from_counts(const std::map<std::string, long long>& counts);
    // Rebuilds from a saved token list (PAD/UNK entries, when present, are
    // skipped and re-added at their reserved ids).
    static SymbolicVocab from_tokens(const std::vector<std::string>& tokens);
    static SymbolicVocab from_json_file(const std::string& path);
    void save_json_file(const std::string& path) const;

    int id(const std::string& token) const;  // kUnkId when unknown or empty
    bool contains(const std::string& token) const;
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::map<std::string, int> ids_;
    void push(const std::string& token);
};

// Counts every symbolic token of the corpus: act, slot, value per triple
// ("null" for absent slot/value), service and intent per record.
std::map<std::string, long long> symbolic_counts(const std::vector<SGNLGRecord>& records);

SymbolicVocab build_vocab(const std::vector<SGNLGRecord>& records);

}  // namespace sgnlg
