#pragma once

// Rule-based natural-language rendering of MRs: one sentence per triple,
// one rule per dialog act. Five of the rules follow attested wordings
// (CONFIRM, INFORM, REQUEST, OFFER, NOTIFY_SUCCESS); the rest of the
// DSTC8 act inventory is covered by toolkit-authored rules in the same
// register. The table is data and can be replaced from a JSON file.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgnlg/schema.hpp"

namespace sgnlg {

class UnknownActError : public std::runtime_error {
  public:
    explicit UnknownActError(const std::string& act)
        : std::runtime_error("no natural-language MR rule registered for act '" + act + "'"),
          act_(act) {}
    const std::string& act() const { return act_; }

  private:
    std::string act_;
};

// A rule is a sentence pattern with optional [slot] and [value] markers.
// [slot] renders as the slot name with '-' and '_' mapped to spaces,
// [value] renders the value token verbatim; both come out bracketed.
class NlMrRules {
  public:
    // Built-in table covering the DSTC8 system-act inventory.
    static NlMrRules defaults();

    static NlMrRules from_json_file(const std::string& path);
    void save_json_file(const std::string& path) const;

    void set_rule(const std::string& act, const std::string& pattern);
    bool has_rule(const std::string& act) const;
    const std::map<std::string, std::string>& rules() const { return rules_; }

    // One sentence for a single triple; throws UnknownActError.
    std::string render_triple(const MRTriple& triple) const;

  private:
    std::map<std::string, std::string> rules_;
};

// Sentences joined by single spaces, lowercased. mr must be non-empty.
std::string render_nl_mr(const std::vector<MRTriple>& mr, const NlMrRules& rules);

// De-hyphenated bracketed phrase for NL renderings: "price-per-night"
// -> "price per night".
std::string slot_phrase(const std::string& slot_name);

}  // namespace sgnlg
