#include "sgnlg/nlmr.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "json.hpp"

using nlohmann::json;

namespace sgnlg {

std::string slot_phrase(const std::string& slot_name) {
    std::string out = slot_name;
    for (char& c : out) {
        if (c == '-' || c == '_') c = ' ';
    }
    return out;
}

NlMrRules NlMrRules::defaults() {
    NlMrRules r;
    // Attested wordings.
    r.rules_["CONFIRM"] = "please confirm that the [slot] is [value].";
    r.rules_["INFORM"] = "the [slot] is [value].";
    r.rules_["REQUEST"] = "what [slot] do you want?";
    r.rules_["OFFER"] = "there is [value] for [slot].";
    r.rules_["NOTIFY_SUCCESS"] = "the request succeeded.";
    // Toolkit-authored rules for the rest of the DSTC8 system-act inventory.
    r.rules_["NOTIFY_FAILURE"] = "the request failed.";
    r.rules_["INFORM_COUNT"] = "the [slot] is [value].";
    r.rules_["OFFER_INTENT"] = "would you like to [value]?";
    r.rules_["REQ_MORE"] = "do you want anything else?";
    r.rules_["GOODBYE"] = "goodbye.";
    r.rules_["BYE"] = "goodbye.";
    return r;
}

NlMrRules NlMrRules::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open NL-MR rule file: " + path);
    json j = json::parse(in);
    NlMrRules r;
    for (auto it = j.begin(); it != j.end(); ++it) {
        r.rules_[it.key()] = it.value().get<std::string>();
    }
    return r;
}

void NlMrRules::save_json_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write NL-MR rule file: " + path);
    json j(rules_);
    out << j.dump(2) << "\n";
}

void NlMrRules::set_rule(const std::string& act, const std::string& pattern) {
    rules_[act] = pattern;
}

bool NlMrRules::has_rule(const std::string& act) const { return rules_.count(act) > 0; }

namespace {

void replace_all(std::string& text, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string NlMrRules::render_triple(const MRTriple& triple) const {
    auto it = rules_.find(triple.act);
    if (it == rules_.end()) throw UnknownActError(triple.act);
    std::string out = it->second;
    replace_all(out, "[slot]", "[" + slot_phrase(triple.slot.value_or("none")) + "]");
    replace_all(out, "[value]", "[" + triple.value.value_or("none") + "]");
    return out;
}

std::string render_nl_mr(const std::vector<MRTriple>& mr, const NlMrRules& rules) {
    if (mr.empty()) throw std::invalid_argument("render_nl_mr: empty MR");
    std::string out;
    for (size_t i = 0; i < mr.size(); ++i) {
        if (i) out += " ";
        out += rules.render_triple(mr[i]);
    }
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace sgnlg
