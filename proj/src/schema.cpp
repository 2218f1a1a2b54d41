#include "sgnlg/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace sgnlg {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '\'';
}

}  // namespace

std::optional<Placeholder> parse_placeholder(const std::string& token) {
    if (token.size() < 3 || token[0] != '$') return std::nullopt;
    if (!std::isalpha(static_cast<unsigned char>(token[1]))) return std::nullopt;
    size_t end = token.size();
    size_t digits = end;
    while (digits > 2 && std::isdigit(static_cast<unsigned char>(token[digits - 1]))) --digits;
    if (digits == end) return std::nullopt;  // no trailing index
    std::string type = token.substr(1, digits - 1);
    if (!type.empty() && type.back() == '_') type.pop_back();
    if (type.empty()) return std::nullopt;
    for (char c : type) {
        if (!is_word_char(c) || c == '\'') return std::nullopt;
    }
    int index = 0;
    try {
        index = std::stoi(token.substr(digits));
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (index < 1) return std::nullopt;
    return Placeholder{type, index};
}

bool is_placeholder_token(const std::string& token) {
    return parse_placeholder(token).has_value();
}

std::string normalize_placeholder(const std::string& token) {
    auto ph = parse_placeholder(token);
    if (!ph) return token;
    return make_placeholder(ph->type, ph->index);
}

std::string placeholder_base(const std::string& token) {
    auto ph = parse_placeholder(token);
    if (!ph) return token;
    return "$" + ph->type;
}

std::string make_placeholder(const std::string& type, int index) {
    return "$" + type + "_" + std::to_string(index);
}

std::vector<std::string> tokenize(const std::string& text, bool lowercase) {
    std::vector<std::string> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::string tok;
        if (c == '$' && i + 1 < n &&
            (std::isalnum(static_cast<unsigned char>(text[i + 1])))) {
            tok.push_back(c);
            ++i;
            while (i < n && is_word_char(text[i])) tok.push_back(text[i++]);
        } else if (is_word_char(c)) {
            while (i < n && is_word_char(text[i])) tok.push_back(text[i++]);
        } else {
            tok.push_back(c);  // punctuation, one char per token
            ++i;
        }
        if (lowercase) {
            std::transform(tok.begin(), tok.end(), tok.begin(),
                           [](unsigned char ch) { return std::tolower(ch); });
        }
        out.push_back(std::move(tok));
    }
    return out;
}

std::vector<std::string> template_placeholders(const Template& text) {
    std::vector<std::string> out;
    for (const auto& tok : tokenize(text)) {
        if (is_placeholder_token(tok)) out.push_back(normalize_placeholder(tok));
    }
    return out;
}

std::multiset<std::string> explicit_slots(const std::vector<MRTriple>& mr) {
    std::multiset<std::string> out;
    for (const auto& t : mr) {
        if (t.value && is_placeholder_token(*t.value)) out.insert(*t.value);
    }
    return out;
}

std::vector<std::string> validate_record(const SGNLGRecord& record) {
    std::vector<std::string> violations;
    const auto& s = record.schema;

    if (record.references.empty()) {
        violations.push_back("references: list must be non-empty");
    }

    // Per-triple checks plus per-slot-type index collection.
    std::map<std::string, std::set<int>> indices_by_type;
    for (size_t i = 0; i < s.mr.size(); ++i) {
        const auto& t = s.mr[i];
        if (t.act.empty()) {
            violations.push_back("mr[" + std::to_string(i) + "].act: must be non-empty");
        }
        if (t.value && !t.slot) {
            violations.push_back("mr[" + std::to_string(i) +
                                 "].slot: null slot cannot carry a value");
        }
        if (t.value && (*t.value)[0] == '$') {
            auto ph = parse_placeholder(*t.value);
            if (!ph) {
                violations.push_back("mr[" + std::to_string(i) + "].value: '" + *t.value +
                                     "' does not match the $<type>_<index> grammar");
            } else {
                indices_by_type[ph->type].insert(ph->index);
            }
        }
    }

    // Placeholder indices per slot type must be contiguous starting at 1.
    for (const auto& [type, indices] : indices_by_type) {
        int expected = 1;
        for (int idx : indices) {
            if (idx != expected) {
                violations.push_back("mr: placeholder indices for slot type '" + type +
                                     "' are not contiguous from 1 (missing $" + type + "_" +
                                     std::to_string(expected) + ")");
                break;
            }
            ++expected;
        }
    }

    // Every distinct non-null slot has exactly one description; no extras.
    std::set<std::string> mr_slots;
    for (const auto& t : s.mr) {
        if (t.slot) mr_slots.insert(*t.slot);
    }
    std::map<std::string, int> desc_count;
    for (const auto& d : s.slot_descriptions) ++desc_count[d.slot];
    for (const auto& slot : mr_slots) {
        auto it = desc_count.find(slot);
        if (it == desc_count.end()) {
            violations.push_back("slot_descriptions: missing entry for slot '" + slot + "'");
        } else if (it->second > 1) {
            violations.push_back("slot_descriptions: duplicate entries for slot '" + slot + "'");
        }
    }
    for (const auto& [slot, count] : desc_count) {
        if (!mr_slots.count(slot)) {
            violations.push_back("slot_descriptions: entry for slot '" + slot +
                                 "' which does not occur in mr");
        }
    }
    for (const auto& d : s.slot_descriptions) {
        if (d.description.empty()) {
            violations.push_back("slot_descriptions['" + d.slot + "'].description: empty");
        }
    }

    if (s.intent.empty() != s.intent_description.empty()) {
        violations.push_back("intent_description: must be empty iff intent is empty");
    }

    // Template invariant: every $-initiated token parses as a placeholder.
    for (size_t r = 0; r < record.references.size(); ++r) {
        for (const auto& tok : tokenize(record.references[r])) {
            if (tok.size() > 1 && tok[0] == '$' &&
                std::isalpha(static_cast<unsigned char>(tok[1])) && !is_placeholder_token(tok)) {
                violations.push_back("references[" + std::to_string(r) + "]: token '" + tok +
                                     "' does not match the placeholder pattern");
            }
        }
    }

    return violations;
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

json opt_to_json(const std::optional<std::string>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<std::string> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    std::string s = j.get<std::string>();
    if (s == "null") return std::nullopt;  // literal-null spelling normalized on ingest
    return s;
}

json triple_to_json(const MRTriple& t) {
    return json{{"act", t.act}, {"slot", opt_to_json(t.slot)}, {"value", opt_to_json(t.value)}};
}

MRTriple triple_from_json(const json& j) {
    MRTriple t;
    t.act = j.at("act").get<std::string>();
    t.slot = opt_from_json(j.at("slot"));
    t.value = opt_from_json(j.at("value"));
    if (t.value && is_placeholder_token(*t.value)) t.value = normalize_placeholder(*t.value);
    return t;
}

}  // namespace

std::string record_to_json_line(const SGNLGRecord& record) {
    const auto& s = record.schema;
    json mr = json::array();
    for (const auto& t : s.mr) mr.push_back(triple_to_json(t));
    json descs = json::array();
    for (const auto& d : s.slot_descriptions) {
        descs.push_back(json{{"slot", d.slot},
                             {"description", d.description},
                             {"is_categorical", d.is_categorical}});
    }
    json j{{"schema",
            json{{"mr", mr},
                 {"slot_descriptions", descs},
                 {"service", s.service},
                 {"service_description", s.service_description},
                 {"intent", s.intent},
                 {"intent_description", s.intent_description},
                 {"nl_mr", s.nl_mr}}},
           {"references", record.references}};
    return j.dump();
}

SGNLGRecord record_from_json_line(const std::string& line) {
    json j = json::parse(line);
    SGNLGRecord rec;
    const json& s = j.at("schema");
    for (const auto& t : s.at("mr")) rec.schema.mr.push_back(triple_from_json(t));
    for (const auto& d : s.at("slot_descriptions")) {
        rec.schema.slot_descriptions.push_back(SlotDescription{
            d.at("slot").get<std::string>(), d.at("description").get<std::string>(),
            d.value("is_categorical", false)});
    }
    rec.schema.service = s.at("service").get<std::string>();
    rec.schema.service_description = s.at("service_description").get<std::string>();
    rec.schema.intent = s.at("intent").get<std::string>();
    rec.schema.intent_description = s.at("intent_description").get<std::string>();
    rec.schema.nl_mr = s.at("nl_mr").get<std::string>();
    rec.references = j.at("references").get<std::vector<std::string>>();
    return rec;
}

RecordsFile read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open records file: " + path);
    RecordsFile out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            json j = json::parse(line);
            if (j.contains("header")) {
                out.config_hash = j["header"].value("config_hash", "");
                out.seed = j["header"].value("seed", 0LL);
                continue;
            }
        }
        out.records.push_back(record_from_json_line(line));
    }
    return out;
}

void write_records(const std::string& path, const std::vector<SGNLGRecord>& records,
                   const std::string& config_hash, long long seed) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write records file: " + path);
    json header{{"header", json{{"format", "sgnlg-records-v1"},
                                {"config_hash", config_hash},
                                {"seed", seed}}}};
    out << header.dump() << "\n";
    for (const auto& r : records) out << record_to_json_line(r) << "\n";
}

}  // namespace sgnlg
