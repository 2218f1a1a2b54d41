#include "sgnlg/dstc8.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace sgnlg::dstc8 {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

SourceAction action_from_json(const json& j) {
    SourceAction a;
    a.act = j.at("act").get<std::string>();
    if (j.contains("slot") && j["slot"].is_string()) a.slot = j["slot"].get<std::string>();
    if (j.contains("values") && j["values"].is_array())
        for (const auto& v : j["values"]) a.values.push_back(v.get<std::string>());
    return a;
}

SlotSpan span_from_json(const json& j) {
    SlotSpan s;
    s.slot = j.at("slot").get<std::string>();
    s.start = j.at("start").get<int>();
    s.end = j.at("exclusive_end").get<int>();
    return s;
}

Dialog dialog_from_json(const json& jd) {
    Dialog d;
    d.id = jd.at("dialogue_id").get<std::string>();
    for (const auto& jt : jd.at("turns")) {
        SourceTurn t;
        std::string speaker = jt.at("speaker").get<std::string>();
        if (speaker == "SYSTEM")
            t.speaker = Speaker::kSystem;
        else if (speaker == "USER")
            t.speaker = Speaker::kUser;
        else
            throw CorpusError("unknown speaker '" + speaker + "'");
        t.utterance = jt.at("utterance").get<std::string>();

        std::map<std::string, std::string> intents;
        const auto& frames = jt.at("frames");
        if (!frames.empty()) {
            const auto& f0 = frames.at(0);
            t.service = lower(f0.value("service", ""));
            if (f0.contains("actions"))
                for (const auto& ja : f0["actions"]) t.actions.push_back(action_from_json(ja));
            if (f0.contains("slots"))
                for (const auto& js : f0["slots"]) t.slot_spans.push_back(span_from_json(js));
        }
        if (t.speaker == Speaker::kUser) {
            for (const auto& jf : frames) {
                std::string service = lower(jf.value("service", ""));
                std::string intent;
                if (jf.contains("state")) intent = jf["state"].value("active_intent", "");
                if (intent == "NONE") intent.clear();
                intents[service] = intent;
            }
            if (intents.count(t.service)) t.intent = intents[t.service];
        }
        d.turns.push_back(std::move(t));
        d.user_intents.push_back(std::move(intents));
    }
    return d;
}

}  // namespace

std::string split_label_name(SplitLabel label) {
    switch (label) {
        case SplitLabel::kSeen: return "seen";
        case SplitLabel::kPartiallyUnseen: return "partially_unseen";
        case SplitLabel::kFullyUnseen: return "fully_unseen";
    }
    return "unknown";
}

std::string domain_of(const std::string& service) {
    size_t end = service.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(service[end - 1]))) --end;
    if (end < service.size() && end > 0 && (service[end - 1] == '_' || service[end - 1] == '-'))
        return service.substr(0, end - 1);
    return service;
}

std::vector<Dialog> load_dialog_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open dialog file: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw CorpusError("invalid JSON in " + path + ": " + e.what());
    }
    if (!root.is_array()) throw CorpusError("dialog file is not a JSON array: " + path);
    std::vector<Dialog> dialogs;
    for (const auto& jd : root) {
        std::string id = jd.is_object() ? jd.value("dialogue_id", "<missing id>") : "<not an object>";
        try {
            dialogs.push_back(dialog_from_json(jd));
        } catch (const CorpusError&) {
            throw;
        } catch (const std::exception& e) {
            throw CorpusError("dialog '" + id + "': " + e.what());
        }
    }
    return dialogs;
}

std::vector<Dialog> load_dialog_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw CorpusError("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("dialogues_", 0) == 0 && name.size() > 5 &&
            name.substr(name.size() - 5) == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw CorpusError("no dialogues_*.json under " + dir);
    std::vector<Dialog> all;
    for (const auto& f : files) {
        auto part = load_dialog_file(f.string());
        all.insert(all.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    return all;
}

SchemaFile load_schema_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open schema file: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw CorpusError("invalid JSON in " + path + ": " + e.what());
    }
    SchemaFile out;
    for (const auto& js : root) {
        ServiceSchema s;
        s.service = lower(js.at("service_name").get<std::string>());
        s.description = js.value("description", "");
        if (js.contains("slots"))
            for (const auto& jslot : js["slots"]) {
                SlotDescription sd;
                sd.slot = jslot.at("name").get<std::string>();
                sd.description = jslot.value("description", "");
                sd.is_categorical = jslot.value("is_categorical", false);
                s.slots[sd.slot] = sd;
            }
        if (js.contains("intents"))
            for (const auto& ji : js["intents"])
                s.intent_descriptions[ji.at("name").get<std::string>()] =
                    ji.value("description", "");
        out[s.service] = s;
    }
    return out;
}

std::vector<SystemTurnRef> extract_system_turns(const std::vector<Dialog>& dialogs) {
    std::vector<SystemTurnRef> out;
    for (const auto& d : dialogs) {
        for (size_t i = 0; i < d.turns.size(); ++i) {
            if (d.turns[i].speaker != Speaker::kSystem) continue;
            SystemTurnRef ref;
            ref.dialog_id = d.id;
            ref.turn_index = static_cast<int>(i);
            ref.system = d.turns[i];
            if (i > 0 && d.turns[i - 1].speaker == Speaker::kUser) {
                SourceTurn user = d.turns[i - 1];
                const auto& intents = d.user_intents[i - 1];
                auto it = intents.find(ref.system.service);
                if (it != intents.end()) {
                    user.service = ref.system.service;
                    user.intent = it->second;
                }
                ref.user = std::move(user);
            }
            out.push_back(std::move(ref));
        }
    }
    return out;
}

Delexicalized delexicalize(const std::string& utterance, const std::vector<SlotSpan>& spans,
                           const std::vector<SourceAction>& actions) {
    auto sorted = spans;
    std::sort(sorted.begin(), sorted.end(),
              [](const SlotSpan& a, const SlotSpan& b) { return a.start < b.start; });
    for (size_t i = 0; i < sorted.size(); ++i) {
        const auto& s = sorted[i];
        if (s.start < 0 || s.end > static_cast<int>(utterance.size()) || s.start >= s.end)
            throw SpanMismatchError("span [" + std::to_string(s.start) + "," +
                                    std::to_string(s.end) + ") out of bounds for slot '" + s.slot +
                                    "'");
        if (i > 0 && sorted[i - 1].end > s.start)
            throw SpanMismatchError("overlapping spans at offset " + std::to_string(s.start));
    }

    struct Replacement {
        int start, end;
        std::string placeholder;
    };
    std::vector<Replacement> reps;
    std::map<std::string, int> next_index;
    Delexicalized result;
    for (const auto& s : sorted) {
        std::string text = utterance.substr(s.start, s.end - s.start);
        bool listed = false;
        for (const auto& a : actions)
            if (a.slot == s.slot &&
                std::find(a.values.begin(), a.values.end(), text) != a.values.end()) {
                listed = true;
                break;
            }
        if (!listed)
            throw SpanMismatchError("span text '" + text + "' is not a listed value of slot '" +
                                    s.slot + "'");
        int k = ++next_index[s.slot];
        std::string placeholder = make_placeholder(s.slot, k);
        reps.push_back({s.start, s.end, placeholder});
        result.assignment[placeholder] = text;
    }

    std::string out = utterance;
    for (auto it = reps.rbegin(); it != reps.rend(); ++it)
        out.replace(it->start, it->end - it->start, it->placeholder);
    result.text = out;
    return result;
}

std::vector<MRTriple> build_mr(const std::vector<SourceAction>& actions,
                               const std::map<std::string, std::string>& assignment,
                               MissingValuePolicy policy, int* raw_value_count) {
    // (slot, surface value) -> placeholders in index order.
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<int, std::string>>> pool;
    for (const auto& [placeholder, surface] : assignment) {
        auto parsed = parse_placeholder(placeholder);
        if (!parsed)
            throw SpanMismatchError("assignment key is not a placeholder: " + placeholder);
        pool[{parsed->type, surface}].emplace_back(parsed->index, placeholder);
    }
    for (auto& [key, entries] : pool) std::sort(entries.begin(), entries.end());
    std::map<std::pair<std::string, std::string>, size_t> consumed;

    std::vector<MRTriple> mr;
    for (const auto& a : actions) {
        if (a.slot.empty()) {
            mr.push_back({a.act, std::nullopt, std::nullopt});
            continue;
        }
        if (a.values.empty()) {
            mr.push_back({a.act, a.slot, std::nullopt});
            continue;
        }
        for (const auto& value : a.values) {
            auto key = std::make_pair(a.slot, value);
            auto it = pool.find(key);
            size_t& used = consumed[key];
            if (it != pool.end() && used < it->second.size()) {
                mr.push_back({a.act, a.slot, it->second[used].second});
                ++used;
            } else if (policy == MissingValuePolicy::kError) {
                throw SpanMismatchError("no placeholder assigned for value '" + value +
                                        "' of slot '" + a.slot + "'");
            } else {
                if (raw_value_count) ++*raw_value_count;
                mr.push_back({a.act, a.slot, value});
            }
        }
    }

    // Spans mentioned more often than the action lists the value: keep the
    // leftover placeholders so the template and MR slot multisets agree.
    for (const auto& [key, entries] : pool) {
        for (size_t i = consumed[key]; i < entries.size(); ++i) {
            std::string act;
            for (const auto& a : actions)
                if (a.slot == key.first && std::find(a.values.begin(), a.values.end(),
                                                     key.second) != a.values.end()) {
                    act = a.act;
                    break;
                }
            if (act.empty()) continue;
            mr.push_back({act, key.first, entries[i].second});
        }
    }
    return mr;
}

std::string propagate_intent(const SourceTurn& system_turn,
                             const std::optional<SourceTurn>& user_turn) {
    if (!user_turn) return "";
    if (user_turn->service != system_turn.service) return "";
    return user_turn->intent;
}

SchemaInstance attach_schema_info(const std::string& service, const std::string& intent,
                                  const std::vector<MRTriple>& mr, const SchemaFile& schemas) {
    auto sit = schemas.find(service);
    if (sit == schemas.end()) throw SchemaLookupError("service not in schema file: " + service);
    const ServiceSchema& schema = sit->second;

    SchemaInstance inst;
    inst.mr = mr;
    inst.service = service;
    inst.service_description = schema.description;
    inst.intent = intent;
    if (!intent.empty()) {
        auto iit = schema.intent_descriptions.find(intent);
        if (iit == schema.intent_descriptions.end())
            throw SchemaLookupError("intent '" + intent + "' not in schema of " + service);
        inst.intent_description = iit->second;
    }

    // Acts like INFORM_COUNT and OFFER_INTENT use meta-slots that the
    // source schema files never list; they get fixed descriptions instead
    // of failing the lookup.
    static const std::map<std::string, SlotDescription> kMetaSlots = {
        {"count", {"count", "the number of items matching the request", false}},
        {"intent", {"intent", "the suggested intent to act on", false}},
    };
    std::set<std::string> added;
    for (const auto& t : mr) {
        if (!t.slot || added.count(*t.slot)) continue;
        auto dit = schema.slots.find(*t.slot);
        if (dit != schema.slots.end()) {
            inst.slot_descriptions.push_back(dit->second);
        } else {
            auto mit = kMetaSlots.find(*t.slot);
            if (mit == kMetaSlots.end())
                throw SchemaLookupError("slot '" + *t.slot + "' not in schema of " + service);
            inst.slot_descriptions.push_back(mit->second);
        }
        added.insert(*t.slot);
    }
    return inst;
}

SplitLabel classify_service_split(const std::string& service,
                                  const std::set<std::string>& train_services,
                                  const std::set<std::string>& train_domains) {
    if (train_services.count(service)) return SplitLabel::kSeen;
    if (train_domains.count(domain_of(service))) return SplitLabel::kPartiallyUnseen;
    return SplitLabel::kFullyUnseen;
}

std::vector<SGNLGRecord> group_records(const std::vector<SGNLGRecord>& singles, bool dedupe,
                                       int* duplicate_count) {
    auto key_of = [](const SGNLGRecord& r) {
        std::ostringstream key;
        for (const auto& t : r.schema.mr)
            key << t.act << '\x1f' << t.slot.value_or("\x1enull") << '\x1f'
                << t.value.value_or("\x1enull") << '\x1e';
        key << '\x1d' << r.schema.service << '\x1d' << r.schema.intent;
        return key.str();
    };
    std::map<std::string, size_t> index;
    std::vector<SGNLGRecord> grouped;
    for (const auto& r : singles) {
        std::string key = key_of(r);
        auto it = index.find(key);
        if (it == index.end()) {
            index[key] = grouped.size();
            grouped.push_back(r);
        } else {
            auto& refs = grouped[it->second].references;
            refs.insert(refs.end(), r.references.begin(), r.references.end());
        }
    }
    if (dedupe) {
        for (auto& r : grouped) {
            std::set<std::string> kept;
            std::vector<Template> unique;
            for (const auto& ref : r.references) {
                if (kept.insert(ref).second)
                    unique.push_back(ref);
                else if (duplicate_count)
                    ++*duplicate_count;
            }
            r.references = std::move(unique);
        }
    }
    return grouped;
}

SplitStats corpus_stats(const std::string& name, const std::vector<SGNLGRecord>& records) {
    SplitStats st;
    st.name = name;
    st.mrs = static_cast<long long>(records.size());
    std::set<std::string> services, domains;
    std::vector<long long> per_mr;
    for (const auto& r : records) {
        st.templates += static_cast<long long>(r.references.size());
        per_mr.push_back(static_cast<long long>(r.references.size()));
        services.insert(r.schema.service);
        domains.insert(domain_of(r.schema.service));
        std::set<std::string> uniq(r.references.begin(), r.references.end());
        st.unique_templates += static_cast<long long>(uniq.size());
    }
    st.services = static_cast<long long>(services.size());
    st.domains = static_cast<long long>(domains.size());
    if (!per_mr.empty()) {
        std::sort(per_mr.begin(), per_mr.end());
        st.refs_per_mr_mean = static_cast<double>(st.templates) / static_cast<double>(st.mrs);
        st.refs_per_mr_max = per_mr.back();
        auto rank = [&](double p) {
            size_t r = static_cast<size_t>(std::ceil(p * static_cast<double>(per_mr.size())));
            return per_mr[std::max<size_t>(r, 1) - 1];
        };
        st.refs_per_mr_p50 = rank(0.50);
        st.refs_per_mr_p90 = rank(0.90);
    }
    return st;
}

std::string stats_to_csv(const std::vector<SplitStats>& stats, const std::string& config_hash) {
    std::ostringstream out;
    out << "split,templates,mrs,services,domains,refs_per_mr_mean,refs_per_mr_max,"
           "refs_per_mr_p50,refs_per_mr_p90,unique_templates\n";
    for (const auto& s : stats) {
        std::ostringstream mean;
        mean.precision(2);
        mean << std::fixed << s.refs_per_mr_mean;
        out << s.name << ',' << s.templates << ',' << s.mrs << ',' << s.services << ','
            << s.domains << ',' << mean.str() << ',' << s.refs_per_mr_max << ','
            << s.refs_per_mr_p50 << ',' << s.refs_per_mr_p90 << ',' << s.unique_templates << '\n';
    }
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    return out.str();
}

std::string stats_to_markdown(const std::vector<SplitStats>& stats,
                              const std::string& config_hash) {
    std::ostringstream out;
    out << "| split | templates | MRs | services | domains | refs/MR (mean) | refs/MR (max) | "
           "unique templates |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : stats) {
        std::ostringstream mean;
        mean.precision(2);
        mean << std::fixed << s.refs_per_mr_mean;
        out << "| " << s.name << " | " << s.templates << " | " << s.mrs << " | " << s.services
            << " | " << s.domains << " | " << mean.str() << " | " << s.refs_per_mr_max << " | "
            << s.unique_templates << " |\n";
    }
    if (!config_hash.empty()) out << "\nconfig hash: `" << config_hash << "`\n";
    return out.str();
}

}  // namespace sgnlg::dstc8
