#include "sgnlg/eval_report.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

namespace sgnlg::eval {

namespace {

using nlohmann::json;

struct Scored {
    const InstanceEval* in;
    double meteor = 0.0;
    SlotErrorBreakdown breakdown;
    bool slot_match = false;
};

int split_order(const std::string& split) {
    if (split == "seen") return 0;
    if (split == "partially_unseen") return 1;
    if (split == "fully_unseen") return 2;
    return 3;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << v;
    return os.str();
}

}  // namespace

EvalReport aggregate_report(const std::vector<InstanceEval>& instances,
                            const std::vector<std::string>& train_references) {
    EvalReport rep;
    rep.instances = static_cast<long long>(instances.size());

    std::vector<Scored> scored;
    scored.reserve(instances.size());
    std::vector<std::vector<std::string>> outputs;
    std::vector<std::vector<std::vector<std::string>>> references;
    for (const auto& in : instances) {
        Scored s;
        s.in = &in;
        s.meteor = meteor_multi(in.output_tokens, in.reference_tokens);
        s.breakdown = ser_breakdown(in.output_tokens, in.mr);
        s.slot_match = slots_match(in.output_tokens, in.mr);
        scored.push_back(std::move(s));
        outputs.push_back(in.output_tokens);
        references.push_back(in.reference_tokens);
    }

    if (!instances.empty()) {
        rep.bleu = corpus_bleu(outputs, references);
        double meteor_sum = 0.0, ser_sum = 0.0;
        long long ser_defined = 0, matches = 0;
        for (const auto& s : scored) {
            meteor_sum += s.meteor;
            if (s.breakdown.defined()) {
                ser_sum += s.breakdown.ser();
                ++ser_defined;
            } else {
                ++rep.ser_excluded;
            }
            rep.totals.deletions += s.breakdown.deletions;
            rep.totals.repetitions += s.breakdown.repetitions;
            rep.totals.hallucinations += s.breakdown.hallucinations;
            rep.totals.total_explicit_slots += s.breakdown.total_explicit_slots;
            if (s.slot_match) ++matches;
        }
        rep.meteor = meteor_sum / static_cast<double>(instances.size());
        rep.ser = ser_defined ? ser_sum / static_cast<double>(ser_defined) : 0.0;
        rep.slot_match = static_cast<double>(matches) / static_cast<double>(instances.size());
    }
    rep.div = diversity(outputs, train_references);

    std::map<std::string, std::vector<const Scored*>> by_service;
    for (const auto& s : scored) by_service[s.in->service].push_back(&s);
    for (const auto& [service, rows] : by_service) {
        ServiceRow row;
        row.service = service;
        row.split = rows.front()->in->split;
        row.instances = static_cast<long long>(rows.size());
        std::vector<std::vector<std::string>> svc_out;
        std::vector<std::vector<std::vector<std::string>>> svc_ref;
        double meteor_sum = 0.0, ser_sum = 0.0;
        long long ser_defined = 0, matches = 0;
        for (const auto* s : rows) {
            row.references += static_cast<long long>(s->in->reference_tokens.size());
            svc_out.push_back(s->in->output_tokens);
            svc_ref.push_back(s->in->reference_tokens);
            meteor_sum += s->meteor;
            if (s->breakdown.defined()) {
                ser_sum += s->breakdown.ser();
                ++ser_defined;
            } else {
                ++row.ser_excluded;
            }
            if (s->slot_match) ++matches;
        }
        row.bleu = corpus_bleu(svc_out, svc_ref);
        row.meteor = meteor_sum / static_cast<double>(rows.size());
        row.ser = ser_defined ? ser_sum / static_cast<double>(ser_defined) : 0.0;
        row.slot_match = static_cast<double>(matches) / static_cast<double>(rows.size());
        rep.services.push_back(std::move(row));
    }
    std::sort(rep.services.begin(), rep.services.end(), [](const auto& a, const auto& b) {
        if (split_order(a.split) != split_order(b.split))
            return split_order(a.split) < split_order(b.split);
        return a.service < b.service;
    });

    std::map<std::string, std::vector<const ServiceRow*>> by_split;
    for (const auto& row : rep.services) by_split[row.split].push_back(&row);
    for (const auto& [split, rows] : by_split) {
        SplitRow agg;
        agg.split = split;
        agg.services = static_cast<long long>(rows.size());
        for (const auto* row : rows) {
            agg.instances += row->instances;
            agg.references += row->references;
        }
        double total_refs = static_cast<double>(agg.references);
        for (const auto* row : rows) {
            double w = total_refs > 0 ? static_cast<double>(row->references) / total_refs : 0.0;
            agg.bleu += w * row->bleu;
            agg.meteor += w * row->meteor;
            agg.ser += w * row->ser;
            agg.slot_match += w * row->slot_match;
        }
        rep.splits.push_back(std::move(agg));
    }
    std::sort(rep.splits.begin(), rep.splits.end(), [](const auto& a, const auto& b) {
        return split_order(a.split) < split_order(b.split);
    });
    return rep;
}

std::string report_to_json(const EvalReport& rep) {
    json j;
    j["config_hash"] = rep.config_hash;
    j["seed"] = rep.seed;
    j["instances"] = rep.instances;
    j["bleu"] = rep.bleu;
    j["meteor"] = rep.meteor;
    j["ser"] = rep.ser;
    j["slot_match_rate"] = rep.slot_match;
    j["ser_excluded"] = rep.ser_excluded;
    j["errors"] = {{"deletions", rep.totals.deletions},
                   {"repetitions", rep.totals.repetitions},
                   {"hallucinations", rep.totals.hallucinations},
                   {"total_explicit_slots", rep.totals.total_explicit_slots}};
    j["diversity"] = {{"vocab1", rep.div.vocab1},       {"vocab2", rep.div.vocab2},
                      {"distinct1", rep.div.distinct1}, {"distinct2", rep.div.distinct2},
                      {"novelty", rep.div.novelty},     {"novelty_raw", rep.div.novelty_raw},
                      {"distinct_outputs", rep.div.distinct_outputs}};
    j["services"] = json::array();
    for (const auto& row : rep.services)
        j["services"].push_back({{"service", row.service},
                                 {"split", row.split},
                                 {"instances", row.instances},
                                 {"references", row.references},
                                 {"bleu", row.bleu},
                                 {"meteor", row.meteor},
                                 {"ser", row.ser},
                                 {"slot_match_rate", row.slot_match},
                                 {"ser_excluded", row.ser_excluded}});
    j["splits"] = json::array();
    for (const auto& row : rep.splits)
        j["splits"].push_back({{"split", row.split},
                               {"services", row.services},
                               {"instances", row.instances},
                               {"references", row.references},
                               {"bleu", row.bleu},
                               {"meteor", row.meteor},
                               {"ser", row.ser},
                               {"slot_match_rate", row.slot_match}});
    return j.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& rep) {
    std::ostringstream os;
    os << "row_type,name,split,instances,references,bleu,meteor,ser,slot_match_rate,"
          "vocab1,vocab2,distinct1,distinct2,novelty,novelty_raw\n";
    os << "overall,all,," << rep.instances << ",," << fmt(rep.bleu) << ',' << fmt(rep.meteor)
       << ',' << fmt(rep.ser) << ',' << fmt(rep.slot_match) << ',' << rep.div.vocab1 << ','
       << rep.div.vocab2 << ',' << fmt(rep.div.distinct1) << ',' << fmt(rep.div.distinct2) << ','
       << fmt(rep.div.novelty) << ',' << fmt(rep.div.novelty_raw) << '\n';
    for (const auto& row : rep.splits)
        os << "split," << row.split << ',' << row.split << ',' << row.instances << ','
           << row.references << ',' << fmt(row.bleu) << ',' << fmt(row.meteor) << ','
           << fmt(row.ser) << ',' << fmt(row.slot_match) << ",,,,,,\n";
    for (const auto& row : rep.services)
        os << "service," << row.service << ',' << row.split << ',' << row.instances << ','
           << row.references << ',' << fmt(row.bleu) << ',' << fmt(row.meteor) << ','
           << fmt(row.ser) << ',' << fmt(row.slot_match) << ",,,,,,\n";
    os << "# config_hash=" << rep.config_hash << " seed=" << rep.seed << '\n';
    return os.str();
}

std::string report_to_markdown(const EvalReport& rep) {
    std::ostringstream os;
    os << "| BLEU | METEOR | SER | Slot match | Vocab-1 | Vocab-2 | Distinct-1 | Distinct-2 | "
          "Novelty |\n";
    os << "|---|---|---|---|---|---|---|---|---|\n";
    os << "| " << fmt(rep.bleu) << " | " << fmt(rep.meteor) << " | " << fmt(rep.ser) << " | "
       << fmt(rep.slot_match) << " | " << rep.div.vocab1 << " | " << rep.div.vocab2 << " | "
       << fmt(rep.div.distinct1) << " | " << fmt(rep.div.distinct2) << " | "
       << fmt(rep.div.novelty) << " |\n\n";
    if (!rep.splits.empty()) {
        os << "| Split | Services | Instances | References | BLEU | METEOR | SER | Slot match "
              "|\n";
        os << "|---|---|---|---|---|---|---|---|\n";
        for (const auto& row : rep.splits)
            os << "| " << row.split << " | " << row.services << " | " << row.instances << " | "
               << row.references << " | " << fmt(row.bleu) << " | " << fmt(row.meteor) << " | "
               << fmt(row.ser) << " | " << fmt(row.slot_match) << " |\n";
        os << '\n';
    }
    if (!rep.services.empty()) {
        os << "| Service | Split | Instances | References | BLEU | METEOR | SER | Slot match "
              "|\n";
        os << "|---|---|---|---|---|---|---|---|\n";
        for (const auto& row : rep.services)
            os << "| " << row.service << " | " << row.split << " | " << row.instances << " | "
               << row.references << " | " << fmt(row.bleu) << " | " << fmt(row.meteor) << " | "
               << fmt(row.ser) << " | " << fmt(row.slot_match) << " |\n";
        os << '\n';
    }
    os << "config_hash=" << rep.config_hash << " seed=" << rep.seed << '\n';
    return os.str();
}

}  // namespace sgnlg::eval
