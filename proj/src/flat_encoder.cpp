#include "sgnlg/flat_encoder.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace sgnlg {

FeatureFlags features_from_list(const std::vector<std::string>& enabled) {
    FeatureFlags f = FeatureFlags::mr_only();
    for (const auto& name : enabled) {
        if (name == "service")
            f.service = true;
        else if (name == "service_description")
            f.service_description = true;
        else if (name == "intent")
            f.intent = true;
        else if (name == "intent_description")
            f.intent_description = true;
        else if (name == "slot_descriptions")
            f.slot_descriptions = true;
        else if (name == "nl_mr")
            f.nl_mr = true;
        else
            throw std::invalid_argument("unknown feature: " + name);
    }
    return f;
}

std::vector<std::string> features_to_list(const FeatureFlags& f) {
    std::vector<std::string> out;
    if (f.service) out.push_back("service");
    if (f.service_description) out.push_back("service_description");
    if (f.intent) out.push_back("intent");
    if (f.intent_description) out.push_back("intent_description");
    if (f.slot_descriptions) out.push_back("slot_descriptions");
    if (f.nl_mr) out.push_back("nl_mr");
    return out;
}

NlMrMode nl_mr_mode_from_name(const std::string& name) {
    if (name == "pooled") return NlMrMode::kPooled;
    if (name == "tokens") return NlMrMode::kTokens;
    throw std::invalid_argument("unknown nl_mr_mode: " + name);
}

std::string nl_mr_mode_name(NlMrMode m) { return m == NlMrMode::kPooled ? "pooled" : "tokens"; }

std::vector<double> materialize_step(const EncodedSchema& enc, int step,
                                     const std::vector<std::vector<double>>& sym_table) {
    const EncodedStep& s = enc.steps.at(step);
    std::vector<double> out;
    out.reserve(enc.width());
    for (int id : s.sym) {
        if (id == EncodedStep::kZeroSegment) {
            out.insert(out.end(), enc.symbolic_dim, 0.0);
        } else {
            const auto& row = sym_table.at(id);
            if (static_cast<int>(row.size()) != enc.symbolic_dim)
                throw std::invalid_argument("embedding table row width mismatch");
            out.insert(out.end(), row.begin(), row.end());
        }
    }
    for (const auto& seg : s.sent) {
        if (seg.empty())
            out.insert(out.end(), enc.sentence_dim, 0.0);
        else
            out.insert(out.end(), seg.begin(), seg.end());
    }
    return out;
}

FlatEncoder::FlatEncoder(const SymbolicVocab& vocab, const SentenceEncoder& sentence_encoder,
                         EncoderConfig config)
    : vocab_(vocab), sentence_encoder_(sentence_encoder), config_(config) {
    if (config_.symbolic_dim <= 0) throw std::invalid_argument("symbolic_dim must be positive");
}

int FlatEncoder::width() const {
    return 5 * config_.symbolic_dim + 4 * sentence_encoder_.dim();
}

EncodedSchema FlatEncoder::encode(const SchemaInstance& schema) const {
    const FeatureFlags& f = config_.features;
    EncodedSchema enc;
    enc.symbolic_dim = config_.symbolic_dim;
    enc.sentence_dim = sentence_encoder_.dim();

    std::map<std::string, const SlotDescription*> descriptions;
    for (const auto& d : schema.slot_descriptions) descriptions[d.slot] = &d;

    std::vector<double> service_desc, intent_desc;
    if (f.service_description && !schema.service_description.empty())
        service_desc = sentence_encoder_.encode(schema.service_description);
    if (f.intent_description && !schema.intent_description.empty())
        intent_desc = sentence_encoder_.encode(schema.intent_description);
    int service_id = f.service ? vocab_.id(schema.service) : EncodedStep::kZeroSegment;
    int intent_id = (f.intent && !schema.intent.empty()) ? vocab_.id(schema.intent)
                                                         : EncodedStep::kZeroSegment;

    std::map<std::string, std::vector<double>> slot_desc_cache;
    for (const auto& t : schema.mr) {
        EncodedStep step;
        step.sym[0] = vocab_.id(t.act);
        step.sym[1] = vocab_.id(t.slot.value_or("null"));
        step.sym[2] = vocab_.id(t.value.value_or("null"));
        step.sym[3] = service_id;
        step.sym[4] = intent_id;
        step.sent[0] = service_desc;
        step.sent[1] = intent_desc;
        if (f.slot_descriptions && t.slot) {
            auto dit = descriptions.find(*t.slot);
            if (dit != descriptions.end()) {
                auto cit = slot_desc_cache.find(*t.slot);
                if (cit == slot_desc_cache.end())
                    cit = slot_desc_cache
                              .emplace(*t.slot,
                                       sentence_encoder_.encode(dit->second->description))
                              .first;
                step.sent[2] = cit->second;
            }
        }
        if (t.value) step.copy_token = *t.value;
        enc.steps.push_back(std::move(step));
    }
    enc.mr_steps = static_cast<int>(enc.steps.size());

    if (f.nl_mr && !schema.nl_mr.empty()) {
        if (config_.nl_mr_mode == NlMrMode::kPooled) {
            EncodedStep step;
            step.sent[3] = sentence_encoder_.encode(schema.nl_mr);
            enc.steps.push_back(std::move(step));
        } else {
            auto tokens = tokenize(schema.nl_mr);
            auto vectors = sentence_encoder_.encode_tokens(schema.nl_mr);
            for (std::size_t i = 0; i < vectors.size(); ++i) {
                EncodedStep step;
                step.sent[3] = vectors[i];
                if (i < tokens.size() && is_placeholder_token(tokens[i]))
                    step.copy_token = normalize_placeholder(tokens[i]);
                enc.steps.push_back(std::move(step));
            }
        }
    }
    return enc;
}

}  // namespace sgnlg
