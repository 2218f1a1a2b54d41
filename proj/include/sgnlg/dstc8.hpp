#pragma once

// Conversion of schema-guided dialog corpora (DSTC8 directory layout) into
// SGNLG records: system-turn extraction, delexicalization, MR construction,
// intent propagation, schema-info attachment, MR grouping, corpus statistics
// and seen/partially-unseen/fully-unseen service classification.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sgnlg/nlmr.hpp"
#include "sgnlg/schema.hpp"

namespace sgnlg::dstc8 {

class CorpusError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class SpanMismatchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class SchemaLookupError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SourceAction {
    std::string act;
    std::string slot;                 // empty when the act carries no slot
    std::vector<std::string> values;  // may be empty
};

struct SlotSpan {
    std::string slot;
    int start = 0;  // character offsets, [start, end)
    int end = 0;
};

enum class Speaker { kSystem, kUser };

struct SourceTurn {
    Speaker speaker = Speaker::kSystem;
    std::string utterance;
    std::vector<SourceAction> actions;
    std::string service;
    std::vector<SlotSpan> slot_spans;
    std::string intent;  // user turns only; empty when unannotated or NONE
};

struct Dialog {
    std::string id;
    std::vector<SourceTurn> turns;
    // Per-turn, per-service intents of user turns (user turns can span
    // several services; SourceTurn::intent holds the projection for the
    // paired system turn's service).
    std::vector<std::map<std::string, std::string>> user_intents;
};

struct ServiceSchema {
    std::string service;  // lowercased token
    std::string description;
    std::map<std::string, SlotDescription> slots;
    std::map<std::string, std::string> intent_descriptions;
};

using SchemaFile = std::map<std::string, ServiceSchema>;

enum class SplitLabel { kSeen, kPartiallyUnseen, kFullyUnseen };

std::string split_label_name(SplitLabel label);

// Trailing "_N"/"-N" stripped: "restaurants_2" -> "restaurants".
std::string domain_of(const std::string& service);

// --------------------------------------------------------------------------
// Parsing the DSTC8 JSON layout

std::vector<Dialog> load_dialog_file(const std::string& path);
// Every dialogues_*.json under dir, sorted by filename.
std::vector<Dialog> load_dialog_dir(const std::string& dir);
SchemaFile load_schema_file(const std::string& path);

// --------------------------------------------------------------------------
// Pipeline operations

struct SystemTurnRef {
    std::string dialog_id;
    int turn_index = 0;
    SourceTurn system;
    std::optional<SourceTurn> user;  // immediately preceding user turn
};

// Drops user turns; pairs each system turn with its immediately preceding
// user turn. When the user turn covers several services, its (service,
// intent) is projected onto the frame matching the system turn's service.
std::vector<SystemTurnRef> extract_system_turns(const std::vector<Dialog>& dialogs);

struct Delexicalized {
    Template text;
    // Placeholder token -> original surface value.
    std::map<std::string, std::string> assignment;
};

// Replaces each span with $<slot>_<k>, k counting occurrences of the slot
// type left to right from 1; replacement runs right to left so earlier
// offsets stay valid. Throws SpanMismatchError when a span's text is not a
// listed action value (or spans overlap / fall outside the utterance).
Delexicalized delexicalize(const std::string& utterance, const std::vector<SlotSpan>& spans,
                           const std::vector<SourceAction>& actions);

enum class MissingValuePolicy {
    kError,    // throw when an action value has no assigned placeholder
    kKeepRaw,  // keep the surface value as the triple value (counted)
};

// Expands each action to one triple per value; valueless slots get a null
// value, slotless acts get null slot and value. Values are replaced by the
// placeholders assigned during delexicalization.
std::vector<MRTriple> build_mr(const std::vector<SourceAction>& actions,
                               const std::map<std::string, std::string>& assignment,
                               MissingValuePolicy policy = MissingValuePolicy::kError,
                               int* raw_value_count = nullptr);

// The preceding user turn's intent when both turns share a service, else "".
std::string propagate_intent(const SourceTurn& system_turn,
                             const std::optional<SourceTurn>& user_turn);

// Populates service/intent descriptions and one SlotDescription per distinct
// MR slot. Throws SchemaLookupError when the service, a slot, or the intent
// is missing from the schema file.
SchemaInstance attach_schema_info(const std::string& service, const std::string& intent,
                                  const std::vector<MRTriple>& mr, const SchemaFile& schemas);

SplitLabel classify_service_split(const std::string& service,
                                  const std::set<std::string>& train_services,
                                  const std::set<std::string>& train_domains);

// --------------------------------------------------------------------------
// Grouping and statistics

// Records sharing (mr, service, intent) merge into one SGNLGRecord with
// pooled references, in first-occurrence order.
std::vector<SGNLGRecord> group_records(const std::vector<SGNLGRecord>& singles, bool dedupe,
                                       int* duplicate_count = nullptr);

struct SplitStats {
    std::string name;
    long long templates = 0;   // pooled references
    long long mrs = 0;         // grouped records
    long long services = 0;
    long long domains = 0;
    double refs_per_mr_mean = 0.0;
    long long refs_per_mr_max = 0;
    long long refs_per_mr_p50 = 0;
    long long refs_per_mr_p90 = 0;
    long long unique_templates = 0;  // after per-record dedupe
};

SplitStats corpus_stats(const std::string& name, const std::vector<SGNLGRecord>& records);

std::string stats_to_csv(const std::vector<SplitStats>& stats, const std::string& config_hash);
std::string stats_to_markdown(const std::vector<SplitStats>& stats, const std::string& config_hash);

}  // namespace sgnlg::dstc8
