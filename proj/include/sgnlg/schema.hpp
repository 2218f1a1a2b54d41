#pragma once

// Core domain types for schema-guided template generation: MR triples,
// schema instances, delexicalized templates and the JSONL record format
// shared by the preprocessing, training and evaluation stages.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sgnlg {

// A dialog act name, e.g. INFORM, REQUEST, CONFIRM. The inventory is
// discovered from the corpus at preprocessing time.
using DialogAct = std::string;

// One (act, slot, value) unit. Slot and value may be null (absent in the
// source action); a non-null value is normally a placeholder token such as
// "$cuisine_1" but raw surface values are kept when no span was available.
struct MRTriple {
    DialogAct act;
    std::optional<std::string> slot;
    std::optional<std::string> value;

    bool operator==(const MRTriple&) const = default;
};

struct SlotDescription {
    std::string slot;
    std::string description;
    bool is_categorical = false;

    bool operator==(const SlotDescription&) const = default;
};

// An MR plus every contextual enrichment drawn from the service schema.
struct SchemaInstance {
    std::vector<MRTriple> mr;
    std::vector<SlotDescription> slot_descriptions;  // one per distinct non-null slot
    std::string service;
    std::string service_description;
    std::string intent;                              // empty when unknown
    std::string intent_description;                  // empty iff intent is empty
    std::string nl_mr;

    bool operator==(const SchemaInstance&) const = default;
};

// A delexicalized system utterance; placeholders appear inline as $slot_N.
using Template = std::string;

struct SGNLGRecord {
    SchemaInstance schema;
    std::vector<Template> references;  // non-empty

    bool operator==(const SGNLGRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Placeholder grammar: "$" + slot type + "_" + decimal index, index >= 1.
// Source data alternates between $cuisine1 and $cuisine_1; the underscore
// form is canonical and ingest normalizes to it.

struct Placeholder {
    std::string type;  // e.g. "cuisine", "price-per-night", "restaurant_name"
    int index = 0;

    bool operator==(const Placeholder&) const = default;
};

// Parses any accepted surface form ($type_3 or $type3). Returns nullopt for
// tokens that are not placeholders (no "$", no trailing index, "$" + digit
// money amounts, index 0).
std::optional<Placeholder> parse_placeholder(const std::string& token);

bool is_placeholder_token(const std::string& token);

// Canonical underscore form, e.g. "$cuisine1" -> "$cuisine_1". Non-placeholder
// tokens pass through unchanged.
std::string normalize_placeholder(const std::string& token);

// Index-stripped form used by the novelty metric: "$date_3" -> "$date".
std::string placeholder_base(const std::string& token);

std::string make_placeholder(const std::string& type, int index);

// ---------------------------------------------------------------------------
// Tokenization used everywhere downstream (metrics, generator targets):
// lowercase, punctuation separated into single-char tokens, placeholders and
// hyphen/underscore/apostrophe-joined words atomic.
std::vector<std::string> tokenize(const std::string& text, bool lowercase = true);

// Placeholder tokens of a template, in order of occurrence (normalized form).
std::vector<std::string> template_placeholders(const Template& text);

// ---------------------------------------------------------------------------
// Operations

// Multiset of placeholder-valued slots of an MR. Null values and raw
// (non-placeholder) values contribute nothing.
std::multiset<std::string> explicit_slots(const std::vector<MRTriple>& mr);

// Returns one human-readable violation per broken invariant; empty means the
// record is valid. Violations are data, not exceptions.
std::vector<std::string> validate_record(const SGNLGRecord& record);

// ---------------------------------------------------------------------------
// Canonical on-disk form: one JSON object per line per record, UTF-8.
// An optional leading header line {"header": {...}} carries run metadata
// (config hash, seed); readers skip it. See docs/data-format.md.

std::string record_to_json_line(const SGNLGRecord& record);
SGNLGRecord record_from_json_line(const std::string& line);

struct RecordsFile {
    std::vector<SGNLGRecord> records;
    std::string config_hash;  // empty when the file had no header
    long long seed = 0;
};

RecordsFile read_records(const std::string& path);
void write_records(const std::string& path, const std::vector<SGNLGRecord>& records,
                   const std::string& config_hash, long long seed);

}  // namespace sgnlg
