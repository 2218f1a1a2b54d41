#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "sgnlg/nlmr.hpp"
#include "sgnlg/schema.hpp"

using namespace sgnlg;

TEST_CASE("placeholder parsing accepts both surface forms") {
    auto p = parse_placeholder("$cuisine_1");
    REQUIRE(p.has_value());
    CHECK(p->type == "cuisine");
    CHECK(p->index == 1);

    auto q = parse_placeholder("$cuisine1");
    REQUIRE(q.has_value());
    CHECK(q->type == "cuisine");
    CHECK(q->index == 1);

    auto r = parse_placeholder("$price-per-night12");
    REQUIRE(r.has_value());
    CHECK(r->type == "price-per-night");
    CHECK(r->index == 12);

    auto s = parse_placeholder("$restaurant_name_2");
    REQUIRE(s.has_value());
    CHECK(s->type == "restaurant_name");
    CHECK(s->index == 2);
}

TEST_CASE("placeholder parsing rejects non-placeholders") {
    CHECK_FALSE(parse_placeholder("cuisine_1").has_value());
    CHECK_FALSE(parse_placeholder("$cuisine").has_value());
    CHECK_FALSE(parse_placeholder("$12").has_value());
    CHECK_FALSE(parse_placeholder("$cuisine_0").has_value());
    CHECK_FALSE(parse_placeholder("$").has_value());
    CHECK_FALSE(parse_placeholder("").has_value());
    CHECK(is_placeholder_token("$date_3"));
    CHECK_FALSE(is_placeholder_token("$40"));
}

TEST_CASE("placeholder normalization and base") {
    CHECK(normalize_placeholder("$cuisine1") == "$cuisine_1");
    CHECK(normalize_placeholder("$cuisine_1") == "$cuisine_1");
    CHECK(normalize_placeholder("word") == "word");
    CHECK(placeholder_base("$date_3") == "$date");
    CHECK(placeholder_base("$date3") == "$date");
    CHECK(placeholder_base("word") == "word");
    CHECK(make_placeholder("cuisine", 2) == "$cuisine_2");
}

TEST_CASE("tokenize lowercases, splits punctuation, keeps placeholders atomic") {
    auto t = tokenize("Is there a cuisine you enjoy, such as $cuisine_1?");
    std::vector<std::string> want = {"is",   "there",      "a",  "cuisine", "you", "enjoy",
                                     ",",    "such",       "as", "$cuisine_1", "?"};
    CHECK(t == want);

    auto u = tokenize("the price-per-night is $price-per-night_1.");
    std::vector<std::string> wantu = {"the", "price-per-night", "is", "$price-per-night_1", "."};
    CHECK(u == wantu);

    auto v = tokenize("Don't stop; it's 8 am!");
    std::vector<std::string> wantv = {"don't", "stop", ";", "it's", "8", "am", "!"};
    CHECK(v == wantv);

    auto w = tokenize("KEEP Case", false);
    std::vector<std::string> wantw = {"KEEP", "Case"};
    CHECK(w == wantw);
}

TEST_CASE("template_placeholders lists occurrences in order, normalized") {
    auto ph = template_placeholders("Try $cuisine1 or $cuisine_2 near $city_1.");
    std::vector<std::string> want = {"$cuisine_1", "$cuisine_2", "$city_1"};
    CHECK(ph == want);
}

TEST_CASE("explicit_slots collects placeholder values only") {
    std::vector<MRTriple> mr = {
        {"REQUEST", "cuisine", "$cuisine_1"},
        {"REQUEST", "cuisine", "$cuisine_2"},
        {"OFFER_INTENT", "intent", "BuyBusTicket"},
        {"NOTIFY_SUCCESS", std::nullopt, std::nullopt},
        {"REQUEST", "new_alarm_time", std::nullopt},
    };
    auto slots = explicit_slots(mr);
    CHECK(slots.size() == 2);
    CHECK(slots.count("$cuisine_1") == 1);
    CHECK(slots.count("$cuisine_2") == 1);
}

TEST_CASE("validate_record flags broken invariants") {
    SGNLGRecord rec;
    rec.schema.service = "restaurants_1";
    rec.schema.mr = {{"REQUEST", "cuisine", "$cuisine_1"}};
    rec.schema.slot_descriptions = {{"cuisine", "Cuisine of food", true}};
    rec.schema.nl_mr = "what [cuisine] do you want?";
    rec.references = {"What $cuisine_1 would you like?"};
    CHECK(validate_record(rec).empty());

    SGNLGRecord bad = rec;
    bad.references.clear();
    CHECK_FALSE(validate_record(bad).empty());

    SGNLGRecord bad2 = rec;
    bad2.schema.slot_descriptions.clear();
    CHECK_FALSE(validate_record(bad2).empty());
}

TEST_CASE("record json round trip preserves everything") {
    SGNLGRecord rec;
    rec.schema.service = "buses_1";
    rec.schema.service_description = "Bus tickets";
    rec.schema.intent = "BuyBusTicket";
    rec.schema.intent_description = "Buy a bus ticket";
    rec.schema.mr = {{"OFFER", "departure_time", "$departure_time_1"},
                     {"OFFER_INTENT", "intent", "BuyBusTicket"},
                     {"GOODBYE", std::nullopt, std::nullopt}};
    rec.schema.slot_descriptions = {{"departure_time", "Departure time", false},
                                    {"intent", "the suggested intent to act on", false}};
    rec.schema.nl_mr = "there is [$departure_time_1] for [departure time].";
    rec.references = {"Leaves at $departure_time_1.", "Departs $departure_time_1."};
    auto line = record_to_json_line(rec);
    auto back = record_from_json_line(line);
    CHECK(back == rec);
}

TEST_CASE("nl-mr rules render each act with the fixed wording") {
    auto rules = NlMrRules::defaults();
    CHECK(rules.render_triple({"CONFIRM", "city", "$city_1"}) ==
          "please confirm that the [city] is [$city_1].");
    CHECK(rules.render_triple({"INFORM", "price-per-night", "$price-per-night_1"}) ==
          "the [price per night] is [$price-per-night_1].");
    CHECK(rules.render_triple({"OFFER", "movie-name", "$movie-name_2"}) ==
          "there is [$movie-name_2] for [movie name].");
    CHECK(rules.render_triple({"REQUEST", "new_alarm_time", std::nullopt}) ==
          "what [new alarm time] do you want?");
    CHECK(rules.render_triple({"NOTIFY_SUCCESS", std::nullopt, std::nullopt}) ==
          "the request succeeded.");
    CHECK(rules.render_triple({"NOTIFY_FAILURE", std::nullopt, std::nullopt}) ==
          "the request failed.");
    CHECK(rules.render_triple({"INFORM_COUNT", "count", "$count_1"}) ==
          "the [count] is [$count_1].");
    CHECK(rules.render_triple({"OFFER_INTENT", "intent", "BuyBusTicket"}) ==
          "would you like to [BuyBusTicket]?");
    CHECK(rules.render_triple({"REQ_MORE", std::nullopt, std::nullopt}) ==
          "do you want anything else?");
    CHECK(rules.render_triple({"GOODBYE", std::nullopt, std::nullopt}) == "goodbye.");
}

TEST_CASE("render_nl_mr joins one sentence per triple and lowercases") {
    auto rules = NlMrRules::defaults();
    std::vector<MRTriple> mr = {{"REQUEST", "cuisine", "$cuisine_1"},
                                {"REQUEST", "cuisine", "$cuisine_2"}};
    CHECK(render_nl_mr(mr, rules) == "what [cuisine] do you want? what [cuisine] do you want?");

    std::vector<MRTriple> mr2 = {{"OFFER_INTENT", "intent", "BuyBusTicket"}};
    CHECK(render_nl_mr(mr2, rules) == "would you like to [buybusticket]?");

    CHECK_THROWS_AS(rules.render_triple({"NO_SUCH_ACT", std::nullopt, std::nullopt}),
                    UnknownActError);
}

TEST_CASE("rules json round trip and override") {
    auto rules = NlMrRules::defaults();
    auto path = std::string("rules_roundtrip.json");
    rules.save_json_file(path);
    auto loaded = NlMrRules::from_json_file(path);
    CHECK(loaded.rules() == rules.rules());
    loaded.set_rule("INFORM", "we set the [slot] to [value].");
    CHECK(loaded.render_triple({"INFORM", "city", "$city_1"}) ==
          "we set the [city] to [$city_1].");
    std::remove(path.c_str());
}

TEST_CASE("slot_phrase de-hyphenates") {
    CHECK(slot_phrase("price-per-night") == "price per night");
    CHECK(slot_phrase("restaurant_name") == "restaurant name");
    CHECK(slot_phrase("city") == "city");
}
