#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "sgnlg/eval_report.hpp"
#include "sgnlg/metrics.hpp"
#include "sgnlg/porter.hpp"
#include "sgnlg/schema.hpp"

using namespace sgnlg;
using namespace sgnlg::eval;

namespace {
std::vector<std::string> tok(const std::string& s) { return tokenize(s); }
}  // namespace

TEST_CASE("porter stemmer matches the published behavior") {
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("ponies") == "poni");
    CHECK(porter_stem("ties") == "ti");
    CHECK(porter_stem("caress") == "caress");
    CHECK(porter_stem("cats") == "cat");
    CHECK(porter_stem("feed") == "feed");
    CHECK(porter_stem("agreed") == "agre");
    CHECK(porter_stem("plastered") == "plaster");
    CHECK(porter_stem("bled") == "bled");
    CHECK(porter_stem("motoring") == "motor");
    CHECK(porter_stem("sing") == "sing");
    CHECK(porter_stem("conflated") == "conflat");
    CHECK(porter_stem("troubled") == "troubl");
    CHECK(porter_stem("sized") == "size");
    CHECK(porter_stem("hopping") == "hop");
    CHECK(porter_stem("tanned") == "tan");
    CHECK(porter_stem("falling") == "fall");
    CHECK(porter_stem("hissing") == "hiss");
    CHECK(porter_stem("fizzed") == "fizz");
    CHECK(porter_stem("failing") == "fail");
    CHECK(porter_stem("filing") == "file");
    CHECK(porter_stem("happy") == "happi");
    CHECK(porter_stem("sky") == "sky");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("conditional") == "condit");
    CHECK(porter_stem("rational") == "ration");
    CHECK(porter_stem("valenci") == "valenc");
    CHECK(porter_stem("hesitanci") == "hesit");
    CHECK(porter_stem("digitizer") == "digit");
    CHECK(porter_stem("ies") == "i");
    CHECK(porter_stem("at") == "at");
    CHECK(porter_stem("$cuisine_1") == "$cuisine_1");
    CHECK(porter_stem("Mixed") == "Mixed");
}

TEST_CASE("ser breakdown counts deletions, repetitions and hallucinations") {
    std::vector<MRTriple> mr = {{"OFFER", "movie-name", "$movie-name_1"},
                                {"OFFER", "movie-name", "$movie-name_2"},
                                {"OFFER", "movie-name", "$movie-name_3"}};
    auto b = ser_breakdown(tok("there is $movie-name_2 ."), mr);
    CHECK(b.deletions == 2);
    CHECK(b.repetitions == 0);
    CHECK(b.hallucinations == 0);
    CHECK(b.total_explicit_slots == 3);
    CHECK(b.ser() == doctest::Approx(2.0 / 3.0));
    CHECK(b.defined());
}

TEST_CASE("ser counts repeats and hallucinated placeholders") {
    std::vector<MRTriple> mr = {{"INFORM", "date", "$date_1"}};
    auto b = ser_breakdown(tok("the $date_1 and $date_1 in $city_9 ."), mr);
    CHECK(b.deletions == 0);
    CHECK(b.repetitions == 1);
    CHECK(b.hallucinations == 1);
    CHECK(b.total_explicit_slots == 1);
    CHECK(b.ser() == doctest::Approx(2.0));
}

TEST_CASE("ser is undefined for MRs without explicit slots") {
    std::vector<MRTriple> mr = {{"NOTIFY_SUCCESS", std::nullopt, std::nullopt},
                                {"REQUEST", "new_alarm_time", std::nullopt}};
    auto b = ser_breakdown(tok("the request succeeded ."), mr);
    CHECK(b.total_explicit_slots == 0);
    CHECK_FALSE(b.defined());
}

TEST_CASE("ser treats compact and canonical placeholder forms alike") {
    std::vector<MRTriple> mr = {{"INFORM", "city", "$city_1"}};
    auto a = ser_breakdown(tok("see you in $city_1 ."), mr);
    auto b = ser_breakdown(tok("see you in $city1 ."), mr);
    CHECK(a.deletions == 0);
    CHECK(b.deletions == 0);
    CHECK(a.ser() == doctest::Approx(0.0));
    CHECK(b.ser() == doctest::Approx(0.0));
}

TEST_CASE("slots_match demands the exact placeholder multiset") {
    std::vector<MRTriple> mr = {{"REQUEST", "cuisine", "$cuisine_1"},
                                {"REQUEST", "cuisine", "$cuisine_2"}};
    CHECK(slots_match(tok("do you like $cuisine_1 or $cuisine_2 ?"), mr));
    CHECK(slots_match(tok("$cuisine_2 maybe , or $cuisine_1 ?"), mr));
    CHECK_FALSE(slots_match(tok("do you like $cuisine_1 ?"), mr));
    CHECK_FALSE(slots_match(tok("$cuisine_1 $cuisine_1 $cuisine_2"), mr));
    CHECK_FALSE(slots_match(tok("$cuisine_1 $cuisine_2 $city_1"), mr));
    double rate = slot_match_rate({tok("$cuisine_1 and $cuisine_2"), tok("$cuisine_1 only")},
                                  {mr, mr});
    CHECK(rate == doctest::Approx(0.5));
}

TEST_CASE("corpus bleu matches the frozen reference values") {
    std::vector<std::vector<std::string>> hyps = {
        tok("the cuisine is mexican ."),
        tok("there is a bus departing at $departure_time_1 ."),
        tok("please confirm the $city_1 reservation now"),
        tok("what time do you want ?"),
        tok("goodbye and have a great day"),
    };
    std::vector<std::vector<std::vector<std::string>>> refs = {
        {tok("the cuisine is mexican ."), tok("the type of food is mexican .")},
        {tok("there is a bus leaving at $departure_time_1 .")},
        {tok("please confirm your reservation in $city_1 .")},
        {tok("what time do you want ?"), tok("when do you want it ?")},
        {tok("goodbye , have a great day !")},
    };
    CHECK(corpus_bleu(hyps, refs) == doctest::Approx(0.5841727711).epsilon(1e-9));

    std::vector<std::vector<std::string>> id_out = {tok("the request succeeded ."),
                                                    tok("what cuisine do you want ?")};
    std::vector<std::vector<std::vector<std::string>>> id_refs = {
        {tok("the request succeeded .")}, {tok("what cuisine do you want ?")}};
    CHECK(corpus_bleu(id_out, id_refs) == doctest::Approx(1.0));

    CHECK(corpus_bleu({tok("a b")}, {{tok("a b c d")}}) == doctest::Approx(0.0));
    CHECK(corpus_bleu({tok("the the the cat")}, {{tok("the cat sat")}}) == doctest::Approx(0.0));
}

TEST_CASE("sentence bleu smooths higher orders only") {
    CHECK(sentence_bleu(tok("the the the cat"), {tok("the cat sat")}) ==
          doctest::Approx(0.4518010018).epsilon(1e-9));
    CHECK(sentence_bleu(tok("a b c d e"), {tok("a b c d e"), tok("a b")}) ==
          doctest::Approx(1.0));
    CHECK(sentence_bleu(tok("x y"), {tok("a b")}) == doctest::Approx(0.0));
}

TEST_CASE("meteor matches the frozen reference values") {
    CHECK(meteor(tok("the cat sat on the mat"), tok("the cat sat on the mat")) ==
          doctest::Approx(0.9976851852).epsilon(1e-9));
    CHECK(meteor(tok("on the mat the cat sat"), tok("the cat sat on the mat")) ==
          doctest::Approx(0.7106481481).epsilon(1e-9));
    CHECK(meteor(tok("the cats are sitting"), tok("the cat sits")) ==
          doctest::Approx(0.8243727599).epsilon(1e-9));
    CHECK(meteor(tok("x y z"), tok("a b c")) == doctest::Approx(0.0));
    CHECK(meteor(tok("there is a bus departing at 8 am ."), tok("there is a bus leaving at 8 am .")) ==
          doctest::Approx(0.8819444444).epsilon(1e-9));
    CHECK(meteor_multi(tok("what time do you want ?"),
                       {tok("when do you want it ?"), tok("what time do you want ?")}) ==
          doctest::Approx(0.9976851852).epsilon(1e-9));
    CHECK(meteor(tok("a b c d"), tok("a x b y c z d")) ==
          doctest::Approx(0.2985074627).epsilon(1e-9));

    std::vector<std::vector<std::string>> hyps = {
        tok("the cuisine is mexican ."),
        tok("there is a bus departing at $departure_time_1 ."),
        tok("please confirm the $city_1 reservation now"),
        tok("what time do you want ?"),
        tok("goodbye and have a great day"),
    };
    std::vector<std::vector<std::vector<std::string>>> refs = {
        {tok("the cuisine is mexican ."), tok("the type of food is mexican .")},
        {tok("there is a bus leaving at $departure_time_1 .")},
        {tok("please confirm your reservation in $city_1 .")},
        {tok("what time do you want ?"), tok("when do you want it ?")},
        {tok("goodbye , have a great day !")},
    };
    CHECK(mean_meteor(hyps, refs) == doctest::Approx(0.8034715830).epsilon(1e-9));
}

TEST_CASE("diversity counts distinct n-grams and index-normalized novelty") {
    auto rep = diversity({tok("a a b")}, {});
    CHECK(rep.vocab1 == 2);
    CHECK(rep.distinct1 == doctest::Approx(2.0 / 3.0));
    CHECK(rep.vocab2 == 2);
    CHECK(rep.distinct2 == doctest::Approx(1.0));

    CHECK(normalize_template_text("meet on $date_3 in $city_1 .") == "meet on $date in $city .");

    // $date_3 differs from the training $date_1 only by index: normalized
    // novelty sees a known template, raw novelty sees a new string.
    auto nov = diversity({tok("meet on $date_3 .")}, {"meet on $date_1 ."});
    CHECK(nov.novelty == doctest::Approx(0.0));
    CHECK(nov.novelty_raw == doctest::Approx(1.0));
    CHECK(nov.distinct_outputs == 1);

    auto nov2 = diversity({tok("meet on $date_1 ."), tok("a new sentence entirely")},
                          {"meet on $date_1 ."});
    CHECK(nov2.novelty == doctest::Approx(0.5));
    CHECK(nov2.distinct_outputs == 2);
}

TEST_CASE("identity outputs score perfectly across the metric suite") {
    std::vector<MRTriple> mr = {{"OFFER", "restaurant_name", "$restaurant_name_1"},
                                {"OFFER", "city", "$city_1"}};
    auto text = tok("$restaurant_name_1 is a nice restaurant in $city_1 .");
    CHECK(corpus_bleu({text}, {{text}}) == doctest::Approx(1.0));
    CHECK(meteor(text, text) > 0.99);
    auto b = ser_breakdown(text, mr);
    CHECK(b.ser() == doctest::Approx(0.0));
    CHECK(slots_match(text, mr));
}

TEST_CASE("aggregate_report weights split rows by reference counts") {
    // Two services in one split: 75% and 25% of the references with SER
    // 0.0 and 0.4 give a split SER of 0.1.
    std::vector<InstanceEval> instances;
    std::vector<MRTriple> mr = {{"INFORM", "city", "$city_1"}};
    for (int i = 0; i < 3; ++i) {
        InstanceEval inst;
        inst.service = "alpha_1";
        inst.split = "seen";
        inst.mr = mr;
        inst.output_tokens = tok("see $city_1 .");
        inst.reference_tokens = {tok("see $city_1 .")};
        instances.push_back(inst);
    }
    {
        InstanceEval inst;
        inst.service = "beta_1";
        inst.split = "seen";
        inst.mr = {{"INFORM", "city", "$city_1"},
                   {"INFORM", "date", "$date_1"},
                   {"INFORM", "time", "$time_1"},
                   {"INFORM", "count", "$count_1"},
                   {"INFORM", "price", "$price_1"}};
        inst.output_tokens = tok("on $date_1 at $time_1 in $city_1 .");
        inst.reference_tokens = {
            tok("on $date_1 at $time_1 in $city_1 , $count_1 for $price_1 .")};
        instances.push_back(inst);
    }
    auto report = aggregate_report(instances, {});
    REQUIRE(report.services.size() == 2);
    CHECK(report.services[0].service == "alpha_1");
    CHECK(report.services[0].ser == doctest::Approx(0.0));
    CHECK(report.services[1].ser == doctest::Approx(0.4));
    REQUIRE(report.splits.size() == 1);
    CHECK(report.splits[0].split == "seen");
    CHECK(report.splits[0].references == 4);
    CHECK(report.splits[0].ser == doctest::Approx(0.1));
    CHECK(report.splits[0].slot_match == doctest::Approx(0.75));
    CHECK(report.instances == 4);
    CHECK(report.totals.deletions == 2);
}

TEST_CASE("aggregate_report excludes undefined ser instances from the mean") {
    std::vector<InstanceEval> instances;
    {
        InstanceEval inst;
        inst.service = "alarm_1";
        inst.split = "fully_unseen";
        inst.mr = {{"REQUEST", "new_alarm_time", std::nullopt}};
        inst.output_tokens = tok("what time ?");
        inst.reference_tokens = {tok("what time do you want ?")};
        instances.push_back(inst);
    }
    {
        InstanceEval inst;
        inst.service = "alarm_1";
        inst.split = "fully_unseen";
        inst.mr = {{"INFORM", "time", "$time_1"}};
        inst.output_tokens = tok("done at $time_1 and $time_1 .");
        inst.reference_tokens = {tok("the alarm is set for $time_1 .")};
        instances.push_back(inst);
    }
    auto report = aggregate_report(instances, {});
    CHECK(report.ser_excluded == 1);
    CHECK(report.ser == doctest::Approx(1.0));
    REQUIRE(report.services.size() == 1);
    CHECK(report.services[0].ser_excluded == 1);
    CHECK(report.services[0].ser == doctest::Approx(1.0));
}

TEST_CASE("report serializations carry the headline figures") {
    std::vector<InstanceEval> instances;
    InstanceEval inst;
    inst.service = "svc_1";
    inst.split = "seen";
    inst.mr = {{"INFORM", "city", "$city_1"}};
    inst.output_tokens = tok("in $city_1 .");
    inst.reference_tokens = {tok("in $city_1 .")};
    instances.push_back(inst);
    auto report = aggregate_report(instances, {"in $city_1 ."});
    report.config_hash = "feedfacefeedface";
    report.seed = 21;
    auto json = report_to_json(report);
    CHECK(json.find("\"bleu\"") != std::string::npos);
    CHECK(json.find("feedfacefeedface") != std::string::npos);
    auto csv = report_to_csv(report);
    CHECK(csv.find("overall") != std::string::npos);
    CHECK(csv.find("# config_hash=feedfacefeedface seed=21") != std::string::npos);
    auto md = report_to_markdown(report);
    CHECK(md.find("| seen |") != std::string::npos);
}
