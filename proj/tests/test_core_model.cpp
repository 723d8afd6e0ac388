#include <sstream>

#include "critsup/campaign_state.hpp"
#include "critsup/json_codec.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace critsup;
using testkit::qa_event;

namespace {

// Counters rebuilt by a plain fold, used as the reference for CampaignState.
struct Fold {
    std::map<ClassId, int> classes;
    std::map<int, int> images;
    int qa1 = 0, qa2 = 0, v1 = 0, v2 = 0, full = 0;

    explicit Fold(const std::vector<LabelEvent>& evs) {
        for (const auto& e : evs) {
            std::optional<ClassId> pos;
            if (e.answer.kind == Answer::Kind::Yes) pos = e.asked_class;
            if (e.answer.kind == Answer::Kind::Class) pos = e.answer.cls;
            if (e.qa_type == QaType::Type1) ++qa1, v1 += pos.has_value();
            if (e.qa_type == QaType::Type2) ++qa2, v2 += pos.has_value();
            if (e.qa_type == QaType::Full) ++full;
            if (pos) ++classes[*pos], ++images[e.sample.image_index];
        }
    }
};

std::vector<LabelEvent> random_log(testkit::Gen& g, int n) {
    std::vector<LabelEvent> out;
    std::set<SampleId> used;
    std::int64_t seq = 0;
    int stage = 0;
    while (static_cast<int>(out.size()) < n) {
        SampleId id{g.integer(0, 9), g.integer(0, 30)};
        if (used.count(id)) continue;
        used.insert(id);
        seq += g.integer(1, 3);
        if (g.coin(0.1)) ++stage;
        const int kind = g.integer(0, 2);
        if (kind == 0) {
            out.push_back(qa_event(id, QaType::Type1, g.integer(1, 4), g.coin() ? Answer::yes() : Answer::no(), stage, seq));
        } else if (kind == 1) {
            out.push_back(qa_event(id, QaType::Type2, std::nullopt,
                                   g.coin() ? Answer::of_class(g.integer(1, 4)) : Answer::background(), stage, seq));
        } else {
            auto ev = qa_event(id, QaType::Full, std::nullopt, Answer::of_class(g.integer(1, 4)), stage, seq);
            ev.box = BoundingBox{0, 0, 10, 10};
            ev.elapsed_cost_seconds = 42;
            out.push_back(ev);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("bounding box validation") {
    CHECK(BoundingBox::make(0, 0, 2, 3).area() == 6);
    CHECK_THROWS_AS(BoundingBox::make(1, 0, 1, 3), Error);
    CHECK_THROWS_AS(BoundingBox::make(0, 4, 2, 3), Error);
    CHECK_FALSE((BoundingBox{0, 0, 0, 1}).valid());
}

TEST_CASE("sample ids order by image, then proposal") {
    CHECK(SampleId{0, 9} < SampleId{1, 0});
    CHECK(SampleId{1, 2} < SampleId{1, 3});
    CHECK(to_string(SampleId{3, 4}) == "(3, 4)");
}

TEST_CASE("object argmax skips background and breaks ties low") {
    CHECK(argmax_object_class({0.9, 0.05, 0.05}) == 1);
    CHECK(argmax_object_class({0.1, 0.2, 0.5, 0.2}) == 2);
    CHECK(max_object_score({0.9, 0.04, 0.06}) == doctest::Approx(0.06));
}

TEST_CASE("answer strings round-trip and reject junk") {
    for (const auto& a : {Answer::yes(), Answer::no(), Answer::background(), Answer::of_class(7)})
        CHECK(answer_from_string(to_string(a)) == a);
    for (const char* bad : {"", "yes", "CLASS()", "CLASS(0)", "CLASS(2", "CLASS(2)x", "CLASS(-1)", "MAYBE"})
        CHECK_THROWS_WITH_AS(answer_from_string(bad), doctest::Contains(""), Error);
}

TEST_CASE("replay of the empty log is the zero state") {
    auto s = replay_state({});
    CHECK(s.labels().empty());
    CHECK(s.class_counts().empty());
    CHECK(s.positive_count_per_image().empty());
    CHECK(s.stage() == 0);
    CHECK(s.counters() == QaCounters{});
}

TEST_CASE("one TYPE1 YES for class 3") {
    auto s = replay_state({qa_event({0, 0}, QaType::Type1, 3, Answer::yes(), 1, 1)});
    CHECK(s.class_count(3) == 1);
    CHECK(s.class_counts().size() == 1);
    CHECK(s.counters().valid_qa1 == 1);
}

TEST_CASE("two positives in image 7") {
    auto s = replay_state({qa_event({7, 0}, QaType::Type1, 2, Answer::yes(), 1, 1),
                           qa_event({7, 5}, QaType::Type2, std::nullopt, Answer::of_class(4), 1, 2),
                           qa_event({7, 6}, QaType::Type1, 2, Answer::no(), 1, 3)});
    CHECK(s.positive_count_per_image().at(7) == 2);
    CHECK(s.image_positive_count(7) == 2);
    CHECK(s.class_count(2) == 1);
    CHECK(s.class_count(4) == 1);
}

TEST_CASE("duplicate positive is rejected with the offending id") {
    std::vector<LabelEvent> evs{qa_event({2, 3}, QaType::Type1, 1, Answer::yes(), 1, 1),
                                qa_event({2, 3}, QaType::Type2, std::nullopt, Answer::of_class(2), 1, 2)};
    CHECK_THROWS_WITH(replay_state(evs), doctest::Contains("(2, 3)"));
    try {
        replay_state(evs);
    } catch (const Error& e) {
        CHECK(e.code() == "duplicate_positive");
    }
}

TEST_CASE("event invariants are checked before the state changes") {
    CampaignState s;
    s.append(qa_event({0, 0}, QaType::Type1, 1, Answer::no(), 1, 5));
    CHECK_THROWS_AS(s.append(qa_event({0, 1}, QaType::Type1, 1, Answer::no(), 1, 5)), Error);
    CHECK_THROWS_AS(s.append(qa_event({0, 1}, QaType::Type1, std::nullopt, Answer::no(), 1, 6)), Error);
    CHECK_THROWS_AS(s.append(qa_event({0, 1}, QaType::Full, std::nullopt, Answer::of_class(1), 1, 6)), Error);
    CHECK(s.labels().size() == 1);
    CHECK(s.next_sequence() == 6);
}

TEST_CASE("property: state equals an independent fold, for every prefix") {
    testkit::Gen g(11);
    for (int trial = 0; trial < 40; ++trial) {
        const auto log = random_log(g, g.integer(0, 60));
        CampaignState live;
        for (std::size_t i = 0; i < log.size(); ++i) {
            live.append(log[i]);
            const std::vector<LabelEvent> prefix(log.begin(), log.begin() + static_cast<long>(i) + 1);
            const auto replayed = replay_state(prefix);
            const Fold f(prefix);
            REQUIRE(replayed.class_counts() == f.classes);
            REQUIRE(replayed.positive_count_per_image() == f.images);
            REQUIRE(live.class_counts() == f.classes);
            REQUIRE(live.counters().qa1 == f.qa1);
            REQUIRE(live.counters().qa2 == f.qa2);
            REQUIRE(live.counters().valid_qa1 == f.v1);
            REQUIRE(live.counters().valid_qa2 == f.v2);
            REQUIRE(live.counters().full == f.full);
            int sum = 0;
            for (const auto& [_, n] : live.class_counts()) sum += n;
            REQUIRE(sum == live.positive_events());
        }
        // Replay is idempotent.
        CHECK(replay_state(replay_state(log).labels()).class_counts() == replay_state(log).class_counts());
    }
}

TEST_CASE("event log JSON lines") {
    testkit::Gen g(5);
    const auto log = random_log(g, 30);
    std::string text;
    for (const auto& e : log) text += event_to_json_line(e) + "\n";

    SUBCASE("round trip") {
        std::istringstream in(text);
        CHECK(read_event_log(in) == log);
    }
    SUBCASE("field names") {
        const auto j = nlohmann::json::parse(event_to_json_line(log.front()));
        for (const char* k : {"sample", "qa_type", "asked_class", "answer", "stage", "sequence", "elapsed_cost_seconds"})
            CHECK(j.contains(k));
    }
    SUBCASE("unterminated last line is an interrupted write") {
        std::istringstream in(text + event_to_json_line(log.front()).substr(0, 20));
        CHECK(read_event_log(in) == log);
        std::istringstream whole(text + event_to_json_line(log.back()));
        CHECK(read_event_log(whole).size() == log.size());
    }
    SUBCASE("corrupt complete line") {
        std::istringstream in(text + "{not json}\n");
        try {
            read_event_log(in);
            FAIL("expected corrupt_log");
        } catch (const Error& e) {
            CHECK(e.code() == "corrupt_log");
        }
    }
}

TEST_CASE("stage config defaults and validation") {
    StageConfig cfg;
    CHECK(cfg.tau == 0.3);
    CHECK(cfg.epsilon == 0.01);
    CHECK(cfg.knn_k == 4);
    CHECK(cfg.score_floor == 0.01);
    CHECK(cfg.th_fg == 0.6);
    CHECK(cfg.th_hi == 0.4);
    CHECK(cfg.th_lo == 0.1);
    CHECK(cfg.bal1.mu == 1);
    CHECK(cfg.bal1.sigma2 == 0.2);
    CHECK(cfg.rep.mu == 1.5);
    CHECK(cfg.rep.sigma2 == 0.5);
    CHECK(cfg.hard.mu == 2);
    CHECK(cfg.hard.sigma2 == 0.2);
    CHECK(cfg.bal2_params(5).mu == doctest::Approx(cfg.qa_budget / 5.0));
    CHECK(cfg.bal2_params(5).sigma2 == 1);
    cfg.validate();

    auto broken = cfg;
    broken.th_hi = 0.7;
    CHECK_THROWS_AS(broken.validate(), Error);
    broken = cfg;
    broken.tau = 1;
    CHECK_THROWS_AS(broken.validate(), Error);
    broken = cfg;
    broken.qa_budget = -1;
    CHECK_THROWS_AS(broken.validate(), Error);

    auto custom = cfg;
    custom.qa_budget = 17;
    custom.hard = {3, 0.5};
    custom.enable_rep = false;
    CHECK(nlohmann::json(custom).get<StageConfig>().qa_budget == 17);
    CHECK(nlohmann::json(custom).get<StageConfig>().hard.sigma2 == 0.5);
    CHECK_FALSE(nlohmann::json(custom).get<StageConfig>().enable_rep);
    CHECK(nlohmann::json::object().get<StageConfig>().tau == 0.3);
}
