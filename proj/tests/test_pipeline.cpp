#include <fstream>
#include <sstream>

#include "critsup/io.hpp"
#include "critsup/pipeline.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace critsup;

namespace {

CorpusParams small_params(std::uint64_t seed = 5) {
    CorpusParams p;
    p.seed = seed;
    p.n_images = 40;
    p.n_classes = 3;
    p.feature_dim = 8;
    p.clutter_level = 2;
    return p;
}

CampaignManifest small_manifest(int budget = 8, int stages = 2) {
    CampaignManifest m;
    m.seed = 5;
    m.n_classes = 3;
    m.fl_count = 6;
    m.synthetic = small_params();
    auto held = small_params(900);
    held.n_images = 30;
    m.held_out = held;
    StageConfig cfg;
    cfg.qa_budget = budget;
    m.stages.assign(static_cast<std::size_t>(stages), cfg);
    return m;
}

Campaign memory_campaign(const CampaignManifest& m) { return Campaign::in_memory(m, generate_corpus(*m.synthetic)); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path make_dir(const std::string& name, const CampaignManifest& m) {
    const auto dir = testkit::temp_dir(name);
    io::export_corpus(generate_corpus(*m.synthetic), dir);
    io::write_json(dir / "manifest.json", nlohmann::json(m));
    return dir;
}

// ELTR from first principles: human seconds over full-labeling seconds.
double hand_eltr(const Campaign& c) {
    const auto tm = time_model(c.manifest().profile);
    double total = 0, fl = 0;
    for (const auto& props : c.corpus().proposals) {
        const double n = static_cast<double>(c.corpus().truth.objects(props.image_index).size());
        total += n;
        if (c.fl_images().count(props.image_index)) fl += n;
    }
    double qa_seconds = 0;
    for (const auto& ev : c.state().labels()) {
        if (ev.qa_type == QaType::Type1) qa_seconds += 1.6;
        if (ev.qa_type == QaType::Type2) qa_seconds += 2.4;
    }
    return (fl * tm.t_fl + qa_seconds) / (total * tm.t_fl);
}

}  // namespace

TEST_CASE("manifest JSON round trip and validation") {
    auto m = small_manifest();
    m.scores = {"s1.jsonl"};
    m.fl_images = {1, 4};
    m.mode = CampaignMode::Live;
    m.psi = 0.05;
    m.image_root = "/data/img";
    const nlohmann::json j = m;
    CHECK(j["mode"] == "LIVE");
    const auto back = j.get<CampaignManifest>();
    CHECK(nlohmann::json(back) == j);
    CHECK(back.stages.size() == 2);
    CHECK(back.held_out->seed == 900);

    auto bad = m;
    bad.n_classes = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = m;
    bad.psi = 0.7;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("teach stage emits FULL events first") {
    auto c = memory_campaign(small_manifest());
    const auto r = c.teach();
    CHECK(c.fl_images().size() == 6);
    std::size_t objects = 0;
    for (int i : c.fl_images()) objects += c.corpus().truth.objects(i).size();
    CHECK(c.state().labels().size() == objects);
    CHECK(c.state().counters().full == static_cast<int>(objects));
    CHECK(r.stage == 0);
    CHECK(r.metric.has_value());
    CHECK(r.eltr == doctest::Approx(hand_eltr(c)));
    CHECK_THROWS_AS(c.teach(), Error);

    c.start_stage(1);
    const auto q = c.next_question();
    REQUIRE(q);
    CHECK(q->sequence == static_cast<std::int64_t>(objects) + 1);
    CHECK(q->stage == 1);
    CHECK_FALSE(c.fl_images().count(q->sample.image_index));
    // Asking again returns the same outstanding question.
    CHECK(c.next_question()->sample == q->sample);
}

TEST_CASE("stage ordering errors") {
    auto c = memory_campaign(small_manifest());
    CHECK_THROWS_AS(c.start_stage(1), Error);
    c.teach();
    CHECK_THROWS_AS(c.start_stage(2), Error);
    CHECK_THROWS_AS(c.finish_stage(), Error);
    c.start_stage(1);
    CHECK_THROWS_AS(c.start_stage(2), Error);
    CHECK_THROWS_AS(c.submit(1, Answer::yes()), Error);  // nothing outstanding
    const auto q = c.next_question();
    CHECK_THROWS_AS(c.submit(q->sequence + 1, Answer::yes()), Error);
    CHECK_THROWS_AS(c.set_stage_config(1, StageConfig{}), Error);
    CHECK_NOTHROW(c.set_stage_config(3, StageConfig{}));
    CHECK_THROWS_AS(c.set_stage_config(5, StageConfig{}), Error);
}

TEST_CASE("simulated runs are deterministic") {
    const auto m = small_manifest();
    auto a = memory_campaign(m);
    auto b = memory_campaign(m);
    const auto ra = a.run(2);
    const auto rb = b.run(2);
    CHECK(a.event_log_text() == b.event_log_text());
    REQUIRE(ra.size() == 3);
    for (std::size_t i = 0; i < ra.size(); ++i)
        CHECK(stage_report_to_json(ra[i]) == stage_report_to_json(rb[i]));

    auto other = m;
    other.seed = 6;
    auto c = memory_campaign(other);
    c.run(2);
    CHECK(c.event_log_text() != a.event_log_text());

    // Random selection is keyed on the seed as well.
    auto rnd = m;
    for (auto& s : rnd.stages) s.random_selection = true;
    auto r1 = memory_campaign(rnd);
    auto r2 = memory_campaign(rnd);
    r1.run(2);
    r2.run(2);
    CHECK(r1.event_log_text() == r2.event_log_text());
    CHECK(r1.event_log_text() != a.event_log_text());
}

TEST_CASE("campaign invariants over a run") {
    auto c = memory_campaign(small_manifest(10, 3));
    const auto reports = c.run(3);
    const auto& labels = c.state().labels();

    // Every sample is asked at most once, sequences run 1..n.
    std::set<SampleId> seen;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(labels[i].sequence == static_cast<std::int64_t>(i) + 1);
        if (labels[i].qa_type != QaType::Full) {
            CHECK(seen.insert(labels[i].sample).second);
            CHECK_FALSE(c.fl_images().count(labels[i].sample.image_index));
        }
    }
    // Counters recounted from the log.
    QaCounters recount;
    for (const auto& ev : labels) {
        if (ev.qa_type == QaType::Full) ++recount.full;
        if (ev.qa_type == QaType::Type1) {
            ++recount.qa1;
            if (ev.answer == Answer::yes()) ++recount.valid_qa1;
        }
        if (ev.qa_type == QaType::Type2) {
            ++recount.qa2;
            if (ev.answer.kind == Answer::Kind::Class) ++recount.valid_qa2;
        }
    }
    CHECK(reports.back().totals == recount);
    CHECK(replay_state(labels).counters() == recount);
    int per_stage = 0;
    for (const auto& r : reports) per_stage += r.counters.qa1 + r.counters.qa2;
    CHECK(per_stage == recount.qa1 + recount.qa2);

    // ELTR grows with every stage and matches the hand computation.
    for (std::size_t i = 1; i < reports.size(); ++i) CHECK(reports[i].eltr > reports[i - 1].eltr);
    CHECK(reports.back().eltr == doctest::Approx(hand_eltr(c)));
    CHECK(c.eltr_report(TimeProfile::HQ)["eltr_cs"].get<double>() == doctest::Approx(hand_eltr(c)));
    for (const auto& r : reports) {
        if (r.stage == 0) continue;
        CHECK(r.answered == 10);
        CHECK_FALSE(r.pool_exhausted);
        CHECK(r.train_positives > 0);
        REQUIRE(r.metric.has_value());
        CHECK(*r.metric >= 0);
        CHECK(*r.metric <= 1);
    }
}

TEST_CASE("budget zero produces an empty stage") {
    auto m = small_manifest();
    m.stages[0].qa_budget = 0;
    auto c = memory_campaign(m);
    c.teach();
    const auto before = c.state().counters();
    c.start_stage(1);
    CHECK_FALSE(c.next_question());
    const auto r = c.finish_stage();
    CHECK(r.answered == 0);
    CHECK(r.counters == QaCounters{});
    CHECK(r.totals == before);
    CHECK_FALSE(r.pool_exhausted);
    CHECK(r.stage_class_counts.empty());
}

TEST_CASE("budget equal to and above the pool size") {
    const auto m = small_manifest();
    auto probe = memory_campaign(m);
    probe.teach();
    probe.start_stage(1);
    const int pool = static_cast<int>(probe.pool_size());
    REQUIRE(pool > 0);

    StageConfig cfg = m.stages[0];
    cfg.qa_budget = pool;
    auto exact = memory_campaign(m);
    exact.set_stage_config(1, cfg);
    exact.teach();
    const auto r = exact.run_stage(1, [&](const Question& q) { return exact.simulated_answer(q); });
    CHECK(r.answered == pool);
    CHECK_FALSE(r.pool_exhausted);
    CHECK(r.pool_size == 0);

    cfg.qa_budget = pool + 7;
    auto over = memory_campaign(m);
    over.set_stage_config(1, cfg);
    over.teach();
    const auto partial = over.run_stage(1, [&](const Question& q) { return over.simulated_answer(q); });
    CHECK(partial.answered == pool);
    CHECK(partial.pool_exhausted);
    CHECK(partial.counters.qa1 + partial.counters.qa2 == pool);
}

TEST_CASE("question JSON") {
    auto c = memory_campaign(small_manifest());
    c.teach();
    c.start_stage(1);
    auto q = *c.next_question();
    q.breakdown.proposed_qa_type = QaType::Type1;
    q.breakdown.proposed_class = 2;
    auto j = question_to_json(q, 3, "imgs");
    CHECK(j["sequence"] == q.sequence);
    CHECK(j["qa_type"] == "TYPE1");
    CHECK(j["asked_class"] == 2);
    CHECK(j["image"] == "imgs/" + std::to_string(q.sample.image_index));
    CHECK(j.contains("breakdown"));
    q.breakdown.proposed_qa_type = QaType::Type2;
    j = question_to_json(q, 3, "");
    CHECK(j["class_list"] == nlohmann::json{1, 2, 3});
    CHECK(j["image"].is_null());
    CHECK_FALSE(j.contains("asked_class"));
}

TEST_CASE("persisted campaign writes its artifacts") {
    const auto m = small_manifest();
    const auto dir = make_dir("artifacts", m);
    {
        auto c = Campaign::open(dir);
        c.run(2);
    }
    CHECK(fs::exists(dir / "reports" / "stage_0.json"));
    CHECK(fs::exists(dir / "reports" / "stage_2.json"));
    const auto ts = io::read_training_set(dir / "trainsets" / "stage_1.jsonl");
    CHECK_FALSE(ts.positives.empty());
    const auto rep = stage_report_from_json(io::read_json(dir / "reports" / "stage_2.json"));
    CHECK(rep.stage == 2);
    CHECK(rep.answered == 8);

    // The log on disk is the in-memory run's log.
    auto mem = memory_campaign(m);
    mem.run(2);
    CHECK(slurp(dir / "events.jsonl") == mem.event_log_text());
    std::ifstream audit(dir / "audit.jsonl");
    int lines = 0;
    for (std::string line; std::getline(audit, line);) ++lines;
    CHECK(lines == 16);
    fs::remove_all(dir);
}

TEST_CASE("killed campaigns resume to the same log") {
    const auto m = small_manifest(6, 2);
    auto ref = memory_campaign(m);
    ref.run(2);
    const auto expect = ref.event_log_text();
    const auto n_events = static_cast<std::int64_t>(ref.state().labels().size());
    const auto n_full = ref.state().counters().full;

    for (std::int64_t limit : {std::int64_t{1}, std::int64_t{n_full}, std::int64_t{n_full + 3},
                               std::int64_t{n_full + 6}, std::int64_t{n_events - 1}}) {
        CAPTURE(limit);
        const auto dir = make_dir("resume", m);
        {
            auto c = Campaign::open(dir);
            c.set_event_limit(limit);
            CHECK_THROWS_AS(c.run(2), CampaignInterrupted);
        }
        // Second crash a few events later, leaving a torn line behind.
        {
            auto c = Campaign::open(dir);
            c.set_event_limit(2);
            try {
                c.run(2);
            } catch (const CampaignInterrupted&) {
            }
        }
        {
            std::ofstream torn(dir / "events.jsonl", std::ios::app);
            torn << "{\"sequence\": 99, \"sam";
        }
        auto c = Campaign::open(dir);
        CHECK(c.replaying());
        c.run(2);
        CHECK(slurp(dir / "events.jsonl") == expect);
        CHECK(c.event_log_text() == expect);
        CHECK(stage_report_to_json(c.reports().back()) == stage_report_to_json(ref.reports().back()));
        fs::remove_all(dir);
    }
}

TEST_CASE("resume leaves the interrupted stage open") {
    const auto m = small_manifest(6, 2);
    const auto dir = make_dir("resume_open", m);
    std::int64_t pending = 0;
    {
        auto c = Campaign::open(dir);
        c.teach();
        c.start_stage(1);
        for (int i = 0; i < 3; ++i) {
            const auto q = c.next_question();
            c.submit(q->sequence, c.simulated_answer(*q));
        }
        pending = c.next_question()->sequence;
    }
    auto c = Campaign::open(dir);
    c.resume();
    CHECK_FALSE(c.replaying());
    CHECK(c.current_stage() == 1);
    CHECK(c.stage_open());
    CHECK(c.next_question()->sequence == pending);
    fs::remove_all(dir);
}

TEST_CASE("a log that disagrees with the campaign is rejected") {
    const auto m = small_manifest(6, 1);
    const auto dir = make_dir("mismatch", m);
    {
        auto c = Campaign::open(dir);
        c.run(1);
    }
    auto events = read_event_log_file((dir / "events.jsonl").string());
    events.back().sample.proposal_index += 1000;
    {
        std::ofstream out(dir / "events.jsonl", std::ios::trunc);
        for (const auto& ev : events) out << event_to_json_line(ev) << '\n';
    }
    auto c = Campaign::open(dir);
    try {
        c.run(1);
        FAIL("expected log_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == "log_mismatch");
    }
    fs::remove_all(dir);
}

TEST_CASE("report curve") {
    StageReport s0, s1, s2;
    s0.eltr = 0.03, s0.stage = 0;
    s1.eltr = 0.04, s1.stage = 1;
    s2.eltr = 0.05, s2.stage = 2;
    const auto one = report_curve({s0}, {0.5});
    REQUIRE(one.size() == 1);
    CHECK(one[0].eltr == 0.03);
    CHECK(one[0].metric == 0.5);
    CHECK_THROWS_AS(report_curve({s0, s1}, {0.5}), Error);
    const auto rows = report_curve({s2, s0, s1}, {0.7, 0.5, 0.6});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].stage == 0);
    CHECK(rows[2].metric == 0.7);
    const auto csv = curve_to_csv(rows);
    CHECK(csv.rfind("eltr,metric,stage\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(report_curve({}, {}).empty());
}

TEST_CASE("synthetic campaign initialisation") {
    const auto dir = testkit::temp_dir("init");
    const auto m = init_synthetic_campaign(dir, small_params(), 3, 12, 5);
    CHECK(m.stages.size() == 3);
    CHECK(m.stages[2].qa_budget == 12);
    CHECK(m.held_out.has_value());
    CHECK(m.held_out->seed != m.seed);
    auto c = Campaign::open(dir);
    CHECK(c.corpus().n_samples() == generate_corpus(small_params()).n_samples());
    const auto reports = c.run(1);
    CHECK(reports.back().answered == 12);
    fs::remove_all(dir);
}
