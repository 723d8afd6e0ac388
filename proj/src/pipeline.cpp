#include "critsup/pipeline.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "critsup/geometry.hpp"
#include "critsup/io.hpp"
#include "critsup/json_codec.hpp"

namespace critsup {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest

void CampaignManifest::validate() const {
    auto fail = [](const std::string& what) { throw Error("invalid_manifest", what); };
    if (n_classes < 1) fail("n_classes must be >= 1");
    if (fl_count < 0) fail("fl_count must be >= 0");
    if (!(psi >= 0 && psi < NoiseModel::kBaseThreshold)) fail("psi must lie in [0, 0.6)");
    if (!surrogate_detector && scores.size() < stages.size())
        fail("without the surrogate detector every stage needs a scores file");
    for (const auto& s : stages) {
        try {
            s.validate();
        } catch (const Error& e) {
            fail(e.what());
        }
    }
}

void to_json(json& j, const CorpusParams& p) {
    j = json{{"seed", p.seed},
             {"world_seed", p.world_seed},
             {"n_images", p.n_images},
             {"n_classes", p.n_classes},
             {"objects_per_image", p.objects_per_image},
             {"clutter_level", p.clutter_level},
             {"feature_dim", p.feature_dim},
             {"separation", p.separation},
             {"spread", p.spread},
             {"class_weights", p.class_weights},
             {"image_width", p.image_width},
             {"image_height", p.image_height}};
}

void from_json(const json& j, CorpusParams& p) {
    auto opt = [&](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end()) it->get_to(field);
    };
    opt("seed", p.seed);
    opt("world_seed", p.world_seed);
    opt("n_images", p.n_images);
    opt("n_classes", p.n_classes);
    opt("objects_per_image", p.objects_per_image);
    opt("clutter_level", p.clutter_level);
    opt("feature_dim", p.feature_dim);
    opt("separation", p.separation);
    opt("spread", p.spread);
    opt("class_weights", p.class_weights);
    opt("image_width", p.image_width);
    opt("image_height", p.image_height);
}

void to_json(json& j, const CampaignManifest& m) {
    j = json{{"seed", m.seed},
             {"mode", m.mode == CampaignMode::Live ? "LIVE" : "SIMULATED"},
             {"time_profile", to_string(m.profile)},
             {"n_classes", m.n_classes},
             {"proposals", m.proposals},
             {"features", m.features},
             {"ground_truth", m.ground_truth},
             {"scores", m.scores},
             {"fl_images", m.fl_images},
             {"fl_count", m.fl_count},
             {"surrogate_detector", m.surrogate_detector},
             {"synthetic", m.synthetic ? json(*m.synthetic) : json(nullptr)},
             {"held_out", m.held_out ? json(*m.held_out) : json(nullptr)},
             {"stages", m.stages},
             {"psi", m.psi},
             {"image_root", m.image_root}};
}

void from_json(const json& j, CampaignManifest& m) {
    auto opt = [&](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(field);
    };
    opt("seed", m.seed);
    if (auto it = j.find("mode"); it != j.end()) {
        const auto s = it->get<std::string>();
        if (s == "LIVE")
            m.mode = CampaignMode::Live;
        else if (s == "SIMULATED")
            m.mode = CampaignMode::Simulated;
        else
            throw Error("invalid_manifest", "mode must be SIMULATED or LIVE");
    }
    if (auto it = j.find("time_profile"); it != j.end())
        m.profile = time_profile_from_string(it->get<std::string>());
    opt("n_classes", m.n_classes);
    opt("proposals", m.proposals);
    opt("features", m.features);
    opt("ground_truth", m.ground_truth);
    opt("scores", m.scores);
    opt("fl_images", m.fl_images);
    opt("fl_count", m.fl_count);
    opt("surrogate_detector", m.surrogate_detector);
    if (auto it = j.find("synthetic"); it != j.end() && !it->is_null()) m.synthetic = it->get<CorpusParams>();
    if (auto it = j.find("held_out"); it != j.end() && !it->is_null()) m.held_out = it->get<CorpusParams>();
    opt("stages", m.stages);
    opt("psi", m.psi);
    opt("image_root", m.image_root);
}

// ---------------------------------------------------------------------------
// Reports

json question_to_json(const Question& q, int n_classes, const std::string& image_root) {
    json j{{"sample_id", q.sample},
           {"image_index", q.sample.image_index},
           {"image", image_root.empty() ? json(nullptr)
                                        : json(image_root + "/" + std::to_string(q.sample.image_index))},
           {"box", q.box},
           {"qa_type", to_string(q.breakdown.proposed_qa_type)},
           {"sequence", q.sequence},
           {"stage", q.stage},
           {"breakdown", io::breakdown_to_json(q.breakdown)}};
    if (q.breakdown.proposed_qa_type == QaType::Type1) {
        j["asked_class"] = q.breakdown.proposed_class;
    } else {
        std::vector<int> classes;
        for (int c = 1; c <= n_classes; ++c) classes.push_back(c);
        j["class_list"] = classes;
    }
    return j;
}

namespace {

json counters_json(const QaCounters& c) {
    return json{{"qa1", c.qa1}, {"qa2", c.qa2}, {"valid_qa1", c.valid_qa1}, {"valid_qa2", c.valid_qa2}, {"full", c.full}};
}

QaCounters counters_from_json(const json& j) {
    QaCounters c;
    j.at("qa1").get_to(c.qa1);
    j.at("qa2").get_to(c.qa2);
    j.at("valid_qa1").get_to(c.valid_qa1);
    j.at("valid_qa2").get_to(c.valid_qa2);
    j.at("full").get_to(c.full);
    return c;
}

json class_map_json(const std::map<ClassId, int>& m) {
    json j = json::object();
    for (const auto& [c, n] : m) j[std::to_string(c)] = n;
    return j;
}

std::map<ClassId, int> class_map_from_json(const json& j) {
    std::map<ClassId, int> m;
    for (const auto& [k, v] : j.items()) m[std::stoi(k)] = v.get<int>();
    return m;
}

}  // namespace

json stage_report_to_json(const StageReport& r) {
    return json{{"stage", r.stage},
                {"budget", r.budget},
                {"answered", r.answered},
                {"pool_exhausted", r.pool_exhausted},
                {"pool_size", r.pool_size},
                {"graph_nodes", r.graph_nodes},
                {"counters", counters_json(r.counters)},
                {"totals", counters_json(r.totals)},
                {"stage_class_counts", class_map_json(r.stage_class_counts)},
                {"class_counts", class_map_json(r.class_counts)},
                {"eltr", r.eltr},
                {"nop_count", r.nop_count},
                {"train_positives", r.train_positives},
                {"train_negatives", r.train_negatives},
                {"metric", r.metric ? json(*r.metric) : json(nullptr)}};
}

StageReport stage_report_from_json(const json& j) {
    StageReport r;
    j.at("stage").get_to(r.stage);
    j.at("budget").get_to(r.budget);
    j.at("answered").get_to(r.answered);
    j.at("pool_exhausted").get_to(r.pool_exhausted);
    j.at("pool_size").get_to(r.pool_size);
    j.at("graph_nodes").get_to(r.graph_nodes);
    r.counters = counters_from_json(j.at("counters"));
    r.totals = counters_from_json(j.at("totals"));
    r.stage_class_counts = class_map_from_json(j.at("stage_class_counts"));
    r.class_counts = class_map_from_json(j.at("class_counts"));
    j.at("eltr").get_to(r.eltr);
    j.at("nop_count").get_to(r.nop_count);
    j.at("train_positives").get_to(r.train_positives);
    j.at("train_negatives").get_to(r.train_negatives);
    if (!j.at("metric").is_null()) r.metric = j.at("metric").get<double>();
    return r;
}

// ---------------------------------------------------------------------------
// Campaign

namespace {

// Drops a trailing partial line left behind by an interrupted write.
void truncate_partial_line(const fs::path& path) {
    if (!fs::exists(path)) return;
    std::ifstream in(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto last = text.rfind('\n');
    const std::size_t keep = last == std::string::npos ? 0 : last + 1;
    if (keep != text.size()) fs::resize_file(path, keep);
}

std::mt19937_64 keyed_rng(std::uint64_t seed, int stage, std::int64_t sequence) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stage), static_cast<std::uint32_t>(sequence),
                      0x5e1ec7u};
    return std::mt19937_64(seq);
}

// [first, last) range of records of one image in an id-sorted vector.
std::pair<std::size_t, std::size_t> image_range(const std::vector<DetectionRecord>& recs, int image) {
    auto lo = std::lower_bound(recs.begin(), recs.end(), SampleId{image, INT32_MIN},
                               [](const DetectionRecord& r, const SampleId& id) { return r.sample < id; });
    auto hi = std::lower_bound(recs.begin(), recs.end(), SampleId{image + 1, INT32_MIN},
                               [](const DetectionRecord& r, const SampleId& id) { return r.sample < id; });
    return {static_cast<std::size_t>(lo - recs.begin()), static_cast<std::size_t>(hi - recs.begin())};
}

}  // namespace

Campaign Campaign::open(const fs::path& dir) {
    Campaign c;
    c.dir_ = dir;
    c.manifest_ = io::read_json(dir / "manifest.json").get<CampaignManifest>();
    c.manifest_.validate();
    c.corpus_ = io::load_corpus(dir / c.manifest_.proposals, dir / c.manifest_.features,
                                dir / c.manifest_.ground_truth, c.manifest_.n_classes);
    if (c.manifest_.synthetic) {
        const auto loaded = c.corpus_.params;
        c.corpus_.params = *c.manifest_.synthetic;
        c.corpus_.params.n_images = loaded.n_images;
        c.corpus_.params.feature_dim = loaded.feature_dim;
        c.corpus_.params.n_classes = loaded.n_classes;
    }
    const auto log = dir / "events.jsonl";
    truncate_partial_line(log);
    auto events = read_event_log_file(log.string());
    c.replay_.assign(events.begin(), events.end());
    c.events_out_ = std::make_unique<std::ofstream>(log, std::ios::app | std::ios::binary);
    c.audit_out_ = std::make_unique<std::ofstream>(dir / "audit.jsonl", std::ios::app | std::ios::binary);
    if (!*c.events_out_) throw Error("io_error", "cannot append to " + log.string());
    c.init();
    return c;
}

Campaign Campaign::create(const fs::path& dir, const CampaignManifest& manifest) {
    manifest.validate();
    fs::create_directories(dir);
    io::write_json(dir / "manifest.json", json(manifest));
    return open(dir);
}

Campaign Campaign::in_memory(const CampaignManifest& manifest, SyntheticCorpus corpus,
                             std::vector<LabelEvent> replay) {
    manifest.validate();
    Campaign c;
    c.manifest_ = manifest;
    c.corpus_ = std::move(corpus);
    c.replay_.assign(replay.begin(), replay.end());
    c.init();
    return c;
}

void Campaign::init() {
    time_model_ = time_model(manifest_.profile);
    state_ = CampaignState(manifest_.seed);
    const int n_images = static_cast<int>(corpus_.proposals.size());
    if (!manifest_.fl_images.empty()) {
        for (int i : manifest_.fl_images) {
            if (i < 0 || i >= n_images) throw Error("invalid_manifest", "fl image " + std::to_string(i) + " out of range");
            fl_images_.insert(i);
        }
    } else if (manifest_.fl_count > 0) {
        if (manifest_.fl_count > n_images) throw Error("invalid_manifest", "fl_count exceeds the image count");
        std::vector<int> all(static_cast<std::size_t>(n_images));
        for (int i = 0; i < n_images; ++i) all[static_cast<std::size_t>(i)] = i;
        std::mt19937_64 rng(manifest_.seed);
        std::shuffle(all.begin(), all.end(), rng);
        fl_images_.insert(all.begin(), all.begin() + manifest_.fl_count);
    }
    if (manifest_.held_out) held_out_ = generate_corpus(*manifest_.held_out);
}

const StageConfig& Campaign::stage_config(int stage) const {
    if (stage < 1 || static_cast<std::size_t>(stage) > manifest_.stages.size())
        throw Error("no_stage_config", "manifest has no configuration for stage " + std::to_string(stage));
    return manifest_.stages[static_cast<std::size_t>(stage) - 1];
}

void Campaign::check_replay(const LabelEvent& expected) {
    const auto& head = replay_.front();
    if (!(head == expected))
        throw Error("log_mismatch", "logged event " + std::to_string(head.sequence) +
                                        " does not match the campaign's replayed step");
    replay_.pop_front();
}

void Campaign::append_event(const LabelEvent& ev) {
    if (!replay_.empty()) {
        check_replay(ev);
        return;
    }
    if (events_out_) {
        *events_out_ << event_to_json_line(ev) << '\n';
        events_out_->flush();
    }
    ++written_events_;
    if (event_limit_ && written_events_ >= *event_limit_) throw CampaignInterrupted();
}

StageReport Campaign::teach() {
    if (taught_) throw Error("invalid_state", "teach stage already ran");
    for (int image : fl_images_) {
        const auto& objs = corpus_.truth.objects(image);
        for (std::size_t o = 0; o < objs.size(); ++o) {
            LabelEvent ev;
            ev.sample = {image, static_cast<std::int32_t>(o)};
            ev.qa_type = QaType::Full;
            ev.answer = Answer::of_class(objs[o].cls);
            ev.stage = 0;
            ev.sequence = state_.next_sequence();
            ev.elapsed_cost_seconds = time_model_.t_fl;
            ev.box = objs[o].box;
            state_.append(ev);
            append_event(ev);
        }
    }
    taught_ = true;

    StageReport r;
    r.stage = 0;
    r.counters = state_.stage_counters(0);
    r.totals = state_.counters();
    r.class_counts = state_.class_counts();
    r.eltr = eltr_so_far();
    if (manifest_.surrogate_detector) {
        const StageConfig cfg = manifest_.stages.empty() ? StageConfig{} : manifest_.stages.front();
        const std::vector<int> fl(fl_images_.begin(), fl_images_.end());
        auto ts = full_label_training_set(corpus_, fl, cfg);
        r.train_positives = ts.positives.size();
        r.train_negatives = ts.negatives.size();
        refit(ts);
    }
    r.metric = evaluate();
    reports_.push_back(r);
    if (!dir_.empty()) io::write_json(dir_ / "reports" / "stage_0.json", stage_report_to_json(r));
    return r;
}

std::vector<DetectionRecord> Campaign::stage_detections(int stage) const {
    if (manifest_.surrogate_detector) {
        if (!detector_.fitted()) throw Error("invalid_state", "no detector fitted before stage " + std::to_string(stage));
        return infer(detector_, corpus_);
    }
    auto recs = io::read_scores(dir_ / manifest_.scores.at(static_cast<std::size_t>(stage) - 1));
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.sample < b.sample; });
    for (auto& r : recs) {
        if (r.dt.size() != static_cast<std::size_t>(n_classes()) + 1)
            throw Error("invalid_input", "score vector of " + to_string(r.sample) + " has the wrong length");
        r.ft = corpus_.feature(r.sample);
    }
    for (const auto& id : corpus_.ids)
        if (!std::binary_search(recs.begin(), recs.end(), id,
                                [](const auto& a, const auto& b) {
                                    if constexpr (std::is_same_v<std::decay_t<decltype(a)>, SampleId>)
                                        return a < b.sample;
                                    else
                                        return a.sample < b;
                                }))
            throw Error("missing_detection", "no detection record for proposal " + to_string(id));
    return recs;
}

void Campaign::start_stage(int stage) {
    if (!taught_) throw Error("invalid_state", "teach stage has not run");
    if (stage_open_) throw Error("invalid_state", "stage " + std::to_string(stage_) + " is still open");
    if (stage != stage_ + 1)
        throw Error("invalid_state", "stage " + std::to_string(stage) + " cannot follow stage " + std::to_string(stage_));
    const auto& cfg = stage_config(stage);
    state_.begin_stage(stage);
    stage_ = stage;

    detections_ = stage_detections(stage);
    std::vector<DetectionRecord> nodes;
    for (const auto& props : corpus_.proposals) {
        const auto [lo, hi] = image_range(detections_, props.image_index);
        std::span<const DetectionRecord> dets(detections_.data() + lo, hi - lo);
        std::vector<BoundingBox> boxes;
        for (const auto& d : dets) boxes.push_back(corpus_.box(d.sample));
        const auto kept = nms(dets, boxes, cfg.nms_overlap);
        for (const auto& d : dets) {
            const bool keep = std::binary_search(kept.begin(), kept.end(), d.sample) &&
                              max_object_score(d.dt) >= cfg.score_floor;
            if (keep || state_.is_asked(d.sample)) nodes.push_back(d);
        }
    }

    pool_.clear();
    std::vector<SampleId> labeled;
    for (const auto& n : nodes) {
        if (fl_images_.count(n.sample.image_index) || state_.is_asked(n.sample))
            labeled.push_back(n.sample);
        else
            pool_.push_back(n);
    }

    graph_ = KnnGraph{};
    ldist_.reset();
    if (nodes.size() >= 2) {
        const int k = std::min<int>(cfg.knn_k, static_cast<int>(nodes.size()) - 1);
        graph_ = build_knn_graph(nodes, k);
        ldist_ = compute_ldist(graph_, labeled);
    }
    answered_in_stage_ = 0;
    pending_.reset();
    stage_open_ = true;
}

CriticalnessBreakdown Campaign::choose(const StageConfig& cfg) {
    const LdistView view{ldist_ ? &graph_ : nullptr, ldist_ ? &*ldist_ : nullptr};
    if (!cfg.random_selection) return select_next(pool_, state_, view, cfg, n_classes());
    auto rng = keyed_rng(manifest_.seed, stage_, state_.next_sequence());
    std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
    const auto& rec = pool_[pick(rng)];
    return evaluate_criticalness(rec, state_, view.ldist_of(rec.sample), view.mean_ldist(), cfg, n_classes());
}

std::optional<Question> Campaign::next_question() {
    if (!stage_open_) return std::nullopt;
    const auto& cfg = stage_config(stage_);
    while (true) {
        if (!pending_) {
            if (answered_in_stage_ >= cfg.qa_budget || pool_.empty()) return std::nullopt;
            Question q;
            q.breakdown = choose(cfg);
            q.sequence = state_.next_sequence();
            q.stage = stage_;
            q.sample = q.breakdown.sample;
            q.box = corpus_.box(q.sample);
            pending_ = q;
        }
        if (replay_.empty()) return pending_;
        const auto& head = replay_.front();
        if (head.sequence != pending_->sequence || head.stage != stage_)
            throw Error("log_mismatch", "logged event " + std::to_string(head.sequence) +
                                            " does not belong to the pending question");
        submit(pending_->sequence, head.answer);
    }
}

void Campaign::submit(std::int64_t sequence, const Answer& answer) {
    if (!pending_) throw Error("no_question", "no question is outstanding");
    if (sequence != pending_->sequence)
        throw Error("stale_sequence", "sequence " + std::to_string(sequence) + " is not the outstanding question " +
                                          std::to_string(pending_->sequence));
    if (answer.kind == Answer::Kind::Class && answer.cls > n_classes())
        throw Error("invalid_answer", "class " + std::to_string(answer.cls) + " is out of range");
    const auto q = *pending_;
    const auto ev = record_answer(state_, q.breakdown, answer, time_model_, stage_);

    if (ldist_) {
        if (graph_.index_of(q.sample)) update_ldist_in_place(*ldist_, graph_, q.sample);
    }
    auto it = std::lower_bound(pool_.begin(), pool_.end(), q.sample,
                               [](const DetectionRecord& r, const SampleId& id) { return r.sample < id; });
    if (it != pool_.end() && it->sample == q.sample) pool_.erase(it);
    ++answered_in_stage_;
    last_breakdown_ = q.breakdown;
    pending_.reset();

    const bool live = replay_.empty();
    if (live && audit_out_) {
        json a = io::breakdown_to_json(q.breakdown);
        a["sequence"] = ev.sequence;
        a["stage"] = ev.stage;
        a["answer"] = to_string(ev.answer);
        *audit_out_ << a.dump() << '\n';
        audit_out_->flush();
    }
    append_event(ev);
}

TrainingSet Campaign::compose_training_set(const std::vector<DetectionRecord>& detections, int stage,
                                           std::size_t* nop_count) const {
    const auto& cfg = stage_config(stage);
    const std::vector<int> fl(fl_images_.begin(), fl_images_.end());
    TrainingSet ts = full_label_training_set(corpus_, fl, cfg);
    ts.stage = stage;

    std::map<int, std::vector<LabeledBox>> positives;
    std::vector<SampleId> answered_background;
    for (const auto& ev : state_.labels()) {
        if (ev.qa_type == QaType::Full) continue;
        if (auto c = ev.positive_class())
            positives[ev.sample.image_index].push_back({corpus_.box(ev.sample), *c});
        else if (ev.answer.kind == Answer::Kind::Background)
            answered_background.push_back(ev.sample);
    }
    std::size_t nops = 0;
    for (const auto& props : corpus_.proposals) {
        if (fl_images_.count(props.image_index)) continue;
        const auto [lo, hi] = image_range(detections, props.image_index);
        std::span<const DetectionRecord> dets(detections.data() + lo, hi - lo);
        const auto nop = extract_nop(props, dets, cfg.epsilon, cfg.tau);
        nops += nop.size();
        if (auto it = positives.find(props.image_index); it != positives.end()) {
            auto part = compose(it->second, props, nop, cfg);
            part.stage = stage;
            ts.merge(part);
        }
    }
    // Samples a human called background are negatives unless they overlap a
    // labeled positive of their image beyond th_hi.
    std::set<SampleId> taken(ts.negatives.begin(), ts.negatives.end());
    for (const auto& [id, _] : ts.positives) taken.insert(id);
    for (const auto& id : answered_background) {
        if (taken.count(id)) continue;
        double best = 0;
        if (auto it = positives.find(id.image_index); it != positives.end())
            for (const auto& lp : it->second) best = std::max(best, iou(corpus_.box(id), lp.box));
        if (best <= cfg.th_hi) ts.negatives.push_back(id);
    }
    std::sort(ts.negatives.begin(), ts.negatives.end());
    if (nop_count) *nop_count = nops;
    return ts;
}

void Campaign::refit(const TrainingSet& ts) { detector_ = fit_stage(ts, corpus_, n_classes()); }

std::optional<double> Campaign::evaluate() const {
    if (!held_out_ || !detector_.fitted()) return std::nullopt;
    return balanced_accuracy(detector_, *held_out_);
}

StageReport Campaign::finish_stage() {
    if (!stage_open_) throw Error("invalid_state", "no stage is open");
    if (!replay_.empty() && replay_.front().stage == stage_)
        throw Error("log_mismatch", "event log holds more events for stage " + std::to_string(stage_) +
                                        " than the stage produces");
    const auto& cfg = stage_config(stage_);
    StageReport r;
    r.stage = stage_;
    r.budget = cfg.qa_budget;
    r.answered = answered_in_stage_;
    r.pool_exhausted = answered_in_stage_ < cfg.qa_budget;
    r.pool_size = pool_.size();
    r.graph_nodes = graph_.size();
    r.counters = state_.stage_counters(stage_);
    r.totals = state_.counters();
    for (int c = 1; c <= n_classes(); ++c) {
        if (int n = state_.stage_class_count(stage_, c)) r.stage_class_counts[c] = n;
    }
    r.class_counts = state_.class_counts();
    r.eltr = eltr_so_far();

    auto ts = compose_training_set(detections_, stage_, &r.nop_count);
    r.train_positives = ts.positives.size();
    r.train_negatives = ts.negatives.size();
    if (manifest_.surrogate_detector) refit(ts);
    r.metric = evaluate();

    if (!dir_.empty()) {
        const auto name = "stage_" + std::to_string(stage_);
        io::write_json(dir_ / "reports" / (name + ".json"), stage_report_to_json(r));
        io::write_training_set(dir_ / "trainsets" / (name + ".jsonl"), ts);
    }
    stage_open_ = false;
    pending_.reset();
    reports_.push_back(r);
    return r;
}

StageReport Campaign::run_stage(int stage, const Answerer& answerer) {
    start_stage(stage);
    while (auto q = next_question()) submit(q->sequence, answerer(*q));
    return finish_stage();
}

std::vector<StageReport> Campaign::run(int n_stages, Answerer answerer) {
    if (!answerer) answerer = [this](const Question& q) { return simulated_answer(q); };
    std::vector<StageReport> out;
    if (!taught_) out.push_back(teach());
    if (stage_open_) {
        while (auto q = next_question()) submit(q->sequence, answerer(*q));
        out.push_back(finish_stage());
    }
    for (int s = stage_ + 1; s <= n_stages; ++s) out.push_back(run_stage(s, answerer));
    return out;
}

void Campaign::resume() {
    if (!taught_) teach();
    while (!replay_.empty()) {
        if (!stage_open_) start_stage(stage_ + 1);
        if (next_question()) return;
        finish_stage();
    }
}

void Campaign::set_stage_config(int stage, const StageConfig& cfg) {
    cfg.validate();
    if (stage < 1 || stage <= stage_) throw Error("invalid_state", "stage " + std::to_string(stage) + " already started");
    if (static_cast<std::size_t>(stage) > manifest_.stages.size() + 1)
        throw Error("no_stage_config", "stages must be configured in order");
    if (static_cast<std::size_t>(stage) == manifest_.stages.size() + 1)
        manifest_.stages.push_back(cfg);
    else
        manifest_.stages[static_cast<std::size_t>(stage) - 1] = cfg;
    if (!dir_.empty()) io::write_json(dir_ / "manifest.json", json(manifest_));
}

Answer Campaign::simulated_answer(const Question& q) const {
    SimulatedOracle oracle(corpus_.truth, NoiseModel{manifest_.psi, manifest_.seed});
    return oracle.answer(q.box, q.breakdown, q.stage, q.sequence);
}

DatasetStats Campaign::dataset_stats() const {
    DatasetStats s;
    for (const auto& props : corpus_.proposals) {
        const auto& objs = corpus_.truth.objects(props.image_index);
        std::set<ClassId> classes;
        for (const auto& o : objs) classes.insert(o.cls);
        s.objects.push_back(static_cast<int>(objs.size()));
        s.classes.push_back(static_cast<int>(classes.size()));
    }
    return s;
}

double Campaign::eltr_so_far() const {
    const auto& t = state_.counters();
    return eltr_cs(dataset_stats(), fl_images_, t.qa1, t.qa2, time_model_);
}

json Campaign::eltr_report(TimeProfile profile) const {
    const auto tm = time_model(profile);
    const auto stats = dataset_stats();
    const auto& t = state_.counters();
    return json{{"profile", to_string(profile)},
                {"eltr_fs", eltr_fs(static_cast<long>(fl_images_.size()), static_cast<long>(stats.n_images()))},
                {"eltr_ws", eltr_ws(stats, tm)},
                {"eltr_cs", eltr_cs(stats, fl_images_, t.qa1, t.qa2, tm)},
                {"qa1", t.qa1},
                {"qa2", t.qa2},
                {"valid_qa1", t.valid_qa1},
                {"valid_qa2", t.valid_qa2}};
}

json Campaign::progress_json() const {
    const auto& t = state_.counters();
    json j{{"stage", stage_},
           {"stage_open", stage_open_},
           {"class_counts", class_map_json(state_.class_counts())},
           {"qa1", t.qa1},
           {"qa2", t.qa2},
           {"valid_qa1", t.valid_qa1},
           {"valid_qa2", t.valid_qa2},
           {"eltr", eltr_so_far()},
           {"answered_in_stage", answered_in_stage_},
           {"pool_remaining", pool_.size()},
           {"last_breakdown", last_breakdown_ ? io::breakdown_to_json(*last_breakdown_) : json(nullptr)}};
    if (stage_open_) j["budget"] = stage_config(stage_).qa_budget;
    return j;
}

std::string Campaign::event_log_text() const {
    std::string out;
    for (const auto& ev : state_.labels()) out += event_to_json_line(ev) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

std::vector<CurveRow> report_curve(const std::vector<StageReport>& snapshots, const std::vector<double>& metrics) {
    if (snapshots.size() != metrics.size())
        throw Error("length_mismatch", "report_curve needs one metric value per snapshot");
    std::vector<CurveRow> rows;
    for (std::size_t i = 0; i < snapshots.size(); ++i) rows.push_back({snapshots[i].eltr, metrics[i], snapshots[i].stage});
    std::stable_sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) {
        if (a.eltr != b.eltr) return a.eltr < b.eltr;
        return a.stage < b.stage;
    });
    return rows;
}

std::string curve_to_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    os.precision(10);
    os << "eltr,metric,stage\n";
    for (const auto& r : rows) os << r.eltr << ',' << r.metric << ',' << r.stage << '\n';
    return os.str();
}

CampaignManifest init_synthetic_campaign(const fs::path& dir, const CorpusParams& params, int n_stages,
                                         int budget, int fl_count) {
    const auto corpus = generate_corpus(params);
    io::export_corpus(corpus, dir);
    CampaignManifest m;
    m.seed = params.seed;
    m.n_classes = params.n_classes;
    m.fl_count = fl_count;
    m.synthetic = params;
    CorpusParams held = params;
    held.seed = params.seed ^ 0x9e3779b97f4a7c15ULL;
    m.held_out = held;
    StageConfig cfg;
    cfg.qa_budget = budget;
    m.stages.assign(static_cast<std::size_t>(std::max(0, n_stages)), cfg);
    m.validate();
    io::write_json(dir / "manifest.json", json(m));
    return m;
}

}  // namespace critsup
