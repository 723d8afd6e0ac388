#include "critsup/oracle.hpp"

#include <random>

#include "critsup/geometry.hpp"

namespace critsup {

void GroundTruth::add(int image, const BoundingBox& box, ClassId cls) {
    if (cls < 1) throw Error("invalid_ground_truth", "ground-truth class must be >= 1");
    if (!box.valid()) throw Error("invalid_box", "degenerate ground-truth box");
    images_[image].push_back({box, cls});
}

const std::vector<GroundTruthObject>& GroundTruth::objects(int image) const {
    static const std::vector<GroundTruthObject> kNone;
    auto it = images_.find(image);
    return it == images_.end() ? kNone : it->second;
}

std::size_t GroundTruth::object_count() const {
    std::size_t n = 0;
    for (const auto& [_, objs] : images_) n += objs.size();
    return n;
}

void NoiseModel::validate() const {
    if (!(psi >= 0 && psi < kBaseThreshold))
        throw Error("invalid_argument", "psi must lie in [0, 0.6)");
}

double NoiseModel::draw_threshold(int stage, std::int64_t sequence) const {
    if (psi == 0) return kBaseThreshold;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stage), static_cast<std::uint32_t>(sequence),
                      static_cast<std::uint32_t>(sequence >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(kBaseThreshold - psi, kBaseThreshold + psi);
    return u(rng);
}

Answer answer_type1(const BoundingBox& box, int image, ClassId asked, const GroundTruth& truth,
                    double threshold) {
    for (const auto& obj : truth.objects(image))
        if (obj.cls == asked && iou(box, obj.box) >= threshold) return Answer::yes();
    return Answer::no();
}

Answer answer_type2(const BoundingBox& box, int image, const GroundTruth& truth, double threshold) {
    double best = -1;
    ClassId best_cls = kBackground;
    for (const auto& obj : truth.objects(image)) {
        const double v = iou(box, obj.box);
        if (v > best || (v == best && obj.cls < best_cls)) {
            best = v;
            best_cls = obj.cls;
        }
    }
    if (best_cls != kBackground && best >= threshold) return Answer::of_class(best_cls);
    return Answer::background();
}

SimulatedOracle::SimulatedOracle(const GroundTruth& truth, NoiseModel noise)
    : truth_(&truth), noise_(noise) {
    noise_.validate();
}

Answer SimulatedOracle::answer(const BoundingBox& box, const CriticalnessBreakdown& q, int stage,
                               std::int64_t sequence) const {
    const double t = noise_.draw_threshold(stage, sequence);
    const int image = q.sample.image_index;
    if (q.proposed_qa_type == QaType::Type1)
        return answer_type1(box, image, q.proposed_class, *truth_, t);
    return answer_type2(box, image, *truth_, t);
}

LabelEvent record_answer(CampaignState& state, const CriticalnessBreakdown& b, const Answer& answer,
                         const TimeModel& tm, int stage) {
    if (state.is_asked(b.sample))
        throw Error("already_labeled", "sample " + to_string(b.sample) + " is already labeled");
    LabelEvent ev;
    ev.sample = b.sample;
    ev.qa_type = b.proposed_qa_type;
    ev.answer = answer;
    ev.stage = stage;
    ev.sequence = state.next_sequence();
    switch (b.proposed_qa_type) {
        case QaType::Type1:
            if (answer.kind != Answer::Kind::Yes && answer.kind != Answer::Kind::No)
                throw Error("invalid_answer", "type-1 questions take YES or NO");
            ev.asked_class = b.proposed_class;
            ev.elapsed_cost_seconds = tm.t_qa1;
            break;
        case QaType::Type2:
            if (answer.kind != Answer::Kind::Class && answer.kind != Answer::Kind::Background)
                throw Error("invalid_answer", "type-2 questions take CLASS(c) or BACKGROUND");
            ev.elapsed_cost_seconds = tm.t_qa2;
            break;
        case QaType::Full:
            throw Error("invalid_argument", "record_answer handles QA events only");
    }
    state.append(ev);
    return ev;
}

}  // namespace critsup
