#include "critsup/json_codec.hpp"

namespace critsup {

using nlohmann::json;

void to_json(json& j, const SampleId& id) {
    j = json{{"image_index", id.image_index}, {"proposal_index", id.proposal_index}};
}

void from_json(const json& j, SampleId& id) {
    j.at("image_index").get_to(id.image_index);
    j.at("proposal_index").get_to(id.proposal_index);
}

void to_json(json& j, const BoundingBox& b) { j = json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

void from_json(const json& j, BoundingBox& b) {
    if (!j.is_array() || j.size() != 4) throw Error("invalid_box", "box must be a 4-element array");
    b = BoundingBox::make(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                          j[3].get<double>());
}

void to_json(json& j, const LabelEvent& ev) {
    j = json{{"sample", ev.sample},
             {"qa_type", to_string(ev.qa_type)},
             {"asked_class", ev.asked_class ? json(*ev.asked_class) : json(nullptr)},
             {"answer", to_string(ev.answer)},
             {"stage", ev.stage},
             {"sequence", ev.sequence},
             {"elapsed_cost_seconds", ev.elapsed_cost_seconds}};
    if (ev.box) j["box"] = *ev.box;
}

void from_json(const json& j, LabelEvent& ev) {
    j.at("sample").get_to(ev.sample);
    ev.qa_type = qa_type_from_string(j.at("qa_type").get<std::string>());
    const auto& asked = j.at("asked_class");
    ev.asked_class = asked.is_null() ? std::nullopt : std::optional<ClassId>(asked.get<ClassId>());
    ev.answer = answer_from_string(j.at("answer").get<std::string>());
    j.at("stage").get_to(ev.stage);
    j.at("sequence").get_to(ev.sequence);
    j.at("elapsed_cost_seconds").get_to(ev.elapsed_cost_seconds);
    if (auto it = j.find("box"); it != j.end() && !it->is_null())
        ev.box = it->get<BoundingBox>();
    else
        ev.box.reset();
}

void to_json(json& j, const ProgressParams& p) { j = json{{"mu", p.mu}, {"sigma2", p.sigma2}}; }

void from_json(const json& j, ProgressParams& p) {
    j.at("mu").get_to(p.mu);
    j.at("sigma2").get_to(p.sigma2);
}

void to_json(json& j, const StageConfig& c) {
    j = json{{"qa_budget", c.qa_budget},
             {"bal1", c.bal1},
             {"bal2", c.bal2 ? json(*c.bal2) : json(nullptr)},
             {"rep", c.rep},
             {"hard", c.hard},
             {"delta", c.delta},
             {"knn_k", c.knn_k},
             {"score_floor", c.score_floor},
             {"nms_overlap", c.nms_overlap},
             {"tau", c.tau},
             {"epsilon", c.epsilon},
             {"th_fg", c.th_fg},
             {"th_hi", c.th_hi},
             {"th_lo", c.th_lo},
             {"disjoint_negative_cap", c.disjoint_negative_cap},
             {"enable_bal1", c.enable_bal1},
             {"enable_bal2", c.enable_bal2},
             {"enable_rep", c.enable_rep},
             {"enable_hard", c.enable_hard},
             {"hard_literal_sign", c.hard_literal_sign},
             {"random_selection", c.random_selection}};
}

void from_json(const json& j, StageConfig& c) {
    auto opt = [&](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end()) it->get_to(field);
    };
    opt("qa_budget", c.qa_budget);
    opt("bal1", c.bal1);
    if (auto it = j.find("bal2"); it != j.end()) {
        if (it->is_null())
            c.bal2.reset();
        else
            c.bal2 = it->get<ProgressParams>();
    }
    opt("rep", c.rep);
    opt("hard", c.hard);
    opt("delta", c.delta);
    opt("knn_k", c.knn_k);
    opt("score_floor", c.score_floor);
    opt("nms_overlap", c.nms_overlap);
    opt("tau", c.tau);
    opt("epsilon", c.epsilon);
    opt("th_fg", c.th_fg);
    opt("th_hi", c.th_hi);
    opt("th_lo", c.th_lo);
    opt("disjoint_negative_cap", c.disjoint_negative_cap);
    opt("enable_bal1", c.enable_bal1);
    opt("enable_bal2", c.enable_bal2);
    opt("enable_rep", c.enable_rep);
    opt("enable_hard", c.enable_hard);
    opt("hard_literal_sign", c.hard_literal_sign);
    opt("random_selection", c.random_selection);
}

}  // namespace critsup
