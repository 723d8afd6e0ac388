#include "critsup/types.hpp"

#include <cstdio>
#include <sstream>

namespace critsup {

BoundingBox BoundingBox::make(double x_min, double y_min, double x_max, double y_max) {
    BoundingBox b{x_min, y_min, x_max, y_max};
    if (!b.valid()) {
        std::ostringstream os;
        os << "degenerate box (" << x_min << ", " << y_min << ", " << x_max << ", " << y_max << ")";
        throw Error("invalid_box", os.str());
    }
    return b;
}

std::string to_string(const SampleId& id) {
    return "(" + std::to_string(id.image_index) + ", " + std::to_string(id.proposal_index) + ")";
}

double max_object_score(const std::vector<double>& dt) {
    double best = 0;
    for (std::size_t c = 1; c < dt.size(); ++c) best = std::max(best, dt[c]);
    return best;
}

ClassId argmax_object_class(const std::vector<double>& dt) {
    ClassId best = dt.size() > 1 ? 1 : kBackground;
    for (std::size_t c = 2; c < dt.size(); ++c)
        if (dt[c] > dt[best]) best = static_cast<ClassId>(c);
    return best;
}

std::string to_string(QaType t) {
    switch (t) {
        case QaType::Type1: return "TYPE1";
        case QaType::Type2: return "TYPE2";
        case QaType::Full: return "FULL";
    }
    return "?";
}

QaType qa_type_from_string(const std::string& s) {
    if (s == "TYPE1") return QaType::Type1;
    if (s == "TYPE2") return QaType::Type2;
    if (s == "FULL") return QaType::Full;
    throw Error("invalid_qa_type", "unknown qa_type '" + s + "'");
}

std::string to_string(const Answer& a) {
    switch (a.kind) {
        case Answer::Kind::Yes: return "YES";
        case Answer::Kind::No: return "NO";
        case Answer::Kind::Background: return "BACKGROUND";
        case Answer::Kind::Class: return "CLASS(" + std::to_string(a.cls) + ")";
    }
    return "?";
}

Answer answer_from_string(const std::string& s) {
    if (s == "YES") return Answer::yes();
    if (s == "NO") return Answer::no();
    if (s == "BACKGROUND") return Answer::background();
    int c = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "CLASS(%d%c", &c, &tail) == 2 && tail == ')' &&
        s == "CLASS(" + std::to_string(c) + ")") {
        if (c < 1) throw Error("invalid_answer", "class answer must name an object class: " + s);
        return Answer::of_class(c);
    }
    throw Error("invalid_answer", "unknown answer '" + s + "'");
}

std::optional<ClassId> LabelEvent::positive_class() const {
    switch (answer.kind) {
        case Answer::Kind::Yes:
            return asked_class;
        case Answer::Kind::Class:
            return answer.cls;
        default:
            return std::nullopt;
    }
}

void StageConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error("invalid_config", what); };
    if (qa_budget < 0) fail("qa_budget must be non-negative");
    if (!(0 <= th_lo && th_lo < th_hi && th_hi < th_fg && th_fg <= 1))
        fail("thresholds must satisfy 0 <= th_lo < th_hi < th_fg <= 1");
    if (!(0 < tau && tau < 1)) fail("tau must lie in (0, 1)");
    if (!(0 < epsilon && epsilon < 1)) fail("epsilon must lie in (0, 1)");
    if (knn_k < 1) fail("knn_k must be >= 1");
    if (!(0 < nms_overlap && nms_overlap < 1)) fail("nms_overlap must lie in (0, 1)");
    for (const auto* p : {&bal1, &rep, &hard})
        if (!(p->sigma2 > 0)) fail("progress sigma2 must be positive");
    if (bal2 && !(bal2->sigma2 > 0)) fail("progress sigma2 must be positive");
    if (disjoint_negative_cap < 0) fail("disjoint_negative_cap must be non-negative");
}

ProgressParams StageConfig::bal2_params(int n_classes) const {
    if (bal2) return *bal2;
    return {static_cast<double>(qa_budget) / std::max(1, n_classes), 1.0};
}

}  // namespace critsup
