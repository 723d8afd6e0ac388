#include "critsup/service.hpp"

#include "critsup/io.hpp"
#include "httplib.h"
#include "json.hpp"

namespace critsup {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", code}, {"message", message}}.dump(), kJson);
}

int status_for(const Error& e) {
    const auto& c = e.code();
    if (c == "unknown_campaign") return 404;
    if (c == "invalid_answer" || c == "invalid_request" || c == "invalid_config") return 400;
    if (c == "stale_sequence" || c == "no_question" || c == "already_labeled" || c == "invalid_state" ||
        c == "no_stage_config")
        return 409;
    return 500;
}

json answer_summary(const Campaign& c) {
    const auto& t = c.state().counters();
    return json{{"qa1", t.qa1},
                {"qa2", t.qa2},
                {"valid_qa1", t.valid_qa1},
                {"valid_qa2", t.valid_qa2},
                {"eltr_so_far", c.eltr_so_far()},
                {"stage", c.current_stage()}};
}

Answer parse_answer(const json& j) {
    if (j.is_string()) return answer_from_string(j.get<std::string>());
    if (j.is_number_integer()) {
        const int c = j.get<int>();
        if (c == kBackground) return Answer::background();
        if (c > 0) return Answer::of_class(c);
    }
    throw Error("invalid_answer", "answer must be YES, NO, BACKGROUND or CLASS(c)");
}

}  // namespace

QaService::QaService() : server_(std::make_unique<httplib::Server>()) { routes(); }

QaService::~QaService() { stop(); }

std::string QaService::add_campaign(const std::filesystem::path& dir, std::string id) {
    auto c = Campaign::open(dir);
    if (c.manifest().mode != CampaignMode::Live)
        throw Error("not_live", dir.string() + " is not a LIVE campaign");
    if (id.empty()) id = std::filesystem::absolute(dir).lexically_normal().filename().string();
    return add_campaign(std::move(id), std::move(c));
}

std::string QaService::add_campaign(std::string id, Campaign campaign) {
    auto slot = std::make_unique<Slot>();
    campaign.resume();
    if (!campaign.stage_open() && static_cast<std::size_t>(campaign.current_stage()) < campaign.manifest().stages.size())
        campaign.start_stage(campaign.current_stage() + 1);
    slot->campaign = std::make_unique<Campaign>(std::move(campaign));
    publish(*slot);
    std::lock_guard lock(registry_mutex_);
    if (campaigns_.count(id)) throw Error("duplicate_campaign", "campaign '" + id + "' already registered");
    campaigns_.emplace(id, std::move(slot));
    return id;
}

QaService::Slot& QaService::find(const std::string& id) {
    std::lock_guard lock(registry_mutex_);
    auto it = campaigns_.find(id);
    if (it == campaigns_.end()) throw Error("unknown_campaign", "no campaign '" + id + "'");
    return *it->second;
}

void QaService::publish(Slot& slot) {
    auto snap = std::make_shared<const std::string>(slot.campaign->progress_json().dump());
    std::atomic_store(&slot.progress, std::move(snap));
}

void QaService::routes() {
    auto& srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Expose-Headers", "X-Stage-Summary"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    auto guarded = [](auto handler) {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const Error& e) {
                send_error(res, status_for(e), e.code(), e.what());
            } catch (const json::exception& e) {
                send_error(res, 400, "invalid_request", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        };
    };

    srv.Get(R"(/campaign/([^/]+)/next-question)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto& slot = find(req.matches[1]);
        std::lock_guard lock(slot.mutex);
        auto& c = *slot.campaign;
        if (req.has_param("sequence")) {
            std::int64_t seq = 0;
            try {
                seq = std::stoll(req.get_param_value("sequence"));
            } catch (const std::exception&) {
                throw Error("invalid_request", "sequence must be an integer");
            }
            for (const auto& ev : c.state().labels())
                if (ev.sequence == seq) throw Error("stale_sequence", "sequence " + std::to_string(seq) + " already answered");
        }
        std::optional<Question> q;
        if (c.stage_open()) {
            q = c.next_question();
            if (!q) {
                slot.finished = c.finish_stage();
                publish(slot);
            }
        }
        if (q) {
            res.set_content(question_to_json(*q, c.n_classes(), c.manifest().image_root).dump(), kJson);
            return;
        }
        json summary = slot.finished ? stage_report_to_json(*slot.finished)
                       : c.reports().empty() ? json(nullptr)
                                             : stage_report_to_json(c.reports().back());
        res.status = 204;
        res.set_header("X-Stage-Summary", summary.dump());
    }));

    srv.Post(R"(/campaign/([^/]+)/answer)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto& slot = find(req.matches[1]);
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            throw Error("invalid_request", "body is not JSON");
        }
        if (!body.is_object() || !body.contains("sequence") || !body.contains("answer") ||
            !body["sequence"].is_number_integer())
            throw Error("invalid_request", "body needs integer 'sequence' and 'answer'");
        const Answer answer = parse_answer(body["answer"]);
        std::lock_guard lock(slot.mutex);
        auto& c = *slot.campaign;
        c.submit(body["sequence"].get<std::int64_t>(), answer);
        if (c.stage_open()) c.next_question();
        publish(slot);
        res.set_content(answer_summary(c).dump(), kJson);
    }));

    srv.Get(R"(/campaign/([^/]+)/progress)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto& slot = find(req.matches[1]);
        auto snap = std::atomic_load(&slot.progress);
        res.set_content(*snap, kJson);
    }));

    srv.Post(R"(/campaign/([^/]+)/stage)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto& slot = find(req.matches[1]);
        std::lock_guard lock(slot.mutex);
        auto& c = *slot.campaign;
        if (c.stage_open()) throw Error("invalid_state", "stage " + std::to_string(c.current_stage()) + " is still open");
        const int next = c.current_stage() + 1;
        if (!req.body.empty()) {
            const auto body = json::parse(req.body);
            if (body.contains("budget")) {
                StageConfig cfg = c.manifest().stages.empty() ? StageConfig{} : c.manifest().stages.back();
                if (static_cast<std::size_t>(next) <= c.manifest().stages.size())
                    cfg = c.manifest().stages[static_cast<std::size_t>(next) - 1];
                cfg.qa_budget = body["budget"].get<int>();
                c.set_stage_config(next, cfg);
            }
        }
        c.start_stage(next);
        slot.finished.reset();
        c.next_question();
        publish(slot);
        res.set_content(c.progress_json().dump(), kJson);
    }));
}

int QaService::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    if (!server_->bind_to_port(host, port)) throw Error("io_error", "cannot bind port " + std::to_string(port));
    return port;
}

void QaService::listen() { server_->listen_after_bind(); }

void QaService::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

}  // namespace critsup
