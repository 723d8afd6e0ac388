#pragma once

// HTTP facade over live campaigns.
//
//   GET  /campaign/:id/next-question[?sequence=n]
//   POST /campaign/:id/answer        {"sequence": n, "answer": "YES" | "NO" | "BACKGROUND" | "CLASS(c)"}
//   GET  /campaign/:id/progress
//   POST /campaign/:id/stage         {"budget": n}   (optional body) opens the next stage
//
// A finished stage answers next-question with 204 and the stage report in
// the X-Stage-Summary header.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "critsup/pipeline.hpp"

namespace httplib {
class Server;
}

namespace critsup {

class QaService {
public:
    QaService();
    ~QaService();
    QaService(const QaService&) = delete;
    QaService& operator=(const QaService&) = delete;

    /// Opens the campaign directory, replays its log and opens the next
    /// configured stage if none is in progress. Returns the campaign id.
    std::string add_campaign(const std::filesystem::path& dir, std::string id = {});
    /// Registers an already constructed campaign.
    std::string add_campaign(std::string id, Campaign campaign);

    /// Runs `fn` on the campaign under its writer lock; throws
    /// Error("unknown_campaign").
    template <class F>
    auto with_campaign(const std::string& id, F&& fn) {
        auto& slot = find(id);
        std::lock_guard lock(slot.mutex);
        return fn(*slot.campaign);
    }

    httplib::Server& server() { return *server_; }
    /// Binds and returns the port (0 picks a free one).
    int bind(const std::string& host, int port);
    /// Blocking accept loop on a bound server.
    void listen();
    void stop();

private:
    struct Slot {
        std::mutex mutex;
        std::unique_ptr<Campaign> campaign;
        std::optional<StageReport> finished;
        std::shared_ptr<const std::string> progress;
    };

    Slot& find(const std::string& id);
    void publish(Slot& slot);
    void routes();

    std::mutex registry_mutex_;
    std::map<std::string, std::unique_ptr<Slot>> campaigns_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace critsup
