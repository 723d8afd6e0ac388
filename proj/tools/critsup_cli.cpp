// critsup: command-line driver for labeling campaigns.

#include <csignal>
#include <iostream>
#include <regex>

#include "CLI11.hpp"
#include "critsup/io.hpp"
#include "critsup/json_codec.hpp"
#include "critsup/pipeline.hpp"
#include "critsup/service.hpp"
#include "json.hpp"

using namespace critsup;
using nlohmann::json;

namespace {

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<StageReport> load_reports(const fs::path& dir) {
    std::vector<StageReport> out;
    const auto rdir = dir / "reports";
    if (!fs::exists(rdir)) return out;
    static const std::regex name(R"(stage_(\d+)\.json)");
    for (const auto& entry : fs::directory_iterator(rdir)) {
        const auto file = entry.path().filename().string();
        if (std::regex_match(file, name)) out.push_back(stage_report_from_json(io::read_json(entry.path())));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.stage < b.stage; });
    return out;
}

std::string write_curve(const fs::path& dir) {
    std::vector<StageReport> snaps;
    std::vector<double> metrics;
    for (const auto& r : load_reports(dir)) {
        if (!r.metric) continue;
        snaps.push_back(r);
        metrics.push_back(*r.metric);
    }
    const auto csv = curve_to_csv(report_curve(snaps, metrics));
    std::ofstream(dir / "curve.csv") << csv;
    return csv;
}

QaService* g_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Critically supervised annotation campaigns"};
    app.require_subcommand(1);

    fs::path dir;
    auto add_dir = [&](CLI::App* sub) { sub->add_option("--dir", dir, "campaign directory")->required(); };

    // init
    auto* init = app.add_subcommand("init", "create a campaign directory and manifest");
    add_dir(init);
    CorpusParams params;
    bool synthetic = false, live = false, zipf = false;
    int n_stages = 3, budget = 100, fl_count = 10;
    std::string proposals, features, ground_truth, profile = "hq";
    std::vector<std::string> scores;
    std::vector<int> fl_images;
    int n_classes = 0;
    double psi = 0;
    std::uint64_t seed = 1;
    init->add_flag("--synthetic", synthetic, "generate a synthetic corpus into the directory");
    init->add_option("--seed", seed, "root seed");
    init->add_option("--images", params.n_images, "synthetic image count");
    init->add_option("--classes", params.n_classes, "synthetic class count");
    init->add_option("--objects-per-image", params.objects_per_image);
    init->add_option("--clutter", params.clutter_level);
    init->add_option("--feature-dim", params.feature_dim);
    init->add_option("--separation", params.separation);
    init->add_option("--spread", params.spread);
    init->add_option("--world-seed", params.world_seed);
    init->add_flag("--zipf", zipf, "imbalanced (1/rank) class frequencies");
    init->add_option("--stages", n_stages, "number of observe-ask stages to configure");
    init->add_option("--budget", budget, "QA budget per stage");
    init->add_option("--fl-count", fl_count, "fully labeled images drawn with the seed");
    init->add_option("--fl-images", fl_images, "explicit fully labeled image indices");
    init->add_option("--proposals", proposals);
    init->add_option("--features", features);
    init->add_option("--ground-truth", ground_truth);
    init->add_option("--scores", scores, "detector outputs per observe-ask stage");
    init->add_option("--n-classes", n_classes);
    init->add_option("--psi", psi, "oracle threshold noise");
    init->add_option("--profile", profile)->check(CLI::IsMember({"hq", "mq"}, CLI::ignore_case));
    init->add_flag("--live", live, "answers come from the HTTP service");

    // stage
    auto* stage = app.add_subcommand("stage", "run one observe-ask stage with the simulated oracle");
    add_dir(stage);
    std::optional<int> stage_budget;
    stage->add_option("--budget", stage_budget, "QA budget of the stage");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run the full synthetic campaign");
    add_dir(simulate);
    int sim_stages = 0;
    simulate->add_option("--stages", sim_stages, "observe-ask stages to run")->required();

    // eltr
    auto* eltr = app.add_subcommand("eltr", "labeling-time ratios of the campaign so far");
    add_dir(eltr);
    std::string eltr_profile = "hq";
    eltr->add_option("--profile", eltr_profile)->check(CLI::IsMember({"hq", "mq"}, CLI::ignore_case));

    // report
    auto* report = app.add_subcommand("report", "write curve.csv (eltr, metric, stage) from stage reports");
    add_dir(report);

    // serve
    auto* serve = app.add_subcommand("serve", "serve LIVE campaigns over HTTP");
    std::vector<fs::path> serve_dirs;
    int port = 8080;
    std::string host = "0.0.0.0";
    serve->add_option("--dir", serve_dirs, "campaign directory (repeatable); id = directory name")->required();
    serve->add_option("--port", port);
    serve->add_option("--host", host);

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) {
            CampaignManifest m;
            if (synthetic) {
                params.seed = seed;
                if (zipf) params.class_weights = zipf_weights(params.n_classes);
                m = init_synthetic_campaign(dir, params, n_stages, budget, fl_count);
            } else {
                if (proposals.empty() || features.empty() || n_classes < 1)
                    throw Error("invalid_argument", "init needs --synthetic or --proposals, --features and --n-classes");
                m.seed = seed;
                m.n_classes = n_classes;
                m.proposals = proposals;
                m.features = features;
                m.ground_truth = ground_truth;
                m.scores = scores;
                m.surrogate_detector = scores.empty();
                m.fl_count = fl_count;
                StageConfig cfg;
                cfg.qa_budget = budget;
                m.stages.assign(static_cast<std::size_t>(n_stages), cfg);
            }
            m.fl_images = fl_images;
            m.psi = psi;
            m.profile = time_profile_from_string(profile);
            m.mode = live ? CampaignMode::Live : CampaignMode::Simulated;
            m.validate();
            fs::create_directories(dir);
            io::write_json(dir / "manifest.json", json(m));
            Campaign::open(dir);  // checks that the data files load
            print(json(m));
        } else if (stage->parsed()) {
            auto c = Campaign::open(dir);
            if (c.manifest().mode == CampaignMode::Live)
                throw Error("live_mode", "LIVE campaigns are answered through `serve`");
            c.resume();
            StageReport r;
            if (c.stage_open()) {
                r = c.run(c.current_stage()).back();
            } else {
                const int next = c.current_stage() + 1;
                if (stage_budget) {
                    const auto& st = c.manifest().stages;
                    StageConfig cfg = static_cast<std::size_t>(next) <= st.size() ? st[static_cast<std::size_t>(next) - 1]
                                      : st.empty()                                ? StageConfig{}
                                                                                  : st.back();
                    cfg.qa_budget = *stage_budget;
                    c.set_stage_config(next, cfg);
                }
                r = c.run_stage(next, [&](const Question& q) { return c.simulated_answer(q); });
            }
            write_curve(dir);
            print(stage_report_to_json(r));
        } else if (simulate->parsed()) {
            auto c = Campaign::open(dir);
            c.resume();
            json out = json::array();
            for (const auto& r : c.run(sim_stages)) out.push_back(stage_report_to_json(r));
            write_curve(dir);
            print(out);
        } else if (eltr->parsed()) {
            auto c = Campaign::open(dir);
            c.resume();
            print(c.eltr_report(time_profile_from_string(eltr_profile)));
        } else if (report->parsed()) {
            std::cout << write_curve(dir);
        } else if (serve->parsed()) {
            QaService service;
            for (const auto& d : serve_dirs) std::cerr << "campaign " << service.add_campaign(d) << " loaded\n";
            const int bound = service.bind(host, port);
            std::cerr << "listening on " << host << ':' << bound << '\n';
            g_service = &service;
            std::signal(SIGINT, [](int) {
                if (g_service) g_service->stop();
            });
            std::signal(SIGTERM, [](int) {
                if (g_service) g_service->stop();
            });
            service.listen();
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}
