#include "critsup/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "critsup/json_codec.hpp"

namespace critsup::io {

using nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, mode);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    return out;
}

fs::path default_sidecar(const fs::path& bin, fs::path sidecar) {
    if (!sidecar.empty()) return sidecar;
    auto p = bin;
    p.replace_extension(".json");
    return p;
}

template <class F>
auto parse_guard(const fs::path& path, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error("invalid_input", path.string() + ": " + e.what());
    }
}

}  // namespace

json read_json(const fs::path& path) {
    auto in = open_in(path);
    return parse_guard(path, [&] { return json::parse(in); });
}

void write_json(const fs::path& path, const json& j) {
    auto tmp = path;
    tmp += ".tmp";
    {
        auto out = open_out(tmp);
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

std::vector<ProposalSet> read_proposals(const fs::path& path) {
    const auto j = read_json(path);
    return parse_guard(path, [&] {
        std::vector<ProposalSet> out;
        for (const auto& img : j)
            out.push_back(ProposalSet::from_boxes(img.at("image_index").get<int>(),
                                                  img.at("boxes").get<std::vector<BoundingBox>>()));
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.image_index < b.image_index; });
        return out;
    });
}

void write_proposals(const fs::path& path, const std::vector<ProposalSet>& proposals) {
    json j = json::array();
    for (const auto& p : proposals) j.push_back({{"image_index", p.image_index}, {"boxes", p.boxes}});
    write_json(path, j);
}

FeatureTable read_features(const fs::path& bin, fs::path sidecar) {
    sidecar = default_sidecar(bin, sidecar);
    const auto meta = read_json(sidecar);
    FeatureTable t;
    std::size_t n = 0;
    parse_guard(sidecar, [&] {
        n = meta.at("n_samples").get<std::size_t>();
        t.dim = meta.at("dim").get<std::size_t>();
        t.ids = meta.at("sample_ids").get<std::vector<SampleId>>();
        return 0;
    });
    if (t.ids.size() != n) throw Error("invalid_input", sidecar.string() + ": sample_ids length != n_samples");

    auto in = open_in(bin, std::ios::binary);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() != n * t.dim * 4)
        throw Error("invalid_input", bin.string() + ": expected " + std::to_string(n * t.dim * 4) +
                                         " bytes, found " + std::to_string(raw.size()));
    t.rows.assign(n, std::vector<float>(t.dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < t.dim; ++d) {
            std::uint32_t bits;
            std::memcpy(&bits, raw.data() + (i * t.dim + d) * 4, 4);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
            t.rows[i][d] = std::bit_cast<float>(bits);
        }
    return t;
}

void write_features(const fs::path& bin, const FeatureTable& table, fs::path sidecar) {
    sidecar = default_sidecar(bin, sidecar);
    auto out = open_out(bin, std::ios::binary);
    for (const auto& row : table.rows) {
        if (row.size() != table.dim) throw Error("invalid_input", "feature row has wrong dimension");
        for (float v : row) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
            char buf[4];
            std::memcpy(buf, &bits, 4);
            out.write(buf, 4);
        }
    }
    write_json(sidecar, json{{"n_samples", table.ids.size()}, {"dim", table.dim}, {"sample_ids", table.ids}});
}

std::vector<DetectionRecord> read_scores(const fs::path& path) {
    auto in = open_in(path);
    std::vector<DetectionRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        parse_guard(path, [&] {
            const auto j = json::parse(line);
            DetectionRecord r;
            r.sample = j.at("sample_id").get<SampleId>();
            r.dt = j.at("dt").get<std::vector<double>>();
            out.push_back(std::move(r));
            return 0;
        });
    }
    return out;
}

void write_scores(const fs::path& path, const std::vector<DetectionRecord>& records) {
    auto out = open_out(path);
    for (const auto& r : records) out << json{{"sample_id", r.sample}, {"dt", r.dt}}.dump() << '\n';
}

GroundTruth read_ground_truth(const fs::path& path) {
    const auto j = read_json(path);
    return parse_guard(path, [&] {
        GroundTruth gt;
        for (const auto& img : j) {
            const int image = img.at("image_index").get<int>();
            for (const auto& o : img.at("objects"))
                gt.add(image, o.at("box").get<BoundingBox>(), o.at("class").get<ClassId>());
        }
        return gt;
    });
}

void write_ground_truth(const fs::path& path, const GroundTruth& truth) {
    json j = json::array();
    for (const auto& [image, objs] : truth.images()) {
        json list = json::array();
        for (const auto& o : objs) list.push_back({{"box", o.box}, {"class", o.cls}});
        j.push_back({{"image_index", image}, {"objects", list}});
    }
    write_json(path, j);
}

void write_training_set(const fs::path& path, const TrainingSet& ts) {
    auto out = open_out(path);
    for (const auto& [id, cls] : ts.positives)
        out << json{{"sample_id", id}, {"role", "pos"}, {"class", cls}}.dump() << '\n';
    for (const auto& id : ts.negatives)
        out << json{{"sample_id", id}, {"role", "neg"}, {"class", kBackground}}.dump() << '\n';
}

TrainingSet read_training_set(const fs::path& path) {
    auto in = open_in(path);
    TrainingSet ts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        parse_guard(path, [&] {
            const auto j = json::parse(line);
            const auto id = j.at("sample_id").get<SampleId>();
            const auto role = j.at("role").get<std::string>();
            if (role == "pos")
                ts.positives.emplace_back(id, j.at("class").get<ClassId>());
            else if (role == "neg")
                ts.negatives.push_back(id);
            else
                throw Error("invalid_input", "unknown training-set role '" + role + "'");
            return 0;
        });
    }
    return ts;
}

json breakdown_to_json(const CriticalnessBreakdown& b) {
    return json{{"sample", b.sample},       {"c_bal", b.c_bal},
                {"c_rep", b.c_rep},         {"c_hard", b.c_hard},
                {"cp_bal", b.cp_bal},       {"cp_rep", b.cp_rep},
                {"cp_hard", b.cp_hard},     {"total", b.total},
                {"proposed_qa_type", to_string(b.proposed_qa_type)},
                {"proposed_class", b.proposed_class}};
}

SyntheticCorpus load_corpus(const fs::path& proposals, const fs::path& features,
                            const fs::path& ground_truth, int n_classes) {
    SyntheticCorpus c;
    c.proposals = read_proposals(proposals);
    for (std::size_t i = 0; i < c.proposals.size(); ++i)
        if (c.proposals[i].image_index != static_cast<int>(i))
            throw Error("invalid_input", "proposal images must be numbered 0..n-1 without gaps");
    auto table = read_features(features);
    std::vector<std::size_t> order(table.ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return table.ids[a] < table.ids[b]; });
    for (auto i : order) {
        c.ids.push_back(table.ids[i]);
        c.features.push_back(std::move(table.rows[i]));
    }
    for (const auto& p : c.proposals)
        for (const auto& id : p.ids)
            if (!std::binary_search(c.ids.begin(), c.ids.end(), id))
                throw Error("invalid_input", "no feature row for proposal " + to_string(id));
    if (!ground_truth.empty()) c.truth = read_ground_truth(ground_truth);
    c.params.n_classes = n_classes;
    c.params.n_images = static_cast<int>(c.proposals.size());
    c.params.feature_dim = static_cast<int>(table.dim);
    return c;
}

void export_corpus(const SyntheticCorpus& corpus, const fs::path& dir) {
    fs::create_directories(dir);
    write_proposals(dir / "proposals.json", corpus.proposals);
    FeatureTable t;
    t.ids = corpus.ids;
    t.rows = corpus.features;
    t.dim = static_cast<std::size_t>(corpus.params.feature_dim);
    write_features(dir / "features.bin", t);
    write_ground_truth(dir / "ground_truth.json", corpus.truth);
}

}  // namespace critsup::io
