#include "critsup/sim_detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace critsup {

std::vector<double> zipf_weights(int n_classes) {
    std::vector<double> w;
    for (int c = 1; c <= n_classes; ++c) w.push_back(1.0 / c);
    return w;
}

std::size_t SyntheticCorpus::index_of(const SampleId& id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) throw Error("unknown_sample", "sample " + to_string(id) + " not in corpus");
    return static_cast<std::size_t>(it - ids.begin());
}

const BoundingBox& SyntheticCorpus::box(const SampleId& id) const {
    const auto& p = proposals.at(static_cast<std::size_t>(id.image_index));
    return p.boxes.at(static_cast<std::size_t>(id.proposal_index));
}

namespace {

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double sd) { return std::normal_distribution<double>(0.0, sd)(rng_); }
    std::size_t categorical(const std::vector<double>& w) {
        return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng_);
    }

    BoundingBox random_box(double img_w, double img_h, double min_side, double max_side) {
        const double w = uniform(min_side, max_side);
        const double h = std::min(img_h - 1, w * uniform(0.5, 2.0));
        const double x = uniform(0, img_w - w);
        const double y = uniform(0, img_h - h);
        return {x, y, x + w, y + h};
    }

    BoundingBox jitter(const BoundingBox& b, double img_w, double img_h) {
        const double s = uniform(0.0, 0.35);
        const double sw = s * b.width(), sh = s * b.height();
        BoundingBox j{b.x_min + normal(sw), b.y_min + normal(sh), b.x_max + normal(sw),
                      b.y_max + normal(sh)};
        j.x_min = std::clamp(j.x_min, 0.0, img_w - 4);
        j.y_min = std::clamp(j.y_min, 0.0, img_h - 4);
        j.x_max = std::clamp(j.x_max, j.x_min + 4, img_w);
        j.y_max = std::clamp(j.y_max, j.y_min + 4, img_h);
        return j;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace

SyntheticCorpus generate_corpus(const CorpusParams& params) {
    if (params.n_classes < 2) throw Error("invalid_argument", "synthetic corpus needs n_classes >= 2");
    if (params.n_images < 1 || params.objects_per_image < 0 || params.clutter_level < 0 ||
        params.feature_dim < 1)
        throw Error("invalid_argument", "synthetic corpus sizes must be positive");
    std::vector<double> weights = params.class_weights;
    if (weights.empty()) weights.assign(static_cast<std::size_t>(params.n_classes), 1.0);
    if (weights.size() != static_cast<std::size_t>(params.n_classes) ||
        std::any_of(weights.begin(), weights.end(), [](double w) { return !(w >= 0); }) ||
        std::accumulate(weights.begin(), weights.end(), 0.0) <= 0)
        throw Error("invalid_argument", "class_weights must hold n_classes non-negative values");

    SyntheticCorpus corpus;
    corpus.params = params;
    Sampler rng(params.seed);
    const auto dim = static_cast<std::size_t>(params.feature_dim);

    corpus.centroids.assign(static_cast<std::size_t>(params.n_classes) + 1, std::vector<float>(dim));
    Sampler world(params.world_seed);
    for (auto& c : corpus.centroids)
        for (auto& v : c) v = static_cast<float>(world.normal(params.separation));

    auto instance = [&](std::size_t cls) {
        std::vector<double> f(dim);
        for (std::size_t d = 0; d < dim; ++d) f[d] = corpus.centroids[cls][d] + rng.normal(params.spread);
        return f;
    };

    const double W = params.image_width, H = params.image_height;
    for (int i = 0; i < params.n_images; ++i) {
        std::vector<BoundingBox> objects;
        std::vector<std::vector<double>> object_features;
        for (int o = 0; o < params.objects_per_image; ++o) {
            const auto cls = static_cast<ClassId>(rng.categorical(weights)) + 1;
            const auto box = rng.random_box(W, H, 40, 200);
            corpus.truth.add(i, box, cls);
            objects.push_back(box);
            object_features.push_back(instance(static_cast<std::size_t>(cls)));
        }

        std::vector<BoundingBox> boxes;
        if (params.clutter_level == 0) {
            boxes = objects;
        } else {
            for (const auto& ob : objects)
                for (int l = 0; l < params.clutter_level; ++l) boxes.push_back(rng.jitter(ob, W, H));
            for (int l = 0; l < 2 * params.clutter_level; ++l) boxes.push_back(rng.random_box(W, H, 30, 250));
        }

        for (std::size_t j = 0; j < boxes.size(); ++j) {
            double q = 0;
            std::size_t best = 0;
            for (std::size_t o = 0; o < objects.size(); ++o) {
                const double v = iou(boxes[j], objects[o]);
                if (v > q) {
                    q = v;
                    best = o;
                }
            }
            const auto bg = instance(0);
            std::vector<float> f(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                const double obj = q > 0 ? object_features[best][d] : 0.0;
                f[d] = static_cast<float>(q * obj + (1 - q) * bg[d]);
            }
            corpus.ids.push_back({i, static_cast<std::int32_t>(j)});
            corpus.features.push_back(std::move(f));
        }
        corpus.proposals.push_back(ProposalSet::from_boxes(i, std::move(boxes)));
    }
    return corpus;
}

std::vector<double> StageDetector::logits(const std::vector<float>& ft) const {
    std::vector<double> out(weights.size());
    const std::size_t dim = mean.size();
    for (std::size_t c = 0; c < weights.size(); ++c) {
        double z = weights[c][dim];
        for (std::size_t d = 0; d < dim; ++d) z += weights[c][d] * ((ft[d] - mean[d]) / scale[d]);
        out[c] = z / temperature;
    }
    return out;
}

std::vector<double> StageDetector::scores(const std::vector<float>& ft) const {
    auto z = logits(ft);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (auto& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
}

StageDetector fit_stage(const TrainingSet& training, const SyntheticCorpus& corpus, int n_classes,
                        const FitOptions& opts) {
    if (training.positives.empty())
        throw Error("invalid_training_set", "training set has no positive samples");

    std::map<SampleId, ClassId> label;
    for (const auto& id : training.negatives) label[id] = kBackground;
    for (const auto& [id, cls] : training.positives) {
        if (cls < 1 || cls > n_classes) throw Error("invalid_training_set", "positive class out of range");
        label[id] = cls;
    }
    std::vector<int> per_class(static_cast<std::size_t>(n_classes) + 1, 0);
    for (const auto& [_, c] : label) ++per_class[static_cast<std::size_t>(c)];
    const auto present = std::count_if(per_class.begin(), per_class.end(), [](int n) { return n > 0; });
    if (present < 2)
        throw Error("invalid_training_set", "training set needs at least two distinct labels");

    const std::size_t n = label.size();
    const std::size_t dim = static_cast<std::size_t>(corpus.params.feature_dim);
    const std::size_t K = static_cast<std::size_t>(n_classes) + 1;

    StageDetector det;
    det.n_classes = n_classes;
    det.mean.assign(dim, 0.0);
    det.scale.assign(dim, 0.0);

    std::vector<const std::vector<float>*> xs;
    std::vector<std::size_t> ys;
    std::vector<double> sample_weight;
    for (const auto& [id, c] : label) {
        xs.push_back(&corpus.feature(id));
        ys.push_back(static_cast<std::size_t>(c));
        sample_weight.push_back(double(n) / (double(present) * per_class[static_cast<std::size_t>(c)]));
    }
    for (const auto* x : xs)
        for (std::size_t d = 0; d < dim; ++d) det.mean[d] += (*x)[d];
    for (auto& m : det.mean) m /= double(n);
    for (const auto* x : xs)
        for (std::size_t d = 0; d < dim; ++d) det.scale[d] += ((*x)[d] - det.mean[d]) * ((*x)[d] - det.mean[d]);
    for (auto& s : det.scale) s = std::sqrt(s / double(n)) + 1e-9;

    std::vector<std::vector<double>> z(n, std::vector<double>(dim + 1, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) z[i][d] = ((*xs[i])[d] - det.mean[d]) / det.scale[d];
    const double wsum = std::accumulate(sample_weight.begin(), sample_weight.end(), 0.0);

    det.weights.assign(K, std::vector<double>(dim + 1, 0.0));
    std::vector<std::vector<double>> grad(K, std::vector<double>(dim + 1));
    std::vector<double> p(K);
    for (int it = 0; it < opts.iterations; ++it) {
        for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -1e300;
            for (std::size_t c = 0; c < K; ++c) {
                double v = 0;
                for (std::size_t d = 0; d <= dim; ++d) v += det.weights[c][d] * z[i][d];
                p[c] = v;
                mx = std::max(mx, v);
            }
            double sum = 0;
            for (auto& v : p) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (std::size_t c = 0; c < K; ++c) {
                const double err = sample_weight[i] * (p[c] / sum - (c == ys[i] ? 1.0 : 0.0));
                for (std::size_t d = 0; d <= dim; ++d) grad[c][d] += err * z[i][d];
            }
        }
        for (std::size_t c = 0; c < K; ++c)
            for (std::size_t d = 0; d <= dim; ++d) {
                const double reg = d < dim ? opts.l2 * det.weights[c][d] : 0.0;
                det.weights[c][d] -= opts.learning_rate * (grad[c][d] / wsum + reg);
            }
    }
    return det;
}

std::vector<DetectionRecord> infer(const StageDetector& detector, const SyntheticCorpus& corpus) {
    if (!detector.fitted()) throw Error("invalid_argument", "detector is not fitted");
    std::vector<DetectionRecord> out(corpus.n_samples());
    const auto n = static_cast<std::int64_t>(corpus.n_samples());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k].sample = corpus.ids[k];
        out[k].dt = detector.scores(corpus.features[k]);
        out[k].ft = corpus.features[k];
    }
    return out;
}

TrainingSet full_label_training_set(const SyntheticCorpus& corpus, std::span<const int> images,
                                    const StageConfig& cfg) {
    TrainingSet ts;
    for (int i : images) {
        const auto& objs = corpus.truth.objects(i);
        const auto& props = corpus.proposals.at(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < props.size(); ++j) {
            double best = 0;
            ClassId cls = kBackground;
            for (const auto& o : objs) {
                const double v = iou(props.boxes[j], o.box);
                if (v > best) {
                    best = v;
                    cls = o.cls;
                }
            }
            if (best >= cfg.th_fg)
                ts.positives.emplace_back(props.ids[j], cls);
            else if (best <= cfg.th_hi)
                ts.negatives.push_back(props.ids[j]);
        }
    }
    return ts;
}

double balanced_accuracy(const StageDetector& detector, const SyntheticCorpus& test) {
    const std::size_t K = static_cast<std::size_t>(detector.n_classes) + 1;
    std::vector<int> total(K, 0), correct(K, 0);
    for (const auto& props : test.proposals) {
        const auto& objs = test.truth.objects(props.image_index);
        for (std::size_t j = 0; j < props.size(); ++j) {
            double best = 0;
            ClassId cls = kBackground;
            for (const auto& o : objs) {
                const double v = iou(props.boxes[j], o.box);
                if (v > best) {
                    best = v;
                    cls = o.cls;
                }
            }
            if (best > 0.4 && best < 0.6) continue;
            const ClassId truth = best >= 0.6 ? cls : kBackground;
            if (static_cast<std::size_t>(truth) >= K) continue;
            const auto s = detector.scores(test.feature(props.ids[j]));
            const auto pred = static_cast<ClassId>(std::max_element(s.begin(), s.end()) - s.begin());
            ++total[static_cast<std::size_t>(truth)];
            if (pred == truth) ++correct[static_cast<std::size_t>(truth)];
        }
    }
    double acc = 0;
    int classes = 0;
    for (std::size_t c = 0; c < K; ++c) {
        if (total[c] == 0) continue;
        acc += double(correct[c]) / total[c];
        ++classes;
    }
    return classes ? acc / classes : 0.0;
}

}  // namespace critsup
