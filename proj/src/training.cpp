#include "ciatr/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ciatr/core.hpp"
#include "ciatr/fourier.hpp"
#include "ciatr/spatial.hpp"

namespace ciatr {

namespace {

constexpr std::uint64_t kMaskTag = 0x6D61736Bull;     // "mask"
constexpr std::uint64_t kTransformTag = 0x73706174ull;  // "spat"
constexpr std::uint64_t kInitTag = 0x696E6974ull;     // "init"
constexpr std::uint64_t kAugTag = 0x61756700ull;
constexpr std::uint64_t kShuffleTag = 0x73687566ull;

int infer_num_classes(const std::vector<LabeledImage>& data) {
    int c = 0;
    for (const LabeledImage& item : data) {
        if (item.label < 0) throw ConfigError("negative class label in dataset");
        c = std::max(c, item.label + 1);
    }
    return std::max(c, 2);
}

int argmax_lowest(const Vec& v) {
    int best = 0;
    for (int k = 1; k < v.size(); ++k) {
        if (v[k] > v[best]) best = k;
    }
    return best;
}

}  // namespace

AugmentStages augment_stages(const Grid& image, SeedStream rng, const AugmentConfig& cfg) {
    const int h = static_cast<int>(image.rows());
    const int w = static_cast<int>(image.cols());
    const MaskSpec mask = sample_mask_spec(h, w, derive_stream(rng, kMaskTag), cfg);
    const TransformSpec tf = sample_transform_spec(derive_stream(rng, kTransformTag), cfg);
    AugmentStages stages;
    stages.original = image;
    stages.spectrum = fft2(image);
    stages.masked_spectrum = rfm(stages.spectrum, mask);
    stages.intermediate = ifft2(stages.masked_spectrum).real();
    stages.final = normalize_minmax(rst(stages.intermediate, tf));
    return stages;
}

LabeledImage augment_sample(const LabeledImage& x, SeedStream rng,
                            const AugmentConfig& cfg) {
    if (!cfg.enabled) {
        throw ConfigError("augment_sample called with augmentation disabled");
    }
    return LabeledImage{augment_stages(x.image, rng, cfg).final, x.label, x.ic};
}

std::vector<LabeledImage> build_augmented_set(const std::vector<LabeledImage>& dtr,
                                              int epoch, SeedStream root,
                                              const AugmentConfig& cfg) {
    if (!cfg.enabled) {
        return dtr;
    }
    const std::uint64_t effective_epoch = cfg.fixed ? 0 : static_cast<std::uint64_t>(epoch);
    std::vector<LabeledImage> out;
    out.reserve(2 * dtr.size());
    for (std::size_t i = 0; i < dtr.size(); ++i) {
        out.push_back(dtr[i]);
        out.push_back(augment_sample(dtr[i], derive_sample_seed(root, effective_epoch, i), cfg));
    }
    return out;
}

double loss_ce(const std::vector<Vec>& logits, const std::vector<int>& labels,
               std::vector<Vec>* d_logits) {
    if (logits.empty() || logits.size() != labels.size()) {
        throw ShapeError("loss_ce: batch size mismatch");
    }
    const double inv_n = 1.0 / static_cast<double>(logits.size());
    double loss = 0.0;
    if (d_logits != nullptr) d_logits->assign(logits.size(), Vec());
    for (std::size_t s = 0; s < logits.size(); ++s) {
        const Vec& z = logits[s];
        const int y = labels[s];
        if (y < 0 || y >= z.size()) throw ShapeError("loss_ce: label out of range");
        const double zmax = z.maxCoeff();
        const Vec shifted = z.array() - zmax;
        const Vec ex = shifted.array().exp();
        const double denom = ex.sum();
        loss += -(shifted[y] - std::log(denom));
        if (d_logits != nullptr) {
            Vec g = ex / denom;  // softmax
            g[y] -= 1.0;
            (*d_logits)[s] = inv_n * g;
        }
    }
    return loss * inv_n;
}

TripletResult loss_d(const std::vector<FeatureBundle>& bundles,
                     const std::vector<int>& labels, double margin,
                     std::vector<BundleGrad>* grads) {
    if (bundles.size() != labels.size()) {
        throw ShapeError("loss_d: batch size mismatch");
    }
    const int n = static_cast<int>(bundles.size());
    TripletResult res;
    if (n < 3) return res;

    // pairwise hm, symmetric
    Mat hm_val = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            hm_val(i, j) = hm_val(j, i) = hm(bundles[i], bundles[j]).hm;
        }
    }

    struct ActiveTriplet {
        int a, p, neg;
    };
    std::vector<ActiveTriplet> active;
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int p = 0; p < n; ++p) {
            if (p == a || labels[p] != labels[a]) continue;
            for (int neg = 0; neg < n; ++neg) {
                if (labels[neg] == labels[a]) continue;
                const double t = margin - hm_val(a, p) + hm_val(a, neg);
                if (t > 0.0) {
                    sum += t;
                    active.push_back({a, p, neg});
                }
            }
        }
    }
    if (active.empty()) {
        return res;
    }
    res.num_active = static_cast<long>(active.size());
    res.value = sum / static_cast<double>(active.size());

    if (grads != nullptr) {
        if (grads->size() != bundles.size()) {
            grads->clear();
            for (const FeatureBundle& b : bundles) grads->push_back(zero_bundle_grad(b));
        }
        const double inv = 1.0 / static_cast<double>(active.size());
        Mat coeff = Mat::Zero(n, n);  // upper-triangular accumulation per unordered pair
        for (const ActiveTriplet& t : active) {
            coeff(std::min(t.a, t.p), std::max(t.a, t.p)) -= inv;
            coeff(std::min(t.a, t.neg), std::max(t.a, t.neg)) += inv;
        }
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (coeff(i, j) != 0.0) {
                    hm_backward(bundles[i], bundles[j], coeff(i, j), (*grads)[i], (*grads)[j]);
                }
            }
        }
    }
    return res;
}

TrainResult train(const std::vector<LabeledImage>& dtr, const TrainConfig& cfg,
                  const AugmentConfig& acfg) {
    validate(cfg);
    validate(acfg);
    if (dtr.empty()) {
        throw ConfigError("training set is empty");
    }
    const int h = static_cast<int>(dtr[0].image.rows());
    const int w = static_cast<int>(dtr[0].image.cols());
    const int num_classes = infer_num_classes(dtr);

    AugmentConfig aug = acfg;
    aug.enabled = acfg.enabled && cfg.augment_on;

    const SeedStream root{cfg.seed, 0};
    TrainResult result;
    result.params = init_params(derive_stream(root, kInitTag), h, w, num_classes);
    GradientBundle velocity = zero_gradients(result.params);
    const SeedStream aug_root = derive_stream(root, kAugTag);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<LabeledImage> data = build_augmented_set(dtr, epoch, aug_root, aug);
        auto shuffle_rng = make_rng(derive_sample_seed(derive_stream(root, kShuffleTag),
                                                       static_cast<std::uint64_t>(epoch), 0));
        // With augmentation on, shuffle (original, copy) pairs as blocks so each
        // batch keeps the condition-variant of every anchor available as a
        // positive; otherwise shuffle items directly.
        std::vector<int> order;
        if (aug.enabled) {
            std::vector<int> pairs(data.size() / 2);
            std::iota(pairs.begin(), pairs.end(), 0);
            std::shuffle(pairs.begin(), pairs.end(), shuffle_rng);
            order.reserve(data.size());
            for (int p : pairs) {
                order.push_back(2 * p);
                order.push_back(2 * p + 1);
            }
        } else {
            order.resize(data.size());
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), shuffle_rng);
        }

        double ep_ce = 0.0;
        double ep_ld = 0.0;
        long ep_active = 0;
        long correct = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const int bs = static_cast<int>(end - start);

            std::vector<ForwardTrace> traces(bs);
            std::vector<FeatureBundle> bundles(bs);
            std::vector<Vec> logits(bs);
            std::vector<int> labels(bs);
            for (int b = 0; b < bs; ++b) {
                const LabeledImage& item = data[order[start + b]];
                bundles[b] = forward(result.params, item.image, traces[b]);
                logits[b] = bundles[b].logits;
                labels[b] = item.label;
                if (argmax_lowest(logits[b]) == item.label) ++correct;
            }

            std::vector<Vec> d_logits;
            const double batch_ce = loss_ce(logits, labels, &d_logits);

            std::vector<BundleGrad> d_features;
            TripletResult trip;
            if (cfg.ld_on) {
                for (const FeatureBundle& b : bundles) {
                    d_features.push_back(zero_bundle_grad(b));
                }
                trip = loss_d(bundles, labels, cfg.margin, &d_features);
            }
            const double batch_total = batch_ce + cfg.lambda_d * trip.value;
            if (!std::isfinite(batch_total)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(start / cfg.batch_size) +
                                   " (L_ce=" + std::to_string(batch_ce) +
                                   ", L_d=" + std::to_string(trip.value) + ")");
            }

            std::vector<FeatureGrad> upstream(bs);
            for (int b = 0; b < bs; ++b) {
                upstream[b].d_logits = d_logits[b];
                if (cfg.ld_on && cfg.lambda_d != 0.0) {
                    upstream[b].d_feature_vector = cfg.lambda_d * d_features[b].d_vec;
                    upstream[b].d_feature_map.reserve(d_features[b].d_map.size());
                    for (const Grid& g : d_features[b].d_map) {
                        upstream[b].d_feature_map.push_back(cfg.lambda_d * g);
                    }
                }
            }
            const GradientBundle grads = backward(result.params, traces, upstream);
            sgd_step(result.params, grads, cfg.lr, cfg.momentum, velocity);

            ep_ce += batch_ce * bs;
            ep_ld += trip.value * bs;
            ep_active += trip.num_active;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss.l_ce = ep_ce / static_cast<double>(data.size());
        stats.loss.l_d = ep_ld / static_cast<double>(data.size());
        stats.loss.total = stats.loss.l_ce + cfg.lambda_d * stats.loss.l_d;
        stats.loss.num_active_triplets = ep_active;
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(data.size());
        result.history.push_back(stats);
    }
    return result;
}

EvalReport evaluate(const ModelParams& params, const std::vector<LabeledImage>& test) {
    if (test.empty()) {
        throw ConfigError("evaluation set is empty");
    }
    const int C = params.num_classes;
    EvalReport report;
    report.confusion = Eigen::MatrixXi::Zero(C, C);
    for (const LabeledImage& item : test) {
        if (item.label < 0 || item.label >= C) {
            throw ShapeError("test label " + std::to_string(item.label) +
                             " outside model classes");
        }
        const FeatureBundle out = forward(params, item.image);
        report.confusion(item.label, argmax_lowest(out.logits)) += 1;
    }
    report.per_class.resize(C, 0.0);
    long correct = 0;
    for (int k = 0; k < C; ++k) {
        const long row_total = report.confusion.row(k).sum();
        if (row_total > 0) {
            report.per_class[k] =
                static_cast<double>(report.confusion(k, k)) / static_cast<double>(row_total);
        }
        correct += report.confusion(k, k);
    }
    report.overall = static_cast<double>(correct) / static_cast<double>(test.size());
    return report;
}

}  // namespace ciatr
