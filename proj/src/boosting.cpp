#include "facecheck/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

namespace facecheck {

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_real(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || tok.empty())
        throw ParseError("malformed real number '" + tok + "'");
    return v;
}

StageResponse strong_response(const Stage& stage, const std::vector<double>& feature_values) {
    double score = 0.0;
    for (std::size_t j = 0; j < stage.weaks.size(); ++j)
        score += stage.weaks[j].alpha * stage.weaks[j].respond(feature_values[j]);
    return {score, score >= stage.stage_threshold ? +1 : -1};
}

StageResponse strong_response(const Stage& stage, const Cascade& c, const IntegralImage& ii,
                              const WindowPlacement& p, bool normalize) {
    double score = 0.0;
    for (const WeakClassifier& w : stage.weaks) {
        const double v = eval_feature(c.features[w.feature_index], ii, p, c.base_window, normalize);
        score += w.alpha * w.respond(v);
    }
    return {score, score >= stage.stage_threshold ? +1 : -1};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BestStump {
    double error = kInf;
    int feature_index = -1;
    double theta = 0.0;
    int polarity = +1;
};

// True when `a` beats `b` under the deterministic tie-break order.
bool better(const BestStump& a, const BestStump& b) {
    if (a.error != b.error) return a.error < b.error;
    if (a.feature_index != b.feature_index) return a.feature_index < b.feature_index;
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.polarity > b.polarity;  // +1 preferred
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

BestStump scan_feature_range(const std::vector<TrainSample>& samples,
                             const std::vector<double>& weights,
                             const std::vector<HaarFeature>& features, int begin, int end,
                             bool normalize) {
    const std::size_t n = samples.size();
    const int base = samples.front().ii.width();
    std::vector<std::pair<double, std::size_t>> order(n);  // (value, sample index)
    BestStump best;
    for (int fi = begin; fi < end; ++fi) {
        for (std::size_t i = 0; i < n; ++i)
            order[i] = {eval_feature(features[fi], samples[i].ii, {0, 0, 1.0}, base, normalize),
                        i};
        std::sort(order.begin(), order.end());
        double total_pos = 0.0, total_neg = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            (samples[i].label > 0 ? total_pos : total_neg) += weights[i];

        // pos_below/neg_below track weights of samples with value < theta.
        const auto consider = [&](double theta, double pos_below, double neg_below) {
            // s=+1 predicts -1 below theta, +1 at or above.
            const double err_pos = std::max(0.0, pos_below + (total_neg - neg_below));
            const double err_neg = std::max(0.0, neg_below + (total_pos - pos_below));
            BestStump cand{err_pos, fi, theta, +1};
            if (better(cand, best)) best = cand;
            cand = {err_neg, fi, theta, -1};
            if (better(cand, best)) best = cand;
        };

        consider(-kInf, 0.0, 0.0);
        double pos_below = 0.0, neg_below = 0.0;
        std::size_t i = 0;
        while (i < n) {
            const double v = order[i].first;
            while (i < n && order[i].first == v) {
                const std::size_t si = order[i].second;
                (samples[si].label > 0 ? pos_below : neg_below) += weights[si];
                ++i;
            }
            if (i < n) consider((v + order[i].first) / 2.0, pos_below, neg_below);
        }
        consider(kInf, total_pos, total_neg);
    }
    return best;
}

void require_both_classes(const std::vector<TrainSample>& samples) {
    bool has_pos = false, has_neg = false;
    for (const TrainSample& s : samples) (s.label > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw TrainingError("degenerate training set: both classes required");
}

}  // namespace

StumpSearchResult train_weak(const std::vector<TrainSample>& samples,
                             const std::vector<double>& weights,
                             const std::vector<HaarFeature>& features, const BoostOptions& opt) {
    if (samples.empty() || samples.size() != weights.size())
        throw TrainingError("samples and weights must be nonempty and matched");
    require_both_classes(samples);

    const int nf = static_cast<int>(features.size());
    const int workers = std::min(resolve_workers(opt.num_workers), nf);
    std::vector<BestStump> partial(workers);
    std::vector<std::thread> threads;
    const int chunk = (nf + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const int begin = t * chunk;
        const int end = std::min(nf, begin + chunk);
        threads.emplace_back([&, t, begin, end] {
            partial[t] = scan_feature_range(samples, weights, features, begin, end,
                                            opt.normalize);
        });
    }
    for (auto& th : threads) th.join();

    BestStump best = partial[0];
    for (int t = 1; t < workers; ++t)
        if (better(partial[t], best)) best = partial[t];

    StumpSearchResult out;
    out.weak.feature_index = best.feature_index;
    out.weak.theta = best.theta;
    out.weak.polarity = best.polarity;
    out.weighted_error = best.error;
    return out;
}

Stage adaboost(const std::vector<TrainSample>& samples, int rounds,
               const std::vector<HaarFeature>& features, const BoostOptions& opt,
               BoostTrace* trace) {
    if (rounds < 1) throw TrainingError("adaboost requires at least one round");
    require_both_classes(samples);
    const std::size_t n = samples.size();
    const int base = samples.front().ii.width();
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));

    Stage stage;
    for (int t = 0; t < rounds; ++t) {
        StumpSearchResult r = train_weak(samples, weights, features, opt);
        const double eps = r.weighted_error;
        if (eps >= 0.5)
            throw TrainingError("adaboost stalled: weighted error " + format_real(eps) +
                                " reached 0.5");
        const double eps_c = std::clamp(eps, 1e-10, 1.0 - 1e-10);
        const double alpha = 0.5 * std::log((1.0 - eps_c) / eps_c);
        r.weak.alpha = alpha;
        stage.weaks.push_back(r.weak);
        if (trace) trace->round_errors.push_back(eps);
        if (eps == 0.0) break;

        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = eval_feature(features[r.weak.feature_index], samples[i].ii,
                                          {0, 0, 1.0}, base, opt.normalize);
            const int h = r.weak.respond(v);
            weights[i] *= std::exp(-alpha * samples[i].label * h);
            wsum += weights[i];
        }
        for (double& w : weights) w /= wsum;
        if (trace)
            trace->weight_sums.push_back(
                std::accumulate(weights.begin(), weights.end(), 0.0));
    }
    return stage;
}

double calibrate_stage_threshold(std::vector<double> positive_scores, double detection_rate) {
    if (positive_scores.empty())
        throw TrainingError("cannot calibrate a stage threshold with no positives");
    std::sort(positive_scores.begin(), positive_scores.end(), std::greater<>());
    const std::size_t n = positive_scores.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(detection_rate * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    return positive_scores[k - 1];
}

Cascade train_cascade(const std::vector<TrainSample>& positives,
                      const std::vector<TrainSample>& negative_pool,
                      const CascadeTrainOptions& opt, CascadeTrainReport* report) {
    if (opt.schedule.empty()) throw TrainingError("empty cascade schedule");
    if (positives.empty() || negative_pool.empty())
        throw TrainingError("cascade training needs positives and a negative pool");

    Cascade c;
    c.base_window = positives.front().ii.width();
    c.features = enumerate_features(c.base_window);
    BoostOptions bopt{opt.normalize, opt.num_workers};

    std::vector<std::size_t> survivors(negative_pool.size());
    std::iota(survivors.begin(), survivors.end(), 0);

    for (std::size_t si = 0; si < opt.schedule.size(); ++si) {
        if (survivors.empty()) {
            if (report) report->negatives_exhausted = true;
            break;
        }
        std::vector<TrainSample> batch = positives;
        for (std::size_t ni : survivors) batch.push_back(negative_pool[ni]);
        if (opt.verbose)
            std::cerr << "stage " << si + 1 << ": " << positives.size() << " positives, "
                      << survivors.size() << " negatives, " << opt.schedule[si]
                      << " weak classifiers\n";

        Stage stage = adaboost(batch, opt.schedule[si], c.features, bopt);

        std::vector<double> pos_scores;
        pos_scores.reserve(positives.size());
        for (const TrainSample& s : positives)
            pos_scores.push_back(strong_response(stage, c, s.ii, {0, 0, 1.0}, opt.normalize).score);
        stage.stage_threshold = calibrate_stage_threshold(pos_scores, opt.detection_rate);

        std::vector<std::size_t> next;
        for (std::size_t ni : survivors) {
            const auto r = strong_response(stage, c, negative_pool[ni].ii, {0, 0, 1.0},
                                           opt.normalize);
            if (r.decision > 0) next.push_back(ni);
        }
        const double fpr =
            static_cast<double>(next.size()) / static_cast<double>(survivors.size());
        if (report) {
            report->stage_fpr.push_back(fpr);
            report->negatives_used.push_back(static_cast<int>(survivors.size()));
        }
        if (opt.verbose && fpr > opt.max_stage_fpr)
            std::cerr << "stage " << si + 1 << ": false-positive rate " << fpr
                      << " above target " << opt.max_stage_fpr << "\n";
        c.stages.push_back(std::move(stage));
        survivors = std::move(next);
    }
    if (report && survivors.empty()) report->negatives_exhausted = true;
    return c;
}

ClassifyResult classify_window(const Cascade& c, const IntegralImage& ii,
                               const WindowPlacement& p, bool normalize,
                               CascadeCounters* counters) {
    if (counters && counters->evaluated.size() != c.stages.size()) {
        counters->evaluated.assign(c.stages.size(), 0);
        counters->rejected.assign(c.stages.size(), 0);
    }
    if (counters) ++counters->windows;
    ClassifyResult out;
    out.accepted = true;
    for (std::size_t i = 0; i < c.stages.size(); ++i) {
        if (counters) ++counters->evaluated[i];
        const auto r = strong_response(c.stages[i], c, ii, p, normalize);
        out.stages_evaluated = static_cast<int>(i) + 1;
        out.last_score = r.score;
        out.last_margin = r.score - c.stages[i].stage_threshold;
        if (r.decision < 0) {
            if (counters) ++counters->rejected[i];
            out.accepted = false;
            return out;
        }
    }
    if (counters) ++counters->accepted;
    return out;
}

void save_cascade(const Cascade& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write cascade file: " + path);
    out << "facecheck-cascade v1\n";
    out << "window " << c.base_window << "\n";
    for (const Stage& s : c.stages) {
        out << "stage " << format_real(s.stage_threshold) << " " << s.weaks.size() << "\n";
        for (const WeakClassifier& w : s.weaks)
            out << "weak " << w.feature_index << " " << format_real(w.theta) << " " << w.polarity
                << " " << format_real(w.alpha) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
}

std::string require_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(std::string("cascade file truncated: ") + what);
    return line;
}

}  // namespace

Cascade load_cascade(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cascade file: " + path);
    if (require_line(in, "version") != "facecheck-cascade v1")
        throw ParseError("unknown cascade file version");
    auto toks = split_line(require_line(in, "window"));
    if (toks.size() != 2 || toks[0] != "window")
        throw ParseError("cascade file: expected window line");
    Cascade c;
    c.base_window = static_cast<int>(parse_real(toks[1]));
    c.features = enumerate_features(c.base_window);

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        toks = split_line(line);
        if (toks[0] != "stage" || toks.size() != 3)
            throw ParseError("cascade file: expected stage line, got '" + line + "'");
        Stage s;
        s.stage_threshold = parse_real(toks[1]);
        const int m = static_cast<int>(parse_real(toks[2]));
        if (m < 1) throw ParseError("cascade file: stage with no weak classifiers");
        for (int j = 0; j < m; ++j) {
            auto wt = split_line(require_line(in, "weak line"));
            if (wt.size() != 5 || wt[0] != "weak")
                throw ParseError("cascade file: malformed weak line");
            WeakClassifier w;
            w.feature_index = static_cast<int>(parse_real(wt[1]));
            w.theta = parse_real(wt[2]);
            w.polarity = static_cast<int>(parse_real(wt[3]));
            w.alpha = parse_real(wt[4]);
            if (w.feature_index < 0 ||
                w.feature_index >= static_cast<int>(c.features.size()) ||
                (w.polarity != 1 && w.polarity != -1))
                throw ParseError("cascade file: weak classifier out of range");
            s.weaks.push_back(w);
        }
        c.stages.push_back(std::move(s));
    }
    return c;
}

}  // namespace facecheck
