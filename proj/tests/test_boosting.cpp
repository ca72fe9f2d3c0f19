#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "facecheck/boosting.hpp"
#include "support.hpp"

using namespace facecheck;
using namespace fixtures;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Exhaustive independent stump search: every feature, every midpoint between
// adjacent distinct sorted values plus infinite sentinels, both polarities,
// error by direct summation.
StumpSearchResult oracle_train_weak(const std::vector<TrainSample>& samples,
                                    const std::vector<double>& weights,
                                    const std::vector<HaarFeature>& features, bool normalize) {
    const int base = samples.front().ii.width();
    const double inf = std::numeric_limits<double>::infinity();
    StumpSearchResult best;
    best.weighted_error = inf;
    for (std::size_t fi = 0; fi < features.size(); ++fi) {
        std::vector<double> values;
        for (const TrainSample& s : samples)
            values.push_back(eval_feature(features[fi], s.ii, {0, 0, 1.0}, base, normalize));
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<double> thetas{-inf};
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
            thetas.push_back((sorted[i] + sorted[i + 1]) / 2.0);
        thetas.push_back(inf);
        for (double theta : thetas) {
            for (int s : {+1, -1}) {
                double err = 0.0;
                for (std::size_t i = 0; i < samples.size(); ++i) {
                    const int pred = values[i] < theta ? -s : s;
                    if (pred != samples[i].label) err += weights[i];
                }
                const bool improves =
                    err < best.weighted_error ||
                    (err == best.weighted_error &&
                     (static_cast<int>(fi) < best.weak.feature_index ||
                      (static_cast<int>(fi) == best.weak.feature_index &&
                       (theta < best.weak.theta ||
                        (theta == best.weak.theta && s > best.weak.polarity)))));
                if (improves) {
                    best.weighted_error = err;
                    best.weak.feature_index = static_cast<int>(fi);
                    best.weak.theta = theta;
                    best.weak.polarity = s;
                }
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("weak_response follows the two-branch threshold rule") {
    WeakClassifier w{0, 0.0, +1, 1.0};
    CHECK(w.respond(-1.0) == -1);
    CHECK(w.respond(0.0) == +1);  // boundary goes to the otherwise branch
    CHECK(w.respond(1.0) == +1);
    WeakClassifier n{0, 2.0, -1, 1.0};
    CHECK(n.respond(5.0) == -1);
    CHECK(n.respond(1.0) == +1);
    CHECK(n.respond(2.0) == -1);
}

TEST_CASE("strong_response accumulates weighted votes") {
    SUBCASE("single agreeing weak") {
        Stage st;
        st.weaks.push_back({0, 0.0, +1, 1.0});
        const auto r = strong_response(st, {1.0});
        CHECK(r.score == 1.0);
        CHECK(r.decision == +1);
    }
    SUBCASE("two weaks with alphas 2 and 1 voting +1 and -1") {
        Stage st;
        st.weaks.push_back({0, 0.0, +1, 2.0});
        st.weaks.push_back({1, 0.0, +1, 1.0});
        const auto r = strong_response(st, {1.0, -1.0});
        CHECK(r.score == 1.0);
        CHECK(r.decision == +1);
    }
    SUBCASE("empty stage below a positive threshold") {
        Stage st;
        st.stage_threshold = 0.5;
        CHECK(strong_response(st, {}).decision == -1);
    }
    SUBCASE("score equal to threshold is accepted") {
        Stage st;
        st.weaks.push_back({0, 0.0, +1, 1.0});
        st.stage_threshold = 1.0;
        CHECK(strong_response(st, {5.0}).decision == +1);
    }
}

TEST_CASE("train_weak separates the bright-left fixture with zero error") {
    auto samples = make_samples(10, 1, bright_left_chip, +1, 8);
    auto neg = make_samples(10, 2, bright_right_chip, -1, 8);
    samples.insert(samples.end(), neg.begin(), neg.end());
    const std::vector<double> weights(samples.size(), 1.0 / samples.size());
    const auto features = enumerate_features(8);
    const auto r = train_weak(samples, weights, features);
    CHECK(r.weighted_error == 0.0);
}

TEST_CASE("train_weak with all weight on one sample reaches zero error") {
    auto samples = make_samples(3, 1, bright_left_chip, +1, 8);
    auto neg = make_samples(3, 2, bright_right_chip, -1, 8);
    samples.insert(samples.end(), neg.begin(), neg.end());
    std::vector<double> weights(samples.size(), 0.0);
    weights[0] = 1.0;
    const auto r = train_weak(samples, weights, enumerate_features(8));
    CHECK(r.weighted_error == 0.0);
}

TEST_CASE("train_weak equals the exhaustive brute-force scan") {
    std::vector<TrainSample> samples;
    std::mt19937_64 rng(77);
    for (int i = 0; i < 12; ++i)
        samples.push_back({IntegralImage(random_gray(6, 6, 1000 + i), true),
                           (rng() & 1) ? +1 : -1});
    bool has_pos = false, has_neg = false;
    for (auto& s : samples) (s.label > 0 ? has_pos : has_neg) = true;
    if (!has_pos) samples[0].label = +1;
    if (!has_neg) samples[1].label = -1;
    // Dyadic weights (multiples of 1/64) keep every subset sum exact, so the
    // oracle comparison holds bit for bit.
    std::vector<int> parts(samples.size(), 1);
    for (int left = 64 - 12; left > 0; --left) ++parts[rng() % parts.size()];
    std::vector<double> weights;
    for (int k : parts) weights.push_back(k / 64.0);

    const auto features = enumerate_features(6);
    for (bool normalize : {false, true}) {
        const auto got = train_weak(samples, weights, features, {normalize, 0});
        const auto want = oracle_train_weak(samples, weights, features, normalize);
        CHECK(got.weighted_error == want.weighted_error);
        CHECK(got.weak.feature_index == want.weak.feature_index);
        CHECK(got.weak.theta == want.weak.theta);
        CHECK(got.weak.polarity == want.weak.polarity);
    }
}

TEST_CASE("train_weak is identical across worker counts") {
    auto samples = make_samples(8, 5, bright_left_chip, +1, 8);
    auto neg = make_samples(8, 6, noise_chip, -1, 8);
    samples.insert(samples.end(), neg.begin(), neg.end());
    std::vector<double> weights(samples.size(), 1.0 / samples.size());
    const auto features = enumerate_features(8);
    const auto one = train_weak(samples, weights, features, {true, 1});
    for (int workers : {2, 4, 8}) {
        const auto multi = train_weak(samples, weights, features, {true, workers});
        CHECK(multi.weak.feature_index == one.weak.feature_index);
        CHECK(multi.weak.theta == one.weak.theta);
        CHECK(multi.weak.polarity == one.weak.polarity);
        CHECK(multi.weighted_error == one.weighted_error);
    }
}

TEST_CASE("train_weak rejects a single-class input") {
    const auto samples = make_samples(4, 1, bright_left_chip, +1, 8);
    const std::vector<double> weights(4, 0.25);
    CHECK_THROWS_AS(train_weak(samples, weights, enumerate_features(8)), TrainingError);
}

TEST_CASE("adaboost drives training error to zero on a separable set") {
    auto samples = make_samples(10, 11, bright_left_chip, +1, 16);
    auto neg = make_samples(10, 12, bright_right_chip, -1, 16);
    samples.insert(samples.end(), neg.begin(), neg.end());
    const auto features = enumerate_features(16);
    BoostTrace trace;
    const Stage stage = adaboost(samples, 3, features, {}, &trace);
    CHECK(stage.weaks.size() <= 3);

    // Verify via an independent evaluation of the weighted vote.
    int errors = 0;
    for (const TrainSample& s : samples) {
        double score = 0;
        for (const WeakClassifier& w : stage.weaks) {
            const double v = eval_feature(features[w.feature_index], s.ii, {0, 0, 1.0}, 16, true);
            score += w.alpha * w.respond(v);
        }
        const int pred = score >= 0 ? +1 : -1;
        if (pred != s.label) ++errors;
    }
    CHECK(errors == 0);

    for (double e : trace.round_errors) CHECK(e < 0.5);
    for (double ws : trace.weight_sums) CHECK(ws == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adaboost training error is nonincreasing in rounds") {
    std::vector<TrainSample> samples;
    for (int i = 0; i < 12; ++i)
        samples.push_back({IntegralImage(bright_left_chip(40 + i, 8), true), +1});
    for (int i = 0; i < 12; ++i)
        samples.push_back({IntegralImage(noise_chip(60 + i, 8), true), -1});
    const auto features = enumerate_features(8);
    double prev = 1.0;
    for (int rounds = 1; rounds <= 4; ++rounds) {
        const Stage stage = adaboost(samples, rounds, features);
        int errors = 0;
        for (const TrainSample& s : samples) {
            double score = 0;
            for (const WeakClassifier& w : stage.weaks)
                score += w.alpha * w.respond(eval_feature(features[w.feature_index], s.ii,
                                                          {0, 0, 1.0}, 8, true));
            if ((score >= 0 ? +1 : -1) != s.label) ++errors;
        }
        const double err = static_cast<double>(errors) / samples.size();
        CHECK(err <= prev);
        prev = err;
    }
}

TEST_CASE("stage threshold calibration") {
    CHECK(calibrate_stage_threshold({3.0, 1.0, 2.0}, 1.0) == 1.0);
    CHECK(calibrate_stage_threshold({1.0, 2.0, 3.0, 4.0}, 0.5) == 3.0);
    CHECK_THROWS_AS(calibrate_stage_threshold({}, 0.995), TrainingError);
}

TEST_CASE("cascade training with the five-stage schedule") {
    const auto pos = make_samples(20, 300, bright_left_chip, +1, 8);
    const auto neg = make_samples(60, 400, noise_chip, -1, 8);
    CascadeTrainOptions opt;
    opt.schedule = {1, 10, 25, 25, 50};
    opt.detection_rate = 1.0;
    CascadeTrainReport report;
    const Cascade c = train_cascade(pos, neg, opt, &report);
    CHECK(c.stages.size() <= 5);
    CHECK(c.stages.size() >= 1);
    // With d = 1.0 every training positive passes every stage.
    for (const TrainSample& s : pos)
        CHECK(classify_window(c, s.ii, {0, 0, 1.0}).accepted);
}

TEST_CASE("classify_window short-circuits") {
    SUBCASE("empty cascade accepts with zero stages") {
        Cascade c;
        c.base_window = 8;
        c.features = enumerate_features(8);
        const IntegralImage ii(noise_chip(1, 8), true);
        const auto r = classify_window(c, ii, {0, 0, 1.0});
        CHECK(r.accepted);
        CHECK(r.stages_evaluated == 0);
    }
    SUBCASE("window failing stage 1 of 3 stops there") {
        Cascade c;
        c.base_window = 8;
        c.features = enumerate_features(8);
        Stage reject;
        reject.stage_threshold = 1e9;  // unreachable
        reject.weaks.push_back({0, 0.0, +1, 1.0});
        c.stages = {reject, reject, reject};
        const IntegralImage ii(noise_chip(2, 8), true);
        CascadeCounters counters;
        const auto r = classify_window(c, ii, {0, 0, 1.0}, true, &counters);
        CHECK_FALSE(r.accepted);
        CHECK(r.stages_evaluated == 1);
        CHECK(counters.evaluated[0] == 1);
        CHECK(counters.evaluated[1] == 0);
        CHECK(counters.evaluated[2] == 0);
    }
}

TEST_CASE("adding a stage never converts a rejection to an acceptance") {
    Cascade c = trained_synthetic_cascade(15, 60, {1, 5});
    Cascade shorter = c;
    shorter.stages.pop_back();
    for (int i = 0; i < 50; ++i) {
        const IntegralImage ii(noise_chip(7000 + i, 24), true);
        const bool with_fewer = classify_window(shorter, ii, {0, 0, 1.0}).accepted;
        const bool with_more = classify_window(c, ii, {0, 0, 1.0}).accepted;
        if (!with_fewer) CHECK_FALSE(with_more);
    }
}

TEST_CASE("cascade file round trip preserves every decision") {
    const Cascade c = trained_synthetic_cascade(15, 60, {1, 5});
    const std::string path = temp_path("facecheck_test_cascade.txt");
    save_cascade(c, path);
    const Cascade loaded = load_cascade(path);
    REQUIRE(loaded.stages.size() == c.stages.size());
    for (int i = 0; i < 100; ++i) {
        const IntegralImage ii(noise_chip(9000 + i, 24), true);
        const auto a = classify_window(c, ii, {0, 0, 1.0});
        const auto b = classify_window(loaded, ii, {0, 0, 1.0});
        CHECK(a.accepted == b.accepted);
        CHECK(a.stages_evaluated == b.stages_evaluated);
        CHECK(a.last_score == b.last_score);
    }
    std::filesystem::remove(path);
}

TEST_CASE("cascade file errors") {
    const std::string path = temp_path("facecheck_test_badcascade.txt");
    const auto write_file = [&](const std::string& text) {
        std::ofstream out(path);
        out << text;
    };
    SUBCASE("unknown version") {
        write_file("facecheck-cascade v9\nwindow 24\n");
        CHECK_THROWS_WITH_AS(load_cascade(path), doctest::Contains("version"), ParseError);
    }
    SUBCASE("truncated weak list") {
        write_file("facecheck-cascade v1\nwindow 8\nstage 0 2\nweak 0 0.5 1 1\n");
        CHECK_THROWS_AS(load_cascade(path), ParseError);
    }
    SUBCASE("feature index out of range") {
        write_file("facecheck-cascade v1\nwindow 8\nstage 0 1\nweak 999999 0.5 1 1\n");
        CHECK_THROWS_AS(load_cascade(path), ParseError);
    }
    std::filesystem::remove(path);
}
