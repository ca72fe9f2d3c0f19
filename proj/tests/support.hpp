#pragma once

// Shared synthetic fixtures for the test suites.

#include <algorithm>
#include <random>
#include <utility>
#include <vector>

#include "facecheck/boosting.hpp"
#include "facecheck/imaging.hpp"

namespace fixtures {

using namespace facecheck;

inline GrayImage random_gray(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    GrayImage img(w, h);
    for (auto& p : img.data) p = static_cast<std::uint8_t>(dist(rng));
    return img;
}

// Independent quadratic-time oracle for rectangle sums.
inline std::uint64_t brute_rect_sum(const GrayImage& img, const Rect& r) {
    std::uint64_t acc = 0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) acc += img.at(x, y);
    return acc;
}

// 24x24 chip with a bright left half and dark right half, plus noise.
inline GrayImage bright_left_chip(std::uint64_t seed, int side = 24) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> noise(-20, 20);
    GrayImage img(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const int base = x < side / 2 ? 200 : 50;
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(base + noise(rng), 0, 255));
        }
    return img;
}

inline GrayImage bright_right_chip(std::uint64_t seed, int side = 24) {
    GrayImage img = bright_left_chip(seed, side);
    GrayImage out(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) out.at(x, y) = img.at(side - 1 - x, y);
    return out;
}

inline GrayImage noise_chip(std::uint64_t seed, int side = 24) {
    return random_gray(side, side, seed ^ 0x9e3779b97f4a7c15ull);
}

inline std::vector<TrainSample> make_samples(int n, std::uint64_t seed0,
                                             GrayImage (*gen)(std::uint64_t, int), int label,
                                             int side = 24) {
    std::vector<TrainSample> out;
    for (int i = 0; i < n; ++i)
        out.push_back({IntegralImage(gen(seed0 + i, side), true), label});
    return out;
}

// Cascade trained on the separable bright-left fixture; stages reject noise
// cheaply.
inline Cascade trained_synthetic_cascade(int pos_n = 50, int neg_n = 200,
                                         std::vector<int> schedule = {1, 5, 10},
                                         CascadeTrainReport* report = nullptr) {
    const auto pos = make_samples(pos_n, 100, bright_left_chip, +1);
    const auto neg = make_samples(neg_n, 900, noise_chip, -1);
    CascadeTrainOptions opt;
    opt.schedule = std::move(schedule);
    return train_cascade(pos, neg, opt, report);
}

// Hand-built cascade accepting windows whose middle horizontal and vertical
// thirds are much brighter than the flanks; fires on a centered bright
// square over a dark background.
inline Cascade analytic_center_cascade(int base = 24, double gate = 16000.0) {
    Cascade c;
    c.base_window = base;
    c.features = enumerate_features(base);
    int line_h = -1, line_v = -1;
    for (std::size_t i = 0; i < c.features.size(); ++i) {
        const auto& f = c.features[i];
        const Rect full{0, 0, base, base};
        if (f.base_rect == full && f.kind == HaarKind::LineHorizontal)
            line_h = static_cast<int>(i);
        if (f.base_rect == full && f.kind == HaarKind::LineVertical)
            line_v = static_cast<int>(i);
    }
    Stage stage;
    // Middle band darker-weighted: a bright center drives the value strongly
    // negative, so respond with polarity -1 below -gate.
    stage.weaks.push_back({line_v, -gate, -1, 1.0});
    stage.weaks.push_back({line_h, -gate, -1, 1.0});
    stage.stage_threshold = 2.0;  // both weaks must vote +1
    c.stages.push_back(stage);
    return c;
}

// Identity textures for recognition tests: a per-label base pattern with
// per-sample pixel noise.
inline GrayImage texture_face(int label, int sample_seed, int side = 96, int noise_amp = 10) {
    std::mt19937_64 base_rng(static_cast<std::uint64_t>(label) * 7919);
    std::uniform_int_distribution<int> base_dist(100, 160);
    GrayImage img(side, side);
    std::mt19937_64 noise_rng(static_cast<std::uint64_t>(label) * 104729 + sample_seed);
    std::uniform_int_distribution<int> noise(-noise_amp, noise_amp);
    for (auto& p : img.data)
        p = static_cast<std::uint8_t>(std::clamp(base_dist(base_rng) + noise(noise_rng), 0, 255));
    return img;
}

inline std::vector<std::pair<int, GrayImage>> texture_dataset(int n_labels, int per_label,
                                                              int side = 96,
                                                              int noise_amp = 10) {
    std::vector<std::pair<int, GrayImage>> out;
    for (int label = 1; label <= n_labels; ++label)
        for (int s = 0; s < per_label; ++s)
            out.emplace_back(label, texture_face(label, s, side, noise_amp));
    return out;
}

}  // namespace fixtures
