#include "facecheck/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

using nlohmann::json;

namespace facecheck {

std::string Condition::name() const {
    std::string s = lighting == Lighting::Normal ? "normal-light" : "low-light";
    s += mask == Mask::None ? " no-mask" : " mask";
    return s;
}

GrayImage perturb_low_light(const GrayImage& img, double factor) {
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = std::lround(img.data[i] * factor);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

GrayImage perturb_mask(const GrayImage& img, const Rect& face_rect, double fraction) {
    GrayImage out = img;
    const int occluded_h = static_cast<int>(std::lround(fraction * face_rect.h));
    const int y0 = face_rect.y + face_rect.h - occluded_h;
    for (int y = std::max(0, y0); y < std::min(img.height, face_rect.y + face_rect.h); ++y)
        for (int x = std::max(0, face_rect.x);
             x < std::min(img.width, face_rect.x + face_rect.w); ++x)
            out.at(x, y) = 128;
    return out;
}

GrayImage apply_condition(const GrayImage& face, const Condition& c, double low_light_factor,
                          double mask_fraction) {
    GrayImage out = face;
    if (c.mask == Mask::Worn)
        out = perturb_mask(out, {0, 0, out.width, out.height}, mask_fraction);
    if (c.lighting == Lighting::Low) out = perturb_low_light(out, low_light_factor);
    return out;
}

AccuracyReport evaluate(const std::vector<std::pair<int, GrayImage>>& dataset,
                        const std::vector<Condition>& conditions, const EvalOptions& opt) {
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < dataset.size(); ++i) by_label[dataset[i].first].push_back(i);
    if (by_label.size() < 2 && opt.split == SplitMode::Holdout)
        throw std::invalid_argument("evaluate: need at least 2 subjects");

    std::vector<std::size_t> train_idx, test_idx;
    if (opt.split == SplitMode::PaperLiteral) {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            train_idx.push_back(i);
            test_idx.push_back(i);
        }
    } else {
        std::mt19937_64 rng(opt.seed);
        for (auto& [label, idx] : by_label) {
            std::shuffle(idx.begin(), idx.end(), rng);
            std::size_t n_test = static_cast<std::size_t>(
                std::lround(opt.holdout_fraction * static_cast<double>(idx.size())));
            n_test = std::min(n_test, idx.size() - 1);  // keep at least one train sample
            for (std::size_t k = 0; k < idx.size(); ++k)
                (k < n_test ? test_idx : train_idx).push_back(idx[k]);
        }
        if (test_idx.empty()) throw std::invalid_argument("evaluate: dataset too small");
    }

    std::vector<std::pair<int, GrayImage>> train;
    train.reserve(train_idx.size());
    for (std::size_t i : train_idx) train.push_back(dataset[i]);
    const LbphTrainResult trained = train_lbph(train, opt.lbph);

    AccuracyReport report;
    report.training_time_s = trained.training_time_s;
    report.n_train_per_subject =
        static_cast<int>(train.size() / std::max<std::size_t>(1, by_label.size()));
    report.n_test = static_cast<int>(test_idx.size());
    report.seed = opt.seed;
    report.split_mode = opt.split;

    for (const Condition& c : conditions) {
        ConditionResult cr;
        cr.condition = c;
        for (std::size_t i : test_idx) {
            const auto& [label, img] = dataset[i];
            const Prediction p =
                predict(trained.model, apply_condition(img, c), opt.threshold_pct);
            if (p.accepted && p.matched_label == label) ++cr.n_correct;
            ++cr.n_total;
        }
        cr.accuracy = cr.n_total ? static_cast<double>(cr.n_correct) / cr.n_total : 0.0;
        report.conditions.push_back(cr);
    }

    if (opt.cascade) {
        std::vector<GrayImage> frames;
        for (std::size_t k = 0; k < std::min<std::size_t>(4, test_idx.size()); ++k)
            frames.push_back(dataset[test_idx[k]].second);
        if (!frames.empty())
            report.fps = measure_fps(*opt.cascade, trained.model, frames, opt.fps_duration_s);
    }
    return report;
}

double measure_fps(const Cascade& cascade, const LbphModel& model,
                   const std::vector<GrayImage>& frames, double duration_s,
                   const DetectParams& detect) {
    const auto start = std::chrono::steady_clock::now();
    int processed = 0;
    double elapsed = 0.0;
    do {
        const GrayImage& frame = frames[processed % frames.size()];
        const auto faces = detect_multiscale(cascade, frame, detect);
        if (!faces.empty()) {
            const GrayImage chip = resize_nearest(crop(frame, faces.front().rect),
                                                  model.params.face_w, model.params.face_h);
            (void)predict(model, chip);
        }
        ++processed;
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } while (elapsed < duration_s);
    return processed / elapsed;
}

namespace {

const char* lighting_name(Lighting l) { return l == Lighting::Normal ? "normal" : "low"; }
const char* mask_name(Mask m) { return m == Mask::None ? "none" : "worn"; }

Lighting lighting_from(const std::string& s) {
    if (s == "normal") return Lighting::Normal;
    if (s == "low") return Lighting::Low;
    throw ParseError("unknown lighting '" + s + "'");
}

Mask mask_from(const std::string& s) {
    if (s == "none") return Mask::None;
    if (s == "worn") return Mask::Worn;
    throw ParseError("unknown mask '" + s + "'");
}

}  // namespace

std::string report_to_json(const AccuracyReport& r) {
    json conds = json::array();
    for (const ConditionResult& c : r.conditions)
        conds.push_back({{"lighting", lighting_name(c.condition.lighting)},
                         {"mask", mask_name(c.condition.mask)},
                         {"accuracy", c.accuracy},
                         {"n_correct", c.n_correct},
                         {"n_total", c.n_total}});
    const json j{{"conditions", conds},
                 {"training_time_s", r.training_time_s},
                 {"fps", r.fps},
                 {"n_train_per_subject", r.n_train_per_subject},
                 {"n_test", r.n_test},
                 {"seed", r.seed},
                 {"split_mode", r.split_mode == SplitMode::PaperLiteral ? "paper" : "holdout"}};
    return j.dump(2);
}

AccuracyReport report_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        AccuracyReport r;
        for (const json& c : j.at("conditions")) {
            ConditionResult cr;
            cr.condition.lighting = lighting_from(c.at("lighting").get<std::string>());
            cr.condition.mask = mask_from(c.at("mask").get<std::string>());
            cr.accuracy = c.at("accuracy").get<double>();
            cr.n_correct = c.at("n_correct").get<int>();
            cr.n_total = c.at("n_total").get<int>();
            r.conditions.push_back(cr);
        }
        r.training_time_s = j.at("training_time_s").get<double>();
        r.fps = j.at("fps").get<double>();
        r.n_train_per_subject = j.at("n_train_per_subject").get<int>();
        r.n_test = j.at("n_test").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.split_mode = j.at("split_mode").get<std::string>() == "paper" ? SplitMode::PaperLiteral
                                                                        : SplitMode::Holdout;
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed report JSON: ") + e.what());
    }
}

std::string report_table(const AccuracyReport& r) {
    std::ostringstream out;
    out << "condition                 accuracy\n";
    out << "--------------------------------\n";
    for (const ConditionResult& c : r.conditions) {
        std::string name = c.condition.name();
        name.resize(26, ' ');
        char pct[16];
        std::snprintf(pct, sizeof(pct), "%5.1f%%", 100.0 * c.accuracy);
        out << name << pct << "\n";
    }
    char line[128];
    std::snprintf(line, sizeof(line), "training time: %.3f s   fps: %.2f\n", r.training_time_s,
                  r.fps);
    out << line;
    return out.str();
}

void report_emit(const AccuracyReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report file: " + path);
    out << report_to_json(r) << "\n";
    if (!out) throw IoError("write failed: " + path);
    std::ofstream txt(path + ".txt");
    if (txt) txt << report_table(r);
}

}  // namespace facecheck
