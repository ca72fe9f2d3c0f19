#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facecheck/detector.hpp"
#include "facecheck/lbph.hpp"

namespace facecheck {

enum class Lighting { Normal, Low };
enum class Mask { None, Worn };

struct Condition {
    Lighting lighting = Lighting::Normal;
    Mask mask = Mask::None;

    std::string name() const;
};

enum class SplitMode { PaperLiteral, Holdout };  // train = test vs stratified 80/20

struct ConditionResult {
    Condition condition;
    double accuracy = 0.0;  // accepted-and-correct / total
    int n_correct = 0;
    int n_total = 0;
};

struct AccuracyReport {
    std::vector<ConditionResult> conditions;
    double training_time_s = 0.0;
    double fps = 0.0;
    int n_train_per_subject = 0;
    int n_test = 0;
    std::uint64_t seed = 0;
    SplitMode split_mode = SplitMode::Holdout;
};

// Gain perturbation standing in for a darkened room.
GrayImage perturb_low_light(const GrayImage& img, double factor = 0.4);

// Constant fill over the bottom `fraction` of the face rectangle, standing
// in for a worn mask.
GrayImage perturb_mask(const GrayImage& img, const Rect& face_rect, double fraction = 0.45);

GrayImage apply_condition(const GrayImage& face, const Condition& c,
                          double low_light_factor = 0.4, double mask_fraction = 0.45);

struct EvalOptions {
    LbphParams lbph;
    SplitMode split = SplitMode::Holdout;
    std::uint64_t seed = 1;
    double threshold_pct = 0.0;  // 0 disables the acceptance gate for accuracy
    double holdout_fraction = 0.2;
    const Cascade* cascade = nullptr;  // when set, fps is measured with it
    double fps_duration_s = 0.5;
};

AccuracyReport evaluate(const std::vector<std::pair<int, GrayImage>>& dataset,
                        const std::vector<Condition>& conditions, const EvalOptions& opt);

double measure_fps(const Cascade& cascade, const LbphModel& model,
                   const std::vector<GrayImage>& frames, double duration_s,
                   const DetectParams& detect = {});

std::string report_to_json(const AccuracyReport& r);
AccuracyReport report_from_json(const std::string& text);
std::string report_table(const AccuracyReport& r);
void report_emit(const AccuracyReport& r, const std::string& path);

}  // namespace facecheck
