#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facecheck/haar.hpp"
#include "facecheck/imaging.hpp"

namespace facecheck {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Decision stump: responds -s when the feature value is below theta, s
// otherwise (equality falls in the "otherwise" branch).
struct WeakClassifier {
    int feature_index = 0;
    double theta = 0.0;
    int polarity = 1;  // s in {-1,+1}
    double alpha = 0.0;

    int respond(double f_value) const { return f_value < theta ? -polarity : polarity; }
};

struct Stage {
    std::vector<WeakClassifier> weaks;
    double stage_threshold = 0.0;
};

struct Cascade {
    int base_window = 24;
    std::vector<Stage> stages;
    std::vector<HaarFeature> features;  // canonical enumeration for base_window
};

struct TrainSample {
    IntegralImage ii;  // base-window sized, with squared table
    int label;         // +1 face, -1 non-face
};

struct StumpSearchResult {
    WeakClassifier weak;   // alpha left at 0
    double weighted_error = 0.0;
};

struct BoostOptions {
    bool normalize = true;
    int num_workers = 0;  // 0 = hardware concurrency
};

// Weighted vote of a stage's weak classifiers against its threshold.
// Decision is +1 iff score >= stage_threshold.
struct StageResponse {
    double score;
    int decision;
};
StageResponse strong_response(const Stage& stage, const std::vector<double>& feature_values);
StageResponse strong_response(const Stage& stage, const Cascade& c, const IntegralImage& ii,
                              const WindowPlacement& p, bool normalize = true);

// Best stump over all features: minimises weighted 0/1 error over candidate
// thresholds at midpoints of adjacent distinct values plus +-infinity
// sentinels. Ties break to the lowest feature index, then the lowest theta,
// then polarity +1. Deterministic regardless of worker count.
StumpSearchResult train_weak(const std::vector<TrainSample>& samples,
                             const std::vector<double>& weights,
                             const std::vector<HaarFeature>& features,
                             const BoostOptions& opt = {});

struct BoostTrace {
    std::vector<double> round_errors;  // weighted error of each selected weak
    std::vector<double> weight_sums;   // sample-weight total after each update
};

// Discrete AdaBoost for a fixed number of rounds; stops early once a round
// reaches zero weighted error. Throws TrainingError when a single class is
// given or when a round's error reaches 0.5 (stall).
Stage adaboost(const std::vector<TrainSample>& samples, int rounds,
               const std::vector<HaarFeature>& features, const BoostOptions& opt = {},
               BoostTrace* trace = nullptr);

// Largest threshold keeping at least `detection_rate` of the positive scores
// at or above it.
double calibrate_stage_threshold(std::vector<double> positive_scores, double detection_rate);

struct CascadeTrainOptions {
    std::vector<int> schedule;        // weak-classifier count per stage
    double detection_rate = 0.995;    // per-stage
    double max_stage_fpr = 0.5;       // diagnostic target, reported per stage
    bool normalize = true;
    int num_workers = 0;
    bool verbose = false;             // progress lines on stderr
};

struct CascadeTrainReport {
    std::vector<double> stage_fpr;    // on that stage's training negatives
    std::vector<int> negatives_used;
    bool negatives_exhausted = false; // stopped early with no survivors
};

Cascade train_cascade(const std::vector<TrainSample>& positives,
                      const std::vector<TrainSample>& negative_pool,
                      const CascadeTrainOptions& opt, CascadeTrainReport* report = nullptr);

struct ClassifyResult {
    bool accepted = false;
    int stages_evaluated = 0;
    double last_score = 0.0;   // score of the last stage evaluated
    double last_margin = 0.0;  // score minus that stage's threshold
};

// Per-stage instrumentation; index i counts windows whose evaluation reached
// stage i.
struct CascadeCounters {
    std::vector<std::uint64_t> evaluated;
    std::vector<std::uint64_t> rejected;
    std::uint64_t windows = 0;
    std::uint64_t accepted = 0;
};

ClassifyResult classify_window(const Cascade& c, const IntegralImage& ii,
                               const WindowPlacement& p, bool normalize = true,
                               CascadeCounters* counters = nullptr);

void save_cascade(const Cascade& c, const std::string& path);
Cascade load_cascade(const std::string& path);

// 17-significant-digit decimal, round-trip exact for 64-bit floats.
std::string format_real(double v);
double parse_real(const std::string& tok);

}  // namespace facecheck
