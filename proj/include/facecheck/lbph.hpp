#pragma once

#include <map>
#include <string>
#include <vector>

#include "facecheck/imaging.hpp"

namespace facecheck {

// Unknown-subject sentinel reported for rejected predictions.
inline constexpr int kUnknownLabel = -1;

struct LbpImage {
    int width = 0;   // source width - 2
    int height = 0;  // source height - 2
    std::vector<std::uint8_t> codes;

    std::uint8_t at(int x, int y) const {
        return codes[static_cast<std::size_t>(y) * width + x];
    }
};

struct LbphParams {
    int grid_x = 10;
    int grid_y = 10;
    int face_w = 96;
    int face_h = 96;

    int histogram_length() const { return grid_x * grid_y * 256; }
    bool operator==(const LbphParams&) const = default;
};

using Histogram = std::vector<double>;

struct LbphEntry {
    int label;
    Histogram histogram;
};

struct LbphModel {
    LbphParams params;
    std::vector<LbphEntry> entries;
    std::map<int, std::string> label_names;
    double d0 = 1.0;  // distance mapping to confidence 0
};

struct Prediction {
    int label = kUnknownLabel;
    int matched_label = kUnknownLabel;  // nearest entry even when rejected
    double distance = 0.0;
    double confidence_pct = 0.0;
    bool accepted = false;
};

// 8-bit codes from strict greater-than comparisons of the 8 neighbors
// against the center, visited clockwise from the top-left, MSB first.
// Interior pixels only.
LbpImage lbp_transform(const GrayImage& img);

// Concatenated per-cell 256-bin histograms, row-major cells, each cell
// L1-normalized by its pixel count.
Histogram grid_histogram(const LbpImage& lbp, const LbphParams& p);

Histogram face_histogram(const GrayImage& face, const LbphParams& p);

double histogram_distance(const Histogram& a, const Histogram& b);

struct LbphTrainResult {
    LbphModel model;
    double training_time_s = 0.0;
};

LbphTrainResult train_lbph(const std::vector<std::pair<int, GrayImage>>& dataset,
                           const LbphParams& p = {},
                           const std::map<int, std::string>& label_names = {});

Prediction predict(const LbphModel& m, const GrayImage& face, double threshold_pct = 85.0);
Prediction predict_histogram(const LbphModel& m, const Histogram& h,
                             double threshold_pct = 85.0);

void save_model(const LbphModel& m, const std::string& path);
LbphModel load_model(const std::string& path);

}  // namespace facecheck
