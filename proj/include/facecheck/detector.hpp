#pragma once

#include <optional>
#include <vector>

#include "facecheck/boosting.hpp"

namespace facecheck {

struct DetectParams {
    double scale_factor = 1.1;
    int min_neighbors = 3;
    int min_size = 0;                 // 0 = cascade base window
    std::optional<int> max_size;
    double step_fraction = 1.0 / 24;  // of the window side
    bool normalize = true;
    int num_workers = 0;              // 0 = hardware concurrency
};

struct Detection {
    Rect rect;
    int neighbors = 0;   // raw hits merged into this detection
    double score = 0.0;  // mean final-stage margin of the merged hits
};

struct RawHit {
    Rect rect;
    double margin = 0.0;
};

// Merges similar rectangles (positions and sides within an eps fraction of
// the mean side) into connected components; components of size
// <= min_neighbors are discarded. Permutation-invariant.
std::vector<Detection> group_rectangles(const std::vector<RawHit>& raw, int min_neighbors,
                                        double eps = 0.2);

// Sliding-window scan over a geometric ladder of scales. Features are scaled
// against one integral image rather than resampling the source. The result
// is deterministic for fixed inputs regardless of worker count, sorted by
// (y, x, w).
std::vector<Detection> detect_multiscale(const Cascade& c, const GrayImage& img,
                                         const DetectParams& p = {});

struct ScanStats {
    std::uint64_t windows_examined = 0;
    std::vector<std::uint64_t> windows_rejected_by_stage;
    std::uint64_t windows_accepted = 0;
    double fps_estimate = 0.0;
};

ScanStats scan_stats(const Cascade& c, const GrayImage& img, const DetectParams& p = {},
                     double min_duration_s = 0.2);

}  // namespace facecheck
