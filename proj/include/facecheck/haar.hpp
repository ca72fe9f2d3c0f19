#pragma once

#include <vector>

#include "facecheck/imaging.hpp"

namespace facecheck {

enum class HaarKind {
    EdgeHorizontal,  // two bands stacked vertically, white on top
    EdgeVertical,    // two bands side by side, white on the left
    LineHorizontal,  // three bands stacked vertically, black middle
    LineVertical,    // three bands side by side, black middle
    FourRect,        // 2x2 checker, white on the main diagonal
};

struct HaarTerm {
    Rect rect;      // relative to the base window origin
    double weight;  // +1 per unit white area, negative for black
};

// A Haar-like feature as a weighted rectangle combination. The weights are
// balanced so the response on a constant image is exactly zero.
struct HaarFeature {
    HaarKind kind;
    Rect base_rect;  // bounding box within the base window
    std::vector<HaarTerm> terms;
};

struct WindowPlacement {
    int x = 0;
    int y = 0;
    double scale = 1.0;  // relative to the base window
};

// All distinct positions and integer sizes of the five kinds inside a square
// base window, in canonical (kind, y, x, h, w) order.
std::vector<HaarFeature> enumerate_features(int base_window = 24);

// Feature response at a placement. Term rectangles are scaled by rounding
// each edge coordinate and the weights rebalanced so the zero-sum invariant
// survives the rounding. With normalize set the value is divided by the
// window standard deviation (squared-sum table required).
double eval_feature(const HaarFeature& f, const IntegralImage& ii, const WindowPlacement& p,
                    int base_window, bool normalize);

}  // namespace facecheck
