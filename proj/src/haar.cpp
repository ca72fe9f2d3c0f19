#include "facecheck/haar.hpp"

#include <cmath>

namespace facecheck {

namespace {

HaarFeature make_feature(HaarKind kind, const Rect& r) {
    HaarFeature f;
    f.kind = kind;
    f.base_rect = r;
    switch (kind) {
        case HaarKind::EdgeHorizontal: {
            const int half = r.h / 2;
            f.terms = {{{r.x, r.y, r.w, half}, 1.0},
                       {{r.x, r.y + half, r.w, half}, -1.0}};
            break;
        }
        case HaarKind::EdgeVertical: {
            const int half = r.w / 2;
            f.terms = {{{r.x, r.y, half, r.h}, 1.0},
                       {{r.x + half, r.y, half, r.h}, -1.0}};
            break;
        }
        case HaarKind::LineHorizontal: {
            const int third = r.h / 3;
            f.terms = {{{r.x, r.y, r.w, third}, 1.0},
                       {{r.x, r.y + third, r.w, third}, -2.0},
                       {{r.x, r.y + 2 * third, r.w, third}, 1.0}};
            break;
        }
        case HaarKind::LineVertical: {
            const int third = r.w / 3;
            f.terms = {{{r.x, r.y, third, r.h}, 1.0},
                       {{r.x + third, r.y, third, r.h}, -2.0},
                       {{r.x + 2 * third, r.y, third, r.h}, 1.0}};
            break;
        }
        case HaarKind::FourRect: {
            const int hw = r.w / 2;
            const int hh = r.h / 2;
            f.terms = {{{r.x, r.y, hw, hh}, 1.0},
                       {{r.x + hw, r.y, hw, hh}, -1.0},
                       {{r.x, r.y + hh, hw, hh}, -1.0},
                       {{r.x + hw, r.y + hh, hw, hh}, 1.0}};
            break;
        }
    }
    return f;
}

void unit_steps(HaarKind kind, int& dw, int& dh) {
    switch (kind) {
        case HaarKind::EdgeHorizontal: dw = 1; dh = 2; break;
        case HaarKind::EdgeVertical:   dw = 2; dh = 1; break;
        case HaarKind::LineHorizontal: dw = 1; dh = 3; break;
        case HaarKind::LineVertical:   dw = 3; dh = 1; break;
        case HaarKind::FourRect:       dw = 2; dh = 2; break;
    }
}

}  // namespace

std::vector<HaarFeature> enumerate_features(int base_window) {
    if (base_window < 4) throw std::invalid_argument("base window must be >= 4");
    std::vector<HaarFeature> out;
    const HaarKind kinds[] = {HaarKind::EdgeHorizontal, HaarKind::EdgeVertical,
                              HaarKind::LineHorizontal, HaarKind::LineVertical,
                              HaarKind::FourRect};
    for (HaarKind kind : kinds) {
        int dw, dh;
        unit_steps(kind, dw, dh);
        for (int y = 0; y < base_window; ++y)
            for (int x = 0; x < base_window; ++x)
                for (int h = dh; y + h <= base_window; h += dh)
                    for (int w = dw; x + w <= base_window; w += dw)
                        out.push_back(make_feature(kind, {x, y, w, h}));
    }
    return out;
}

double eval_feature(const HaarFeature& f, const IntegralImage& ii, const WindowPlacement& p,
                    int base_window, bool normalize) {
    const double s = p.scale;
    double pos_area = 0.0;
    double neg_area = 0.0;
    double pos_sum = 0.0;
    double neg_sum = 0.0;
    for (const HaarTerm& t : f.terms) {
        const int x0 = static_cast<int>(std::lround(t.rect.x * s));
        const int y0 = static_cast<int>(std::lround(t.rect.y * s));
        const int x1 = static_cast<int>(std::lround((t.rect.x + t.rect.w) * s));
        const int y1 = static_cast<int>(std::lround((t.rect.y + t.rect.h) * s));
        const Rect scaled{p.x + x0, p.y + y0, x1 - x0, y1 - y0};
        const double area = static_cast<double>(scaled.w) * scaled.h;
        const double sum = static_cast<double>(ii.rect_sum(scaled));
        if (t.weight > 0) {
            pos_area += t.weight * area;
            pos_sum += t.weight * sum;
        } else {
            neg_area += -t.weight * area;
            neg_sum += -t.weight * sum;
        }
    }
    // Rebalance the black weight so a constant image still responds zero;
    // the cross-multiplied form keeps that cancellation exact in floating
    // point.
    double value;
    if (neg_area > 0.0)
        value = (pos_sum * neg_area - neg_sum * pos_area) / neg_area;
    else
        value = pos_sum;
    if (normalize) {
        const int side = static_cast<int>(std::lround(base_window * s));
        value /= ii.window_stddev({p.x, p.y, side, side});
    }
    return value;
}

}  // namespace facecheck
