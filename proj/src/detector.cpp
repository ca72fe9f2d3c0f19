#include "facecheck/detector.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace facecheck {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

bool similar(const Rect& a, const Rect& b, double eps) {
    const double wtol = eps * 0.5 * (a.w + b.w);
    const double htol = eps * 0.5 * (a.h + b.h);
    return std::abs(a.x - b.x) <= wtol && std::abs(a.y - b.y) <= htol &&
           std::abs(a.w - b.w) <= wtol && std::abs(a.h - b.h) <= htol;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

struct ScaleSpec {
    double scale;
    int window;
    int step;
};

std::vector<ScaleSpec> scale_ladder(const Cascade& c, const GrayImage& img,
                                    const DetectParams& p) {
    std::vector<ScaleSpec> out;
    const int min_size = std::max(p.min_size, c.base_window);
    int limit = std::min(img.width, img.height);
    if (p.max_size) limit = std::min(limit, *p.max_size);
    double s = 1.0;
    while (true) {
        const int window = static_cast<int>(std::lround(c.base_window * s));
        if (window > limit) break;
        if (window >= min_size) {
            const int step =
                std::max(1, static_cast<int>(std::lround(window * p.step_fraction)));
            out.push_back({s, window, step});
        }
        s *= p.scale_factor;
    }
    return out;
}

std::vector<RawHit> scan_scale(const Cascade& c, const IntegralImage& ii, const ScaleSpec& sc,
                               const DetectParams& p, CascadeCounters* counters = nullptr) {
    std::vector<RawHit> hits;
    for (int y = 0; y + sc.window <= ii.height(); y += sc.step) {
        for (int x = 0; x + sc.window <= ii.width(); x += sc.step) {
            const auto r =
                classify_window(c, ii, {x, y, sc.scale}, p.normalize, counters);
            if (r.accepted) hits.push_back({{x, y, sc.window, sc.window}, r.last_margin});
        }
    }
    return hits;
}

}  // namespace

std::vector<Detection> group_rectangles(const std::vector<RawHit>& raw, int min_neighbors,
                                        double eps) {
    const int n = static_cast<int>(raw.size());
    UnionFind uf(raw.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (similar(raw[i].rect, raw[j].rect, eps)) uf.unite(i, j);

    std::vector<std::vector<int>> components;
    std::vector<int> comp_of(n, -1);
    for (int i = 0; i < n; ++i) {
        const int root = uf.find(i);
        if (comp_of[root] < 0) {
            comp_of[root] = static_cast<int>(components.size());
            components.emplace_back();
        }
        components[comp_of[root]].push_back(i);
    }

    std::vector<Detection> out;
    for (const auto& comp : components) {
        if (static_cast<int>(comp.size()) <= min_neighbors) continue;
        double sx = 0, sy = 0, sw = 0, sh = 0, sm = 0;
        for (int i : comp) {
            sx += raw[i].rect.x;
            sy += raw[i].rect.y;
            sw += raw[i].rect.w;
            sh += raw[i].rect.h;
            sm += raw[i].margin;
        }
        const double k = static_cast<double>(comp.size());
        Detection d;
        d.rect = {static_cast<int>(std::lround(sx / k)), static_cast<int>(std::lround(sy / k)),
                  static_cast<int>(std::lround(sw / k)), static_cast<int>(std::lround(sh / k))};
        d.neighbors = static_cast<int>(comp.size());
        d.score = sm / k;
        out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        return std::tie(a.rect.y, a.rect.x, a.rect.w) < std::tie(b.rect.y, b.rect.x, b.rect.w);
    });
    return out;
}

std::vector<Detection> detect_multiscale(const Cascade& c, const GrayImage& img,
                                         const DetectParams& p) {
    if (img.width < c.base_window || img.height < c.base_window) return {};
    const IntegralImage ii(img, true);
    const auto ladder = scale_ladder(c, img, p);
    if (ladder.empty()) return {};

    std::vector<std::vector<RawHit>> per_scale(ladder.size());
    const int workers = std::min<std::size_t>(resolve_workers(p.num_workers), ladder.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < ladder.size(); ++i)
            per_scale[i] = scan_scale(c, ii, ladder[i], p);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        for (int t = 0; t < workers; ++t)
            threads.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < ladder.size();
                     i = next.fetch_add(1))
                    per_scale[i] = scan_scale(c, ii, ladder[i], p);
            });
        for (auto& th : threads) th.join();
    }

    // Merge in ladder order so the raw list is independent of scheduling.
    std::vector<RawHit> raw;
    for (auto& hits : per_scale) raw.insert(raw.end(), hits.begin(), hits.end());
    return group_rectangles(raw, p.min_neighbors);
}

ScanStats scan_stats(const Cascade& c, const GrayImage& img, const DetectParams& p,
                     double min_duration_s) {
    ScanStats st;
    st.windows_rejected_by_stage.assign(c.stages.size(), 0);
    if (img.width >= c.base_window && img.height >= c.base_window) {
        const IntegralImage ii(img, true);
        CascadeCounters counters;
        for (const ScaleSpec& sc : scale_ladder(c, img, p))
            scan_scale(c, ii, sc, p, &counters);
        st.windows_examined = counters.windows;
        st.windows_accepted = counters.accepted;
        st.windows_rejected_by_stage = counters.rejected;
    }

    const auto start = std::chrono::steady_clock::now();
    int frames = 0;
    double elapsed = 0.0;
    do {
        (void)detect_multiscale(c, img, p);
        ++frames;
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } while (elapsed < min_duration_s);
    st.fps_estimate = frames / elapsed;
    return st;
}

}  // namespace facecheck
