#include "facecheck/lbph.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "facecheck/boosting.hpp"  // format_real / parse_real

namespace facecheck {

LbpImage lbp_transform(const GrayImage& img) {
    if (img.width < 3 || img.height < 3)
        throw std::invalid_argument("lbp_transform: image must be at least 3x3");
    LbpImage out;
    out.width = img.width - 2;
    out.height = img.height - 2;
    out.codes.resize(static_cast<std::size_t>(out.width) * out.height);
    // Clockwise from the top-left neighbor.
    static constexpr int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
    static constexpr int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    for (int y = 1; y + 1 < img.height; ++y) {
        for (int x = 1; x + 1 < img.width; ++x) {
            const std::uint8_t c = img.at(x, y);
            unsigned code = 0;
            for (int k = 0; k < 8; ++k)
                code = (code << 1) | (img.at(x + dx[k], y + dy[k]) > c ? 1u : 0u);
            out.codes[static_cast<std::size_t>(y - 1) * out.width + (x - 1)] =
                static_cast<std::uint8_t>(code);
        }
    }
    return out;
}

Histogram grid_histogram(const LbpImage& lbp, const LbphParams& p) {
    if (lbp.width < p.grid_x || lbp.height < p.grid_y)
        throw std::invalid_argument("grid_histogram: grid larger than LBP image");
    Histogram out(static_cast<std::size_t>(p.histogram_length()), 0.0);
    for (int gy = 0; gy < p.grid_y; ++gy) {
        const int y0 = gy * lbp.height / p.grid_y;
        const int y1 = (gy + 1) * lbp.height / p.grid_y;
        for (int gx = 0; gx < p.grid_x; ++gx) {
            const int x0 = gx * lbp.width / p.grid_x;
            const int x1 = (gx + 1) * lbp.width / p.grid_x;
            double* cell = &out[static_cast<std::size_t>(gy * p.grid_x + gx) * 256];
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) cell[lbp.at(x, y)] += 1.0;
            const double count = static_cast<double>(x1 - x0) * (y1 - y0);
            if (count > 0)
                for (int b = 0; b < 256; ++b) cell[b] /= count;
        }
    }
    return out;
}

Histogram face_histogram(const GrayImage& face, const LbphParams& p) {
    GrayImage sized = (face.width == p.face_w && face.height == p.face_h)
                          ? face
                          : resize_nearest(face, p.face_w, p.face_h);
    return grid_histogram(lbp_transform(sized), p);
}

double histogram_distance(const Histogram& a, const Histogram& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

double percentile95(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k =
        static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(k, 1, v.size()) - 1];
}

double calibrate_d0(const std::vector<LbphEntry>& entries) {
    if (entries.size() < 2) return 1.0;
    std::vector<double> same_label;
    std::vector<double> any_label;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        double best_same = -1.0, best_any = -1.0;
        for (std::size_t j = 0; j < entries.size(); ++j) {
            if (i == j) continue;
            const double d = histogram_distance(entries[i].histogram, entries[j].histogram);
            if (best_any < 0 || d < best_any) best_any = d;
            if (entries[i].label == entries[j].label && (best_same < 0 || d < best_same))
                best_same = d;
        }
        if (best_same >= 0) same_label.push_back(best_same);
        any_label.push_back(best_any);
    }
    const double d0 = percentile95(same_label.empty() ? any_label : same_label);
    return std::max(d0, 1e-9);
}

}  // namespace

LbphTrainResult train_lbph(const std::vector<std::pair<int, GrayImage>>& dataset,
                           const LbphParams& p, const std::map<int, std::string>& label_names) {
    if (dataset.empty()) throw std::invalid_argument("train_lbph: empty dataset");
    const auto start = std::chrono::steady_clock::now();
    LbphTrainResult out;
    out.model.params = p;
    out.model.label_names = label_names;
    out.model.entries.reserve(dataset.size());
    for (const auto& [label, img] : dataset)
        out.model.entries.push_back({label, face_histogram(img, p)});
    out.model.d0 = calibrate_d0(out.model.entries);
    out.training_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

Prediction predict_histogram(const LbphModel& m, const Histogram& h, double threshold_pct) {
    if (m.entries.empty()) throw std::invalid_argument("predict: untrained model");
    double best = -1.0;
    int best_label = kUnknownLabel;
    for (const LbphEntry& e : m.entries) {
        const double d = histogram_distance(h, e.histogram);
        if (best < 0 || d < best || (d == best && e.label < best_label)) {
            best = d;
            best_label = e.label;
        }
    }
    Prediction out;
    out.matched_label = best_label;
    out.distance = best;
    out.confidence_pct = std::clamp(100.0 * (1.0 - best / m.d0), 0.0, 100.0);
    out.accepted = out.confidence_pct > threshold_pct;
    out.label = out.accepted ? best_label : kUnknownLabel;
    return out;
}

Prediction predict(const LbphModel& m, const GrayImage& face, double threshold_pct) {
    return predict_histogram(m, face_histogram(face, m.params), threshold_pct);
}

void save_model(const LbphModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path);
    out << "facecheck-lbph v1\n";
    out << "params " << m.params.grid_x << " " << m.params.grid_y << " " << m.params.face_w
        << " " << m.params.face_h << " " << format_real(m.d0) << "\n";
    out << "names ";
    for (const auto& [label, name] : m.label_names) out << label << "=" << name << ";";
    out << "\n";
    for (const LbphEntry& e : m.entries) {
        out << "entry " << e.label;
        for (double b : e.histogram) out << " " << format_real(b);
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

LbphModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "facecheck-lbph v1")
        throw ParseError("unknown model file version");
    if (!std::getline(in, line)) throw ParseError("model file truncated: params");
    LbphModel m;
    {
        std::istringstream ss(line);
        std::string tag, d0tok;
        ss >> tag >> m.params.grid_x >> m.params.grid_y >> m.params.face_w >> m.params.face_h >>
            d0tok;
        if (tag != "params" || !ss || m.params.grid_x < 1 || m.params.grid_y < 1)
            throw ParseError("model file: malformed params line");
        m.d0 = parse_real(d0tok);
        if (m.d0 <= 0) throw ParseError("model file: d0 must be positive");
    }
    if (!std::getline(in, line) || line.rfind("names ", 0) != 0)
        throw ParseError("model file truncated: names");
    {
        std::istringstream ss(line.substr(6));
        std::string item;
        while (std::getline(ss, item, ';')) {
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ParseError("model file: malformed names entry");
            m.label_names[std::stoi(item.substr(0, eq))] = item.substr(eq + 1);
        }
    }
    const std::size_t expect = static_cast<std::size_t>(m.params.histogram_length());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tag;
        LbphEntry e;
        ss >> tag >> e.label;
        if (tag != "entry" || !ss) throw ParseError("model file: malformed entry line");
        std::string tok;
        while (ss >> tok) e.histogram.push_back(parse_real(tok));
        if (e.histogram.size() != expect)
            throw ParseError("model file: histogram length " +
                             std::to_string(e.histogram.size()) + " inconsistent with params");
        m.entries.push_back(std::move(e));
    }
    return m;
}

}  // namespace facecheck
