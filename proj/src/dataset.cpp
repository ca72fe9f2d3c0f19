#include "facecheck/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace facecheck {

DirectoryFrameSource::DirectoryFrameSource(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm") paths_.push_back(e.path().string());
    }
    std::sort(paths_.begin(), paths_.end());
}

std::optional<Frame> DirectoryFrameSource::next() {
    if (pos_ >= paths_.size()) return std::nullopt;
    LoadedImage img = load_image(paths_[pos_++]);
    if (img.is_gray) return Frame{std::move(img.gray)};
    return Frame{std::move(img.rgb)};
}

std::string sample_filename(int unique_index, int seq) {
    return "User." + std::to_string(unique_index) + "." + std::to_string(seq) + ".pgm";
}

namespace {

std::optional<int> parse_int_strict(const std::string& s) {
    if (s.empty()) return std::nullopt;
    for (char c : s)
        if (c < '0' || c > '9') return std::nullopt;
    try {
        return std::stoi(s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::optional<std::pair<int, int>> parse_sample_filename(const std::string& name) {
    // User.<idx>.<seq>.pgm
    if (name.rfind("User.", 0) != 0) return std::nullopt;
    if (name.size() < 5 + 4 || name.substr(name.size() - 4) != ".pgm") return std::nullopt;
    const std::string body = name.substr(5, name.size() - 5 - 4);
    const auto dot = body.find('.');
    if (dot == std::string::npos || body.find('.', dot + 1) != std::string::npos)
        return std::nullopt;
    const auto idx = parse_int_strict(body.substr(0, dot));
    const auto seq = parse_int_strict(body.substr(dot + 1));
    if (!idx || !seq || *idx < 1 || *seq < 1) return std::nullopt;
    return std::make_pair(*idx, *seq);
}

std::vector<std::string> collect_samples(FrameSource& src, const Cascade& cascade,
                                         const Subject& subject, int n,
                                         const std::string& out_dir, const CollectOptions& opt) {
    if (n < 1) throw std::invalid_argument("collect_samples: n must be >= 1");
    fs::create_directories(out_dir);
    std::vector<std::string> saved;
    while (static_cast<int>(saved.size()) < n) {
        auto frame = src.next();
        if (!frame)
            throw IoError("frame source exhausted after " + std::to_string(saved.size()) +
                          " of " + std::to_string(n) + " samples");
        GrayImage gray = std::holds_alternative<GrayImage>(*frame)
                             ? std::get<GrayImage>(std::move(*frame))
                             : to_grayscale(std::get<RgbImage>(*frame));
        gray = flip_vertical(gray);
        const auto faces = detect_multiscale(cascade, gray, opt.detect);
        if (faces.empty()) continue;
        const auto largest =
            std::max_element(faces.begin(), faces.end(), [](const auto& a, const auto& b) {
                return a.rect.w * a.rect.h < b.rect.w * b.rect.h;
            });
        const GrayImage chip =
            resize_nearest(crop(gray, largest->rect), opt.face_w, opt.face_h);
        const std::string path =
            (fs::path(out_dir) /
             sample_filename(subject.unique_index, static_cast<int>(saved.size()) + 1))
                .string();
        save_pgm(chip, path);
        saved.push_back(path);
    }
    return saved;
}

std::vector<std::pair<int, GrayImage>> scan_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::tuple<int, int, std::string>> found;  // (label, seq, path)
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string name = e.path().filename().string();
        const auto parsed = parse_sample_filename(name);
        if (!parsed) {
            std::cerr << "warning: skipping nonconforming dataset file '" << name << "'\n";
            continue;
        }
        found.emplace_back(parsed->first, parsed->second, e.path().string());
    }
    std::sort(found.begin(), found.end());
    std::vector<std::pair<int, GrayImage>> out;
    out.reserve(found.size());
    for (const auto& [label, seq, path] : found) {
        try {
            out.emplace_back(label, load_gray(path));
        } catch (const std::exception& e) {
            throw ParseError("unreadable dataset image " + path + ": " + e.what());
        }
    }
    return out;
}

std::map<int, std::string> roster_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open roster file: " + path);
    std::map<int, std::string> roster;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("roster line " + std::to_string(lineno) + ": missing tab");
        const auto idx = parse_int_strict(line.substr(0, tab));
        const std::string name = line.substr(tab + 1);
        if (!idx || *idx < 1 || name.empty())
            throw ParseError("roster line " + std::to_string(lineno) + ": malformed entry");
        if (!roster.emplace(*idx, name).second)
            throw ParseError("roster line " + std::to_string(lineno) + ": duplicate index " +
                             std::to_string(*idx));
    }
    return roster;
}

void roster_save(const std::map<int, std::string>& roster, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write roster file: " + path);
    for (const auto& [idx, name] : roster) out << idx << "\t" << name << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace facecheck
