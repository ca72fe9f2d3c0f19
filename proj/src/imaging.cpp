#include "facecheck/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace facecheck {

IntegralImage::IntegralImage(const GrayImage& img, bool with_squares)
    : width_(img.width), height_(img.height) {
    const std::size_t cols = static_cast<std::size_t>(width_) + 1;
    sum_.assign(cols * (height_ + 1), 0);
    if (with_squares) sq_.assign(cols * (height_ + 1), 0);
    for (int y = 0; y < height_; ++y) {
        std::uint64_t row = 0;
        std::uint64_t row_sq = 0;
        for (int x = 0; x < width_; ++x) {
            const std::uint64_t v = img.at(x, y);
            row += v;
            sum_[idx(x + 1, y + 1)] = sum_[idx(x + 1, y)] + row;
            if (with_squares) {
                row_sq += v * v;
                sq_[idx(x + 1, y + 1)] = sq_[idx(x + 1, y)] + row_sq;
            }
        }
    }
}

void IntegralImage::check_rect(const Rect& r) const {
    if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1 || r.x + r.w > width_ || r.y + r.h > height_)
        throw std::out_of_range("rect_sum: rect outside image bounds");
}

std::uint64_t IntegralImage::rect_sum(const Rect& r) const {
    check_rect(r);
    return sum_[idx(r.x + r.w, r.y + r.h)] - sum_[idx(r.x, r.y + r.h)] -
           sum_[idx(r.x + r.w, r.y)] + sum_[idx(r.x, r.y)];
}

std::uint64_t IntegralImage::rect_sq_sum(const Rect& r) const {
    check_rect(r);
    if (sq_.empty()) throw std::logic_error("squared-sum table not built");
    return sq_[idx(r.x + r.w, r.y + r.h)] - sq_[idx(r.x, r.y + r.h)] -
           sq_[idx(r.x + r.w, r.y)] + sq_[idx(r.x, r.y)];
}

double IntegralImage::window_stddev(const Rect& r) const {
    const double n = static_cast<double>(r.w) * r.h;
    const double mean = static_cast<double>(rect_sum(r)) / n;
    const double mean_sq = static_cast<double>(rect_sq_sum(r)) / n;
    const double var = mean_sq - mean * mean;
    return std::sqrt(std::max(1.0, var));
}

GrayImage to_grayscale(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned r = img.data[3 * i];
        const unsigned g = img.data[3 * i + 1];
        const unsigned b = img.data[3 * i + 2];
        const unsigned luma = (299u * r + 587u * g + 114u * b + 500u) / 1000u;
        out.data[i] = static_cast<std::uint8_t>(std::min(luma, 255u));
    }
    return out;
}

GrayImage flip_vertical(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        const auto* src = &img.data[static_cast<std::size_t>(y) * img.width];
        auto* dst = &out.data[static_cast<std::size_t>(img.height - 1 - y) * img.width];
        std::copy(src, src + img.width, dst);
    }
    return out;
}

RgbImage flip_vertical(const RgbImage& img) {
    RgbImage out(img.width, img.height);
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    for (int y = 0; y < img.height; ++y) {
        const auto* src = &img.data[y * stride];
        auto* dst = &out.data[(img.height - 1 - y) * stride];
        std::copy(src, src + stride, dst);
    }
    return out;
}

GrayImage crop(const GrayImage& img, const Rect& r) {
    if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1 || r.x + r.w > img.width ||
        r.y + r.h > img.height)
        throw std::out_of_range("crop: rect outside image bounds");
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
    return out;
}

GrayImage resize_nearest(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: zero target dimension");
    GrayImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const int sy = static_cast<int>(static_cast<std::int64_t>(y) * img.height / out_h);
        for (int x = 0; x < out_w; ++x) {
            const int sx = static_cast<int>(static_cast<std::int64_t>(x) * img.width / out_w);
            out.at(x, y) = img.at(sx, sy);
        }
    }
    return out;
}

namespace {

// Reads one whitespace-separated header token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw ParseError("image header: unexpected end of file");
    return tok;
}

int parse_dim(const std::string& tok, const char* what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size() || v < 1) throw ParseError("bad value");
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("image header: malformed ") + what + " '" + tok + "'");
    }
}

struct PnmHeader {
    std::string magic;
    int width;
    int height;
};

PnmHeader read_header(std::istream& in, const char* expected_magic) {
    PnmHeader h;
    char m[2];
    if (!in.read(m, 2)) throw ParseError("image header: unexpected end of file");
    h.magic.assign(m, 2);
    if (h.magic[0] != 'P' || h.magic[1] < '1' || h.magic[1] > '7')
        throw ParseError("image header: not a PNM file");
    if (h.magic != expected_magic)
        throw ParseError("unsupported image format '" + h.magic + "', expected " +
                         expected_magic);
    h.width = parse_dim(next_token(in), "width");
    h.height = parse_dim(next_token(in), "height");
    const int maxval = parse_dim(next_token(in), "maxval");
    if (maxval != 255) throw ParseError("image header: maxval must be 255");
    return h;
}

void read_payload(std::istream& in, std::vector<std::uint8_t>& data) {
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (static_cast<std::size_t>(in.gcount()) != data.size())
        throw ParseError("image payload truncated");
}

std::string peek_magic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path);
    char m[2];
    if (!in.read(m, 2)) throw ParseError("image header: unexpected end of file");
    return std::string(m, 2);
}

}  // namespace

GrayImage decode_pgm(const std::uint8_t* data, std::size_t size) {
    std::istringstream in(std::string(reinterpret_cast<const char*>(data), size));
    const PnmHeader h = read_header(in, "P5");
    GrayImage img(h.width, h.height);
    read_payload(in, img.data);
    return img;
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path);
    const PnmHeader h = read_header(in, "P5");
    GrayImage img(h.width, h.height);
    read_payload(in, img.data);
    return img;
}

RgbImage load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path);
    const PnmHeader h = read_header(in, "P6");
    RgbImage img(h.width, h.height);
    read_payload(in, img.data);
    return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file: " + path);
    const auto bytes = encode_pgm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

void save_ppm(const RgbImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed: " + path);
}

LoadedImage load_image(const std::string& path) {
    const std::string magic = peek_magic(path);
    LoadedImage out;
    if (magic == "P5") {
        out.is_gray = true;
        out.gray = load_pgm(path);
    } else if (magic == "P6") {
        out.rgb = load_ppm(path);
    } else {
        throw ParseError("unsupported image format '" + magic + "' in " + path);
    }
    return out;
}

GrayImage load_gray(const std::string& path) {
    LoadedImage img = load_image(path);
    return img.is_gray ? std::move(img.gray) : to_grayscale(img.rgb);
}

}  // namespace facecheck
