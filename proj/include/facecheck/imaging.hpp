#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace facecheck {

// Thrown for malformed or unreadable image files and stores.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const Rect&) const = default;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major, width*height

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }

    bool operator==(const GrayImage&) const = default;
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major r,g,b triples

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    bool operator==(const RgbImage&) const = default;
};

// Summed-area table with a zero first row and column, so a rectangle sum
// never needs a branch. Entries hold the sum of all pixels strictly
// above-left of the entry coordinate.
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const GrayImage& img, bool with_squares = false);

    int width() const { return width_; }    // source image width
    int height() const { return height_; }  // source image height
    bool has_squares() const { return !sq_.empty(); }

    std::uint64_t sum_at(int x, int y) const { return sum_[idx(x, y)]; }
    std::uint64_t sq_at(int x, int y) const { return sq_[idx(x, y)]; }

    // Sum of pixels inside r; throws std::out_of_range for out-of-bounds rects.
    std::uint64_t rect_sum(const Rect& r) const;
    std::uint64_t rect_sq_sum(const Rect& r) const;

    // Standard deviation of pixels in r, floored at sqrt(eps) with eps = 1.
    double window_stddev(const Rect& r) const;

private:
    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * (width_ + 1) + x;
    }
    void check_rect(const Rect& r) const;

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> sum_;
    std::vector<std::uint64_t> sq_;
};

GrayImage to_grayscale(const RgbImage& img);

GrayImage flip_vertical(const GrayImage& img);
RgbImage flip_vertical(const RgbImage& img);

GrayImage crop(const GrayImage& img, const Rect& r);
GrayImage resize_nearest(const GrayImage& img, int out_w, int out_h);

// Binary PGM (P5) / PPM (P6), maxval 255.
GrayImage load_pgm(const std::string& path);
RgbImage load_ppm(const std::string& path);
void save_pgm(const GrayImage& img, const std::string& path);
void save_ppm(const RgbImage& img, const std::string& path);

std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
GrayImage decode_pgm(const std::uint8_t* data, std::size_t size);

// Loads either format; exactly one of the outputs is filled.
struct LoadedImage {
    bool is_gray = false;
    GrayImage gray;
    RgbImage rgb;
};
LoadedImage load_image(const std::string& path);

// Convenience: load any supported image and return it as grayscale.
GrayImage load_gray(const std::string& path);

}  // namespace facecheck
