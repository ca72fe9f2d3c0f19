#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "facecheck/detector.hpp"
#include "facecheck/imaging.hpp"

namespace facecheck {

struct Subject {
    int unique_index = 0;
    std::string display_name;
};

using Frame = std::variant<GrayImage, RgbImage>;

// Deterministic ordered frame provider standing in for a live camera.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::optional<Frame> next() = 0;
};

// Frames from PGM/PPM files in a directory, lexicographic order.
class DirectoryFrameSource : public FrameSource {
public:
    explicit DirectoryFrameSource(const std::string& dir);
    std::optional<Frame> next() override;

private:
    std::vector<std::string> paths_;
    std::size_t pos_ = 0;
};

// One image repeated a fixed number of times.
class RepeatFrameSource : public FrameSource {
public:
    RepeatFrameSource(GrayImage img, int count) : img_(std::move(img)), left_(count) {}
    std::optional<Frame> next() override {
        if (left_ <= 0) return std::nullopt;
        --left_;
        return Frame{img_};
    }

private:
    GrayImage img_;
    int left_;
};

std::string sample_filename(int unique_index, int seq);
std::optional<std::pair<int, int>> parse_sample_filename(const std::string& name);

struct CollectOptions {
    int face_w = 96;
    int face_h = 96;
    DetectParams detect;
};

// Enrollment loop: per frame flip vertically, grayscale, detect, crop the
// largest face, resize and save as User.<idx>.<seq>.pgm until n samples are
// saved. Frames without a face are skipped. Throws IoError if the source
// exhausts first (partial files are retained).
std::vector<std::string> collect_samples(FrameSource& src, const Cascade& cascade,
                                         const Subject& subject, int n,
                                         const std::string& out_dir,
                                         const CollectOptions& opt = {});

// Reads every conforming User.<idx>.<seq>.pgm in (label, seq) order;
// nonconforming names are skipped with a warning on stderr.
std::vector<std::pair<int, GrayImage>> scan_dataset(const std::string& dir);

std::map<int, std::string> roster_load(const std::string& path);
void roster_save(const std::map<int, std::string>& roster, const std::string& path);

}  // namespace facecheck
