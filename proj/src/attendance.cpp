#include "facecheck/attendance.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace facecheck {

std::string format_timestamp(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::time_t parse_timestamp(const std::string& s) {
    std::tm tm{};
    char z = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &tm.tm_year, &tm.tm_mon,
                    &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &z) != 7 ||
        z != 'Z' || s.size() != 20)
        throw ParseError("malformed timestamp '" + s + "'");
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    const std::time_t t = timegm(&tm);
    if (t == -1) throw ParseError("timestamp out of range '" + s + "'");
    return t;
}

std::int64_t utc_date_index(std::time_t t) {
    // Floor division keeps pre-1970 instants on the right calendar day.
    return (t >= 0 ? t : t - 86399) / 86400;
}

std::int64_t parse_date(const std::string& yyyy_mm_dd) {
    int y, m, d;
    if (std::sscanf(yyyy_mm_dd.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 ||
        yyyy_mm_dd.size() != 10 || m < 1 || m > 12 || d < 1 || d > 31)
        throw ParseError("malformed date '" + yyyy_mm_dd + "' (expected YYYY-MM-DD)");
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = m - 1;
    tm.tm_mday = d;
    return utc_date_index(timegm(&tm));
}

std::string AttendanceRecord::to_json() const {
    json j{{"record_id", record_id},
           {"subject_label", subject_label},
           {"subject_name", subject_name},
           {"timestamp", format_timestamp(timestamp)},
           {"confidence_pct", confidence_pct},
           {"device_location", device_location},
           {"image_ref", image_ref}};
    return j.dump();
}

AttendanceRecord AttendanceRecord::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed record JSON: ") + e.what());
    }
    try {
        AttendanceRecord r;
        r.record_id = j.at("record_id").get<std::int64_t>();
        r.subject_label = j.at("subject_label").get<int>();
        r.subject_name = j.at("subject_name").get<std::string>();
        r.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
        r.confidence_pct = j.at("confidence_pct").get<double>();
        r.device_location = j.at("device_location").get<std::string>();
        r.image_ref = j.at("image_ref").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("record JSON missing field: ") + e.what());
    }
}

AttendanceStore::AttendanceStore(const std::string& dir) : dir_(dir) {
    fs::create_directories(fs::path(dir_) / "images");
    for (const AttendanceRecord& r : scan()) next_id_ = std::max(next_id_, r.record_id + 1);
}

std::string AttendanceStore::records_path() const {
    return (fs::path(dir_) / "records.jsonl").string();
}

AttendanceRecord AttendanceStore::append(AttendanceRecord record,
                                         const std::vector<std::uint8_t>& image) {
    std::lock_guard lock(write_mutex_);
    record.record_id = next_id_;
    record.image_ref = "images/" + std::to_string(record.record_id) + ".pgm";
    {
        std::ofstream img(fs::path(dir_) / record.image_ref, std::ios::binary);
        if (!img) throw IoError("cannot write check-in image for record " +
                                std::to_string(record.record_id));
        img.write(reinterpret_cast<const char*>(image.data()),
                  static_cast<std::streamsize>(image.size()));
        if (!img) throw IoError("check-in image write failed");
    }
    // Single O_APPEND write of one whole line; readers never see a partial
    // record except after a crash mid-write.
    std::ofstream out(records_path(), std::ios::app);
    if (!out) throw IoError("cannot open record store for append");
    out << record.to_json() << "\n";
    out.flush();
    if (!out) throw IoError("record append failed");
    ++next_id_;
    return record;
}

std::vector<AttendanceRecord> AttendanceStore::scan() const {
    std::vector<AttendanceRecord> out;
    std::ifstream in(records_path());
    if (!in) return out;
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(AttendanceRecord::from_json(lines[i]));
        } catch (const ParseError& e) {
            if (i + 1 == lines.size()) {
                std::cerr << "warning: dropping torn final record line: " << e.what() << "\n";
                break;
            }
            throw;
        }
    }
    return out;
}

std::vector<AttendanceRecord> AttendanceStore::query(const QueryRange& range) const {
    std::vector<AttendanceRecord> out;
    for (AttendanceRecord& r : scan()) {
        const std::int64_t day = utc_date_index(r.timestamp);
        if (day < range.from_date || day > range.to_date) continue;
        if (range.subject_label && r.subject_label != *range.subject_label) continue;
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.timestamp < b.timestamp;
    });
    return out;
}

std::optional<std::string> AttendanceStore::image_path(std::int64_t record_id) const {
    for (const AttendanceRecord& r : scan())
        if (r.record_id == record_id) {
            const auto p = fs::path(dir_) / r.image_ref;
            if (fs::exists(p)) return p.string();
        }
    return std::nullopt;
}

std::size_t AttendanceStore::prune_older_than(int retention_days, std::time_t now) {
    std::lock_guard lock(write_mutex_);
    const std::vector<AttendanceRecord> all = scan();
    const std::time_t cutoff = now - static_cast<std::time_t>(retention_days) * 86400;
    std::vector<AttendanceRecord> keep;
    std::size_t dropped = 0;
    for (const AttendanceRecord& r : all) {
        if (r.timestamp < cutoff) {
            ++dropped;
            std::error_code ec;
            fs::remove(fs::path(dir_) / r.image_ref, ec);
        } else {
            keep.push_back(r);
        }
    }
    if (dropped == 0) return 0;
    const std::string tmp = records_path() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot rewrite record store");
        for (const AttendanceRecord& r : keep) out << r.to_json() << "\n";
        if (!out) throw IoError("record store rewrite failed");
    }
    fs::rename(tmp, records_path());
    return dropped;
}

CheckInResult check_in(const Cascade& cascade, const LbphModel& model, const GrayImage& frame,
                       const std::string& device_location, AttendanceStore& store,
                       const CheckInOptions& opt) {
    CheckInResult result{CheckInOutcome::NoFace, std::nullopt, {}};
    const auto faces = detect_multiscale(cascade, frame, opt.detect);
    if (faces.empty()) return result;
    const auto largest =
        std::max_element(faces.begin(), faces.end(), [](const auto& a, const auto& b) {
            return a.rect.w * a.rect.h < b.rect.w * b.rect.h;
        });
    const GrayImage chip = resize_nearest(crop(frame, largest->rect), model.params.face_w,
                                          model.params.face_h);
    result.prediction = predict(model, chip, opt.threshold_pct);
    if (!result.prediction.accepted) {
        result.outcome = CheckInOutcome::Rejected;
        return result;
    }
    const std::time_t now = opt.now ? opt.now : std::time(nullptr);
    for (const AttendanceRecord& r : store.scan()) {
        if (r.subject_label == result.prediction.label && r.timestamp <= now &&
            now - r.timestamp < opt.cooldown_seconds) {
            result.outcome = CheckInOutcome::CooldownSuppressed;
            return result;
        }
    }
    AttendanceRecord rec;
    rec.subject_label = result.prediction.label;
    const auto name_it = model.label_names.find(result.prediction.label);
    rec.subject_name = name_it != model.label_names.end()
                           ? name_it->second
                           : std::to_string(result.prediction.label);
    rec.timestamp = now;
    rec.confidence_pct = result.prediction.confidence_pct;
    rec.device_location = device_location;
    result.record = store.append(rec, encode_pgm(chip));
    result.outcome = CheckInOutcome::Recorded;
    return result;
}

}  // namespace facecheck
