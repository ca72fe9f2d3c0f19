#pragma once

#include <cstdint>
#include <ctime>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "facecheck/detector.hpp"
#include "facecheck/lbph.hpp"

namespace facecheck {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AttendanceRecord {
    std::int64_t record_id = 0;
    int subject_label = 0;
    std::string subject_name;
    std::time_t timestamp = 0;  // UTC seconds
    double confidence_pct = 0.0;
    std::string device_location;
    std::string image_ref;  // relative to the store directory

    std::string to_json() const;
    static AttendanceRecord from_json(const std::string& text);
};

// ISO-8601 YYYY-MM-DDThh:mm:ssZ, UTC, second precision.
std::string format_timestamp(std::time_t t);
std::time_t parse_timestamp(const std::string& s);

// Days since epoch of the UTC calendar date; used for inclusive range checks.
std::int64_t utc_date_index(std::time_t t);
std::int64_t parse_date(const std::string& yyyy_mm_dd);  // date index

struct QueryRange {
    std::int64_t from_date;  // inclusive, date index
    std::int64_t to_date;    // inclusive
    std::optional<int> subject_label;
};

// Append-only line-delimited record store with a flat image directory.
// Appends are serialized through a single writer; ids are gap-free per store
// instance and resume from the maximum persisted id after a restart.
class AttendanceStore {
public:
    explicit AttendanceStore(const std::string& dir);

    // Fills in record_id and image_ref, persists the record and image.
    AttendanceRecord append(AttendanceRecord record, const std::vector<std::uint8_t>& image);

    // All complete records; a torn final line is dropped with a warning on
    // stderr.
    std::vector<AttendanceRecord> scan() const;

    std::vector<AttendanceRecord> query(const QueryRange& range) const;

    std::optional<std::string> image_path(std::int64_t record_id) const;

    // Drops records older than `days` relative to `now`; rewrites the file.
    std::size_t prune_older_than(int retention_days, std::time_t now);

    const std::string& dir() const { return dir_; }

private:
    std::string records_path() const;
    std::string dir_;
    mutable std::mutex write_mutex_;
    std::int64_t next_id_ = 1;
};

enum class CheckInOutcome { Recorded, NoFace, Rejected, CooldownSuppressed };

struct CheckInResult {
    CheckInOutcome outcome;
    std::optional<AttendanceRecord> record;
    Prediction prediction;  // meaningful unless outcome is NoFace
};

struct CheckInOptions {
    double threshold_pct = 85.0;
    int cooldown_seconds = 300;
    DetectParams detect;
    std::time_t now = 0;  // 0 = current time
};

CheckInResult check_in(const Cascade& cascade, const LbphModel& model, const GrayImage& frame,
                       const std::string& device_location, AttendanceStore& store,
                       const CheckInOptions& opt = {});

struct SubmitOptions {
    int max_attempts = 3;
    int initial_backoff_ms = 1000;  // doubles per retry
};

struct ServerAck {
    int status = 0;
    std::int64_t record_id = 0;
};

// POST /api/v1/attendance as multipart/form-data (parts `meta` and `image`).
// Connection failures are retried with doubling backoff; 4xx responses are
// permanent and throw TransportError with the server message.
ServerAck submit_record(const std::string& server_url, const AttendanceRecord& record,
                        const std::vector<std::uint8_t>& image_bytes,
                        const SubmitOptions& opt = {});

class AttendanceServer {
public:
    // cooldown_seconds > 0 suppresses a duplicate check-in of the same
    // subject inside the window: the POST acks 201 with the existing record
    // id and appends nothing.
    AttendanceServer(const std::string& store_dir, const std::string& host, int port,
                     int retention_days = 0, int cooldown_seconds = 0);
    ~AttendanceServer();

    // Binds and serves on a background thread; throws on bind failure.
    void start();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_;
};

}  // namespace facecheck
