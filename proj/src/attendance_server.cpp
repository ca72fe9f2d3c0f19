#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "facecheck/attendance.hpp"

using nlohmann::json;

namespace facecheck {

namespace {

// Splits "http://host:port" for the client.
std::pair<std::string, int> parse_url(const std::string& url) {
    std::string rest = url;
    const std::string prefix = "http://";
    if (rest.rfind(prefix, 0) == 0) rest = rest.substr(prefix.size());
    if (!rest.empty() && rest.back() == '/') rest.pop_back();
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) return {rest, 80};
    return {rest.substr(0, colon), std::stoi(rest.substr(colon + 1))};
}

}  // namespace

ServerAck submit_record(const std::string& server_url, const AttendanceRecord& record,
                        const std::vector<std::uint8_t>& image_bytes, const SubmitOptions& opt) {
    const auto [host, port] = parse_url(server_url);
    int backoff_ms = opt.initial_backoff_ms;
    std::string last_error = "no attempts made";
    for (int attempt = 1; attempt <= opt.max_attempts; ++attempt) {
        httplib::Client cli(host, port);
        httplib::MultipartFormDataItems items{
            {"meta", record.to_json(), "", "application/json"},
            {"image", std::string(image_bytes.begin(), image_bytes.end()), "checkin.pgm",
             "application/octet-stream"},
        };
        auto res = cli.Post("/api/v1/attendance", items);
        if (res) {
            if (res->status == 201) {
                try {
                    const json j = json::parse(res->body);
                    return {res->status, j.at("record_id").get<std::int64_t>()};
                } catch (const json::exception& e) {
                    throw TransportError(std::string("malformed server ack: ") + e.what());
                }
            }
            // 4xx is a permanent rejection; do not retry.
            throw TransportError("server rejected record (status " +
                                 std::to_string(res->status) + "): " + res->body);
        }
        last_error = httplib::to_string(res.error());
        if (attempt < opt.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
    throw TransportError("cannot reach " + server_url + " after " +
                         std::to_string(opt.max_attempts) + " attempts: " + last_error);
}

struct AttendanceServer::Impl {
    AttendanceStore store;
    httplib::Server server;
    std::thread thread;
    std::string host;
    int cooldown_seconds = 0;

    explicit Impl(const std::string& dir, std::string host_) : store(dir), host(std::move(host_)) {}
};

AttendanceServer::AttendanceServer(const std::string& store_dir, const std::string& host,
                                   int port, int retention_days, int cooldown_seconds)
    : impl_(std::make_unique<Impl>(store_dir, host)), port_(port) {
    impl_->cooldown_seconds = cooldown_seconds;
    if (retention_days > 0) {
        const std::size_t dropped =
            impl_->store.prune_older_than(retention_days, std::time(nullptr));
        if (dropped > 0)
            std::fprintf(stderr, "retention: pruned %zu record(s) older than %d days\n",
                         dropped, retention_days);
    }

    auto& srv = impl_->server;
    auto& store = impl_->store;

    srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    const int cooldown = impl_->cooldown_seconds;
    srv.Post("/api/v1/attendance", [&store, cooldown](const httplib::Request& req,
                                                      httplib::Response& res) {
        if (!req.has_file("meta") || !req.has_file("image")) {
            res.status = 400;
            res.set_content(R"({"status":"error","message":"parts meta and image required"})",
                            "application/json");
            return;
        }
        try {
            AttendanceRecord rec = AttendanceRecord::from_json(req.get_file_value("meta").content);
            if (cooldown > 0) {
                for (const AttendanceRecord& prev : store.scan()) {
                    if (prev.subject_label == rec.subject_label &&
                        prev.timestamp <= rec.timestamp &&
                        rec.timestamp - prev.timestamp < cooldown) {
                        res.status = 201;
                        res.set_content(
                            json{{"status", "cooldown"}, {"record_id", prev.record_id}}.dump(),
                            "application/json");
                        return;
                    }
                }
            }
            const std::string& img = req.get_file_value("image").content;
            rec = store.append(rec, std::vector<std::uint8_t>(img.begin(), img.end()));
            res.status = 201;
            res.set_content(json{{"status", "ok"}, {"record_id", rec.record_id}}.dump(),
                            "application/json");
        } catch (const ParseError& e) {
            res.status = 400;
            res.set_content(json{{"status", "error"}, {"message", e.what()}}.dump(),
                            "application/json");
        }
    });

    srv.Get("/api/v1/attendance", [&store](const httplib::Request& req,
                                           httplib::Response& res) {
        try {
            if (!req.has_param("from") || !req.has_param("to"))
                throw ParseError("query parameters from and to are required");
            QueryRange range;
            range.from_date = parse_date(req.get_param_value("from"));
            range.to_date = parse_date(req.get_param_value("to"));
            if (range.from_date > range.to_date) throw ParseError("from date is after to date");
            if (req.has_param("subject"))
                range.subject_label = std::stoi(req.get_param_value("subject"));
            json out = json::array();
            for (const AttendanceRecord& r : store.query(range))
                out.push_back(json::parse(r.to_json()));
            res.set_content(out.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json{{"status", "error"}, {"message", e.what()}}.dump(),
                            "application/json");
        }
    });

    srv.Get(R"(/api/v1/attendance/(\d+)/image)", [&store](const httplib::Request& req,
                                                          httplib::Response& res) {
        const std::int64_t id = std::stoll(req.matches[1]);
        const auto path = store.image_path(id);
        if (!path) {
            res.status = 404;
            res.set_content(R"({"status":"error","message":"unknown record id"})",
                            "application/json");
            return;
        }
        std::ifstream in(*path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        res.set_content(bytes, "application/octet-stream");
    });
}

AttendanceServer::~AttendanceServer() { stop(); }

void AttendanceServer::start() {
    auto& srv = impl_->server;
    if (port_ == 0) {
        port_ = srv.bind_to_any_port(impl_->host);
        if (port_ < 0) throw TransportError("cannot bind attendance server");
        impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
    } else {
        if (!srv.bind_to_port(impl_->host, port_))
            throw TransportError("cannot bind attendance server to port " +
                                 std::to_string(port_));
        impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
    }
    srv.wait_until_ready();
}

void AttendanceServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

}  // namespace facecheck
