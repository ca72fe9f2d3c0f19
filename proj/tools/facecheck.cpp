#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "facecheck/attendance.hpp"
#include "facecheck/boosting.hpp"
#include "facecheck/dataset.hpp"
#include "facecheck/detector.hpp"
#include "facecheck/eval.hpp"
#include "facecheck/imaging.hpp"
#include "facecheck/lbph.hpp"

using namespace facecheck;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTransport = 3;

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? v : fallback;
}

bool parse_grid(const std::string& s, LbphParams& p) {
    const auto x = s.find('x');
    if (x == std::string::npos) return false;
    try {
        p.grid_x = std::stoi(s.substr(0, x));
        p.grid_y = std::stoi(s.substr(x + 1));
    } catch (const std::exception&) {
        return false;
    }
    return p.grid_x >= 1 && p.grid_y >= 1;
}

std::vector<int> parse_schedule(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

std::vector<TrainSample> load_chip_dir(const std::string& dir, int label, int window) {
    std::vector<TrainSample> out;
    DirectoryFrameSource src(dir);
    while (auto frame = src.next()) {
        GrayImage g = std::holds_alternative<GrayImage>(*frame)
                          ? std::get<GrayImage>(std::move(*frame))
                          : to_grayscale(std::get<RgbImage>(*frame));
        if (g.width != window || g.height != window) g = resize_nearest(g, window, window);
        out.push_back({IntegralImage(g, true), label});
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"facecheck: face detection, recognition, and attendance toolkit"};
    app.require_subcommand(1);

    // enroll
    auto* enroll = app.add_subcommand("enroll", "Capture labeled face samples from a frame source");
    std::string en_source, en_cascade, en_name, en_out;
    int en_index = 0, en_count = 30, en_face_size = 96;
    enroll->add_option("--source", en_source, "Directory of frames (PGM/PPM)")->required();
    enroll->add_option("--cascade", en_cascade, "Cascade file")->required();
    enroll->add_option("--index", en_index, "Subject unique index")->required();
    enroll->add_option("--name", en_name, "Subject display name")->required();
    enroll->add_option("--count", en_count, "Samples to capture")->capture_default_str();
    enroll->add_option("--face-size", en_face_size, "Saved chip side in pixels")->capture_default_str();
    enroll->add_option("--out", en_out, "Dataset output directory")->required();

    // train-recognizer
    auto* trainrec = app.add_subcommand("train-recognizer", "Train the LBPH model from a dataset");
    std::string tr_dataset, tr_out, tr_grid = "10x10", tr_roster;
    int tr_face_size = 96;
    trainrec->add_option("--dataset", tr_dataset, "Dataset directory")->required();
    trainrec->add_option("--out", tr_out, "Model output file")->required();
    trainrec->add_option("--grid", tr_grid, "Histogram grid, e.g. 10x10")->capture_default_str();
    trainrec->add_option("--face-size", tr_face_size, "Face size in pixels")->capture_default_str();
    trainrec->add_option("--roster", tr_roster, "Roster file mapping index to name");

    // train-cascade
    auto* traincas = app.add_subcommand("train-cascade", "Train a boosted Haar cascade");
    std::string tc_pos, tc_neg, tc_out, tc_schedule = "1,10,25,25,50";
    double tc_rate = 0.995;
    int tc_window = 24;
    traincas->add_option("--pos", tc_pos, "Directory of positive chips")->required();
    traincas->add_option("--neg", tc_neg, "Directory of negative chips")->required();
    traincas->add_option("--schedule", tc_schedule, "Per-stage feature counts")->capture_default_str();
    traincas->add_option("--detection-rate", tc_rate, "Per-stage detection rate target")->capture_default_str();
    traincas->add_option("--window", tc_window, "Base window in pixels")->capture_default_str();
    traincas->add_option("--out", tc_out, "Cascade output file")->required();

    // detect
    auto* detect = app.add_subcommand("detect", "Detect faces in an image");
    std::string dt_cascade, dt_image;
    DetectParams dt_params;
    int dt_min_size = 0;
    detect->add_option("--cascade", dt_cascade, "Cascade file")->required();
    detect->add_option("--image", dt_image, "Input image (PGM/PPM)")->required();
    detect->add_option("--scale-factor", dt_params.scale_factor, "Scale ladder ratio")->capture_default_str();
    detect->add_option("--min-neighbors", dt_params.min_neighbors, "Grouping threshold")->capture_default_str();
    detect->add_option("--min-size", dt_min_size, "Minimum face size in pixels")->capture_default_str();

    // recognize
    auto* recognize = app.add_subcommand("recognize", "Recognize the largest face in an image");
    std::string rc_cascade, rc_model, rc_image;
    double rc_threshold = std::stod(env_or("FACECHECK_THRESHOLD", "85"));
    recognize->add_option("--cascade", rc_cascade, "Cascade file")->required();
    recognize->add_option("--model", rc_model, "LBPH model file")->required();
    recognize->add_option("--image", rc_image, "Input image")->required();
    recognize->add_option("--threshold", rc_threshold, "Confidence acceptance threshold")->capture_default_str();

    // checkin
    auto* checkin = app.add_subcommand("checkin", "Run check-in over a frame source and submit");
    std::string ci_cascade, ci_model, ci_source, ci_server, ci_location;
    double ci_threshold = std::stod(env_or("FACECHECK_THRESHOLD", "85"));
    checkin->add_option("--cascade", ci_cascade, "Cascade file")->required();
    checkin->add_option("--model", ci_model, "LBPH model file")->required();
    checkin->add_option("--source", ci_source, "Directory of frames")->required();
    checkin->add_option("--server", ci_server, "Attendance server URL")->required();
    checkin->add_option("--location", ci_location, "Device location string")->required();
    checkin->add_option("--threshold", ci_threshold, "Confidence acceptance threshold")->capture_default_str();

    // serve
    auto* serve = app.add_subcommand("serve", "Run the attendance record service");
    std::string sv_store = env_or("FACECHECK_STORE", "store");
    std::string sv_bind = env_or("FACECHECK_BIND", "127.0.0.1:8080");
    int sv_retention = 0, sv_cooldown = 300;
    serve->add_option("--store", sv_store, "Store directory")->capture_default_str();
    serve->add_option("--bind", sv_bind, "host:port to bind")->capture_default_str();
    serve->add_option("--retention-days", sv_retention, "Prune records older than N days")->capture_default_str();
    serve->add_option("--cooldown", sv_cooldown, "Suppress duplicate check-ins of a subject within N seconds")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Run the evaluation harness");
    std::string ev_cascade, ev_dataset, ev_split = "holdout", ev_out = "report.json";
    std::uint64_t ev_seed = 1;
    eval->add_option("--cascade", ev_cascade, "Cascade file (for FPS measurement)");
    eval->add_option("--dataset", ev_dataset, "Dataset directory")->required();
    eval->add_option("--split", ev_split, "Split mode: paper or holdout")->capture_default_str()
        ->check(CLI::IsMember({"paper", "holdout"}));
    eval->add_option("--seed", ev_seed, "Random seed")->capture_default_str();
    eval->add_option("--out", ev_out, "Report output path")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::cout << app.help();
            return kExitOk;
        }
        std::cerr << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*enroll) {
            const Cascade cascade = load_cascade(en_cascade);
            DirectoryFrameSource src(en_source);
            CollectOptions opt;
            opt.face_w = opt.face_h = en_face_size;
            const auto saved = collect_samples(src, cascade, {en_index, en_name}, en_count,
                                               en_out, opt);
            std::cout << saved.size() << " samples saved to " << en_out << "\n";
        } else if (*trainrec) {
            LbphParams p;
            if (!parse_grid(tr_grid, p)) {
                std::cerr << "invalid --grid '" << tr_grid << "'\n";
                return kExitUsage;
            }
            p.face_w = p.face_h = tr_face_size;
            std::map<int, std::string> names;
            if (!tr_roster.empty()) names = roster_load(tr_roster);
            const auto dataset = scan_dataset(tr_dataset);
            const LbphTrainResult r = train_lbph(dataset, p, names);
            save_model(r.model, tr_out);
            std::cout << "trained " << r.model.entries.size() << " entries in "
                      << r.training_time_s << " s\n";
        } else if (*traincas) {
            const auto schedule = parse_schedule(tc_schedule);
            const auto pos = load_chip_dir(tc_pos, +1, tc_window);
            const auto neg = load_chip_dir(tc_neg, -1, tc_window);
            CascadeTrainOptions opt;
            opt.schedule = schedule;
            opt.detection_rate = tc_rate;
            opt.verbose = true;
            CascadeTrainReport report;
            const Cascade c = train_cascade(pos, neg, opt, &report);
            save_cascade(c, tc_out);
            std::cout << "trained " << c.stages.size() << " stage(s) to " << tc_out << "\n";
        } else if (*detect) {
            const Cascade cascade = load_cascade(dt_cascade);
            dt_params.min_size = dt_min_size;
            for (const Detection& d : detect_multiscale(cascade, load_gray(dt_image), dt_params))
                std::cout << d.rect.x << " " << d.rect.y << " " << d.rect.w << " " << d.rect.h
                          << " " << d.neighbors << "\n";
        } else if (*recognize) {
            const Cascade cascade = load_cascade(rc_cascade);
            const LbphModel model = load_model(rc_model);
            const GrayImage img = load_gray(rc_image);
            const auto faces = detect_multiscale(cascade, img);
            if (faces.empty()) {
                std::cerr << "no face detected\n";
                return kExitData;
            }
            const auto largest = std::max_element(
                faces.begin(), faces.end(), [](const auto& a, const auto& b) {
                    return a.rect.w * a.rect.h < b.rect.w * b.rect.h;
                });
            const GrayImage chip = resize_nearest(crop(img, largest->rect), model.params.face_w,
                                                  model.params.face_h);
            const Prediction p = predict(model, chip, rc_threshold);
            if (p.accepted) {
                const auto it = model.label_names.find(p.label);
                const std::string name =
                    it != model.label_names.end() ? it->second : std::to_string(p.label);
                std::cout << p.label << " " << name << " " << p.confidence_pct << "\n";
            } else {
                std::cout << "unknown " << p.confidence_pct << "\n";
            }
        } else if (*checkin) {
            const Cascade cascade = load_cascade(ci_cascade);
            const LbphModel model = load_model(ci_model);
            DirectoryFrameSource src(ci_source);
            int submitted = 0;
            while (auto frame = src.next()) {
                const GrayImage g = std::holds_alternative<GrayImage>(*frame)
                                        ? std::get<GrayImage>(std::move(*frame))
                                        : to_grayscale(std::get<RgbImage>(*frame));
                const auto faces = detect_multiscale(cascade, g);
                if (faces.empty()) continue;
                const auto largest = std::max_element(
                    faces.begin(), faces.end(), [](const auto& a, const auto& b) {
                        return a.rect.w * a.rect.h < b.rect.w * b.rect.h;
                    });
                const GrayImage chip = resize_nearest(crop(g, largest->rect),
                                                      model.params.face_w, model.params.face_h);
                const Prediction p = predict(model, chip, ci_threshold);
                if (!p.accepted) {
                    std::cerr << "rejected: confidence " << p.confidence_pct << "\n";
                    continue;
                }
                AttendanceRecord rec;
                rec.subject_label = p.label;
                const auto it = model.label_names.find(p.label);
                rec.subject_name =
                    it != model.label_names.end() ? it->second : std::to_string(p.label);
                rec.timestamp = std::time(nullptr);
                rec.confidence_pct = p.confidence_pct;
                rec.device_location = ci_location;
                const ServerAck ack = submit_record(ci_server, rec, encode_pgm(chip));
                std::cout << "recorded " << rec.subject_name << " as record " << ack.record_id
                          << "\n";
                ++submitted;
            }
            std::cerr << submitted << " record(s) submitted\n";
        } else if (*serve) {
            const auto colon = sv_bind.rfind(':');
            if (colon == std::string::npos) {
                std::cerr << "invalid --bind '" << sv_bind << "', expected host:port\n";
                return kExitUsage;
            }
            AttendanceServer server(sv_store, sv_bind.substr(0, colon),
                                    std::stoi(sv_bind.substr(colon + 1)), sv_retention,
                                    sv_cooldown);
            server.start();
            std::cerr << "serving on " << sv_bind << " (store " << sv_store << ")\n";
            for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
        } else if (*eval) {
            const auto dataset = scan_dataset(ev_dataset);
            EvalOptions opt;
            opt.split = ev_split == "paper" ? SplitMode::PaperLiteral : SplitMode::Holdout;
            opt.seed = ev_seed;
            Cascade cascade;
            if (!ev_cascade.empty()) {
                cascade = load_cascade(ev_cascade);
                opt.cascade = &cascade;
            }
            const std::vector<Condition> conditions{
                {Lighting::Normal, Mask::None},
                {Lighting::Low, Mask::None},
                {Lighting::Normal, Mask::Worn},
                {Lighting::Low, Mask::Worn},
            };
            const AccuracyReport report = evaluate(dataset, conditions, opt);
            report_emit(report, ev_out);
            std::cout << report_table(report);
        }
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
