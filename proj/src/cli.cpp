#include "crowdtrack/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "crowdtrack/datagen.hpp"
#include "crowdtrack/metrics.hpp"
#include "crowdtrack/mot_io.hpp"
#include "crowdtrack/tracker.hpp"
#include "crowdtrack/training.hpp"

namespace crowdtrack::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double kv_double(const std::map<std::string, std::string>& kv,
                 const std::string& key, double fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stod(it->second);
}

TrackerConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    TrackerConfig cfg;
    cfg.high_thresh = kv_double(kv, "high_thresh", cfg.high_thresh);
    cfg.low_thresh = kv_double(kv, "low_thresh", cfg.low_thresh);
    cfg.iou_reject = kv_double(kv, "iou_reject", cfg.iou_reject);
    cfg.init_score = kv_double(kv, "init_score", cfg.init_score);
    cfg.max_lost_age = static_cast<int>(
        kv_double(kv, "max_lost_age", cfg.max_lost_age));
    cfg.refind_thresh = kv_double(kv, "refind_thresh", cfg.refind_thresh);
    cfg.mask_xi = kv_double(kv, "mask_xi", cfg.mask_xi);
    cfg.frame_w = kv_double(kv, "frame_w", cfg.frame_w);
    cfg.frame_h = kv_double(kv, "frame_h", cfg.frame_h);
    if (const auto it = kv.find("mode"); it != kv.end()) {
        cfg.mode = tracker_mode_from_string(it->second);
    }
    return cfg;
}

std::vector<std::pair<std::string, std::string>> tracker_config_kv(
    const TrackerConfig& cfg) {
    return {
        {"mode", to_string(cfg.mode)},
        {"high_thresh", fmt(cfg.high_thresh)},
        {"low_thresh", fmt(cfg.low_thresh)},
        {"iou_reject", fmt(cfg.iou_reject)},
        {"init_score", fmt(cfg.init_score)},
        {"max_lost_age", std::to_string(cfg.max_lost_age)},
        {"refind_thresh", fmt(cfg.refind_thresh)},
        {"mask_xi", fmt(cfg.mask_xi)},
        {"frame_w", fmt(cfg.frame_w)},
        {"frame_h", fmt(cfg.frame_h)},
    };
}

std::vector<std::pair<std::string, std::string>> sim_config_kv(
    const datagen::SimConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"sim_frame_w", fmt(cfg.frame_w)},
        {"sim_frame_h", fmt(cfg.frame_h)},
        {"sim_agents", std::to_string(cfg.num_agents)},
        {"sim_frames", std::to_string(cfg.num_frames)},
        {"sim_speed_min", fmt(cfg.speed_min)},
        {"sim_speed_max", fmt(cfg.speed_max)},
        {"sim_repulsion_strength", fmt(cfg.repulsion_strength)},
        {"sim_repulsion_radius", fmt(cfg.repulsion_radius)},
        {"sim_box_w_min", fmt(cfg.box_w_min)},
        {"sim_box_w_max", fmt(cfg.box_w_max)},
        {"sim_box_aspect_min", fmt(cfg.box_aspect_min)},
        {"sim_box_aspect_max", fmt(cfg.box_aspect_max)},
        {"sim_noise_pos_std", fmt(cfg.noise_pos_std)},
        {"sim_noise_size_std", fmt(cfg.noise_size_std)},
        {"sim_fn_rate", fmt(cfg.fn_rate)},
        {"sim_fp_rate", fmt(cfg.fp_rate)},
        {"sim_seed", std::to_string(cfg.seed)},
    };
    int idx = 0;
    for (const auto& o : cfg.occluders) {
        std::ostringstream ss;
        ss << fmt(o.left) << ";" << fmt(o.top) << ";" << fmt(o.width) << ";"
           << fmt(o.height) << ";" << o.start_frame << ";" << o.end_frame;
        kv.emplace_back("sim_occluder" + std::to_string(idx++), ss.str());
    }
    for (const auto& [id, wps] : cfg.scripted_waypoints) {
        std::ostringstream ss;
        for (size_t i = 0; i < wps.size(); ++i) {
            if (i) ss << ";";
            ss << fmt(wps[i][0]) << ":" << fmt(wps[i][1]);
        }
        kv.emplace_back("sim_waypoints" + std::to_string(id), ss.str());
    }
    return kv;
}

std::vector<evalio::MotRow> gt_rows_from_sim(const datagen::SimOutput& sim) {
    std::vector<evalio::MotRow> rows;
    for (const auto& track : sim.gt) {
        for (size_t f = 0; f < track.boxes.size(); ++f) {
            evalio::MotRow r;
            r.frame = static_cast<int>(f) + 1;
            r.id = track.id;
            r.box = track.boxes[f];
            r.score = 1.0;
            r.cls = 1;
            r.visibility = track.visibility[f];
            rows.push_back(r);
        }
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.frame < b.frame; });
    return rows;
}

std::vector<evalio::MotRow> det_rows_from_sim(const datagen::SimOutput& sim) {
    std::vector<evalio::MotRow> rows;
    for (const auto& [frame, dets] : sim.detections) {
        for (const auto& d : dets) {
            evalio::MotRow r;
            r.frame = frame;
            r.id = -1;
            r.box = d.box;
            r.score = d.score;
            rows.push_back(r);
        }
    }
    return rows;
}

void write_sim_output(const datagen::SimOutput& sim, const std::string& dir,
                      const TrackerConfig& tracker_defaults) {
    fs::create_directories(dir);
    evalio::write_mot(dir + "/gt.txt", gt_rows_from_sim(sim));
    evalio::write_mot(dir + "/det.txt", det_rows_from_sim(sim));
    auto kv = tracker_config_kv(tracker_defaults);
    const auto sim_kv = sim_config_kv(sim.cfg);
    kv.insert(kv.end(), sim_kv.begin(), sim_kv.end());
    evalio::write_kv(dir + "/config.cfg", kv);
}

struct LoadedModels {
    std::optional<interaction::Model> interaction;
    std::optional<refind::Model> refind;
};

LoadedModels load_models(const std::vector<std::string>& weight_files) {
    LoadedModels models;
    for (const auto& path : weight_files) {
        const nnet::Params p = nnet::load_params(path);
        if (p.contains("interaction/meta")) {
            models.interaction = interaction::Model::from_checkpoint(path);
        }
        if (p.contains("refind/meta")) {
            models.refind = refind::Model::from_checkpoint(path);
        }
    }
    return models;
}

// ---- default synthetic training corpora ----

std::vector<training::IntrSample> default_intr_corpus(uint64_t seed,
                                                      double* frame_w,
                                                      double* frame_h) {
    std::vector<training::IntrSample> samples;
    double w = 0.0, h = 0.0;
    for (const std::string& name :
         {std::string("dense_crowd_20"), std::string("occlusion_30"),
          std::string("clean"), std::string("slow")}) {
        datagen::SimConfig cfg;
        if (name == "slow") {
            cfg = datagen::scenario("clean");
            cfg.speed_min = 2.0;
            cfg.speed_max = 4.0;
        } else {
            cfg = datagen::scenario(name);
        }
        w = std::max(w, cfg.frame_w);
        h = std::max(h, cfg.frame_h);
        for (int k = 1; k <= 2; ++k) {
            cfg.seed = seed * 1000 + k;
            const auto sim = datagen::simulate(cfg);
            const auto built =
                training::build_intr_samples(datagen::gt_trajectories(sim));
            samples.insert(samples.end(), built.begin(), built.end());
        }
    }
    const auto straight =
        training::build_intr_samples(training::straight_line_trajectories(w, h, 2.0, 10.0));
    samples.insert(samples.end(), straight.begin(), straight.end());
    *frame_w = w;
    *frame_h = h;
    return samples;
}

std::vector<training::CorrSample> default_corr_corpus(uint64_t seed, int max_gap,
                                                      double* frame_w,
                                                      double* frame_h) {
    std::vector<training::CorrSample> samples;
    const std::vector<std::string> names = {"dense_crowd_20", "crowd_vis025",
                                            "occlusion_120"};
    double w = 0.0, h = 0.0;
    for (size_t n = 0; n < names.size(); ++n) {
        datagen::SimConfig cfg = datagen::scenario(names[n]);
        w = std::max(w, cfg.frame_w);
        h = std::max(h, cfg.frame_h);
        for (int k = 1; k <= 2; ++k) {
            cfg.seed = seed * 1000 + 100 * n + k;
            const auto sim = datagen::simulate(cfg);
            const auto built = training::build_corr_samples(
                datagen::gt_trajectories(sim), /*negatives_per_positive=*/1,
                cfg.seed + 7, max_gap, 30, /*positives_per_traj=*/14);
            samples.insert(samples.end(), built.begin(), built.end());
        }
    }
    *frame_w = w;
    *frame_h = h;
    return samples;
}

int cmd_simulate(const std::string& scenario_name, std::optional<uint64_t> seed,
                 std::optional<int> frames, const std::string& out_dir,
                 std::ostream& out) {
    datagen::SimConfig cfg = datagen::scenario(scenario_name);
    if (seed) cfg.seed = *seed;
    if (frames) cfg.num_frames = *frames;
    const datagen::SimOutput sim = datagen::simulate(cfg);
    TrackerConfig tracker_defaults;
    tracker_defaults.frame_w = cfg.frame_w;
    tracker_defaults.frame_h = cfg.frame_h;
    write_sim_output(sim, out_dir, tracker_defaults);
    size_t det_count = 0;
    for (const auto& [f, d] : sim.detections) det_count += d.size();
    out << "scenario\t" << scenario_name << "\n"
        << "frames\t" << cfg.num_frames << "\n"
        << "agents\t" << cfg.num_agents << "\n"
        << "detections\t" << det_count << "\n"
        << "out\t" << out_dir << "\n";
    return 0;
}

int cmd_track(const std::string& dets_path, const std::string& config_path,
              const std::vector<std::string>& weights, const std::string& out_path,
              std::ostream& out) {
    const TrackerConfig cfg = config_from_kv(evalio::read_kv(config_path));
    const auto dets = evalio::to_detections(evalio::parse_mot(dets_path));
    LoadedModels models = load_models(weights);
    const auto rows = run_sequence(dets, cfg, std::move(models.interaction),
                                   std::move(models.refind));
    evalio::write_mot(out_path, evalio::from_track_rows(rows));
    std::set<int> ids;
    for (const auto& r : rows) ids.insert(r.id);
    out << "mode\t" << to_string(cfg.mode) << "\n"
        << "rows\t" << rows.size() << "\n"
        << "tracks\t" << ids.size() << "\n"
        << "out\t" << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& module, const std::vector<std::string>& gt_files,
              uint64_t seed, int epochs, double lr, double frame_w, double frame_h,
              int max_lost_age, const std::string& out_path,
              const std::string& curve_path, std::ostream& out) {
    training::TrainConfig tc;
    tc.seed = seed;
    tc.max_lost_age = max_lost_age;
    tc.frame_w = frame_w;
    tc.frame_h = frame_h;
    const bool is_refind = module == "refind";
    tc.lr = lr > 0.0 ? lr : (is_refind ? training::kRefindLr : training::kInteractionLr);
    tc.epochs = epochs > 0 ? epochs
                           : (is_refind ? training::kRefindEpochs
                                        : training::kInteractionEpochs);
    tc.patience = is_refind ? 35 : 40;

    training::TrainReport report;
    if (module == "interaction") {
        std::vector<training::IntrSample> samples;
        if (gt_files.empty()) {
            samples = default_intr_corpus(seed, &tc.frame_w, &tc.frame_h);
        } else {
            for (const auto& path : gt_files) {
                const auto built = training::build_intr_samples(
                    evalio::to_trajectories(evalio::parse_mot(path)));
                samples.insert(samples.end(), built.begin(), built.end());
            }
        }
        interaction::Model model = interaction::Model::create(32, 3, 2, seed);
        report = training::train_interaction(model, samples, tc);
        model.save(out_path);
        out << "module\tinteraction\n"
            << "samples\t" << samples.size() << "\n";
    } else if (module == "refind") {
        std::vector<training::CorrSample> samples;
        if (gt_files.empty()) {
            samples = default_corr_corpus(seed, max_lost_age, &tc.frame_w,
                                          &tc.frame_h);
        } else {
            for (const auto& path : gt_files) {
                const auto built = training::build_corr_samples(
                    evalio::to_trajectories(evalio::parse_mot(path)), 1, seed + 7,
                    max_lost_age);
                samples.insert(samples.end(), built.begin(), built.end());
            }
        }
        refind::Model model = refind::Model::create({5, 16, 32}, 3, seed);
        report = training::train_refind(model, samples, tc);
        model.save(out_path);
        const double acc = training::refind_accuracy(model, samples, tc, 0.9);
        out << "module\trefind\n"
            << "samples\t" << samples.size() << "\n"
            << "train_accuracy\t" << fmt(acc) << "\n";
    } else {
        throw std::invalid_argument("train: module must be interaction or refind");
    }
    if (!curve_path.empty()) {
        training::write_loss_curve(curve_path, report);
    }
    out << "epochs_run\t" << report.curve.size() << "\n"
        << "best_val\t" << fmt(report.best_val) << "\n"
        << "checkpoint\t" << out_path << "\n";
    if (report.aborted_nan) {
        out << "aborted\tnan\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& gt_path, const std::string& hyp_path,
                 std::optional<int> crowd_min, std::ostream& out) {
    auto gt_rows = evalio::parse_mot(gt_path);
    // MOT gt conventions: class other than pedestrian or zeroed confidence
    // marks rows to ignore
    std::erase_if(gt_rows, [](const evalio::MotRow& r) {
        return (r.cls >= 0 && r.cls != 1) || r.score == 0.0;
    });
    const auto hyp_rows = evalio::parse_mot(hyp_path);
    const auto gt = evalio::group_rows(gt_rows);
    const auto hyp = evalio::group_rows(hyp_rows);
    const evalio::MetricsReport report = evalio::evaluate(gt, hyp);
    out << "mota\t" << fmt(report.mota) << "\n"
        << "idf1\t" << fmt(report.idf1) << "\n"
        << "fp\t" << report.fp << "\n"
        << "fn\t" << report.fn << "\n"
        << "id_switches\t" << report.id_switches << "\n"
        << "frag\t" << report.frag << "\n"
        << "num_gt\t" << report.num_gt << "\n";
    if (crowd_min) {
        const auto stratified = evalio::crowd_mota(gt_rows, hyp, *crowd_min);
        out << "crowd_mota_" << *crowd_min << "\t"
            << (stratified ? fmt(*stratified) : std::string("empty")) << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& param, const std::vector<int>& values,
              const std::string& scenario_name, std::optional<uint64_t> seed,
              const std::vector<std::string>& modes,
              const std::vector<std::string>& weights, std::ostream& out) {
    if (param != "max_lost_age") {
        throw std::invalid_argument("sweep: only --param max_lost_age is supported");
    }
    datagen::SimConfig sim_cfg = datagen::scenario(scenario_name);
    if (seed) sim_cfg.seed = *seed;
    const datagen::SimOutput sim = datagen::simulate(sim_cfg);
    const auto gt = evalio::group_rows(gt_rows_from_sim(sim));

    out << "mode\t" << param << "\tmota\tidf1\tid_switches\n";
    for (const auto& mode_name : modes) {
        for (int value : values) {
            TrackerConfig cfg;
            cfg.mode = tracker_mode_from_string(mode_name);
            cfg.frame_w = sim_cfg.frame_w;
            cfg.frame_h = sim_cfg.frame_h;
            cfg.max_lost_age = value;
            LoadedModels models = load_models(weights);
            const auto rows =
                run_sequence(sim.detections, cfg, std::move(models.interaction),
                             std::move(models.refind));
            const auto report =
                evalio::evaluate(gt, evalio::group_rows(evalio::from_track_rows(rows)));
            out << mode_name << "\t" << value << "\t" << fmt(report.mota) << "\t"
                << fmt(report.idf1) << "\t" << report.id_switches << "\n";
        }
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"crowdtrack: interaction-aware multi-object tracking"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic scenario");
    std::string sim_scenario, sim_out;
    uint64_t sim_seed = 0;
    int sim_frames = 0;
    sim->add_option("--scenario", sim_scenario, "scenario name")->required();
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--seed", sim_seed);
    sim->add_option("--frames", sim_frames);

    // track
    auto* track = app.add_subcommand("track", "run the tracker over detections");
    std::string track_dets, track_config, track_out;
    std::vector<std::string> track_weights;
    track->add_option("--dets", track_dets, "MOT detections file")->required();
    track->add_option("--config", track_config, "tracker config file")->required();
    track->add_option("--weights", track_weights, "model checkpoint (repeatable)");
    track->add_option("--out", track_out, "output MOT file")->required();

    // train
    auto* train = app.add_subcommand("train", "train a module");
    std::string train_module, train_out, train_curve;
    std::vector<std::string> train_gt;
    uint64_t train_seed = 1;
    int train_epochs = 0;
    double train_lr = 0.0;
    double train_fw = 1920.0, train_fh = 1080.0;
    int train_mla = 120;
    train->add_option("--module", train_module, "interaction or refind")->required();
    train->add_option("--gt", train_gt, "MOT gt file (repeatable)");
    train->add_option("--seed", train_seed);
    train->add_option("--epochs", train_epochs);
    train->add_option("--lr", train_lr);
    train->add_option("--frame-width", train_fw);
    train->add_option("--frame-height", train_fh);
    train->add_option("--max-lost-age", train_mla);
    train->add_option("--curve", train_curve, "loss curve output file");
    train->add_option("--out", train_out, "checkpoint output")->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "CLEAR/IDF1 metrics");
    std::string eval_gt, eval_hyp;
    int eval_crowd_min = 0;
    eval->add_option("--gt", eval_gt)->required();
    eval->add_option("--hyp", eval_hyp)->required();
    eval->add_option("--crowd-min", eval_crowd_min);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "parameter sweep experiment");
    std::string sweep_param = "max_lost_age", sweep_scenario = "occlusion_120";
    std::vector<int> sweep_values;
    std::vector<std::string> sweep_modes = {"baseline_kf", "interaction+refind"};
    std::vector<std::string> sweep_weights;
    uint64_t sweep_seed = 0;
    sweep->add_option("--param", sweep_param);
    sweep->add_option("--values", sweep_values, "comma separated")
        ->required()
        ->delimiter(',');
    sweep->add_option("--scenario", sweep_scenario);
    sweep->add_option("--modes", sweep_modes)->delimiter(',');
    sweep->add_option("--weights", sweep_weights);
    sweep->add_option("--seed", sweep_seed);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(
                sim_scenario,
                sim->count("--seed") ? std::optional<uint64_t>(sim_seed) : std::nullopt,
                sim->count("--frames") ? std::optional<int>(sim_frames) : std::nullopt,
                sim_out, out);
        }
        if (track->parsed()) {
            return cmd_track(track_dets, track_config, track_weights, track_out, out);
        }
        if (train->parsed()) {
            return cmd_train(train_module, train_gt, train_seed, train_epochs,
                             train_lr, train_fw, train_fh, train_mla, train_out,
                             train_curve, out);
        }
        if (eval->parsed()) {
            return cmd_evaluate(eval_gt, eval_hyp,
                                eval->count("--crowd-min")
                                    ? std::optional<int>(eval_crowd_min)
                                    : std::nullopt,
                                out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(sweep_param, sweep_values, sweep_scenario,
                             sweep->count("--seed")
                                 ? std::optional<uint64_t>(sweep_seed)
                                 : std::nullopt,
                             sweep_modes, sweep_weights, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: no subcommand\n";
    return 2;
}

}  // namespace crowdtrack::cli
