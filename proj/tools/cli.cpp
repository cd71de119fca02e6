#include "cli.hpp"

#include "handik/binary_io.hpp"
#include "handik/handmodel.hpp"
#include "handik/heatmaps.hpp"
#include "handik/ikfit.hpp"
#include "handik/metrics.hpp"
#include "handik/npy.hpp"
#include "handik/parallel.hpp"
#include "handik/sikdata.hpp"
#include "handik/siknet.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace handik::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
    std::uint64_t seed = 1;
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::string model_path;
    int vertices = kDefaultVertexCount;
    json config = json::object();
};

json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw binio::FormatError(path + ": malformed JSON: " + e.what(), e.byte);
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << text;
    if (!os) throw std::runtime_error("failed writing " + path);
}

std::string out_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

json section(const Globals& g, const char* name) {
    return g.config.contains(name) ? g.config.at(name) : json::object();
}

HandModel load_model(const Globals& g) {
    if (!g.model_path.empty()) return HandModel::load(g.model_path);
    return build_default_model(g.vertices);
}

Vec3 parse_vec3(const json& v) {
    if (!v.is_array() || v.size() != 3) throw binio::FormatError("expected a 3-vector", 0);
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

JointSet parse_joint_set(const json& arr, Units units) {
    if (!arr.is_array() || arr.size() != kNumJoints) {
        throw binio::FormatError("expected " + std::to_string(kNumJoints) + " joints", 0);
    }
    JointSet s;
    s.units = units;
    for (int j = 0; j < kNumJoints; ++j) s[j] = parse_vec3(arr[j]);
    return s;
}

json joint_set_json(const JointSet& s) {
    json arr = json::array();
    for (const Vec3& p : s.positions) arr.push_back({p.x(), p.y(), p.z()});
    return arr;
}

std::uint64_t derived_seed(const Globals& g, std::string_view stream) { return substream_seed(g.seed, stream); }

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::uint64_t hands = 0;
    std::uint64_t views = 0;
    bool paper_scale = false;
    std::string file = "dataset.sik1";
};

int cmd_generate(const Globals& g, const GenerateArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    SamplerConfig base = a.paper_scale ? SamplerConfig::paper_scale() : SamplerConfig::defaults();
    SamplerConfig cfg = SamplerConfig::from_json(section(g, "sampler"), base);
    if (sub.count("--hands")) cfg.n_hands = a.hands;
    if (sub.count("--views")) cfg.views_per_hand = a.views;
    cfg.seed = derived_seed(g, "dataset");
    cfg.validate();
    err << "generate: " << cfg.to_json().dump() << '\n';

    const HandModel model = load_model(g);
    const std::string path = out_path(g, a.file);
    SikWriter writer(path, static_cast<std::uint32_t>(cfg.views_per_hand));
    constexpr std::uint64_t kChunk = 256;
    for (std::uint64_t start = 0; start < cfg.n_hands; start += kChunk) {
        const std::uint64_t n = std::min(kChunk, cfg.n_hands - start);
        std::vector<std::vector<SikSample>> hands(n);
        parallel_for(n, [&](std::size_t i) { hands[i] = sample_hand_views(cfg, model, start + i); });
        for (const auto& h : hands)
            for (const auto& s : h) writer.write(s);
    }
    writer.close();
    out << writer.count() << " samples -> " << path << '\n';
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string data;
    std::string init;
    int epochs = 0;
    int batch = 0;
    double lr = 0.0;
    double lr_after = 0.0;
    int drop_epoch = 0;
    std::string mode;
    double noise = 0.0;
    bool no_direct_beta = false;
    int width = kSikDefaultWidth;
    std::string file = "siknet.skn1";
};

int cmd_train(const Globals& g, const TrainArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    TrainConfig cfg = TrainConfig::from_json(section(g, "train"));
    if (sub.count("--epochs")) cfg.epochs = a.epochs;
    if (sub.count("--batch")) cfg.batch_size = a.batch;
    if (sub.count("--lr")) cfg.lr = a.lr;
    if (sub.count("--lr-after")) cfg.lr_after_drop = a.lr_after;
    if (sub.count("--drop-epoch")) cfg.lr_drop_epoch = a.drop_epoch;
    if (sub.count("--mode")) cfg.objective.mode = train_mode_from_string(a.mode);
    if (sub.count("--noise")) cfg.noise_sigma = a.noise;
    if (a.no_direct_beta) cfg.objective.direct_beta = false;
    cfg.seed = derived_seed(g, "shuffle");
    cfg.diagnostic_path = out_path(g, "nan_dump.json");
    cfg.validate();
    err << "train: " << cfg.to_json().dump() << '\n';

    const HandModel model = load_model(g);
    const SikDataset ds = read_dataset(a.data);
    if (ds.samples.empty()) throw std::runtime_error(a.data + ": dataset is empty");
    const DatasetSplit sp = split(ds.samples.size(), ds.views_per_hand, 0.8, derived_seed(g, "split"));
    const SikNet init = a.init.empty() ? SikNet::create(derived_seed(g, "init"), a.width) : load_checkpoint(a.init, model);
    err << "train: " << sp.train.size() << " train / " << sp.test.size() << " test samples\n";

    const std::string log_path = out_path(g, "train_log.jsonl");
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot open " + log_path);
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r = train(init, model, ds.samples, sp, cfg, [&](const EpochLog& e) {
        log << e.to_json().dump() << '\n';
        log.flush();
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        err << "epoch " << e.epoch + 1 << '/' << cfg.epochs << " train " << e.train.total << " test_err "
            << e.test.joint_error << " (" << sec << " s)\n";
    });
    const std::string path = out_path(g, a.file);
    save_checkpoint(r.best, model, path);
    out << path << '\n';
    return 0;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string pred;
    std::string gt;
    std::string which = "test";
    double t_min = 20.0;
    double t_max = 50.0;
    int steps = 31;
    double ref_mm = 0.0;
};

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<JointSet> preds, gts;
    json summary;
    if (!a.pred.empty() || !a.gt.empty()) {
        if (a.pred.empty() || a.gt.empty()) throw std::invalid_argument("--pred and --gt must be given together");
        preds = read_joint_file(a.pred);
        gts = read_joint_file(a.gt);
        summary["mode"] = "files";
    } else {
        if (a.checkpoint.empty() || a.data.empty()) {
            throw std::invalid_argument("eval needs --checkpoint and --data, or --pred and --gt");
        }
        if (!fs::exists(a.checkpoint)) throw std::runtime_error("checkpoint not found: " + a.checkpoint);
        const HandModel model = load_model(g);
        const SikNet net = load_checkpoint(a.checkpoint, model);
        const SikDataset ds = read_dataset(a.data);
        const DatasetSplit sp = split(ds.samples.size(), ds.views_per_hand, 0.8, derived_seed(g, "split"));
        std::vector<std::size_t> idx;
        if (a.which == "test") {
            idx = sp.test;
        } else if (a.which == "train") {
            idx = sp.train;
        } else if (a.which == "all") {
            idx.resize(ds.samples.size());
            std::iota(idx.begin(), idx.end(), 0);
        } else {
            throw std::invalid_argument("--split must be test, train or all");
        }
        if (idx.empty()) throw std::runtime_error("selected split is empty");
        const auto& rest = model.rest_joints();
        const double ref = a.ref_mm > 0.0 ? a.ref_mm : (rest[kReferenceJoint] - rest[kRootJoint]).norm();
        const MeshJointLayer layer(model);
        preds.resize(idx.size());
        gts.resize(idx.size());
        parallel_for(idx.size(), [&](std::size_t k) {
            const SikSample& s = ds.samples[idx[k]];
            const auto p = predict_normalized_joints(net, {s.xbar, s.kbar}, layer);
            for (int j = 0; j < kNumJoints; ++j) {
                preds[k][j] = ref * p[j];
                gts[k][j] = ref * s.xbar[j];
            }
        });
        summary["mode"] = "checkpoint";
        summary["split"] = a.which;
        summary["reference_bone_mm"] = ref;
    }
    const PckCurve curve = pck_curve(preds, gts, a.t_min, a.t_max, a.steps);
    const std::vector<double> errors = joint_errors(preds, gts);
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= static_cast<double>(errors.size());
    summary["samples"] = preds.size();
    summary["auc"] = auc(curve);
    summary["mean_error"] = mean;
    summary["t_min"] = a.t_min;
    summary["t_max"] = a.t_max;
    summary["steps"] = a.steps;
    summary["pck_t_min"] = curve.values.front();
    summary["pck_t_max"] = curve.values.back();
    write_text(out_path(g, "pck.csv"), curve.to_csv());
    write_text(out_path(g, "eval.json"), summary.dump(2) + "\n");
    err << "eval: " << preds.size() << " samples, AUC " << summary["auc"].get<double>() << '\n';
    out << summary.dump() << '\n';
    return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string joints;
    bool export_mesh = false;
    int max_iters = 0;
    double tol = 0.0;
    std::string init;
};

FitConfig fit_config(const Globals& g, const FitArgs& a, const CLI::App& sub) {
    FitConfig cfg;
    const json j = section(g, "fit");
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.damping = j.value("damping", cfg.damping);
    cfg.tol = j.value("tol", cfg.tol);
    cfg.beta_weight = j.value("beta_weight", cfg.beta_weight);
    std::string init = j.value("init", std::string("seeded"));
    if (sub.count("--max-iters")) cfg.max_iters = a.max_iters;
    if (sub.count("--tol")) cfg.tol = a.tol;
    if (sub.count("--init")) init = a.init;
    if (init == "seeded") {
        cfg.init = FitInit::Seeded;
    } else if (init == "identity") {
        cfg.init = FitInit::Identity;
    } else {
        throw std::invalid_argument("--init must be seeded or identity");
    }
    cfg.validate();
    return cfg;
}

int cmd_fit(const Globals& g, const FitArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    const FitConfig cfg = fit_config(g, a, sub);
    err << "fit: " << cfg.to_json().dump() << '\n';
    const HandModel model = load_model(g);
    const std::vector<JointSet> targets = read_joint_file(a.joints);
    if (targets.empty()) throw binio::FormatError(a.joints + ": no joint sets", 0);
    std::vector<FitResult> results(targets.size());
    parallel_for(targets.size(), [&](std::size_t i) { results[i] = fit(targets[i], model, cfg); });

    json doc = json::array();
    for (std::size_t i = 0; i < targets.size(); ++i) {
        json r = results[i].to_json();
        if (a.export_mesh) {
            // Place the model-space mesh on the target: same root, same scale.
            HandMesh mesh = posed_mesh(model, results[i].beta, results[i].quats);
            const JointSet mj = mesh_to_joints(model, mesh);
            const Vec3 root_t = targets[i][kRootJoint];
            const double s = (targets[i][kReferenceJoint] - root_t).norm() /
                             (mj[kReferenceJoint] - mj[kRootJoint]).norm();
            for (Vec3& v : mesh.vertices) v = root_t + s * (v - mj[kRootJoint]);
            const std::string name = targets.size() == 1 ? "fit.obj" : "fit_" + std::to_string(i) + ".obj";
            const std::string path = out_path(g, name);
            export_obj(mesh, path);
            r["mesh"] = path;
        }
        doc.push_back(r);
    }
    const json result = targets.size() == 1 ? doc[0] : doc;
    const std::string path = out_path(g, "fit.json");
    write_text(path, result.dump(2) + "\n");
    out << result.dump() << '\n';
    return 0;
}

// ------------------------------------------------------------------ decode

struct DecodeArgs {
    std::string volume;
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    double root_depth = 0.0;
    double scale = 1.0;
};

int cmd_decode(const Globals& g, const DecodeArgs& a, const CLI::App& sub, std::ostream& out, std::ostream&) {
    const HeatVolume vol = volume_from_npy(read_npy(a.volume));
    const std::vector<Uvd> uvd = soft_argmax(vol);
    json doc;
    json u = json::array();
    for (const Uvd& p : uvd) u.push_back({p.u, p.v, p.d});
    doc["uvd"] = u;
    doc["depth_resolution"] = vol.depth;
    if (sub.count("--fx") || sub.count("--fy")) {
        const CameraIntrinsics intr(a.fx, a.fy, a.cx, a.cy);
        const auto xyz = uvd_to_xyz(uvd, intr, {a.root_depth, a.scale}, vol.depth);
        json x = json::array();
        for (const Vec3& p : xyz) x.push_back({p.x(), p.y(), p.z()});
        doc["xyz"] = x;
    }
    write_text(out_path(g, "decoded.json"), doc.dump(2) + "\n");
    out << doc.dump() << '\n';
    return 0;
}

// ------------------------------------------------------------------ export

struct ExportArgs {
    std::string shape;
    std::string pose;
};

int cmd_export(const Globals& g, const ExportArgs& a, std::ostream& out, std::ostream&) {
    const HandModel model = load_model(g);
    HandShape shape;
    Pose pose = identity_pose();
    if (!a.shape.empty()) {
        const json j = read_json(a.shape);
        if (!j.is_array() || j.size() != kNumShape) throw binio::FormatError(a.shape + ": expected 10 values", 0);
        for (int i = 0; i < kNumShape; ++i) shape.beta[i] = j[i].get<double>();
    }
    if (!a.pose.empty()) {
        const json j = read_json(a.pose);
        if (!j.is_array() || j.size() != kNumArticulated) {
            throw binio::FormatError(a.pose + ": expected 16 quaternions", 0);
        }
        for (int k = 0; k < kNumArticulated; ++k) {
            if (!j[k].is_array() || j[k].size() != 4) throw binio::FormatError(a.pose + ": expected [w,x,y,z]", 0);
            pose[k] = Quat{j[k][0].get<double>(), j[k][1].get<double>(), j[k][2].get<double>(), j[k][3].get<double>()}
                          .normalized();
        }
    }
    const std::string model_path = out_path(g, "hand_model.hfm");
    const std::string skel_path = out_path(g, "skeleton.json");
    const std::string mesh_path = out_path(g, "mesh.obj");
    model.save(model_path);
    write_text(skel_path, model.skeleton(shape).to_json().dump(2) + "\n");
    export_obj(posed_mesh(model, shape, pose), mesh_path);
    out << model_path << '\n' << skel_path << '\n' << mesh_path << '\n';
    return 0;
}

}  // namespace

std::vector<JointSet> read_joint_file(const std::string& path) {
    const json j = read_json(path);
    try {
        Units units = Units::Millimeters;
        const json* body = &j;
        bool single = false;
        if (j.is_object()) {
            const std::string u = j.value("units", std::string("mm"));
            if (u == "normalized") {
                units = Units::Normalized;
            } else if (u != "mm") {
                throw binio::FormatError(path + ": units must be mm or normalized", 0);
            }
            if (j.contains("samples")) {
                body = &j.at("samples");
            } else if (j.contains("joints")) {
                body = &j.at("joints");
                single = true;
            } else {
                throw binio::FormatError(path + ": expected a 'samples' or 'joints' key", 0);
            }
        }
        if (!body->is_array() || body->empty()) throw binio::FormatError(path + ": empty joint list", 0);
        if (!single && (*body)[0].is_array() && !(*body)[0].empty() && (*body)[0][0].is_number()) single = true;
        std::vector<JointSet> out;
        if (single) {
            out.push_back(parse_joint_set(*body, units));
        } else {
            for (const json& s : *body) out.push_back(parse_joint_set(s, units));
        }
        return out;
    } catch (const json::exception& e) {
        throw binio::FormatError(path + ": " + e.what(), 0);
    } catch (const binio::FormatError& e) {
        throw binio::FormatError(path + ": " + e.what(), e.offset());
    }
}

void write_joint_file(const std::string& path, const std::vector<JointSet>& sets) {
    json samples = json::array();
    for (const JointSet& s : sets) samples.push_back(joint_set_json(s));
    const bool normalized = !sets.empty() && sets[0].units == Units::Normalized;
    const json doc = {{"units", normalized ? "normalized" : "mm"}, {"samples", samples}};
    write_text(path, doc.dump() + "\n");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shape-aware hand inverse kinematics toolkit", "handik"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Root seed for every random stream");
    app.add_option("--config", g.config_path, "JSON config file (sections: sampler, train, fit, model)");
    app.add_option("--out", g.out_dir, "Output directory");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--model", g.model_path, "HFM1 hand model file (default: built-in procedural hand)");
    app.add_option("--vertices", g.vertices, "Vertex count of the built-in hand model");

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "Sample a synthetic location-rotation dataset (SIK1)");
    gen->add_option("--hands", ga.hands, "Number of hands");
    gen->add_option("--views", ga.views, "Views per hand");
    gen->add_flag("--paper-scale", ga.paper_scale, "20000 hands x 50 views");
    gen->add_option("--file", ga.file, "Output file name inside --out");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train the IK network on a SIK1 dataset");
    tr->add_option("--data", ta.data, "SIK1 dataset")->required();
    tr->add_option("--init", ta.init, "Start from this SKN1 checkpoint");
    tr->add_option("--epochs", ta.epochs);
    tr->add_option("--batch", ta.batch);
    tr->add_option("--lr", ta.lr);
    tr->add_option("--lr-after", ta.lr_after, "Learning rate after the drop epoch");
    tr->add_option("--drop-epoch", ta.drop_epoch);
    tr->add_option("--mode", ta.mode, "full or finetune");
    tr->add_option("--noise", ta.noise, "Input joint noise sigma (finetune)");
    tr->add_flag("--no-direct-beta", ta.no_direct_beta, "Disable the direct shape supervision term");
    tr->add_option("--width", ta.width, "Hidden layer width of a freshly initialized net");
    tr->add_option("--file", ta.file, "Checkpoint file name inside --out");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "PCK curve and AUC");
    ev->add_option("--checkpoint", ea.checkpoint);
    ev->add_option("--data", ea.data);
    ev->add_option("--pred", ea.pred, "Predicted joints (JSON)");
    ev->add_option("--gt", ea.gt, "Ground-truth joints (JSON)");
    ev->add_option("--split", ea.which, "test, train or all");
    ev->add_option("--t-min", ea.t_min);
    ev->add_option("--t-max", ea.t_max);
    ev->add_option("--steps", ea.steps);
    ev->add_option("--ref-mm", ea.ref_mm, "Reference bone length used to express normalized errors in mm");

    FitArgs fa;
    auto* fi = app.add_subcommand("fit", "Fit pose and shape to target joints");
    fi->add_option("--joints", fa.joints, "Target joints (JSON)")->required();
    fi->add_flag("--export-mesh", fa.export_mesh, "Also write the fitted mesh as OBJ");
    fi->add_option("--max-iters", fa.max_iters);
    fi->add_option("--tol", fa.tol);
    fi->add_option("--init", fa.init, "seeded or identity");

    DecodeArgs da;
    auto* de = app.add_subcommand("decode", "Soft-argmax a K x Z x H x W heat volume (.npy)");
    de->add_option("--volume", da.volume)->required();
    de->add_option("--fx", da.fx);
    de->add_option("--fy", da.fy);
    de->add_option("--cx", da.cx);
    de->add_option("--cy", da.cy);
    de->add_option("--root-depth", da.root_depth);
    de->add_option("--scale", da.scale);

    ExportArgs xa;
    auto* ex = app.add_subcommand("export", "Write the hand model, its skeleton and a posed mesh");
    ex->add_option("--shape", xa.shape, "JSON array of 10 shape coefficients");
    ex->add_option("--pose", xa.pose, "JSON array of 16 [w,x,y,z] quaternions");

    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (!g.config_path.empty()) {
            g.config = read_json(g.config_path);
            if (!g.config.is_object()) throw binio::FormatError(g.config_path + ": config must be an object", 0);
            if (!app.count("--seed")) g.seed = g.config.value("seed", g.seed);
            if (!app.count("--threads")) g.threads = g.config.value("threads", g.threads);
            if (!app.count("--out")) g.out_dir = g.config.value("out", g.out_dir);
            if (!app.count("--vertices") && g.config.contains("model")) {
                g.vertices = g.config.at("model").value("vertices", g.vertices);
            }
        }
        set_thread_count(g.threads);
        err << "seed " << g.seed << ", threads " << thread_count() << ", out " << g.out_dir << '\n';
        if (*gen) return cmd_generate(g, ga, *gen, out, err);
        if (*tr) return cmd_train(g, ta, *tr, out, err);
        if (*ev) return cmd_eval(g, ea, out, err);
        if (*fi) return cmd_fit(g, fa, *fi, out, err);
        if (*de) return cmd_decode(g, da, *de, out, err);
        if (*ex) return cmd_export(g, xa, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace handik::cli
