#include "handik/siknet.hpp"

#include "handik/binary_io.hpp"
#include "handik/parallel.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace handik {

namespace {

std::vector<int> head_dims(int width, int out) {
    std::vector<int> dims{kSikInputDim};
    for (int i = 0; i < kSikWeightLayers - 1; ++i) dims.push_back(width);
    dims.push_back(out);
    return dims;
}

void write_head(binio::Writer& w, const DenseNet& net) {
    w.u32(static_cast<std::uint32_t>(net.dims().size()));
    for (int d : net.dims()) w.u32(static_cast<std::uint32_t>(d));
    w.f64_array(std::vector<double>(net.params().begin(), net.params().end()));
}

DenseNet read_head(binio::Reader& r, int expected_out) {
    const std::uint64_t at = r.offset();
    const std::uint32_t n = r.u32();
    if (n != kSikWeightLayers + 1) {
        throw binio::FormatError("expected " + std::to_string(kSikWeightLayers) + " weight layers", at);
    }
    std::vector<int> dims(n);
    for (auto& d : dims) {
        d = static_cast<int>(r.u32());
        if (d <= 0 || d > (1 << 20)) throw binio::FormatError("implausible layer width", r.offset() - 4);
    }
    if (dims.front() != kSikInputDim || dims.back() != expected_out) {
        throw binio::FormatError("head input/output dimensions do not match", at);
    }
    DenseNet net(dims);
    const std::vector<double> values = r.f64_array(net.param_count());
    net.params().assign(values.begin(), values.end());
    return net;
}

void accumulate(BatchTerms& acc, const BatchTerms& t, double w) {
    acc.total += w * t.total;
    acc.quaternion += w * t.quaternion;
    acc.shape += w * t.shape;
    acc.joint += w * t.joint;
    acc.direct_beta += w * t.direct_beta;
    acc.joint_error += w * t.joint_error;
}

bool all_finite(const ParamVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

SikNet SikNet::create(std::uint64_t seed, int width) {
    SikNet net = zeros(width);
    std::mt19937_64 theta_rng = substream(seed, "init-theta");
    std::mt19937_64 beta_rng = substream(seed, "init-beta");
    net.theta_reg.init_kaiming(theta_rng);
    net.beta_reg.init_kaiming(beta_rng);
    auto b = net.theta_reg.bias(kSikWeightLayers - 1);
    for (int a = 0; a < kNumArticulated; ++a) b[4 * a] = 1.0;
    return net;
}

SikNet SikNet::zeros(int width) {
    if (width <= 0) throw std::invalid_argument("hidden width must be positive");
    return {DenseNet(head_dims(width, kSikQuatDim)), DenseNet(head_dims(width, kNumShape))};
}

Eigen::VectorXd sik_input(const NormalizedPose& p) {
    Eigen::VectorXd x(kSikInputDim);
    for (int j = 0; j < kNumJoints; ++j) {
        x.segment<3>(3 * j) = p.xbar[j];
        x.segment<3>(3 * kNumJoints + 3 * j) = p.kbar[j];
    }
    if (!x.allFinite()) throw TrainingError("network input is not finite");
    return x;
}

Pose normalize_quats(const RawQuats& q) {
    Pose out;
    for (int a = 0; a < kNumArticulated; ++a) {
        const double n = q[a].norm();
        if (!(n > 1e-12) || !std::isfinite(n)) {
            throw TrainingError("predicted quaternion " + std::to_string(a) + " cannot be normalized");
        }
        out[a] = Quat::from_coeffs(q[a] / n);
    }
    return out;
}

void SikNet::forward_batch(const Eigen::MatrixXd& inputs, Eigen::MatrixXd& quats, Eigen::MatrixXd& betas,
                           DenseNet::Cache* theta_cache, DenseNet::Cache* beta_cache) const {
    quats = theta_reg.forward(inputs, theta_cache);
    betas = beta_reg.forward(inputs, beta_cache);
}

SikOutput SikNet::forward(const NormalizedPose& input) const {
    Eigen::MatrixXd x = sik_input(input);
    Eigen::MatrixXd q, b;
    forward_batch(x, q, b);
    SikOutput out;
    for (int a = 0; a < kNumArticulated; ++a) out.quats[a] = q.block<4, 1>(4 * a, 0);
    for (int i = 0; i < kNumShape; ++i) out.shape.beta[i] = b(i, 0);
    return out;
}

std::string to_string(TrainMode m) { return m == TrainMode::Full ? "full" : "finetune"; }

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "full") return TrainMode::Full;
    if (s == "finetune") return TrainMode::Finetune;
    throw std::invalid_argument("unknown training mode '" + s + "' (expected full or finetune)");
}

nlohmann::json BatchTerms::to_json() const {
    return {{"total", total},     {"quaternion", quaternion}, {"shape", shape},
            {"joint", joint},     {"direct_beta", direct_beta}, {"joint_error", joint_error}};
}

BatchResult evaluate_batch(const SikNet& net, const MeshJointLayer& layer, const HandModel& model,
                           const std::vector<NormalizedPose>& inputs, const std::vector<const SikSample*>& targets,
                           const ObjectiveConfig& obj, bool want_grad) {
    if (inputs.size() != targets.size()) throw std::invalid_argument("evaluate_batch: inputs/targets size mismatch");
    const std::size_t n = inputs.size();
    BatchResult out;
    if (n == 0) return out;
    obj.weights.validate();
    const bool full = obj.mode == TrainMode::Full;
    const double w_direct = full && obj.direct_beta ? obj.direct_beta_weight : 0.0;

    Eigen::MatrixXd x(kSikInputDim, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x.col(static_cast<Eigen::Index>(i)) = sik_input(inputs[i]);
    DenseNet::Cache theta_cache, beta_cache;
    Eigen::MatrixXd q_raw, b_raw;
    net.forward_batch(x, q_raw, b_raw, want_grad ? &theta_cache : nullptr, want_grad ? &beta_cache : nullptr);

    std::vector<BatchTerms> terms(n);
    Eigen::MatrixXd g_q = Eigen::MatrixXd::Zero(kSikQuatDim, static_cast<Eigen::Index>(n));
    Eigen::MatrixXd g_b = Eigen::MatrixXd::Zero(kNumShape, static_cast<Eigen::Index>(n));
    out.joint_rms.assign(n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    const LossWeights& w = obj.weights;

    parallel_for(n, [&](std::size_t i) {
        const auto col = static_cast<Eigen::Index>(i);
        const SikSample& t = *targets[i];
        RawQuats raw;
        for (int a = 0; a < kNumArticulated; ++a) raw[a] = q_raw.block<4, 1>(4 * a, col);
        HandShape shape;
        for (int k = 0; k < kNumShape; ++k) shape.beta[k] = b_raw(k, col);
        const Pose unit = normalize_quats(raw);

        MeshJointLayer::Cache cache;
        const auto joints = layer.forward(unit, shape, cache);
        const auto lj = normalized_joint_mse(joints, t.xbar);
        const auto ls = shape_loss(unit, shape, t.lbar_star, model);
        QuatLoss lq;
        if (full) lq = quaternion_loss(raw, t.q_star());
        double direct = 0.0;
        for (int k = 0; k < kNumShape; ++k) direct += std::pow(shape.beta[k] - t.beta_star[k], 2);

        BatchTerms& s = terms[i];
        s.quaternion = full ? lq.combined() : 0.0;
        s.shape = ls.value;
        s.joint = lj.value;
        s.direct_beta = w_direct > 0.0 ? direct : 0.0;
        s.total = w.quaternion * s.quaternion + w.shape * s.shape + w.joint * s.joint + w_direct * s.direct_beta;

        JointSet pred;
        pred.positions = joints;
        const NormalizedPose np = normalize_joints(pred);
        double err = 0.0, sq = 0.0;
        for (int j = 0; j < kNumJoints; ++j) {
            const double e = (np.xbar[j] - t.xbar[j]).norm();
            err += e;
            sq += e * e;
        }
        s.joint_error = err / kNumJoints;
        out.joint_rms[i] = std::sqrt(sq / kNumJoints);

        if (!want_grad) return;
        std::array<Vec3, kNumJoints> gj;
        for (int j = 0; j < kNumJoints; ++j) gj[j] = w.joint * lj.grad[j];
        const auto gm = layer.backward(cache, gj);
        for (int a = 0; a < kNumArticulated; ++a) {
            const double len = raw[a].norm();
            const Eigen::Vector4d qh = raw[a] / len;
            // unit quaternion gradient pulled back through q / |q|
            Eigen::Vector4d g = (gm.pose[a] - qh * qh.dot(gm.pose[a])) / len;
            if (full) g += w.quaternion * lq.grad[a];
            g_q.block<4, 1>(4 * a, col) = g * inv_n;
        }
        for (int k = 0; k < kNumShape; ++k) {
            double g = w.shape * ls.grad[k] + gm.beta[k];
            g += 2.0 * w_direct * (shape.beta[k] - t.beta_star[k]);
            g_b(k, col) = g * inv_n;
        }
    });

    for (const BatchTerms& t : terms) accumulate(out.mean, t, inv_n);
    if (want_grad) {
        out.grad_theta.assign(net.theta_reg.param_count(), 0.0);
        out.grad_beta.assign(net.beta_reg.param_count(), 0.0);
        net.theta_reg.backward(theta_cache, g_q, out.grad_theta);
        net.beta_reg.backward(beta_cache, g_b, out.grad_beta);
    }
    return out;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (!(lr > 0.0) || !(lr_after_drop > 0.0)) throw std::invalid_argument("learning rates must be > 0");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
    if (!(objective.direct_beta_weight >= 0.0)) throw std::invalid_argument("direct beta weight must be >= 0");
    objective.weights.validate();
}

nlohmann::json TrainConfig::to_json() const {
    const LossWeights& w = objective.weights;
    return {{"epochs", epochs},
            {"batch_size", batch_size},
            {"lr", lr},
            {"lr_drop_epoch", lr_drop_epoch},
            {"lr_after_drop", lr_after_drop},
            {"mode", to_string(objective.mode)},
            {"direct_beta", objective.direct_beta},
            {"direct_beta_weight", objective.direct_beta_weight},
            {"weights",
             {{"heatmap", w.heatmap},
              {"silhouette", w.silhouette},
              {"joint", w.joint},
              {"depth", w.depth},
              {"quaternion", w.quaternion},
              {"shape", w.shape}}},
            {"noise_sigma", noise_sigma},
            {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
    if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
    TrainConfig c = base;
    auto get = [&](const char* key, auto& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("lr", c.lr);
    get("lr_drop_epoch", c.lr_drop_epoch);
    get("lr_after_drop", c.lr_after_drop);
    get("direct_beta", c.objective.direct_beta);
    get("direct_beta_weight", c.objective.direct_beta_weight);
    get("noise_sigma", c.noise_sigma);
    get("seed", c.seed);
    if (j.contains("mode")) c.objective.mode = train_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        LossWeights& lw = c.objective.weights;
        for (auto [key, dst] : {std::pair{"heatmap", &lw.heatmap}, std::pair{"silhouette", &lw.silhouette},
                                std::pair{"joint", &lw.joint}, std::pair{"depth", &lw.depth},
                                std::pair{"quaternion", &lw.quaternion}, std::pair{"shape", &lw.shape}}) {
            if (w.contains(key)) *dst = w.at(key).get<double>();
        }
    }
    c.validate();
    return c;
}

nlohmann::json EpochLog::to_json() const {
    return {{"epoch", epoch}, {"lr", lr}, {"train", train.to_json()}, {"test", test.to_json()}};
}

NormalizedPose noisy_input(const SikSample& s, double sigma, std::uint64_t seed, std::string_view stream,
                           std::uint64_t key) {
    if (sigma == 0.0) return {s.xbar, s.kbar};
    std::mt19937_64 rng = substream(seed, stream, key);
    std::normal_distribution<double> n(0.0, sigma);
    JointSet j;
    j.units = Units::Normalized;
    for (int k = 0; k < kNumJoints; ++k) {
        j[k] = s.xbar[k];
        if (k != kRootJoint) j[k] += Vec3(n(rng), n(rng), n(rng));
    }
    return normalize_joints(j);
}

namespace {

void dump_diagnostic(const TrainConfig& cfg, int epoch, std::size_t batch, const std::vector<std::size_t>& idx,
                     const std::vector<NormalizedPose>& inputs, const BatchTerms& terms) {
    if (cfg.diagnostic_path.empty()) return;
    nlohmann::json d;
    d["epoch"] = epoch;
    d["batch"] = batch;
    d["sample_indices"] = idx;
    d["terms"] = terms.to_json();
    nlohmann::json xs = nlohmann::json::array();
    for (const auto& in : inputs) {
        nlohmann::json row = nlohmann::json::array();
        for (const Vec3& p : in.xbar) row.push_back({p.x(), p.y(), p.z()});
        xs.push_back(row);
    }
    d["xbar"] = xs;
    std::ofstream(cfg.diagnostic_path) << d.dump(1) << '\n';
}

BatchTerms evaluate_set(const SikNet& net, const MeshJointLayer& layer, const HandModel& model,
                        const std::vector<NormalizedPose>& inputs, const std::vector<const SikSample*>& targets,
                        const ObjectiveConfig& obj) {
    constexpr std::size_t kChunk = 1024;
    BatchTerms acc;
    const std::size_t n = inputs.size();
    for (std::size_t s = 0; s < n; s += kChunk) {
        const std::size_t e = std::min(n, s + kChunk);
        const std::vector<NormalizedPose> in(inputs.begin() + s, inputs.begin() + e);
        const std::vector<const SikSample*> tg(targets.begin() + s, targets.begin() + e);
        const BatchResult r = evaluate_batch(net, layer, model, in, tg, obj, false);
        accumulate(acc, r.mean, static_cast<double>(e - s) / static_cast<double>(n));
    }
    return acc;
}

}  // namespace

TrainResult train(const SikNet& init, const HandModel& model, const std::vector<SikSample>& data,
                  const DatasetSplit& split, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    cfg.validate();
    if (split.train.empty()) throw TrainingError("training split is empty");
    for (std::size_t i : split.train)
        if (i >= data.size()) throw TrainingError("split index out of range");
    for (std::size_t i : split.test)
        if (i >= data.size()) throw TrainingError("split index out of range");

    const bool finetune = cfg.objective.mode == TrainMode::Finetune;
    const MeshJointLayer layer(model);
    TrainResult result{init, init, 0, {}};

    std::vector<NormalizedPose> test_in;
    std::vector<const SikSample*> test_tg;
    for (std::size_t i : split.test) {
        test_in.push_back(finetune ? noisy_input(data[i], cfg.noise_sigma, cfg.seed, "test-noise", i)
                                   : NormalizedPose{data[i].xbar, data[i].kbar});
        test_tg.push_back(&data[i]);
    }
    // Held-out evaluation; failures are reported like a bad training batch.
    auto held_out = [&](const SikNet& n, int epoch) {
        BatchTerms t;
        try {
            t = evaluate_set(n, layer, model, test_in, test_tg, cfg.objective);
        } catch (const std::exception& ex) {
            dump_diagnostic(cfg, epoch, 0, split.test, test_in, {});
            throw TrainingError("held-out evaluation at epoch " + std::to_string(epoch) + ": " + ex.what());
        }
        if (!std::isfinite(t.total)) {
            dump_diagnostic(cfg, epoch, 0, split.test, test_in, t);
            throw TrainingError("non-finite held-out loss at epoch " + std::to_string(epoch));
        }
        return t;
    };
    double best_err = std::numeric_limits<double>::infinity();
    if (!split.test.empty() && cfg.epochs > 0) best_err = held_out(init, -1).joint_error;

    SikNet net = init;
    AdamState theta_opt(net.theta_reg.param_count(), cfg.lr);
    AdamState beta_opt(net.beta_reg.param_count(), cfg.lr);
    std::vector<std::size_t> order = split.train;
    const std::size_t n_train = order.size();
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch < cfg.lr_drop_epoch ? cfg.lr : cfg.lr_after_drop;
        theta_opt.lr = beta_opt.lr = lr;
        std::mt19937_64 rng = substream(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n_train; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        std::size_t batch_no = 0;
        for (std::size_t s = 0; s < n_train; s += bs, ++batch_no) {
            const std::size_t e = std::min(n_train, s + bs);
            const std::vector<std::size_t> idx(order.begin() + s, order.begin() + e);
            std::vector<NormalizedPose> in;
            std::vector<const SikSample*> tg;
            for (std::size_t i : idx) {
                const std::uint64_t key = static_cast<std::uint64_t>(epoch) * data.size() + i;
                in.push_back(finetune ? noisy_input(data[i], cfg.noise_sigma, cfg.seed, "train-noise", key)
                                      : NormalizedPose{data[i].xbar, data[i].kbar});
                tg.push_back(&data[i]);
            }
            BatchResult r;
            try {
                r = evaluate_batch(net, layer, model, in, tg, cfg.objective, true);
            } catch (const std::exception& ex) {
                dump_diagnostic(cfg, epoch, batch_no, idx, in, {});
                throw TrainingError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_no) +
                                    ": " + ex.what());
            }
            if (!std::isfinite(r.mean.total) || !all_finite(r.grad_theta) || !all_finite(r.grad_beta)) {
                dump_diagnostic(cfg, epoch, batch_no, idx, in, r.mean);
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                    std::to_string(batch_no) + " (first sample " + std::to_string(idx.front()) +
                                    "): " + r.mean.to_json().dump());
            }
            accumulate(log.train, r.mean, static_cast<double>(e - s) / static_cast<double>(n_train));
            adam_step(theta_opt, net.theta_reg.params(), r.grad_theta);
            adam_step(beta_opt, net.beta_reg.params(), r.grad_beta);
        }
        if (!split.test.empty()) {
            log.test = held_out(net, epoch);
            if (log.test.joint_error < best_err) {
                best_err = log.test.joint_error;
                result.best = net;
                result.best_epoch = epoch + 1;
            }
        } else {
            result.best = net;
            result.best_epoch = epoch + 1;
        }
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    result.last = net;
    return result;
}

std::array<Vec3, kNumJoints> predict_normalized_joints(const SikNet& net, const NormalizedPose& input,
                                                       const MeshJointLayer& layer) {
    const SikOutput o = net.forward(input);
    MeshJointLayer::Cache cache;
    JointSet j;
    j.positions = layer.forward(normalize_quats(o.quats), o.shape, cache);
    return normalize_joints(j).xbar;
}

MeshPrediction predict_mesh(const SikNet& net, const JointSet& joints, const HandModel& model) {
    const SikOutput o = net.forward(normalize_joints(joints));
    MeshPrediction p;
    p.pose = normalize_quats(o.quats);
    p.shape = o.shape;
    p.mesh = posed_mesh(model, p.shape, p.pose);
    return p;
}

std::vector<char> checkpoint_bytes(const SikNet& net, const HandModel& model) {
    binio::Writer w;
    w.magic("SKN1");
    w.u32(kSknVersion);
    w.u32(static_cast<std::uint32_t>(model.vertex_count()));
    w.u64(binio::fnv1a(model.serialize()));
    write_head(w, net.theta_reg);
    write_head(w, net.beta_reg);
    return w.take();
}

SikNet parse_checkpoint(const std::vector<char>& bytes, const HandModel& model) {
    binio::Reader r(std::string_view(bytes.data(), bytes.size()));
    r.expect_magic("SKN1");
    const std::uint64_t version_at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kSknVersion) throw binio::FormatError("unsupported SKN1 version " + std::to_string(version), version_at);
    const std::uint32_t vertices = r.u32();
    const std::uint64_t hash = r.u64();
    SikNet net;
    net.theta_reg = read_head(r, kSikQuatDim);
    net.beta_reg = read_head(r, kNumShape);
    if (r.remaining() != 0) throw binio::FormatError("trailing bytes after checkpoint", r.offset());
    if (vertices != static_cast<std::uint32_t>(model.vertex_count()) || hash != binio::fnv1a(model.serialize())) {
        throw ModelError("checkpoint was trained against a different hand model (" + std::to_string(vertices) +
                         " vertices)");
    }
    return net;
}

void save_checkpoint(const SikNet& net, const HandModel& model, const std::string& path) {
    binio::write_file(path, checkpoint_bytes(net, model));
}

SikNet load_checkpoint(const std::string& path, const HandModel& model) {
    return parse_checkpoint(binio::read_file(path), model);
}

}  // namespace handik
