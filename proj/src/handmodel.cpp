#include "handik/handmodel.hpp"

#include "handik/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace handik {

namespace {

constexpr double kBlendHalfWidth = 0.35;

// Finger tube radius at the base, per chain (thumb first).
constexpr std::array<double, kNumFingers> kFingerRadius = {10.5, 9.0, 9.5, 9.0, 8.0};
constexpr double kRadiusTaper = 0.06;

// Palm slab: elliptical rings from the wrist ring to the knuckle line.
const Vec3 kPalmTop(-6.0, 84.0, 0.0);
constexpr double kPalmHalfWidthWrist = 30.0;
constexpr double kPalmHalfWidthTop = 47.0;
constexpr double kPalmHalfThickWrist = 12.0;
constexpr double kPalmHalfThickTop = 14.0;

// Shape-mode gains: displacement per unit coefficient.
constexpr double kScaleGain = 0.1;
constexpr double kLengthGain = 0.1;
constexpr double kWidthGain = 0.1;
constexpr double kThicknessGain = 0.15;
constexpr double kFingerThicknessGain = 0.1;
constexpr double kSplayGain = 0.1;

struct Level {
    int ring;           // vertices per finger ring
    int subdiv;         // rings per finger segment
    int palm_ring;
    int palm_segments;
};

// Coarsest level last; the finest one whose base count fits is refined by
// edge splits up to the requested vertex count.
constexpr std::array<Level, 4> kLevels = {{{10, 4, 16, 6}, {8, 3, 16, 5}, {6, 2, 12, 4}, {4, 1, 6, 1}}};

int base_vertex_count(const Level& l) {
    return kNumFingers * ((3 * l.subdiv + 1) * l.ring + 1) + (l.palm_segments + 1) * l.palm_ring + 1;
}

double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

Vec3 finger_axis(int f) {
    const auto& J = default_rest_joints();
    const int base = 1 + 4 * f;
    return (J[base + 3] - J[base]).normalized();
}

Vec3 palm_center(double t) { return t * kPalmTop; }

struct Builder {
    std::vector<Vec3> v;
    std::vector<HandModel::VertexLabel> labels;
    std::vector<Face> faces;
    JointRegressor regressor;

    int add(const Vec3& p, int part, double axial) {
        v.push_back(p);
        labels.push_back({part, axial});
        return static_cast<int>(v.size()) - 1;
    }

    void tube_band(const std::vector<int>& r0, const std::vector<int>& r1, bool flip) {
        const int m = static_cast<int>(r0.size());
        for (int k = 0; k < m; ++k) {
            const int a = r0[k], b = r0[(k + 1) % m], c = r1[(k + 1) % m], d = r1[k];
            if (flip) {
                faces.push_back({a, c, b});
                faces.push_back({a, d, c});
            } else {
                faces.push_back({a, b, c});
                faces.push_back({a, c, d});
            }
        }
    }

    void fan(const std::vector<int>& ring, int apex, bool flip) {
        const int m = static_cast<int>(ring.size());
        for (int k = 0; k < m; ++k) {
            const int a = ring[k], b = ring[(k + 1) % m];
            faces.push_back(flip ? Face{b, a, apex} : Face{a, b, apex});
        }
    }

    void set_regressor(int joint, const std::vector<int>& ring) {
        regressor[joint].clear();
        const double w = 1.0 / static_cast<double>(ring.size());
        for (int idx : ring) regressor[joint].push_back({idx, w});
    }

    void build_finger(int f, const Level& l) {
        const auto& J = default_rest_joints();
        const int base = 1 + 4 * f;
        const int part = 1 + f;
        const Vec3 a = finger_axis(f);
        const Vec3 e1 = a.cross(Vec3::UnitZ()).normalized();
        const Vec3 e2 = a.cross(e1);
        const int stations = 3 * l.subdiv + 1;
        std::vector<int> prev;
        double tip_radius = 0.0;
        for (int s = 0; s < stations; ++s) {
            const int seg = std::min(s / l.subdiv, 2);
            const double frac = static_cast<double>(s - seg * l.subdiv) / l.subdiv;
            const Vec3 c = J[base + seg] + frac * (J[base + seg + 1] - J[base + seg]);
            const double t = seg + frac;
            const double r = kFingerRadius[f] * (1.0 - kRadiusTaper * t);
            std::vector<int> ring;
            for (int m = 0; m < l.ring; ++m) {
                const double phi = 2.0 * std::numbers::pi * m / l.ring;
                ring.push_back(add(c + r * (std::cos(phi) * e1 + std::sin(phi) * e2), part, t));
            }
            if (s % l.subdiv == 0) set_regressor(base + s / l.subdiv, ring);
            if (!prev.empty()) tube_band(prev, ring, false);
            prev = std::move(ring);
            tip_radius = r;
        }
        const double last_len = (J[base + 3] - J[base + 2]).norm();
        const double cap = 0.9 * tip_radius;
        const int apex = add(J[base + 3] + cap * a, part, 3.0 + cap / last_len);
        fan(prev, apex, false);
    }

    void build_palm(const Level& l) {
        std::vector<int> prev;
        for (int s = 0; s <= l.palm_segments; ++s) {
            const double t = static_cast<double>(s) / l.palm_segments;
            const Vec3 c = palm_center(t);
            const double hw = kPalmHalfWidthWrist + t * (kPalmHalfWidthTop - kPalmHalfWidthWrist);
            const double ht = kPalmHalfThickWrist + t * (kPalmHalfThickTop - kPalmHalfThickWrist);
            std::vector<int> ring;
            for (int m = 0; m < l.palm_ring; ++m) {
                const double phi = 2.0 * std::numbers::pi * m / l.palm_ring;
                ring.push_back(add(c + Vec3(hw * std::cos(phi), 0.0, ht * std::sin(phi)), 0, t));
            }
            if (s == 0) set_regressor(kRootJoint, ring);
            if (!prev.empty()) tube_band(prev, ring, true);
            prev = std::move(ring);
        }
        const int top = add(palm_center(1.0), 0, 1.0);
        fan(prev, top, true);
    }

    // Longest-edge bisection; ties break on the lexicographically smallest
    // vertex pair so the result is deterministic.
    void split_longest_edge() {
        double best = -1.0;
        std::pair<int, int> edge{-1, -1};
        for (const Face& f : faces) {
            for (int k = 0; k < 3; ++k) {
                int i = f[k], j = f[(k + 1) % 3];
                if (i > j) std::swap(i, j);
                const double len = (v[i] - v[j]).squaredNorm();
                if (len > best || (len == best && std::make_pair(i, j) < edge)) {
                    best = len;
                    edge = {i, j};
                }
            }
        }
        const auto [i, j] = edge;
        const int m = add(0.5 * (v[i] + v[j]), labels[i].part, 0.5 * (labels[i].axial + labels[j].axial));
        const std::size_t n_faces = faces.size();
        for (std::size_t fi = 0; fi < n_faces; ++fi) {
            Face& f = faces[fi];
            for (int k = 0; k < 3; ++k) {
                const int p = f[k], q = f[(k + 1) % 3], r = f[(k + 2) % 3];
                if ((p == i && q == j) || (p == j && q == i)) {
                    f = {p, m, r};
                    faces.push_back({m, q, r});
                    break;
                }
            }
        }
    }
};

SkinWeights weights_for(const HandModel::VertexLabel& label, const Vec3& pos) {
    SkinWeights w;
    auto push = [&](int joint, double weight) {
        if (weight <= 0.0) return;
        w.influences[w.count++] = {joint, weight};
    };
    const double h = kBlendHalfWidth;
    if (label.part == 0) {
        const double t = label.axial;
        double blend = 0.0;
        int nearest = 0;
        if (t > 1.0 - h) {
            blend = 0.5 * smoothstep((t - (1.0 - h)) / h);
            const auto& J = default_rest_joints();
            double best = 1e300;
            for (int f = 1; f < kNumFingers; ++f) {
                const double d = std::abs(pos.x() - J[1 + 4 * f].x());
                if (d < best) {
                    best = d;
                    nearest = KinematicTree::pose_index(1 + 4 * f);
                }
            }
        }
        push(0, 1.0 - blend);
        push(nearest, blend);
        return w;
    }
    const int f = label.part - 1;
    const double t = std::max(label.axial, 0.0);
    const int seg = std::min(static_cast<int>(std::floor(t)), 2);
    const double frac = t - seg;
    const int drive = 1 + 3 * f + seg;
    if (frac < h) {
        const int prev = seg == 0 ? 0 : drive - 1;
        const double wp = 0.5 * (1.0 - smoothstep(frac / h));
        push(drive, 1.0 - wp);
        push(prev, wp);
    } else if (frac > 1.0 - h && seg < 2) {
        const double wn = 0.5 * smoothstep((frac - (1.0 - h)) / h);
        push(drive, 1.0 - wn);
        push(drive + 1, wn);
    } else {
        push(drive, 1.0);
    }
    return w;
}

std::array<std::vector<Vec3>, kNumShape> shape_fields(const std::vector<Vec3>& v,
                                                      const std::vector<HandModel::VertexLabel>& labels) {
    const auto& J = default_rest_joints();
    const std::size_t n = v.size();
    std::array<std::vector<Vec3>, kNumShape> basis;
    for (auto& b : basis) b.assign(n, Vec3::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = v[i];
        const int part = labels[i].part;
        basis[static_cast<int>(ShapeMode::GlobalScale)][i] = kScaleGain * (p - J[kRootJoint]);
        if (part == 0) {
            basis[static_cast<int>(ShapeMode::PalmWidth)][i] = Vec3(kWidthGain * (p.x() - J[kRootJoint].x()), 0, 0);
            basis[static_cast<int>(ShapeMode::PalmThickness)][i] =
                Vec3(0, 0, kThicknessGain * (p.z() - palm_center(labels[i].axial).z()));
            continue;
        }
        const int f = part - 1;
        const Vec3& b = J[1 + 4 * f];
        const Vec3 a = finger_axis(f);
        const Vec3 rel = p - b;
        const double along = rel.dot(a);
        basis[static_cast<int>(ShapeMode::ThumbLength) + f][i] = kLengthGain * along * a;
        basis[static_cast<int>(ShapeMode::PalmWidth)][i] = Vec3(kWidthGain * (b.x() - J[kRootJoint].x()), 0, 0);
        basis[static_cast<int>(ShapeMode::FingerThickness)][i] = kFingerThicknessGain * (rel - along * a);
        if (f == 0) basis[static_cast<int>(ShapeMode::ThumbSplay)][i] = kSplayGain * Vec3::UnitZ().cross(rel);
    }
    return basis;
}

}  // namespace

HandModel::HandModel(std::vector<Vec3> templ, std::vector<Face> faces, std::array<std::vector<Vec3>, kNumShape> basis,
                     std::vector<SkinWeights> skin, JointRegressor regressor, std::vector<VertexLabel> labels)
    : template_(std::move(templ)),
      faces_(std::make_shared<const std::vector<Face>>(std::move(faces))),
      basis_(std::move(basis)),
      skin_(std::move(skin)),
      regressor_(std::move(regressor)),
      labels_(std::move(labels)) {
    const int n = vertex_count();
    for (const Face& f : *faces_) {
        for (int idx : f) {
            if (idx < 0 || idx >= n) throw ModelError("face references a vertex out of range");
        }
    }
    for (const auto& b : basis_) {
        if (static_cast<int>(b.size()) != n) throw ModelError("shape mode size does not match vertex count");
    }
    if (static_cast<int>(skin_.size()) != n) throw ModelError("skin weights size does not match vertex count");
    for (const SkinWeights& w : skin_) {
        double sum = 0.0;
        if (w.count < 1 || w.count > kMaxBonesPerVertex) throw ModelError("bad skin influence count");
        for (int k = 0; k < w.count; ++k) {
            const auto& inf = w.influences[k];
            if (inf.joint < 0 || inf.joint >= kNumArticulated || inf.weight < 0.0) {
                throw ModelError("bad skin influence");
            }
            sum += inf.weight;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ModelError("skin weights must sum to one");
    }
    for (int j = 0; j < kNumJoints; ++j) {
        double sum = 0.0;
        for (const auto& e : regressor_[j]) {
            if (e.vertex < 0 || e.vertex >= n || e.weight < 0.0) throw ModelError("bad regressor entry");
            sum += e.weight;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ModelError("joint regressor rows must sum to one");
    }
    if (!labels_.empty() && static_cast<int>(labels_.size()) != n) throw ModelError("label count mismatch");

    for (int j = 0; j < kNumJoints; ++j) {
        Vec3 acc = Vec3::Zero();
        for (const auto& e : regressor_[j]) acc += e.weight * template_[e.vertex];
        rest_joints_[j] = acc;
        for (int i = 0; i < kNumShape; ++i) {
            Vec3 d = Vec3::Zero();
            for (const auto& e : regressor_[j]) d += e.weight * basis_[i][e.vertex];
            joint_basis_[j][i] = d;
        }
    }
}

Eigen::MatrixXd HandModel::dense_skin_weights() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(vertex_count(), kNumArticulated);
    for (int v = 0; v < vertex_count(); ++v) {
        for (int k = 0; k < skin_[v].count; ++k) w(v, skin_[v].influences[k].joint) += skin_[v].influences[k].weight;
    }
    return w;
}

std::array<Vec3, kNumJoints> HandModel::shaped_joints(const HandShape& shape) const {
    std::array<Vec3, kNumJoints> out = rest_joints_;
    for (int j = 0; j < kNumJoints; ++j) {
        for (int i = 0; i < kNumShape; ++i) out[j] += shape.beta[i] * joint_basis_[j][i];
    }
    return out;
}

KinematicTree HandModel::skeleton(const HandShape& shape) const {
    return KinematicTree::from_rest_joints(shaped_joints(shape));
}

bool HandModel::operator==(const HandModel& o) const {
    if (template_ != o.template_ || *faces_ != *o.faces_ || basis_ != o.basis_) return false;
    if (skin_.size() != o.skin_.size()) return false;
    for (std::size_t v = 0; v < skin_.size(); ++v) {
        if (skin_[v].count != o.skin_[v].count) return false;
        for (int k = 0; k < skin_[v].count; ++k) {
            if (skin_[v].influences[k].joint != o.skin_[v].influences[k].joint ||
                skin_[v].influences[k].weight != o.skin_[v].influences[k].weight) {
                return false;
            }
        }
    }
    for (int j = 0; j < kNumJoints; ++j) {
        if (regressor_[j].size() != o.regressor_[j].size()) return false;
        for (std::size_t k = 0; k < regressor_[j].size(); ++k) {
            if (regressor_[j][k].vertex != o.regressor_[j][k].vertex ||
                regressor_[j][k].weight != o.regressor_[j][k].weight) {
                return false;
            }
        }
    }
    return true;
}

std::vector<char> HandModel::serialize() const {
    binio::Writer w;
    w.magic("HFM1");
    w.u32(1);
    const int n = vertex_count();
    w.u32(static_cast<std::uint32_t>(n));
    w.u32(static_cast<std::uint32_t>(faces_->size()));
    auto put_vecs = [&](const std::vector<Vec3>& vs) {
        w.u64(3 * vs.size());
        for (const Vec3& p : vs) {
            w.f64(p.x());
            w.f64(p.y());
            w.f64(p.z());
        }
    };
    put_vecs(template_);
    w.u64(3 * faces_->size());
    for (const Face& f : *faces_) {
        for (int idx : f) w.u32(static_cast<std::uint32_t>(idx));
    }
    for (const auto& b : basis_) put_vecs(b);
    w.u64(skin_.size());
    for (const SkinWeights& s : skin_) {
        w.u32(static_cast<std::uint32_t>(s.count));
        for (int k = 0; k < s.count; ++k) {
            w.u32(static_cast<std::uint32_t>(s.influences[k].joint));
            w.f64(s.influences[k].weight);
        }
    }
    for (const auto& row : regressor_) {
        w.u64(row.size());
        for (const auto& e : row) {
            w.u32(static_cast<std::uint32_t>(e.vertex));
            w.f64(e.weight);
        }
    }
    w.u64(labels_.size());
    for (const auto& l : labels_) {
        w.u32(static_cast<std::uint32_t>(l.part));
        w.f64(l.axial);
    }
    return w.take();
}

HandModel HandModel::deserialize(const std::vector<char>& bytes) {
    binio::Reader r(std::string_view(bytes.data(), bytes.size()));
    r.expect_magic("HFM1");
    const auto at_version = r.offset();
    if (r.u32() != 1) throw binio::FormatError("unsupported HFM version", at_version);
    const std::uint32_t n = r.u32();
    const std::uint32_t n_faces = r.u32();
    auto get_vecs = [&]() {
        const auto at = r.offset();
        if (r.u64() != 3ull * n) throw binio::FormatError("vertex array length mismatch", at);
        std::vector<Vec3> vs(n);
        for (auto& p : vs) {
            const double x = r.f64(), y = r.f64(), z = r.f64();
            p = Vec3(x, y, z);
        }
        return vs;
    };
    std::vector<Vec3> templ = get_vecs();
    const auto at_faces = r.offset();
    if (r.u64() != 3ull * n_faces) throw binio::FormatError("face array length mismatch", at_faces);
    std::vector<Face> faces(n_faces);
    for (Face& f : faces) {
        for (int& idx : f) idx = static_cast<int>(r.u32());
    }
    std::array<std::vector<Vec3>, kNumShape> basis;
    for (auto& b : basis) b = get_vecs();
    const auto at_skin = r.offset();
    if (r.u64() != n) throw binio::FormatError("skin weight count mismatch", at_skin);
    std::vector<SkinWeights> skin(n);
    for (SkinWeights& s : skin) {
        const auto at = r.offset();
        s.count = static_cast<int>(r.u32());
        if (s.count < 1 || s.count > kMaxBonesPerVertex) throw binio::FormatError("bad influence count", at);
        for (int k = 0; k < s.count; ++k) {
            s.influences[k].joint = static_cast<int>(r.u32());
            s.influences[k].weight = r.f64();
        }
    }
    JointRegressor reg;
    for (auto& row : reg) {
        const std::uint64_t m = r.u64();
        r.require(m * 12, "truncated regressor row");
        row.resize(m);
        for (auto& e : row) {
            e.vertex = static_cast<int>(r.u32());
            e.weight = r.f64();
        }
    }
    const std::uint64_t n_labels = r.u64();
    r.require(n_labels * 12, "truncated labels");
    std::vector<VertexLabel> labels(n_labels);
    for (auto& l : labels) {
        l.part = static_cast<int>(r.u32());
        l.axial = r.f64();
    }
    if (r.remaining() != 0) throw binio::FormatError("trailing bytes after model", r.offset());
    return HandModel(std::move(templ), std::move(faces), std::move(basis), std::move(skin), std::move(reg),
                     std::move(labels));
}

void HandModel::save(const std::string& path) const { binio::write_file(path, serialize()); }

HandModel HandModel::load(const std::string& path) { return deserialize(binio::read_file(path)); }

HandModel build_default_model(int vertex_count) {
    if (vertex_count < kMinVertexCount) {
        throw ModelError("vertex_count " + std::to_string(vertex_count) + " is too small to tessellate (minimum " +
                         std::to_string(kMinVertexCount) + ")");
    }
    const Level* level = nullptr;
    for (const Level& l : kLevels) {
        if (base_vertex_count(l) <= vertex_count) {
            level = &l;
            break;
        }
    }
    Builder b;
    b.build_palm(*level);
    for (int f = 0; f < kNumFingers; ++f) b.build_finger(f, *level);
    while (static_cast<int>(b.v.size()) < vertex_count) b.split_longest_edge();

    std::vector<SkinWeights> skin;
    skin.reserve(b.v.size());
    for (std::size_t i = 0; i < b.v.size(); ++i) skin.push_back(weights_for(b.labels[i], b.v[i]));
    auto basis = shape_fields(b.v, b.labels);
    return HandModel(std::move(b.v), std::move(b.faces), std::move(basis), std::move(skin), std::move(b.regressor),
                     std::move(b.labels));
}

std::vector<Vec3> shape_template(const HandModel& model, const HandShape& shape) {
    std::vector<Vec3> out = model.template_vertices();
    for (int i = 0; i < kNumShape; ++i) {
        const double c = shape.beta[i];
        if (c == 0.0) continue;
        const auto& mode = model.shape_mode(i);
        for (std::size_t v = 0; v < out.size(); ++v) out[v] += c * mode[v];
    }
    return out;
}

JointSet regress_joints(const HandModel& model, const std::vector<Vec3>& shaped) {
    if (static_cast<int>(shaped.size()) != model.vertex_count()) {
        throw ModelError("vertex count mismatch: got " + std::to_string(shaped.size()) + ", model has " +
                         std::to_string(model.vertex_count()));
    }
    JointSet out;
    for (int j = 0; j < kNumJoints; ++j) {
        Vec3 acc = Vec3::Zero();
        for (const auto& e : model.joint_regressor()[j]) acc += e.weight * shaped[e.vertex];
        out[j] = acc;
    }
    return out;
}

HandMesh skin(const HandModel& model, const std::vector<Vec3>& shaped, const Pose& pose) {
    const JointSet rest = regress_joints(model, shaped);
    const Offsets off = offsets_from_joints(rest.positions);
    // Displacement form of forward kinematics: each joint is tracked as
    // (R_j - I, p_j - J_j), so the identity pose yields exact zeros and the
    // shaped template comes back unchanged.
    std::array<Mat3, kNumJoints> rot;
    std::array<Vec3, kNumJoints> disp;
    rot[0] = quat_to_matrix(pose[0].normalized());
    disp[0] = Vec3::Zero();
    for (int j = 1; j < kNumJoints; ++j) {
        const int p = KinematicTree::parent(j);
        disp[j] = disp[p] + (rot[p] - Mat3::Identity()) * off[j];
        const int a = KinematicTree::pose_index(j);
        rot[j] = a < 0 ? rot[p] : Mat3(rot[p] * quat_to_matrix(pose[a].normalized()));
    }
    HandMesh mesh;
    mesh.faces = model.shared_faces();
    mesh.vertices.resize(shaped.size());
    const auto& weights = model.skin_weights();
    for (std::size_t v = 0; v < shaped.size(); ++v) {
        Vec3 delta = Vec3::Zero();
        for (int k = 0; k < weights[v].count; ++k) {
            const auto& inf = weights[v].influences[k];
            const int j = KinematicTree::joint_of_pose_index(inf.joint);
            delta += inf.weight * ((rot[j] - Mat3::Identity()) * (shaped[v] - rest[j]) + disp[j]);
        }
        mesh.vertices[v] = shaped[v] + delta;
    }
    return mesh;
}

JointSet mesh_to_joints(const HandModel& model, const HandMesh& mesh) {
    return regress_joints(model, mesh.vertices);
}

HandMesh posed_mesh(const HandModel& model, const HandShape& shape, const Pose& pose) {
    return skin(model, shape_template(model, shape), pose);
}

std::string obj_string(const HandMesh& mesh) {
    std::string out;
    char buf[128];
    for (const Vec3& p : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", p.x(), p.y(), p.z());
        out += buf;
    }
    if (mesh.faces) {
        for (const Face& f : *mesh.faces) {
            std::snprintf(buf, sizeof buf, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
            out += buf;
        }
    }
    return out;
}

void export_obj(const HandMesh& mesh, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << obj_string(mesh);
    if (!os) throw std::runtime_error("failed writing " + path);
}

HandMesh parse_obj(const std::string& text) {
    HandMesh mesh;
    auto faces = std::make_shared<std::vector<Face>>();
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw std::runtime_error("bad vertex on OBJ line " + std::to_string(lineno));
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            Face f{};
            for (int& idx : f) {
                std::string tok;
                if (!(ls >> tok)) throw std::runtime_error("bad face on OBJ line " + std::to_string(lineno));
                idx = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            faces->push_back(f);
        }
    }
    mesh.faces = std::move(faces);
    return mesh;
}

}  // namespace handik
