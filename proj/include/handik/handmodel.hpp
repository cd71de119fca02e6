#pragma once

#include "handik/geom.hpp"
#include "handik/kinematics.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace handik {

inline constexpr int kNumShape = 10;
inline constexpr int kDefaultVertexCount = 778;
inline constexpr int kMinVertexCount = 100;
inline constexpr int kMaxBonesPerVertex = 4;

using Face = std::array<int, 3>;

struct HandShape {
    std::array<double, kNumShape> beta{};

    static HandShape zero() { return {}; }
};

/// Shape modes, in basis order.
enum class ShapeMode : int {
    GlobalScale = 0,
    ThumbLength,
    IndexLength,
    MiddleLength,
    RingLength,
    PinkyLength,
    PalmWidth,
    PalmThickness,
    FingerThickness,
    ThumbSplay,
};

struct SkinInfluence {
    int joint = 0;  ///< pose index (0..15)
    double weight = 0.0;
};

struct SkinWeights {
    std::array<SkinInfluence, kMaxBonesPerVertex> influences{};
    int count = 0;
};

struct RegressorEntry {
    int vertex = 0;
    double weight = 0.0;
};
using JointRegressor = std::array<std::vector<RegressorEntry>, kNumJoints>;

struct HandMesh {
    std::vector<Vec3> vertices;
    std::shared_ptr<const std::vector<Face>> faces;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HandModel {
public:
    /// Per-vertex generation labels: which part it belongs to (0 = palm,
    /// 1 + finger for the five finger tubes) and its axial coordinate.
    struct VertexLabel {
        int part = 0;
        double axial = 0.0;
    };

    HandModel(std::vector<Vec3> templ, std::vector<Face> faces, std::array<std::vector<Vec3>, kNumShape> basis,
              std::vector<SkinWeights> skin, JointRegressor regressor, std::vector<VertexLabel> labels = {});

    int vertex_count() const { return static_cast<int>(template_.size()); }
    const std::vector<Vec3>& template_vertices() const { return template_; }
    const std::vector<Face>& faces() const { return *faces_; }
    const std::shared_ptr<const std::vector<Face>>& shared_faces() const { return faces_; }
    const std::vector<Vec3>& shape_mode(int i) const { return basis_[i]; }
    const std::vector<SkinWeights>& skin_weights() const { return skin_; }
    /// N x 16 dense view of the skin weights.
    Eigen::MatrixXd dense_skin_weights() const;
    const JointRegressor& joint_regressor() const { return regressor_; }
    const std::vector<VertexLabel>& labels() const { return labels_; }

    /// Regressed joints of the template (zero shape).
    const std::array<Vec3, kNumJoints>& rest_joints() const { return rest_joints_; }
    /// d joint_j / d beta_i, i.e. the regressor applied to each shape mode.
    const std::array<std::array<Vec3, kNumShape>, kNumJoints>& joint_shape_basis() const { return joint_basis_; }
    /// Joints of the shaped template via the precomputed linear map.
    std::array<Vec3, kNumJoints> shaped_joints(const HandShape& shape) const;
    KinematicTree skeleton(const HandShape& shape = HandShape::zero()) const;

    std::vector<char> serialize() const;
    static HandModel deserialize(const std::vector<char>& bytes);
    void save(const std::string& path) const;
    static HandModel load(const std::string& path);

    bool operator==(const HandModel& o) const;

private:
    std::vector<Vec3> template_;
    std::shared_ptr<const std::vector<Face>> faces_;
    std::array<std::vector<Vec3>, kNumShape> basis_;
    std::vector<SkinWeights> skin_;
    JointRegressor regressor_;
    std::vector<VertexLabel> labels_;

    std::array<Vec3, kNumJoints> rest_joints_{};
    std::array<std::array<Vec3, kNumShape>, kNumJoints> joint_basis_{};
};

/// Procedural hand: a palm slab plus five capped finger tubes, tessellated
/// to exactly `vertex_count` vertices. Deterministic.
HandModel build_default_model(int vertex_count = kDefaultVertexCount);

std::vector<Vec3> shape_template(const HandModel& model, const HandShape& shape);
JointSet regress_joints(const HandModel& model, const std::vector<Vec3>& shaped);
HandMesh skin(const HandModel& model, const std::vector<Vec3>& shaped, const Pose& pose);
JointSet mesh_to_joints(const HandModel& model, const HandMesh& mesh);
/// Full M(pose, shape).
HandMesh posed_mesh(const HandModel& model, const HandShape& shape, const Pose& pose);

void export_obj(const HandMesh& mesh, const std::string& path);
std::string obj_string(const HandMesh& mesh);
/// Minimal reader for `v` and triangular `f` lines.
HandMesh parse_obj(const std::string& text);

}  // namespace handik
