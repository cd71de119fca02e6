#pragma once

#include "handik/geom.hpp"
#include "handik/handmodel.hpp"
#include "handik/kinematics.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace handik {

inline constexpr int kHeatmapSize = 64;
inline constexpr double kHeatmapSigma = 1.5;
inline constexpr double kVolumeSigma = 1.5;
/// Normalized depth span (reference-bone units) mapped onto the Z voxels.
inline constexpr double kDepthRange = 3.0;
inline constexpr double kDepthBackground = 1e3;

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// K x H x W, row-major.
struct HeatMap2D {
    int joints = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    HeatMap2D() = default;
    HeatMap2D(int k, int h, int w, double fill = 0.0) : joints(k), height(h), width(w), data(std::size_t(k) * h * w, fill) {}
    double& at(int k, int y, int x) { return data[(std::size_t(k) * height + y) * width + x]; }
    double at(int k, int y, int x) const { return data[(std::size_t(k) * height + y) * width + x]; }
};

/// H x W grid; used for both silhouettes (values in [0,1]) and depth maps.
struct Grid2D {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Grid2D() = default;
    Grid2D(int h, int w, double fill = 0.0) : height(h), width(w), data(std::size_t(h) * w, fill) {}
    double& at(int y, int x) { return data[std::size_t(y) * width + x]; }
    double at(int y, int x) const { return data[std::size_t(y) * width + x]; }
};
using Silhouette = Grid2D;
using DepthMap = Grid2D;

/// K x Z x H x W, row-major (u fastest).
struct HeatVolume {
    int joints = 0;
    int depth = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    HeatVolume() = default;
    HeatVolume(int k, int z, int h, int w, double fill = 0.0)
        : joints(k), depth(z), height(h), width(w), data(std::size_t(k) * z * h * w, fill) {}
    std::size_t channel_size() const { return std::size_t(depth) * height * width; }
    double& at(int k, int d, int v, int u) { return data[((std::size_t(k) * depth + d) * height + v) * width + u]; }
    double at(int k, int d, int v, int u) const { return data[((std::size_t(k) * depth + d) * height + v) * width + u]; }
};

struct Uvd {
    double u = 0.0;
    double v = 0.0;
    double d = 0.0;
};

HeatMap2D encode_heatmap2d(const std::vector<PixelCoord>& uv, double sigma = kHeatmapSigma, int height = kHeatmapSize,
                           int width = kHeatmapSize);

HeatVolume encode_volume(const std::vector<Uvd>& uvd, int z_res, double sigma_vox = kVolumeSigma,
                         int height = kHeatmapSize, int width = kHeatmapSize);
/// Point mass on the voxel nearest to each keypoint (the sigma -> 0 limit).
HeatVolume encode_volume_delta(const std::vector<Uvd>& uvd, int z_res, int height = kHeatmapSize,
                               int width = kHeatmapSize);

/// Expected voxel coordinates per channel. Channels are renormalized, so
/// unnormalized non-negative input is accepted.
std::vector<Uvd> soft_argmax(const HeatVolume& vol);
/// Reverse pass of soft_argmax for upstream gradients on the returned uvd.
HeatVolume soft_argmax_backward(const HeatVolume& vol, const std::vector<Uvd>& grad);

struct DepthFrame {
    double root_depth = 0.0;  ///< camera-space z of the root joint
    double scale = 1.0;       ///< reference-bone length, same units as z
};

double depth_voxel_to_normalized(double d, int z_res);
double normalized_to_depth_voxel(double dn, int z_res);

std::vector<Vec3> uvd_to_xyz(const std::vector<Uvd>& uvd, const CameraIntrinsics& intr, const DepthFrame& frame,
                             int z_res);
std::vector<Uvd> xyz_to_uvd(const std::vector<Vec3>& xyz, const CameraIntrinsics& intr, const DepthFrame& frame,
                            int z_res);

struct RasterResult {
    Silhouette silhouette;
    DepthMap depth;
};

/// Z-buffered coverage of `mesh` (camera frame, z > 0), sampled at integer
/// pixel coordinates. Depth is reported as (z - root_depth) / scale with
/// kDepthBackground where nothing is covered.
RasterResult rasterize(const HandMesh& mesh, const CameraIntrinsics& intr, int height, int width,
                       const DepthFrame& frame = {});

}  // namespace handik
