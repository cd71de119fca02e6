#include "handik/heatmaps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace handik {

HeatMap2D encode_heatmap2d(const std::vector<PixelCoord>& uv, double sigma, int height, int width) {
    if (!(sigma > 0.0)) throw std::invalid_argument("heatmap sigma must be positive");
    HeatMap2D out(static_cast<int>(uv.size()), height, width);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int k = 0; k < out.joints; ++k) {
        if (!std::isfinite(uv[k].u) || !std::isfinite(uv[k].v)) throw std::invalid_argument("non-finite keypoint");
        for (int y = 0; y < height; ++y) {
            const double dy = y - uv[k].v;
            for (int x = 0; x < width; ++x) {
                const double dx = x - uv[k].u;
                out.at(k, y, x) = std::exp(-(dx * dx + dy * dy) * inv);
            }
        }
    }
    return out;
}

HeatVolume encode_volume(const std::vector<Uvd>& uvd, int z_res, double sigma_vox, int height, int width) {
    if (!(sigma_vox > 0.0)) throw std::invalid_argument("volume sigma must be positive");
    if (z_res <= 0) throw ShapeError("depth resolution must be positive");
    HeatVolume out(static_cast<int>(uvd.size()), z_res, height, width);
    const double inv = 1.0 / (2.0 * sigma_vox * sigma_vox);
    // Separable Gaussian: one 1-D profile per axis.
    std::vector<double> gu(width), gv(height), gd(z_res);
    for (int k = 0; k < out.joints; ++k) {
        for (int u = 0; u < width; ++u) gu[u] = std::exp(-(u - uvd[k].u) * (u - uvd[k].u) * inv);
        for (int v = 0; v < height; ++v) gv[v] = std::exp(-(v - uvd[k].v) * (v - uvd[k].v) * inv);
        for (int d = 0; d < z_res; ++d) gd[d] = std::exp(-(d - uvd[k].d) * (d - uvd[k].d) * inv);
        double sum = 0.0;
        for (int d = 0; d < z_res; ++d) {
            for (int v = 0; v < height; ++v) {
                const double dv = gd[d] * gv[v];
                for (int u = 0; u < width; ++u) {
                    const double val = dv * gu[u];
                    out.at(k, d, v, u) = val;
                    sum += val;
                }
            }
        }
        if (!(sum > 0.0)) throw std::invalid_argument("keypoint too far outside the volume to encode");
        double* ch = out.data.data() + k * out.channel_size();
        for (std::size_t i = 0; i < out.channel_size(); ++i) ch[i] /= sum;
    }
    return out;
}

HeatVolume encode_volume_delta(const std::vector<Uvd>& uvd, int z_res, int height, int width) {
    HeatVolume out(static_cast<int>(uvd.size()), z_res, height, width);
    for (int k = 0; k < out.joints; ++k) {
        const int u = std::clamp(static_cast<int>(std::lround(uvd[k].u)), 0, width - 1);
        const int v = std::clamp(static_cast<int>(std::lround(uvd[k].v)), 0, height - 1);
        const int d = std::clamp(static_cast<int>(std::lround(uvd[k].d)), 0, z_res - 1);
        out.at(k, d, v, u) = 1.0;
    }
    return out;
}

std::vector<Uvd> soft_argmax(const HeatVolume& vol) {
    std::vector<Uvd> out(vol.joints);
    for (int k = 0; k < vol.joints; ++k) {
        double s = 0.0, su = 0.0, sv = 0.0, sd = 0.0;
        for (int d = 0; d < vol.depth; ++d) {
            for (int v = 0; v < vol.height; ++v) {
                double row = 0.0, row_u = 0.0;
                for (int u = 0; u < vol.width; ++u) {
                    const double h = vol.at(k, d, v, u);
                    row += h;
                    row_u += h * u;
                }
                s += row;
                su += row_u;
                sv += row * v;
                sd += row * d;
            }
        }
        if (!(s > 0.0)) {
            throw std::domain_error("soft_argmax: channel " + std::to_string(k) + " has no probability mass");
        }
        out[k] = {su / s, sv / s, sd / s};
    }
    return out;
}

HeatVolume soft_argmax_backward(const HeatVolume& vol, const std::vector<Uvd>& grad) {
    const std::vector<Uvd> mean = soft_argmax(vol);
    HeatVolume out(vol.joints, vol.depth, vol.height, vol.width);
    for (int k = 0; k < vol.joints; ++k) {
        double s = 0.0;
        const double* ch = vol.data.data() + k * vol.channel_size();
        for (std::size_t i = 0; i < vol.channel_size(); ++i) s += ch[i];
        // d(mean_c)/dH(x) = (x_c - mean_c) / s
        const double base = -(grad[k].u * mean[k].u + grad[k].v * mean[k].v + grad[k].d * mean[k].d);
        for (int d = 0; d < vol.depth; ++d) {
            for (int v = 0; v < vol.height; ++v) {
                for (int u = 0; u < vol.width; ++u) {
                    out.at(k, d, v, u) = (base + grad[k].u * u + grad[k].v * v + grad[k].d * d) / s;
                }
            }
        }
    }
    return out;
}

double depth_voxel_to_normalized(double d, int z_res) { return (d - 0.5 * z_res) * kDepthRange / z_res; }

double normalized_to_depth_voxel(double dn, int z_res) { return dn * z_res / kDepthRange + 0.5 * z_res; }

std::vector<Vec3> uvd_to_xyz(const std::vector<Uvd>& uvd, const CameraIntrinsics& intr, const DepthFrame& frame,
                             int z_res) {
    std::vector<Vec3> out;
    out.reserve(uvd.size());
    for (const Uvd& p : uvd) {
        const double z = frame.root_depth + frame.scale * depth_voxel_to_normalized(p.d, z_res);
        out.push_back(unproject(intr, {p.u, p.v}, z));
    }
    return out;
}

std::vector<Uvd> xyz_to_uvd(const std::vector<Vec3>& xyz, const CameraIntrinsics& intr, const DepthFrame& frame,
                            int z_res) {
    std::vector<Uvd> out;
    out.reserve(xyz.size());
    for (const Vec3& p : xyz) {
        const PixelCoord uv = project(intr, p);
        out.push_back({uv.u, uv.v, normalized_to_depth_voxel((p.z() - frame.root_depth) / frame.scale, z_res)});
    }
    return out;
}

RasterResult rasterize(const HandMesh& mesh, const CameraIntrinsics& intr, int height, int width,
                       const DepthFrame& frame) {
    RasterResult out{Silhouette(height, width, 0.0), DepthMap(height, width, kDepthBackground)};
    Grid2D zbuf(height, width, std::numeric_limits<double>::infinity());
    std::vector<PixelCoord> screen;
    screen.reserve(mesh.vertices.size());
    for (const Vec3& p : mesh.vertices) screen.push_back(project(intr, p));
    if (!mesh.faces) return out;

    auto edge = [](const PixelCoord& a, const PixelCoord& b, double x, double y) {
        return (b.u - a.u) * (y - a.v) - (b.v - a.v) * (x - a.u);
    };
    for (const Face& f : *mesh.faces) {
        const PixelCoord& a = screen[f[0]];
        const PixelCoord& b = screen[f[1]];
        const PixelCoord& c = screen[f[2]];
        const double area = edge(a, b, c.u, c.v);
        if (area == 0.0 || !std::isfinite(area)) continue;
        const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.u, b.u, c.u}))));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.u, b.u, c.u}))));
        const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.v, b.v, c.v}))));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.v, b.v, c.v}))));
        const double iz0 = 1.0 / mesh.vertices[f[0]].z();
        const double iz1 = 1.0 / mesh.vertices[f[1]].z();
        const double iz2 = 1.0 / mesh.vertices[f[2]].z();
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                // barycentrics from edge functions; the sign of `area`
                // absorbs the winding so both orientations rasterize
                const double w0 = edge(b, c, x, y) / area;
                const double w1 = edge(c, a, x, y) / area;
                const double w2 = edge(a, b, x, y) / area;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                // perspective-correct depth: 1/z is affine in screen space
                const double z = 1.0 / (w0 * iz0 + w1 * iz1 + w2 * iz2);
                out.silhouette.at(y, x) = 1.0;
                if (z < zbuf.at(y, x)) zbuf.at(y, x) = z;
            }
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (out.silhouette.at(y, x) > 0.0) out.depth.at(y, x) = (zbuf.at(y, x) - frame.root_depth) / frame.scale;
        }
    }
    return out;
}

}  // namespace handik
