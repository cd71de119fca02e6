#pragma once

#include "handik/heatmaps.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace handik {

/// Dense little-endian float64 array in NumPy .npy (format 1.0) layout,
/// C order. float32 files are accepted on read.
struct NpyArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

std::vector<char> npy_bytes(const NpyArray& a);
NpyArray npy_parse(const std::vector<char>& bytes);
void write_npy(const std::string& path, const NpyArray& a);
NpyArray read_npy(const std::string& path);

NpyArray to_npy(const HeatVolume& v);
NpyArray to_npy(const HeatMap2D& m);
NpyArray to_npy(const Grid2D& g);
/// Requires a 4-D K x Z x H x W array with Z in {32, 64}; ShapeError otherwise.
HeatVolume volume_from_npy(const NpyArray& a);
HeatMap2D heatmap_from_npy(const NpyArray& a);
Grid2D grid_from_npy(const NpyArray& a);

}  // namespace handik
