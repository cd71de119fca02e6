#include "handik/npy.hpp"

#include "handik/binary_io.hpp"

#include <regex>
#include <sstream>

namespace handik {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << shape[i];
        if (shape.size() == 1 || i + 1 < shape.size()) os << ',';
        if (i + 1 < shape.size()) os << ' ';
    }
    os << ')';
    return os.str();
}

}  // namespace

std::vector<char> npy_bytes(const NpyArray& a) {
    if (element_count(a.shape) != a.data.size()) throw ShapeError("npy: shape does not match data size");
    std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_string(a.shape) + ", }";
    const std::size_t prefix = 6 + 2 + 2;
    const std::size_t total = prefix + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header.push_back('\n');
    binio::Writer w;
    w.magic(std::string_view(kMagic, 6));
    w.magic(std::string_view("\x01\x00", 2));
    std::vector<char> out = w.take();
    out.push_back(static_cast<char>(header.size() & 0xff));
    out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
    out.insert(out.end(), header.begin(), header.end());
    binio::Writer body;
    for (double v : a.data) body.f64(v);
    const auto& b = body.bytes();
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

NpyArray npy_parse(const std::vector<char>& bytes) {
    binio::Reader r(std::string_view(bytes.data(), bytes.size()));
    r.expect_magic(std::string_view(kMagic, 6));
    r.require(4, "truncated npy header");
    const auto major = static_cast<unsigned char>(bytes[6]);
    std::size_t header_len = 0;
    std::size_t start = 0;
    if (major == 1) {
        header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
        start = 10;
    } else if (major == 2 || major == 3) {
        if (bytes.size() < 12) throw binio::FormatError("truncated npy header", bytes.size());
        for (int i = 0; i < 4; ++i) header_len |= std::size_t(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
        start = 12;
    } else {
        throw binio::FormatError("unsupported npy version", 6);
    }
    if (bytes.size() < start + header_len) throw binio::FormatError("truncated npy header", bytes.size());
    const std::string header(bytes.data() + start, header_len);

    std::smatch m;
    if (!std::regex_search(header, m, std::regex("'descr'\\s*:\\s*'([<|]?)([fi])(\\d)'"))) {
        throw binio::FormatError("npy: missing or unsupported dtype", start);
    }
    const char kind = m[2].str()[0];
    const int width = std::stoi(m[3].str());
    if (kind != 'f' || (width != 8 && width != 4)) throw binio::FormatError("npy: only float32/float64 supported", start);
    if (std::regex_search(header, std::regex("'fortran_order'\\s*:\\s*True"))) {
        throw binio::FormatError("npy: fortran order not supported", start);
    }
    if (!std::regex_search(header, m, std::regex("'shape'\\s*:\\s*\\(([^)]*)\\)"))) {
        throw binio::FormatError("npy: missing shape", start);
    }
    NpyArray a;
    const std::string dims = m[1].str();
    std::regex num("\\d+");
    for (auto it = std::sregex_iterator(dims.begin(), dims.end(), num); it != std::sregex_iterator(); ++it) {
        a.shape.push_back(std::stoull(it->str()));
    }
    const std::size_t n = element_count(a.shape);
    const std::size_t data_start = start + header_len;
    if (bytes.size() < data_start + n * width) throw binio::FormatError("npy: truncated data", bytes.size());
    binio::Reader body(std::string_view(bytes.data() + data_start, bytes.size() - data_start));
    a.data.resize(n);
    for (auto& v : a.data) v = width == 8 ? body.f64() : static_cast<double>(body.f32());
    return a;
}

void write_npy(const std::string& path, const NpyArray& a) { binio::write_file(path, npy_bytes(a)); }

NpyArray read_npy(const std::string& path) { return npy_parse(binio::read_file(path)); }

NpyArray to_npy(const HeatVolume& v) {
    return {{std::size_t(v.joints), std::size_t(v.depth), std::size_t(v.height), std::size_t(v.width)}, v.data};
}

NpyArray to_npy(const HeatMap2D& m) {
    return {{std::size_t(m.joints), std::size_t(m.height), std::size_t(m.width)}, m.data};
}

NpyArray to_npy(const Grid2D& g) { return {{std::size_t(g.height), std::size_t(g.width)}, g.data}; }

HeatVolume volume_from_npy(const NpyArray& a) {
    if (a.shape.size() != 4) {
        throw ShapeError("expected a 4-D K x Z x H x W volume, got " + std::to_string(a.shape.size()) + " dims");
    }
    if (a.shape[1] != 32 && a.shape[1] != 64) {
        throw ShapeError("volume depth resolution must be 32 or 64, got " + std::to_string(a.shape[1]));
    }
    HeatVolume v(int(a.shape[0]), int(a.shape[1]), int(a.shape[2]), int(a.shape[3]));
    v.data = a.data;
    return v;
}

HeatMap2D heatmap_from_npy(const NpyArray& a) {
    if (a.shape.size() != 3) throw ShapeError("expected a 3-D K x H x W heatmap");
    HeatMap2D m(int(a.shape[0]), int(a.shape[1]), int(a.shape[2]));
    m.data = a.data;
    return m;
}

Grid2D grid_from_npy(const NpyArray& a) {
    if (a.shape.size() != 2) throw ShapeError("expected a 2-D H x W grid");
    Grid2D g(int(a.shape[0]), int(a.shape[1]));
    g.data = a.data;
    return g;
}

}  // namespace handik
