#pragma once

#include <afsmr/image.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace afsmr {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uintmax_t file_size_or_throw(const std::filesystem::path& path)
{
    std::error_code ec;
    auto size = std::filesystem::file_size(path, ec);
    if (ec)
        throw IoError("cannot open '" + path.string() + "': " + ec.message());
    return size;
}

template <typename T>
T from_little_endian(const unsigned char* bytes)
{
    static_assert(sizeof(T) == 4);
    std::uint32_t raw = std::uint32_t(bytes[0]) | (std::uint32_t(bytes[1]) << 8) |
                        (std::uint32_t(bytes[2]) << 16) | (std::uint32_t(bytes[3]) << 24);
    return std::bit_cast<T>(raw);
}

template <typename T>
void to_little_endian(T value, unsigned char* bytes)
{
    static_assert(sizeof(T) == 4);
    auto raw = std::bit_cast<std::uint32_t>(value);
    bytes[0] = static_cast<unsigned char>(raw);
    bytes[1] = static_cast<unsigned char>(raw >> 8);
    bytes[2] = static_cast<unsigned char>(raw >> 16);
    bytes[3] = static_cast<unsigned char>(raw >> 24);
}

inline std::uint8_t quantize_sample(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Raw planar YUV 4:2:0 (I420), 8 bit, no header. Only luma is surfaced.

inline std::size_t yuv420_frame_bytes(int width, int height)
{
    return static_cast<std::size_t>(width) * height * 3 / 2;
}

inline void check_yuv420_dimensions(int width, int height)
{
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("YUV dimensions must be positive");
    if (width % 2 != 0 || height % 2 != 0)
        throw std::invalid_argument("YUV 4:2:0 requires even width and height, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
}

/// Number of complete frames in a raw I420 file.
inline std::size_t count_yuv_frames(const std::filesystem::path& path, int width, int height)
{
    check_yuv420_dimensions(width, height);
    return detail::file_size_or_throw(path) / yuv420_frame_bytes(width, height);
}

/// Luma plane of frame `frame_index` (0-based) of a raw I420 file.
inline GrayFrame read_yuv_frame(const std::filesystem::path& path, std::size_t frame_index,
                                int width, int height)
{
    check_yuv420_dimensions(width, height);
    const auto frame_bytes = yuv420_frame_bytes(width, height);
    const auto size = detail::file_size_or_throw(path);
    if (size < (frame_index + 1) * frame_bytes)
        throw IoError("'" + path.string() + "' is truncated: frame " + std::to_string(frame_index) +
                      " needs " + std::to_string((frame_index + 1) * frame_bytes) + " bytes, file has " +
                      std::to_string(size));

    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    in.seekg(static_cast<std::streamoff>(frame_index * frame_bytes));
    std::vector<unsigned char> luma(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(luma.data()), static_cast<std::streamsize>(luma.size()));
    if (!in)
        throw IoError("short read from '" + path.string() + "'");

    return GrayFrame(width, height, std::vector<double>(luma.begin(), luma.end()));
}

/// Writes frames as I420 with neutral (128) chroma.
inline void write_yuv_sequence(const std::filesystem::path& path, const std::vector<GrayFrame>& frames)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create '" + path.string() + "'");
    for (const auto& frame : frames) {
        check_yuv420_dimensions(frame.width(), frame.height());
        std::vector<unsigned char> bytes(yuv420_frame_bytes(frame.width(), frame.height()), 128);
        std::transform(frame.values().begin(), frame.values().end(), bytes.begin(), detail::quantize_sample);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Middlebury .flo

inline constexpr float kFloMagic = 202021.25f;

/// Components with a larger magnitude are the conventional "unknown flow" marker.
inline constexpr double kFloUnknownThreshold = 1e9;

struct FloReadOptions {
    /// Map unknown-flow sentinels to (0, 0) instead of failing.
    bool zero_unknown = false;
};

inline MotionField read_flo(const std::filesystem::path& path, const FloReadOptions& options = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");

    std::array<unsigned char, 12> header{};
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    if (!in)
        throw IoError("'" + path.string() + "' is too short for a .flo header");

    if (detail::from_little_endian<float>(header.data()) != kFloMagic)
        throw IoError("'" + path.string() + "' is not a .flo file (bad magic)");
    const auto width = detail::from_little_endian<std::int32_t>(header.data() + 4);
    const auto height = detail::from_little_endian<std::int32_t>(header.data() + 8);
    if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16))
        throw IoError("'" + path.string() + "' has invalid dimensions " + std::to_string(width) + "x" +
                      std::to_string(height));

    const auto count = static_cast<std::size_t>(width) * height;
    const auto size = detail::file_size_or_throw(path);
    if (size != 12 + count * 8)
        throw IoError("'" + path.string() + "' size " + std::to_string(size) + " does not match " +
                      std::to_string(width) + "x" + std::to_string(height) + " flow");

    std::vector<unsigned char> payload(count * 8);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!in)
        throw IoError("short read from '" + path.string() + "'");

    std::vector<double> dm(count), dn(count);
    for (std::size_t i = 0; i < count; ++i) {
        double u = detail::from_little_endian<float>(payload.data() + 8 * i);
        double v = detail::from_little_endian<float>(payload.data() + 8 * i + 4);
        if (std::isnan(u) || std::isnan(v))
            throw IoError("'" + path.string() + "' contains NaN flow at pixel " + std::to_string(i));
        if (std::abs(u) > kFloUnknownThreshold || std::abs(v) > kFloUnknownThreshold) {
            if (!options.zero_unknown)
                throw IoError("'" + path.string() + "' contains unknown-flow marker at pixel " +
                              std::to_string(i));
            u = 0.0;
            v = 0.0;
        }
        dm[i] = u;
        dn[i] = v;
    }
    return MotionField(width, height, std::move(dm), std::move(dn));
}

inline void write_flo(const MotionField& field, const std::filesystem::path& path)
{
    const auto count = field.size();
    std::vector<unsigned char> bytes(12 + count * 8);
    detail::to_little_endian(kFloMagic, bytes.data());
    detail::to_little_endian(static_cast<std::int32_t>(field.width()), bytes.data() + 4);
    detail::to_little_endian(static_cast<std::int32_t>(field.height()), bytes.data() + 8);
    for (std::size_t i = 0; i < count; ++i) {
        detail::to_little_endian(static_cast<float>(field.dm()[i]), bytes.data() + 12 + 8 * i);
        detail::to_little_endian(static_cast<float>(field.dn()[i]), bytes.data() + 16 + 8 * i);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Binary PGM (P5, maxval 255)

inline void write_frame_pgm(const GrayFrame& frame, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create '" + path.string() + "'");
    out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
    std::vector<unsigned char> bytes(frame.size());
    std::transform(frame.values().begin(), frame.values().end(), bytes.begin(), detail::quantize_sample);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

inline GrayFrame read_frame_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");

    // Header tokens may be separated by whitespace and '#' comments.
    auto next_token = [&]() {
        std::string token;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!token.empty())
                    break;
                continue;
            }
            token.push_back(static_cast<char>(c));
        }
        return token;
    };

    if (next_token() != "P5")
        throw IoError("'" + path.string() + "' is not a binary PGM (P5)");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw IoError("'" + path.string() + "' has a malformed PGM header");
    }
    if (width <= 0 || height <= 0)
        throw IoError("'" + path.string() + "' has invalid dimensions");
    if (maxval != 255)
        throw IoError("'" + path.string() + "': only maxval 255 is supported");

    std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in)
        throw IoError("'" + path.string() + "' is truncated");
    return GrayFrame(width, height, std::vector<double>(bytes.begin(), bytes.end()));
}

// ---------------------------------------------------------------------------
// Mesh point sets as CSV: header "x,y,value", one point per line.

inline void write_mesh_csv(const MeshPointSet& mesh, const std::filesystem::path& path)
{
    mesh.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot create '" + path.string() + "'");
    out.precision(17);
    out << "x,y,value\n";
    for (std::size_t i = 0; i < mesh.size(); ++i)
        out << mesh.xs[i] << ',' << mesh.ys[i] << ',' << mesh.vals[i] << '\n';
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

inline MeshPointSet read_mesh_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,value", 0) != 0)
        throw IoError("'" + path.string() + "' lacks the x,y,value header");

    MeshPointSet mesh;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        std::istringstream fields(line);
        double x, y, v;
        char c1 = 0, c2 = 0;
        if (!(fields >> x >> c1 >> y >> c2 >> v) || c1 != ',' || c2 != ',')
            throw IoError("'" + path.string() + "' line " + std::to_string(line_no) + " is malformed");
        mesh.push_back(x, y, v);
    }
    mesh.validate();
    return mesh;
}

}  // namespace afsmr
