#include "hairstep/io.hpp"

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

#include "json.hpp"

namespace hairstep::io {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "raw formats assume a little-endian host");

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    return f;
}

struct ReadState {
    PngData data;
    std::vector<unsigned char> rows;
    char message[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
    auto* message = static_cast<char*>(png_get_error_ptr(png));
    std::snprintf(message, 256, "%s", msg);
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

// No C++ objects with destructors live in this frame; everything touched
// after setjmp is reached through `state`.
bool read_png_raw(std::FILE* file, ReadState* state) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, state->message, on_png_error, on_png_warning);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, file);
    png_read_info(png, info);
    const png_byte colorType = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (colorType == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (colorType == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    state->data.width = static_cast<int>(png_get_image_width(png, info));
    state->data.height = static_cast<int>(png_get_image_height(png, info));
    state->data.channels = png_get_channels(png, info);
    state->data.bitDepth = png_get_bit_depth(png, info);
    const std::size_t rowBytes = png_get_rowbytes(png, info);
    state->rows.resize(rowBytes * static_cast<std::size_t>(state->data.height));
    for (int y = 0; y < state->data.height; ++y)
        png_read_row(png, state->rows.data() + rowBytes * static_cast<std::size_t>(y), nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

struct WriteState {
    const PngData* data;
    std::vector<unsigned char> rows;
    char message[256] = {0};
};

bool write_png_raw(std::FILE* file, WriteState* state) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, state->message, on_png_error, on_png_warning);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    const PngData& d = *state->data;
    int colorType = PNG_COLOR_TYPE_GRAY;
    if (d.channels == 2) colorType = PNG_COLOR_TYPE_GRAY_ALPHA;
    if (d.channels == 3) colorType = PNG_COLOR_TYPE_RGB;
    if (d.channels == 4) colorType = PNG_COLOR_TYPE_RGBA;
    png_init_io(png, file);
    png_set_IHDR(png, info, static_cast<png_uint_32>(d.width), static_cast<png_uint_32>(d.height), d.bitDepth,
                 colorType, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t rowBytes = static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.channels) *
                                 static_cast<std::size_t>(d.bitDepth / 8);
    for (int y = 0; y < d.height; ++y)
        png_write_row(png, state->rows.data() + rowBytes * static_cast<std::size_t>(y));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

json parse_json_file(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
}

template <typename T>
T json_field(const json& j, const char* key, const fs::path& path) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(path.string() + ": missing field '" + key + "'", 0);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": bad field '" + key + "': " + e.what(), 0);
    }
}

}  // namespace

PngData read_png(const fs::path& path) {
    FilePtr file = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw ParseError(path.string() + ": not a PNG file", 0);
    std::rewind(file.get());

    ReadState state;
    if (!read_png_raw(file.get(), &state))
        throw ParseError(path.string() + ": " + (state.message[0] ? state.message : "libpng failure"), 0);

    PngData& d = state.data;
    const std::size_t n = static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height) *
                          static_cast<std::size_t>(d.channels);
    d.samples.resize(n);
    if (d.bitDepth == 16) {
        for (std::size_t i = 0; i < n; ++i)
            d.samples[i] = static_cast<std::uint16_t>((state.rows[2 * i] << 8) | state.rows[2 * i + 1]);
    } else {
        for (std::size_t i = 0; i < n; ++i) d.samples[i] = state.rows[i];
    }
    return std::move(state.data);
}

void write_png(const fs::path& path, const PngData& data) {
    if (data.bitDepth != 8 && data.bitDepth != 16) throw InvalidInput("write_png: bit depth must be 8 or 16");
    if (data.channels < 1 || data.channels > 4) throw InvalidInput("write_png: channels must be 1..4");
    const std::size_t n = static_cast<std::size_t>(data.width) * static_cast<std::size_t>(data.height) *
                          static_cast<std::size_t>(data.channels);
    if (data.samples.size() != n) throw InvalidInput("write_png: sample count does not match dimensions");
    if (data.width <= 0 || data.height <= 0) throw InvalidInput("write_png: empty image");

    WriteState state{&data, {}, {0}};
    if (data.bitDepth == 16) {
        state.rows.resize(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            state.rows[2 * i] = static_cast<unsigned char>(data.samples[i] >> 8);
            state.rows[2 * i + 1] = static_cast<unsigned char>(data.samples[i] & 0xff);
        }
    } else {
        state.rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) state.rows[i] = static_cast<unsigned char>(std::min<std::uint16_t>(data.samples[i], 255));
    }
    FilePtr file = open_file(path, "wb");
    if (!write_png_raw(file.get(), &state))
        throw IoError(path.string() + ": " + (state.message[0] ? state.message : "libpng failure"));
}

void write_strand_map(const fs::path& path, const StrandMap& map) {
    PngData d{map.width(), map.height(), 3, 8, {}};
    d.samples.reserve(map.size() * 3);
    for (const Rgb& px : map.data())
        for (double c : px) d.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)));
    write_png(path, d);
}

StrandMap read_strand_map(const fs::path& path) {
    const PngData d = read_png(path);
    if (d.channels < 3) throw ParseError(path.string() + ": strand map must be RGB", 0);
    const double scale = d.bitDepth == 16 ? 65535.0 : 255.0;
    StrandMap map(d.width, d.height);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const std::size_t o = i * static_cast<std::size_t>(d.channels);
        map.at_index(i) = {d.samples[o] / scale, d.samples[o + 1] / scale, d.samples[o + 2] / scale};
    }
    return map;
}

void write_mask(const fs::path& path, const Mask& mask) {
    PngData d{mask.width(), mask.height(), 1, 8, {}};
    d.samples.reserve(mask.size());
    for (auto v : mask.data()) d.samples.push_back(v ? 255 : 0);
    write_png(path, d);
}

Mask read_mask(const fs::path& path) {
    const GrayImage g = read_gray(path);
    Mask m(g.width(), g.height(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) m.at_index(i) = g.at_index(i) >= 0.5 ? 1 : 0;
    return m;
}

GrayImage read_gray(const fs::path& path) {
    const PngData d = read_png(path);
    const double scale = d.bitDepth == 16 ? 65535.0 : 255.0;
    GrayImage g(d.width, d.height, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t o = i * static_cast<std::size_t>(d.channels);
        if (d.channels >= 3)
            g.at_index(i) = (0.299 * d.samples[o] + 0.587 * d.samples[o + 1] + 0.114 * d.samples[o + 2]) / scale;
        else
            g.at_index(i) = d.samples[o] / scale;
    }
    return g;
}

void write_gray(const fs::path& path, const GrayImage& image) {
    PngData d{image.width(), image.height(), 1, 8, {}};
    d.samples.reserve(image.size());
    for (double v : image.data()) d.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    write_png(path, d);
}

fs::path sidecar_path(const fs::path& path) {
    fs::path p = path;
    p.replace_extension(".json");
    return p;
}

void write_depth_map(const fs::path& pngPath, const DepthMap& depth) {
    require_same_shape(depth.values, depth.valid, "write_depth_map");
    PngData d{depth.width(), depth.height(), 1, 16, {}};
    d.samples.reserve(depth.values.size());
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
        if (!depth.valid.at_index(i)) {
            d.samples.push_back(0);
            continue;
        }
        const double v = std::clamp(depth.values.at_index(i), 0.0, 1.0);
        d.samples.push_back(static_cast<std::uint16_t>(1 + std::lround(v * 65534.0)));
    }
    write_png(pngPath, d);
    const json meta = {{"d_near", depth.dNear}, {"d_far", depth.dFar}, {"width", depth.width()}, {"height", depth.height()}};
    write_text(sidecar_path(pngPath), meta.dump(2) + "\n");
}

DepthMap read_depth_map(const fs::path& pngPath) {
    const PngData d = read_png(pngPath);
    if (d.channels != 1 || d.bitDepth != 16) throw ParseError(pngPath.string() + ": depth map must be 16-bit grayscale", 0);
    const fs::path metaPath = sidecar_path(pngPath);
    const json meta = parse_json_file(metaPath);
    const int w = json_field<int>(meta, "width", metaPath);
    const int h = json_field<int>(meta, "height", metaPath);
    if (w != d.width || h != d.height) throw ParseError(metaPath.string() + ": sidecar dimensions disagree with PNG", 0);

    DepthMap depth{Grid<double>(w, h, 0.0), Mask(w, h, 0), json_field<double>(meta, "d_near", metaPath),
                   json_field<double>(meta, "d_far", metaPath)};
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
        const std::uint16_t s = d.samples[i];
        if (s == 0) continue;
        depth.valid.at_index(i) = 1;
        depth.values.at_index(i) = (s - 1) / 65534.0;
    }
    return depth;
}

void write_labels(const fs::path& path, const Grid<int>& labels) {
    PngData d{labels.width(), labels.height(), 1, 16, {}};
    d.samples.reserve(labels.size());
    for (int v : labels.data()) {
        if (v < 0 || v > 65535) throw InvalidInput("write_labels: label out of 16-bit range");
        d.samples.push_back(static_cast<std::uint16_t>(v));
    }
    write_png(path, d);
}

Grid<int> read_labels(const fs::path& path) {
    const PngData d = read_png(path);
    if (d.channels != 1) throw ParseError(path.string() + ": label image must be grayscale", 0);
    Grid<int> labels(d.width, d.height, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) labels.at_index(i) = d.samples[i];
    return labels;
}

void write_direction_field(const fs::path& binPath, const DirectionField& field) {
    std::vector<float> raw;
    raw.reserve(field.size() * 2);
    for (const Vec2& v : field.data()) {
        raw.push_back(static_cast<float>(v.x()));
        raw.push_back(static_cast<float>(v.y()));
    }
    write_bytes(binPath, raw.data(), raw.size() * sizeof(float));
    const json header = {{"width", field.width()}, {"height", field.height()}};
    write_text(sidecar_path(binPath), header.dump(2) + "\n");
}

DirectionField read_direction_field(const fs::path& binPath) {
    const fs::path headerPath = sidecar_path(binPath);
    const json header = parse_json_file(headerPath);
    const int w = json_field<int>(header, "width", headerPath);
    const int h = json_field<int>(header, "height", headerPath);
    if (w < 0 || h < 0) throw ParseError(headerPath.string() + ": negative dimensions", 0);
    const std::vector<char> bytes = read_bytes(binPath);
    const std::size_t expected = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 2 * sizeof(float);
    if (bytes.size() != expected)
        throw ParseError(binPath.string() + ": expected " + std::to_string(expected) + " bytes", std::min(bytes.size(), expected));
    DirectionField field(w, h, Vec2::Zero());
    for (std::size_t i = 0; i < field.size(); ++i) {
        float xy[2];
        std::memcpy(xy, bytes.data() + i * sizeof(xy), sizeof(xy));
        field.at_index(i) = Vec2(xy[0], xy[1]);
    }
    return field;
}

std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) { write_bytes(path, text.data(), text.size()); }

}  // namespace hairstep::io
