#include "vlm/image_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace vlm {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return buf;
}

void write_file(const std::string& path, const std::vector<unsigned char>& buf) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for " + path);
}

uint32_t be32(const unsigned char* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void push_be32(std::vector<unsigned char>& v, uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
    push_be32(out, static_cast<uint32_t>(payload.size()));
    size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uLong crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + payload.size()));
    push_be32(out, static_cast<uint32_t>(crc));
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

RasterImage decode_png(const std::vector<unsigned char>& buf, const std::string& path) {
    if (buf.size() < 8 + 25 || std::memcmp(buf.data(), kPngSig, 8) != 0)
        throw IoError(path + ": not a PNG file");
    size_t pos = 8;
    int width = 0, height = 0, bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<unsigned char> idat;
    bool saw_ihdr = false, saw_iend = false;
    while (pos + 8 <= buf.size() && !saw_iend) {
        uint32_t len = be32(&buf[pos]);
        if (pos + 12 + len > buf.size()) throw IoError(path + ": truncated PNG chunk");
        const char* type = reinterpret_cast<const char*>(&buf[pos + 4]);
        const unsigned char* payload = &buf[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw IoError(path + ": bad IHDR");
            width = static_cast<int>(be32(payload));
            height = static_cast<int>(be32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            interlace = payload[12];
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || width < 1 || height < 1) throw IoError(path + ": missing or bad IHDR");
    if (bit_depth != 8) throw IoError(path + ": only 8-bit PNG supported");
    if (interlace != 0) throw IoError(path + ": interlaced PNG not supported");
    int src_ch;
    switch (color_type) {
        case 0: src_ch = 1; break;
        case 2: src_ch = 3; break;
        case 4: src_ch = 2; break;
        case 6: src_ch = 4; break;
        default: throw IoError(path + ": unsupported PNG color type " + std::to_string(color_type));
    }

    size_t stride = static_cast<size_t>(width) * src_ch;
    std::vector<unsigned char> raw(static_cast<size_t>(height) * (stride + 1));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    int zrc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zrc != Z_OK || raw_len != raw.size()) throw IoError(path + ": PNG inflate failed");

    // un-filter scanlines in place into a packed buffer
    std::vector<unsigned char> pix(static_cast<size_t>(height) * stride);
    int bpp = src_ch;
    for (int y = 0; y < height; ++y) {
        unsigned char filter = raw[static_cast<size_t>(y) * (stride + 1)];
        const unsigned char* src = &raw[static_cast<size_t>(y) * (stride + 1) + 1];
        unsigned char* dst = &pix[static_cast<size_t>(y) * stride];
        const unsigned char* prev = y > 0 ? &pix[static_cast<size_t>(y - 1) * stride] : nullptr;
        for (size_t x = 0; x < stride; ++x) {
            int a = x >= static_cast<size_t>(bpp) ? dst[x - bpp] : 0;
            int b = prev ? prev[x] : 0;
            int c = (prev && x >= static_cast<size_t>(bpp)) ? prev[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw IoError(path + ": bad PNG filter " + std::to_string(filter));
            }
            dst[x] = static_cast<unsigned char>(v & 0xff);
        }
    }

    // drop alpha if present
    int out_ch = (src_ch == 1 || src_ch == 2) ? 1 : 3;
    RasterImage img = RasterImage::zeros(height, width, out_ch);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const unsigned char* p = &pix[(static_cast<size_t>(y) * width + x) * src_ch];
            for (int ch = 0; ch < out_ch; ++ch) img.at(y, x, ch) = p[ch] / 255.0f;
        }
    return img;
}

RasterImage decode_ppm(const std::vector<unsigned char>& buf, const std::string& path) {
    // P6, whitespace-separated header, maxval <= 255
    size_t pos = 2;
    auto skip_ws = [&] {
        while (pos < buf.size()) {
            if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else if (std::isspace(buf[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> int {
        skip_ws();
        int v = 0;
        bool any = false;
        while (pos < buf.size() && std::isdigit(buf[pos])) {
            v = v * 10 + (buf[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) throw IoError(path + ": bad PPM header");
        return v;
    };
    int width = read_int();
    int height = read_int();
    int maxval = read_int();
    if (maxval != 255) throw IoError(path + ": only maxval 255 PPM supported");
    ++pos; // single whitespace after maxval
    size_t need = static_cast<size_t>(width) * height * 3;
    if (pos + need > buf.size()) throw IoError(path + ": truncated PPM pixel data");
    RasterImage img = RasterImage::zeros(height, width, 3);
    for (size_t i = 0; i < need; ++i) img.data[i] = buf[pos + i] / 255.0f;
    return img;
}

} // namespace

RasterImage load_image(const std::string& path) {
    std::vector<unsigned char> buf = read_file(path);
    if (buf.size() >= 8 && std::memcmp(buf.data(), kPngSig, 8) == 0) return decode_png(buf, path);
    if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '6') return decode_ppm(buf, path);
    throw IoError(path + ": unrecognized image format (PNG or PPM P6 expected)");
}

void save_png(const RasterImage& img, const std::string& path) {
    if (!img.valid()) throw std::invalid_argument("save_png: invalid image");
    const int C = img.channels;
    const unsigned char color_type = C == 1 ? 0 : 2;
    size_t stride = static_cast<size_t>(img.width) * C;
    std::vector<unsigned char> raw(static_cast<size_t>(img.height) * (stride + 1));
    for (int y = 0; y < img.height; ++y) {
        raw[static_cast<size_t>(y) * (stride + 1)] = 0; // filter: none
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < C; ++ch) {
                float v = std::clamp(img.at(y, x, ch), 0.0f, 1.0f);
                raw[static_cast<size_t>(y) * (stride + 1) + 1 + static_cast<size_t>(x) * C + ch] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    }
    uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_cap);
    if (compress2(comp.data(), &comp_cap, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("save_png: deflate failed");
    comp.resize(comp_cap);

    std::vector<unsigned char> out(kPngSig, kPngSig + 8);
    std::vector<unsigned char> ihdr;
    push_be32(ihdr, static_cast<uint32_t>(img.width));
    push_be32(ihdr, static_cast<uint32_t>(img.height));
    ihdr.push_back(8);          // bit depth
    ihdr.push_back(color_type); // gray or RGB
    ihdr.push_back(0);          // compression
    ihdr.push_back(0);          // filter method
    ihdr.push_back(0);          // no interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", comp);
    append_chunk(out, "IEND", {});
    write_file(path, out);
}

void save_ppm(const RasterImage& img, const std::string& path) {
    if (!img.valid() || img.channels != 3) throw std::invalid_argument("save_ppm: expected 3-channel image");
    std::vector<unsigned char> out;
    std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.insert(out.end(), header.begin(), header.end());
    for (float v : img.data)
        out.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
    write_file(path, out);
}

} // namespace vlm
