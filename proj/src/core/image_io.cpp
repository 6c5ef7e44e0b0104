#include "delight/core/image_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dlt {

static_assert(std::endian::native == std::endian::little,
              "fimg I/O assumes a little-endian host");

void writeFimg(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("writeFimg: cannot open " + path);
    f << "fimg\n" << img.width() << " " << img.height() << " " << img.channels() << "\n";
    f.write(reinterpret_cast<const char*>(img.data()),
            std::streamsize(img.size() * sizeof(float)));
    if (!f) throw DataError("writeFimg: write failed for " + path);
}

Image readFimg(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("readFimg: cannot open " + path);
    std::string magic;
    std::getline(f, magic);
    if (magic != "fimg") throw DataError("readFimg: bad magic in " + path);
    std::string dims;
    std::getline(f, dims);
    std::istringstream ds(dims);
    int w = 0, h = 0, c = 0;
    ds >> w >> h >> c;
    if (w <= 0 || h <= 0 || c <= 0) throw DataError("readFimg: bad dimensions in " + path);
    Image img(h, w, c);
    f.read(reinterpret_cast<char*>(img.data()), std::streamsize(img.size() * sizeof(float)));
    if (f.gcount() != std::streamsize(img.size() * sizeof(float)))
        throw DataError("readFimg: truncated data in " + path);
    return img;
}

float linearToSrgb(float v) {
    v = std::clamp(v, 0.0f, 1.0f);
    return v <= 0.0031308f ? 12.92f * v : 1.055f * std::pow(v, 1.0f / 2.4f) - 0.055f;
}

float srgbToLinear(float v) {
    v = std::clamp(v, 0.0f, 1.0f);
    return v <= 0.04045f ? v / 12.92f : std::pow((v + 0.055f) / 1.055f, 2.4f);
}

void writePreviewPpm(const std::string& path, const Image& linear) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("writePreviewPpm: cannot open " + path);
    const int h = linear.height(), w = linear.width();
    f << "P6\n" << w << " " << h << "\n255\n";
    std::vector<uint8_t> row(size_t(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                const int src = linear.channels() >= 3 ? ch : 0;
                const float s = linearToSrgb(linear.at(y, x, src));
                row[size_t(x) * 3 + ch] = uint8_t(std::lround(s * 255.0f));
            }
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
}

}  // namespace dlt
