#include "delight/core/digest.hpp"

#include <fstream>
#include <vector>

#include "delight/core/errors.hpp"

namespace dlt {

uint64_t digestBytes(const void* data, size_t n, uint64_t seed) {
    uint64_t h = seed;
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string digestFile(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("digestFile: cannot open " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (f) {
        f.read(buf.data(), std::streamsize(buf.size()));
        h = digestBytes(buf.data(), size_t(f.gcount()), h);
    }
    return digestToHex(h);
}

std::string digestToHex(uint64_t d) {
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = hex[d & 0xf];
        d >>= 4;
    }
    return s;
}

}  // namespace dlt
