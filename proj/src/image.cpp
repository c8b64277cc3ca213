#include "s2c/image.hpp"

#include "s2c/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace s2c {

namespace {

void skip_space_and_comments(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
            in.get();
        } else {
            return;
        }
    }
}

int read_header_int(std::istream& in, const std::string& path) {
    skip_space_and_comments(in);
    int v = -1;
    if (!(in >> v) || v <= 0) throw IoError("malformed PPM header in " + path);
    return v;
}

} // namespace

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6') throw IoError(path + " is not a binary PPM (P6)");
    const int w = read_header_int(in, path);
    const int h = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (maxval != 255) throw IoError(path + ": only maxval 255 is supported");
    in.get();
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError(path + ": truncated pixel data");
    Image img(w, h);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.rgb[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

void write_ppm(const std::string& path, const Image& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> bytes(image.rgb.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const float v = std::clamp(image.rgb[i], 0.0f, 1.0f);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

Image flip_horizontal(const Image& image) {
    Image out(image.width, image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) out.at(image.width - 1 - x, y, c) = image.at(x, y, c);
    return out;
}

} // namespace s2c
