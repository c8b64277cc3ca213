#ifndef S2C_IMAGE_HPP
#define S2C_IMAGE_HPP

#include <string>
#include <vector>

namespace s2c {

/// 8-bit-origin RGB image with values in [0, 1], stored height x width x 3.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;

    Image() = default;
    Image(int w, int h, float fill = 0.0f) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

    float& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float luminance(int x, int y) const {
        return 0.299f * at(x, y, 0) + 0.587f * at(x, y, 1) + 0.114f * at(x, y, 2);
    }
};

/// Binary PPM (P6, maxval 255).
Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& image);

Image flip_horizontal(const Image& image);

} // namespace s2c

#endif
