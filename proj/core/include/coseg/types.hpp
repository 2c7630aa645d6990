#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace coseg {

using ClassId = std::uint8_t;

/// Single-channel image, row-major, intensities in [0, 1].
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int h, int w, double fill = 0.0)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

    [[nodiscard]] std::size_t size() const { return pixels.size(); }
    double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    /// Throws InvalidArgument unless the grid is at least 8x8 with every intensity in [0, 1].
    void validate() const;
    bool operator==(const GrayImage&) const = default;
};

/// Per-pixel class identifiers, row-major.
struct LabelMask {
    int height = 0;
    int width = 0;
    std::vector<ClassId> classes;

    LabelMask() = default;
    LabelMask(int h, int w, ClassId fill = 0)
        : height(h), width(w), classes(static_cast<std::size_t>(h) * w, fill) {}

    [[nodiscard]] std::size_t size() const { return classes.size(); }
    ClassId& at(int y, int x) { return classes[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] ClassId at(int y, int x) const { return classes[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] std::size_t count(ClassId cls) const;

    /// Throws InvalidArgument if any class id is >= num_classes.
    void validate(int num_classes) const;
    bool operator==(const LabelMask&) const = default;
};

/// Per-pixel class probabilities stored class-major: probs[l * H * W + i].
struct ProbMap {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<double> probs;

    ProbMap() = default;
    ProbMap(int h, int w, int l, double fill = 0.0)
        : height(h), width(w), num_classes(l),
          probs(static_cast<std::size_t>(h) * w * l, fill) {}

    [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
    double& at(int cls, std::size_t pixel) { return probs[cls * pixel_count() + pixel]; }
    [[nodiscard]] double at(int cls, std::size_t pixel) const { return probs[cls * pixel_count() + pixel]; }

    /// Per-pixel argmax; ties resolve to the lowest class id.
    [[nodiscard]] LabelMask argmax() const;
    /// Throws InvalidArgument unless every pixel lies on the simplex within tol.
    void validate(double tol = 1e-6) const;
    bool operator==(const ProbMap&) const = default;
};

template <typename A, typename B>
bool same_shape(const A& a, const B& b) {
    return a.height == b.height && a.width == b.width;
}

/// Throws InvalidArgument naming `what` if the two grids differ in size.
void require_same_shape(int h1, int w1, int h2, int w2, const char* what);

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    require_same_shape(a.height, a.width, b.height, b.width, what);
}

} // namespace coseg
