#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hairstep/errors.hpp"

namespace hairstep {

/// Integer pixel coordinate, +x right, +y down (raster order).
struct Pixel {
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
    friend constexpr auto operator<=>(const Pixel& a, const Pixel& b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
};

/// Dense row-major 2D grid.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int width, int height, const T& fill = T{})
        : width_(width), height_(height) {
        if (width < 0 || height < 0) throw InvalidInput("negative grid dimensions");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool contains(Pixel p) const { return contains(p.x, p.y); }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](Pixel p) { return (*this)(p.x, p.y); }
    const T& operator[](Pixel p) const { return (*this)(p.x, p.y); }

    T& at_index(std::size_t i) { return data_[i]; }
    const T& at_index(std::size_t i) const { return data_[i]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Binary image; every value is 0 or 1.
using Mask = Grid<std::uint8_t>;
/// Grayscale intensities, nominally in [0, 1].
using GrayImage = Grid<double>;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
    if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

inline std::size_t count_set(const Mask& m) {
    std::size_t n = 0;
    for (auto v : m.data()) n += v != 0;
    return n;
}

}  // namespace hairstep
