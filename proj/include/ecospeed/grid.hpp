#ifndef ECOSPEED_GRID_HPP
#define ECOSPEED_GRID_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "error.hpp"
#include "network.hpp"

namespace ecospeed {

/// Uniform grid on [0, side]^2 with points (i h, j h), 0 <= i, j <= n.
struct Grid2D {
    double side{};
    int n{};

    double h() const { return side / n; }
    std::size_t width() const { return static_cast<std::size_t>(n) + 1; }
    std::size_t points() const { return width() * width(); }
    double x(int i) const { return i * h(); }
    double y(int j) const { return j * h(); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * width() + static_cast<std::size_t>(i);
    }

    static Grid2D of(const Scenario& s) { return {s.side, s.disc.n_grid}; }

    friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Grid values over time slices k = 0..n_time. Each slice is row-major with
/// rows along y: value(k, i, j) sits at k*(n+1)^2 + j*(n+1) + i.
template <class Tag>
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(Grid2D grid, int n_time) : grid_(grid), n_time_(n_time), data_(slices() * grid.points(), 0.0) {}

    const Grid2D& grid() const { return grid_; }
    int n_time() const { return n_time_; }
    std::size_t slices() const { return static_cast<std::size_t>(n_time_) + 1; }

    double& at(int k, int i, int j) { return data_[offset(k) + grid_.index(i, j)]; }
    double at(int k, int i, int j) const { return data_[offset(k) + grid_.index(i, j)]; }

    std::span<double> slice(int k) { return {data_.data() + offset(k), grid_.points()}; }
    std::span<const double> slice(int k) const { return {data_.data() + offset(k), grid_.points()}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void require_shape(Grid2D grid, int n_time, const char* what) const {
        if (!(grid_ == grid) || n_time_ != n_time) throw DomainError(std::string(what) + ": grid mismatch");
    }

    friend bool operator==(const SpaceTimeField&, const SpaceTimeField&) = default;

private:
    std::size_t offset(int k) const { return static_cast<std::size_t>(k) * grid_.points(); }

    Grid2D grid_{};
    int n_time_{};
    std::vector<double> data_;
};

struct EmissionTag {};
struct AdjointTag {};
struct ConcentrationTag {};

/// xi_{i,j}^k, mass per area and time.
using EmissionField = SpaceTimeField<EmissionTag>;
/// p_{i,j}^k in forward time; the slice k = n_time is identically zero.
using AdjointField = SpaceTimeField<AdjointTag>;
/// phi_{i,j}^k, mass per area.
using ConcentrationField = SpaceTimeField<ConcentrationTag>;

} // namespace ecospeed

#endif // ECOSPEED_GRID_HPP
