#ifndef SNAV_WORLD_HPP
#define SNAV_WORLD_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "snav/obstacle.hpp"
#include "snav/rng.hpp"

namespace snav::sim {

/// Deterministic world: bounds, obstacles, feature landmarks and the grid
/// resolution used by the high-level planners.
struct WorldMap {
    double xmin = 0.0, ymin = 0.0, xmax = 10.0, ymax = 10.0;
    double resolution = 1.0;  // m per grid cell
    std::uint64_t seed = 0;
    std::vector<smpc::Obstacle> obstacles;
    std::vector<Eigen::Vector3d> landmarks;

    bool in_bounds(const Eigen::Vector2d& p) const {
        return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
    }
    int grid_width() const { return static_cast<int>(std::lround((xmax - xmin) / resolution)); }
    int grid_height() const { return static_cast<int>(std::lround((ymax - ymin) / resolution)); }
    Eigen::Vector2d cell_center(int ix, int iy) const {
        return {xmin + (ix + 0.5) * resolution, ymin + (iy + 0.5) * resolution};
    }
    bool cell_blocked(int ix, int iy) const;
    /// Height of the lowest obstacle covering the cell; +inf when free or
    /// not overflyable.
    double cell_height(int ix, int iy) const;

    void validate() const;
};

WorldMap load_map(const std::string& path);
void save_map(const WorldMap& map, const std::string& path);

struct MapGenParams {
    int obstacle_cells = 6;     // number of blocked 1m^2 cells
    int landmark_count = 12;
    double obstacle_height = 1.0;  // UGV-blocking, UAV can overfly
    double tall_fraction = 0.3;    // fraction of obstacles made non-overflyable
    bool walls = false;            // occasionally drop short wall segments
};

/// Random cell-aligned map; blocked cells never touch the border so a free
/// path always exists around them.
WorldMap generate_random_map(Rng& rng, const MapGenParams& params = {});

}  // namespace snav::sim

#endif
