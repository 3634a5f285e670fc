#include "snav/world.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace snav::sim {

bool WorldMap::cell_blocked(int ix, int iy) const {
    const Eigen::Vector2d c = cell_center(ix, iy);
    for (const auto& o : obstacles)
        if (o.contains(c)) return true;
    return false;
}

double WorldMap::cell_height(int ix, int iy) const {
    const Eigen::Vector2d c = cell_center(ix, iy);
    double h = std::numeric_limits<double>::infinity();
    bool covered = false;
    for (const auto& o : obstacles) {
        if (o.contains(c)) {
            covered = true;
            h = std::min(h, o.height);
        }
    }
    return covered ? h : std::numeric_limits<double>::infinity();
}

void WorldMap::validate() const {
    if (resolution <= 0.0) throw std::invalid_argument("WorldMap: resolution must be > 0");
    if (xmax <= xmin || ymax <= ymin)
        throw std::invalid_argument("WorldMap: empty bounds");
    for (const auto& o : obstacles) o.validate();
}

WorldMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_map: cannot open " + path);
    WorldMap map;
    map.obstacles.clear();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "bounds") {
            ss >> map.xmin >> map.ymin >> map.xmax >> map.ymax;
        } else if (tag == "resolution") {
            ss >> map.resolution;
        } else if (tag == "seed") {
            ss >> map.seed;
        } else if (tag == "circle") {
            double cx, cy, r, h, d;
            ss >> cx >> cy >> r >> h >> d;
            map.obstacles.push_back(smpc::Obstacle::make_circle(
                cx, cy, r, h < 0 ? std::numeric_limits<double>::infinity() : h, d));
        } else if (tag == "polygon") {
            double h, d;
            int n;
            ss >> h >> d >> n;
            std::vector<Eigen::Vector2d> verts(n);
            for (int i = 0; i < n; ++i) ss >> verts[i].x() >> verts[i].y();
            map.obstacles.push_back(smpc::Obstacle::make_polygon(
                std::move(verts), h < 0 ? std::numeric_limits<double>::infinity() : h, d));
        } else if (tag == "landmark") {
            Eigen::Vector3d l;
            ss >> l.x() >> l.y() >> l.z();
            map.landmarks.push_back(l);
        } else {
            throw std::runtime_error("load_map: unknown record '" + tag + "'");
        }
        if (ss.fail()) throw std::runtime_error("load_map: malformed record '" + line + "'");
    }
    map.validate();
    return map;
}

void save_map(const WorldMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_map: cannot open " + path);
    out.precision(17);
    out << "# snav map\n";
    out << "bounds " << map.xmin << " " << map.ymin << " " << map.xmax << " "
        << map.ymax << "\n";
    out << "resolution " << map.resolution << "\n";
    out << "seed " << map.seed << "\n";
    auto height_field = [](double h) { return std::isinf(h) ? -1.0 : h; };
    for (const auto& o : map.obstacles) {
        if (o.is_circle()) {
            const auto& c = o.circle();
            out << "circle " << c.center.x() << " " << c.center.y() << " " << c.radius
                << " " << height_field(o.height) << " " << o.risk_delta << "\n";
        } else {
            const auto& poly = o.polygon();
            out << "polygon " << height_field(o.height) << " " << o.risk_delta << " "
                << poly.vertices.size();
            for (const auto& v : poly.vertices) out << " " << v.x() << " " << v.y();
            out << "\n";
        }
    }
    for (const auto& l : map.landmarks)
        out << "landmark " << l.x() << " " << l.y() << " " << l.z() << "\n";
}

WorldMap generate_random_map(Rng& rng, const MapGenParams& params) {
    WorldMap map;
    const int w = map.grid_width();
    const int h = map.grid_height();
    std::set<std::pair<int, int>> blocked;

    auto add_cell = [&](int ix, int iy, double height) {
        if (ix < 1 || iy < 1 || ix >= w - 1 || iy >= h - 1) return;
        if (!blocked.insert({ix, iy}).second) return;
        const Eigen::Vector2d c = map.cell_center(ix, iy);
        map.obstacles.push_back(smpc::Obstacle::make_box(
            c.x(), c.y(), 0.5 * map.resolution, 0.5 * map.resolution, height));
    };

    while (static_cast<int>(blocked.size()) < params.obstacle_cells) {
        const int ix = 1 + static_cast<int>(rng.uniform_int(w - 2));
        const int iy = 1 + static_cast<int>(rng.uniform_int(h - 2));
        const bool tall = rng.uniform() < params.tall_fraction;
        const double height =
            tall ? std::numeric_limits<double>::infinity() : params.obstacle_height;
        if (params.walls && rng.uniform() < 0.3) {
            // Short wall: 2-3 contiguous cells.
            const int len = 2 + static_cast<int>(rng.uniform_int(2));
            const bool horiz = rng.uniform() < 0.5;
            for (int s = 0; s < len; ++s)
                add_cell(ix + (horiz ? s : 0), iy + (horiz ? 0 : s), height);
        } else {
            add_cell(ix, iy, height);
        }
    }
    for (int i = 0; i < params.landmark_count; ++i) {
        Eigen::Vector3d l(rng.uniform(map.xmin + 0.5, map.xmax - 0.5),
                          rng.uniform(map.ymin + 0.5, map.ymax - 0.5),
                          rng.uniform(0.3, 1.5));
        map.landmarks.push_back(l);
    }
    return map;
}

}  // namespace snav::sim
