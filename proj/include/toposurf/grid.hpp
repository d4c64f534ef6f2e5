// Regular Cartesian grid covering the FE mesh with overlap, and the discrete
// signed distance field living on it (positive inside, negative outside).
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "toposurf/mesh.hpp"
#include "toposurf/vec3.hpp"

namespace toposurf {

struct CartesianGrid {
    Vec3 origin;
    double h = 0.0;
    int nx = 0, ny = 0, nz = 0;  // node counts per axis

    std::size_t node_count() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(nx - 1) * (ny - 1) * (nz - 1);
    }

    std::size_t node_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k);
    }

    Vec3 node_position(int i, int j, int k) const {
        return {origin.x + h * i, origin.y + h * j, origin.z + h * k};
    }

    Vec3 node_position(std::size_t flat) const {
        const int i = static_cast<int>(flat % nx);
        const int j = static_cast<int>((flat / nx) % ny);
        const int k = static_cast<int>(flat / (static_cast<std::size_t>(nx) * ny));
        return node_position(i, j, k);
    }
};

// Covers the mesh bounding box expanded by exactly three grid cells per side.
// Default spacing (h <= 0): the mesh's shortest element edge length.
inline CartesianGrid build_grid(const UnstructuredMesh& mesh, double h = 0.0) {
    if (mesh.node_count() == 0) throw std::invalid_argument("build_grid: empty mesh");
    if (h <= 0.0) h = mesh.shortest_edge();
    const Aabb box = mesh.bounding_box();
    CartesianGrid g;
    g.h = h;
    g.origin = {box.min.x - 3.0 * h, box.min.y - 3.0 * h, box.min.z - 3.0 * h};
    const Vec3 span = box.max - box.min;
    g.nx = static_cast<int>(std::ceil((span.x + 6.0 * h) / h - 1e-12)) + 1;
    g.ny = static_cast<int>(std::ceil((span.y + 6.0 * h) / h - 1e-12)) + 1;
    g.nz = static_cast<int>(std::ceil((span.z + 6.0 * h) / h - 1e-12)) + 1;
    return g;
}

struct SdfField {
    CartesianGrid grid;
    std::vector<double> values;  // one per grid node, length units

    double& at(int i, int j, int k) { return values[grid.node_index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[grid.node_index(i, j, k)]; }
};

}  // namespace toposurf
