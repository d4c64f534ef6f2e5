// Unstructured finite-element mesh (HEX8 / TET4) with isoparametric
// shape-function machinery and the geometric queries the SDF pipeline needs:
// interpolation, Newton inversion of the element map, exterior-face lists.
//
// Reference elements:
//   HEX8: [-1,1]^3 trilinear, nodes ordered (-,-,-),(+,-,-),(+,+,-),(-,+,-),
//         then the same ring at zeta=+1. Matches legacy-VTK hexahedron order.
//   TET4: unit right tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1) with linear
//         basis (1-xi-eta-zeta, xi, eta, zeta); inside means xi_i >= 0 and
//         xi+eta+zeta <= 1.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toposurf/vec3.hpp"

namespace toposurf {

enum class ElementType : std::uint8_t { HEX8, TET4 };

inline int nodes_per_element(ElementType t) { return t == ElementType::HEX8 ? 8 : 4; }

inline const char* element_type_name(ElementType t) {
    return t == ElementType::HEX8 ? "HEX8" : "TET4";
}

// Local (reference) coordinates within an element.
struct LocalCoords {
    Vec3 xi;
};

struct Element {
    ElementType type = ElementType::HEX8;
    std::array<std::int32_t, 8> nodes{};  // first nodes_per_element entries used
};

// Exterior face of the mesh: owned by exactly one element.
struct BoundaryFace {
    std::int32_t element_id = -1;
    std::int8_t local_face = -1;
    std::array<std::int32_t, 4> nodes{-1, -1, -1, -1};  // 3 used for tet faces
    int num_nodes = 4;
    bool outward = true;
};

// Local face connectivity, ordered so the right-hand rule points out of the
// reference element.
inline const std::array<std::array<int, 4>, 6>& hex_faces() {
    static const std::array<std::array<int, 4>, 6> f = {{
        {0, 3, 2, 1},  // zeta = -1
        {4, 5, 6, 7},  // zeta = +1
        {0, 1, 5, 4},  // eta  = -1
        {2, 3, 7, 6},  // eta  = +1
        {0, 4, 7, 3},  // xi   = -1
        {1, 2, 6, 5},  // xi   = +1
    }};
    return f;
}

inline const std::array<std::array<int, 3>, 4>& tet_faces() {
    static const std::array<std::array<int, 3>, 4> f = {{
        {0, 2, 1},  // zeta = 0
        {0, 1, 3},  // eta  = 0
        {0, 3, 2},  // xi   = 0
        {1, 2, 3},  // slanted face
    }};
    return f;
}

// --- shape functions ------------------------------------------------------

inline void shape_values(ElementType type, const Vec3& xi, double* n_out) {
    if (type == ElementType::HEX8) {
        const double xm = 1.0 - xi.x, xp = 1.0 + xi.x;
        const double ym = 1.0 - xi.y, yp = 1.0 + xi.y;
        const double zm = 1.0 - xi.z, zp = 1.0 + xi.z;
        n_out[0] = 0.125 * xm * ym * zm;
        n_out[1] = 0.125 * xp * ym * zm;
        n_out[2] = 0.125 * xp * yp * zm;
        n_out[3] = 0.125 * xm * yp * zm;
        n_out[4] = 0.125 * xm * ym * zp;
        n_out[5] = 0.125 * xp * ym * zp;
        n_out[6] = 0.125 * xp * yp * zp;
        n_out[7] = 0.125 * xm * yp * zp;
    } else if (type == ElementType::TET4) {
        n_out[0] = 1.0 - xi.x - xi.y - xi.z;
        n_out[1] = xi.x;
        n_out[2] = xi.y;
        n_out[3] = xi.z;
    } else {
        throw std::invalid_argument("shape_values: unknown element type");
    }
}

inline std::vector<double> shape_values(ElementType type, const Vec3& xi) {
    std::vector<double> n(nodes_per_element(type));
    shape_values(type, xi, n.data());
    return n;
}

// dN_a/dxi_i, one Vec3 (gradient) per node.
inline void shape_gradients(ElementType type, const Vec3& xi, Vec3* g_out) {
    if (type == ElementType::HEX8) {
        const double xm = 1.0 - xi.x, xp = 1.0 + xi.x;
        const double ym = 1.0 - xi.y, yp = 1.0 + xi.y;
        const double zm = 1.0 - xi.z, zp = 1.0 + xi.z;
        g_out[0] = {-0.125 * ym * zm, -0.125 * xm * zm, -0.125 * xm * ym};
        g_out[1] = {0.125 * ym * zm, -0.125 * xp * zm, -0.125 * xp * ym};
        g_out[2] = {0.125 * yp * zm, 0.125 * xp * zm, -0.125 * xp * yp};
        g_out[3] = {-0.125 * yp * zm, 0.125 * xm * zm, -0.125 * xm * yp};
        g_out[4] = {-0.125 * ym * zp, -0.125 * xm * zp, 0.125 * xm * ym};
        g_out[5] = {0.125 * ym * zp, -0.125 * xp * zp, 0.125 * xp * ym};
        g_out[6] = {0.125 * yp * zp, 0.125 * xp * zp, 0.125 * xp * yp};
        g_out[7] = {-0.125 * yp * zp, 0.125 * xm * zp, 0.125 * xm * yp};
    } else if (type == ElementType::TET4) {
        g_out[0] = {-1.0, -1.0, -1.0};
        g_out[1] = {1.0, 0.0, 0.0};
        g_out[2] = {0.0, 1.0, 0.0};
        g_out[3] = {0.0, 0.0, 1.0};
    } else {
        throw std::invalid_argument("shape_gradients: unknown element type");
    }
}

inline std::vector<Vec3> shape_gradients(ElementType type, const Vec3& xi) {
    std::vector<Vec3> g(nodes_per_element(type));
    shape_gradients(type, xi, g.data());
    return g;
}

// Reference-domain membership test with slack for floating-point boundary
// cases (nodes sitting exactly on faces).
inline bool in_reference_bounds(ElementType type, const Vec3& xi, double slack = 1e-8) {
    if (type == ElementType::HEX8) {
        return xi.x >= -1.0 - slack && xi.x <= 1.0 + slack && xi.y >= -1.0 - slack &&
               xi.y <= 1.0 + slack && xi.z >= -1.0 - slack && xi.z <= 1.0 + slack;
    }
    return xi.x >= -slack && xi.y >= -slack && xi.z >= -slack &&
           xi.x + xi.y + xi.z <= 1.0 + slack;
}

inline Vec3 reference_centroid(ElementType type) {
    return type == ElementType::HEX8 ? Vec3{0, 0, 0} : Vec3{0.25, 0.25, 0.25};
}

inline Vec3 reference_vertex(ElementType type, int a) {
    if (type == ElementType::HEX8) {
        static const Vec3 v[8] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                  {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
        return v[a];
    }
    static const Vec3 v[4] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    return v[a];
}

// --- mesh -----------------------------------------------------------------

class UnstructuredMesh {
public:
    UnstructuredMesh() = default;
    UnstructuredMesh(std::vector<Vec3> nodes, std::vector<Element> elements)
        : nodes_(std::move(nodes)), elements_(std::move(elements)) {
        validate();
    }

    const std::vector<Vec3>& nodes() const { return nodes_; }
    const std::vector<Element>& elements() const { return elements_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t element_count() const { return elements_.size(); }
    const Element& element(std::size_t e) const { return elements_[e]; }
    const Vec3& node(std::size_t a) const { return nodes_[a]; }

    // Gathers the world coordinates of an element's nodes.
    void element_nodes(std::size_t e, Vec3* out) const {
        const Element& el = elements_[e];
        const int n = nodes_per_element(el.type);
        for (int a = 0; a < n; ++a) out[a] = nodes_[el.nodes[a]];
    }

    Vec3 element_centroid(std::size_t e) const {
        const Element& el = elements_[e];
        const int n = nodes_per_element(el.type);
        Vec3 c;
        for (int a = 0; a < n; ++a) c += nodes_[el.nodes[a]];
        return c / static_cast<double>(n);
    }

    Aabb element_aabb(std::size_t e) const {
        const Element& el = elements_[e];
        Aabb box;
        for (int a = 0; a < nodes_per_element(el.type); ++a) box.expand(nodes_[el.nodes[a]]);
        return box;
    }

    Aabb bounding_box() const {
        Aabb box;
        for (const Vec3& p : nodes_) box.expand(p);
        return box;
    }

    double element_diameter(std::size_t e) const {
        Aabb box = element_aabb(e);
        return norm(box.extent());
    }

    // Shortest edge over all elements; the default Cartesian grid spacing.
    double shortest_edge() const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < elements_.size(); ++e) {
            const Element& el = elements_[e];
            const auto edge = [&](int a, int b) {
                double len = norm(nodes_[el.nodes[a]] - nodes_[el.nodes[b]]);
                if (len < best) best = len;
            };
            if (el.type == ElementType::HEX8) {
                static const int pairs[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                                 {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                                 {0, 4}, {1, 5}, {2, 6}, {3, 7}};
                for (auto& p : pairs) edge(p[0], p[1]);
            } else {
                static const int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
                for (auto& p : pairs) edge(p[0], p[1]);
            }
        }
        return best;
    }

    double total_volume() const;

private:
    void validate() const;

    std::vector<Vec3> nodes_;
    std::vector<Element> elements_;
};

// --- interpolation --------------------------------------------------------

inline double interpolate_scalar(const UnstructuredMesh& mesh, std::size_t e,
                                 const double* nodal_values, const Vec3& xi) {
    const Element& el = mesh.element(e);
    const int n = nodes_per_element(el.type);
    double nv[8];
    shape_values(el.type, xi, nv);
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += nv[a] * nodal_values[a];
    return s;
}

inline double interpolate_scalar(const UnstructuredMesh& mesh, std::size_t e,
                                 const std::vector<double>& nodal_values, const Vec3& xi) {
    const Element& el = mesh.element(e);
    if (nodal_values.size() != static_cast<std::size_t>(nodes_per_element(el.type)))
        throw std::invalid_argument("interpolate_scalar: nodal value count mismatch");
    return interpolate_scalar(mesh, e, nodal_values.data(), xi);
}

inline Vec3 interpolate_position(const UnstructuredMesh& mesh, std::size_t e, const Vec3& xi) {
    const Element& el = mesh.element(e);
    const int n = nodes_per_element(el.type);
    double nv[8];
    shape_values(el.type, xi, nv);
    Vec3 x;
    for (int a = 0; a < n; ++a) x += nv[a] * mesh.node(el.nodes[a]);
    return x;
}

// Jacobian dx/dxi at xi.
inline std::array<Vec3, 3> jacobian(const UnstructuredMesh& mesh, std::size_t e, const Vec3& xi) {
    const Element& el = mesh.element(e);
    const int n = nodes_per_element(el.type);
    Vec3 g[8];
    shape_gradients(el.type, xi, g);
    std::array<Vec3, 3> cols{};  // cols[i] = dx/dxi_i
    for (int a = 0; a < n; ++a) {
        const Vec3& xa = mesh.node(el.nodes[a]);
        for (int i = 0; i < 3; ++i) cols[i] += g[a][i] * xa;
    }
    return cols;
}

inline double jacobian_det(const std::array<Vec3, 3>& j) {
    return dot(j[0], cross(j[1], j[2]));
}

namespace detail {
// Solves the 3x3 system J * d = r where J's columns are j[0..2].
inline bool solve3(const std::array<Vec3, 3>& j, const Vec3& r, Vec3& d) {
    const double det = jacobian_det(j);
    if (std::abs(det) < 1e-300) return false;
    // Cramer's rule; fine at this size.
    d.x = dot(r, cross(j[1], j[2])) / det;
    d.y = dot(j[0], cross(r, j[2])) / det;
    d.z = dot(j[0], cross(j[1], r)) / det;
    return true;
}
}  // namespace detail

struct InvertOptions {
    int max_iter = 30;
    double geom_tol_rel = 1e-9;  // on ||x_g - x(xi)|| relative to element diameter
    double bounds_slack = 1e-8;
};

// Newton inversion of the isoparametric map: finds xi with x(xi) = x_g.
// Returns nullopt when the point is not inside the element (including Newton
// non-convergence, which is treated as "not inside" rather than an error).
inline std::optional<LocalCoords> invert_mapping(const UnstructuredMesh& mesh, std::size_t e,
                                                 const Vec3& x_g,
                                                 const InvertOptions& opt = {}) {
    const Element& el = mesh.element(e);
    const double diam = mesh.element_diameter(e);
    // Cheap reject: outside the element box by more than a sliver.
    if (!mesh.element_aabb(e).expanded(1e-6 * diam).contains(x_g)) return std::nullopt;

    const double tol = opt.geom_tol_rel * diam;
    Vec3 xi = reference_centroid(el.type);
    for (int it = 0; it < opt.max_iter; ++it) {
        const Vec3 r = x_g - interpolate_position(mesh, e, xi);
        if (norm(r) < tol) {
            if (in_reference_bounds(el.type, xi, opt.bounds_slack)) return LocalCoords{xi};
            return std::nullopt;
        }
        Vec3 d;
        if (!detail::solve3(jacobian(mesh, e, xi), r, d)) return std::nullopt;
        // Damping: keep iterates from shooting far outside the reference box.
        double scale = 1.0;
        const double dn = norm(d);
        if (dn > 2.0) scale = 2.0 / dn;
        xi += d * scale;
    }
    // One last residual check in case the loop exited at max_iter.
    if (norm(x_g - interpolate_position(mesh, e, xi)) < tol &&
        in_reference_bounds(el.type, xi, opt.bounds_slack))
        return LocalCoords{xi};
    return std::nullopt;
}

// --- boundary faces -------------------------------------------------------

// Exterior faces: faces referenced by exactly one element. Throws on
// non-manifold input (a face shared by more than two elements).
inline std::vector<BoundaryFace> boundary_faces(const UnstructuredMesh& mesh) {
    struct FaceRec {
        BoundaryFace face;
        int count = 0;
    };
    std::map<std::array<std::int32_t, 4>, FaceRec> table;

    auto visit = [&](std::int32_t eid, std::int8_t lf, const std::int32_t* fnodes, int nn) {
        std::array<std::int32_t, 4> key{-1, -1, -1, -1};
        for (int i = 0; i < nn; ++i) key[i] = fnodes[i];
        std::sort(key.begin(), key.begin() + nn);
        auto [it, inserted] = table.try_emplace(key);
        FaceRec& rec = it->second;
        rec.count++;
        if (rec.count > 2)
            throw std::runtime_error("boundary_faces: non-manifold face shared by >2 elements");
        if (inserted) {
            rec.face.element_id = eid;
            rec.face.local_face = lf;
            rec.face.num_nodes = nn;
            for (int i = 0; i < nn; ++i) rec.face.nodes[i] = fnodes[i];
        }
    };

    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.element(e);
        if (el.type == ElementType::HEX8) {
            for (int f = 0; f < 6; ++f) {
                std::int32_t fn[4];
                for (int i = 0; i < 4; ++i) fn[i] = el.nodes[hex_faces()[f][i]];
                visit(static_cast<std::int32_t>(e), static_cast<std::int8_t>(f), fn, 4);
            }
        } else {
            for (int f = 0; f < 4; ++f) {
                std::int32_t fn[3];
                for (int i = 0; i < 3; ++i) fn[i] = el.nodes[tet_faces()[f][i]];
                visit(static_cast<std::int32_t>(e), static_cast<std::int8_t>(f), fn, 3);
            }
        }
    }

    std::vector<BoundaryFace> out;
    for (auto& [key, rec] : table)
        if (rec.count == 1) out.push_back(rec.face);
    return out;
}

// --- validation & volume ---------------------------------------------------

inline void UnstructuredMesh::validate() const {
    const auto nn = static_cast<std::int32_t>(nodes_.size());
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        const Element& el = elements_[e];
        const int n = nodes_per_element(el.type);
        for (int a = 0; a < n; ++a) {
            if (el.nodes[a] < 0 || el.nodes[a] >= nn)
                throw std::invalid_argument("mesh: element " + std::to_string(e) +
                                            " references node out of range");
            for (int b = 0; b < a; ++b)
                if (el.nodes[a] == el.nodes[b])
                    throw std::invalid_argument("mesh: element " + std::to_string(e) +
                                                " has repeated node indices");
        }
        const double det = jacobian_det(jacobian(*this, e, reference_centroid(el.type)));
        if (!(det > 0.0))
            throw std::invalid_argument("mesh: element " + std::to_string(e) +
                                        " has non-positive Jacobian at centroid");
    }
}

inline double UnstructuredMesh::total_volume() const {
    // 2x2x2 Gauss for hexes (exact for trilinear maps), one-point for tets.
    double vol = 0.0;
    const double g = 1.0 / std::sqrt(3.0);
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        const Element& el = elements_[e];
        if (el.type == ElementType::HEX8) {
            for (int i = 0; i < 8; ++i) {
                const Vec3 xi{g * ((i & 1) ? 1 : -1), g * ((i & 2) ? 1 : -1),
                              g * ((i & 4) ? 1 : -1)};
                vol += jacobian_det(jacobian(*this, e, xi));
            }
        } else {
            vol += jacobian_det(jacobian(*this, e, reference_centroid(el.type))) / 6.0;
        }
    }
    return vol;
}

// --- structured helper ------------------------------------------------------

// Regular nx x ny x nz hex mesh with spacing dx; node (i,j,k) has flat index
// i + (nx+1)*(j + (ny+1)*k).
inline UnstructuredMesh make_structured_hex_mesh(int nx, int ny, int nz, const Vec3& origin,
                                                 double dx) {
    if (nx < 1 || ny < 1 || nz < 1 || !(dx > 0.0))
        throw std::invalid_argument("make_structured_hex_mesh: bad dimensions");
    std::vector<Vec3> nodes;
    nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1));
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                nodes.push_back({origin.x + dx * i, origin.y + dx * j, origin.z + dx * k});

    auto nid = [&](int i, int j, int k) {
        return static_cast<std::int32_t>(i + (nx + 1) * (j + (ny + 1) * k));
    };
    std::vector<Element> elements;
    elements.reserve(static_cast<std::size_t>(nx) * ny * nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                Element el;
                el.type = ElementType::HEX8;
                el.nodes = {nid(i, j, k),         nid(i + 1, j, k),
                            nid(i + 1, j + 1, k), nid(i, j + 1, k),
                            nid(i, j, k + 1),     nid(i + 1, j, k + 1),
                            nid(i + 1, j + 1, k + 1), nid(i, j + 1, k + 1)};
                elements.push_back(el);
            }
    return UnstructuredMesh(std::move(nodes), std::move(elements));
}

// Per-element and per-node scalar fields over a mesh.
using ElementDensityField = std::vector<double>;
using NodalDensityField = std::vector<double>;

}  // namespace toposurf
