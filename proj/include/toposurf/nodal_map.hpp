// Element-wise constant densities -> nodal densities.
//
// Each node gets a linear polynomial rho(x) = a0 + a1 x + a2 y + a3 z fitted
// in the least-squares sense to the centroids of the elements sharing the
// node, then evaluated at the node itself. Degenerate neighborhoods (fewer
// than 4 elements, or coplanar/collinear centroids as at domain corners and
// edges) fall back to inverse-distance weighting. Results are clamped to
// [0,1]; boundary-node extrapolation can overshoot the physical range.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "toposurf/mesh.hpp"
#include "toposurf/parallel.hpp"

namespace toposurf {

namespace detail {

// Cholesky factorization of a symmetric 4x4; returns false if not positive
// definite. a is row-major, overwritten with L (lower).
inline bool cholesky4(double a[16]) {
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i * 4 + j];
            for (int k = 0; k < j; ++k) s -= a[i * 4 + k] * a[j * 4 + k];
            if (i == j) {
                if (!(s > 0.0)) return false;
                a[i * 4 + i] = std::sqrt(s);
            } else {
                a[i * 4 + j] = s / a[j * 4 + j];
            }
        }
    }
    return true;
}

inline void cholesky4_solve(const double l[16], const double b[4], double x[4]) {
    double y[4];
    for (int i = 0; i < 4; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l[i * 4 + k] * y[k];
        y[i] = s / l[i * 4 + i];
    }
    for (int i = 3; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < 4; ++k) s -= l[k * 4 + i] * x[k];
        x[i] = s / l[i * 4 + i];
    }
}

inline double inverse_distance_average(const Vec3& node, std::span<const Vec3> centroids,
                                       std::span<const double> densities) {
    double wsum = 0.0, vsum = 0.0;
    for (std::size_t i = 0; i < centroids.size(); ++i) {
        const double d = norm(centroids[i] - node);
        if (d < 1e-300) return densities[i];  // centroid coincides with the node
        const double w = 1.0 / d;
        wsum += w;
        vsum += w * densities[i];
    }
    return vsum / wsum;
}

}  // namespace detail

struct NodalFitOptions {
    double condition_limit = 1e10;
    double cholesky_jitter = 1e-12;
    bool clamp = true;
};

// Least-squares linear fit of neighbor densities, evaluated at the node.
inline double fit_nodal_density(const Vec3& node, std::span<const Vec3> centroids,
                                std::span<const double> densities,
                                const NodalFitOptions& opt = {}) {
    const std::size_t m = centroids.size();
    if (m == 0 || densities.size() != m)
        throw std::invalid_argument("fit_nodal_density: need >=1 neighbor with matching sizes");

    const auto clamp01 = [&](double v) {
        return opt.clamp ? std::min(1.0, std::max(0.0, v)) : v;
    };

    if (m < 4) return clamp01(detail::inverse_distance_average(node, centroids, densities));

    // Offsets centered at the node and scaled to unit characteristic radius:
    // the fitted value at the node is then simply a0, and the diagonal-ratio
    // condition estimate is scale-free.
    double r_char = 0.0;
    for (std::size_t i = 0; i < m; ++i) r_char += norm(centroids[i] - node);
    r_char /= static_cast<double>(m);
    if (!(r_char > 0.0))
        return clamp01(detail::inverse_distance_average(node, centroids, densities));

    double ata[16] = {0};
    double atb[4] = {0};
    for (std::size_t i = 0; i < m; ++i) {
        const Vec3 u = (centroids[i] - node) / r_char;
        const double row[4] = {1.0, u.x, u.y, u.z};
        for (int r = 0; r < 4; ++r) {
            atb[r] += row[r] * densities[i];
            for (int c = 0; c <= r; ++c) ata[r * 4 + c] += row[r] * row[c];
        }
    }
    for (int r = 0; r < 4; ++r)
        for (int c = r + 1; c < 4; ++c) ata[r * 4 + c] = ata[c * 4 + r];

    double l[16];
    std::copy(ata, ata + 16, l);
    if (!detail::cholesky4(l)) {
        std::copy(ata, ata + 16, l);
        for (int i = 0; i < 4; ++i) l[i * 4 + i] += opt.cholesky_jitter;
        if (!detail::cholesky4(l))
            return clamp01(detail::inverse_distance_average(node, centroids, densities));
    }

    double dmin = l[0], dmax = l[0];
    for (int i = 1; i < 4; ++i) {
        dmin = std::min(dmin, l[i * 4 + i]);
        dmax = std::max(dmax, l[i * 4 + i]);
    }
    const double cond_est = (dmax / dmin) * (dmax / dmin);
    if (!(cond_est < opt.condition_limit))
        return clamp01(detail::inverse_distance_average(node, centroids, densities));

    double a[4];
    detail::cholesky4_solve(l, atb, a);
    return clamp01(a[0]);
}

// Node -> incident elements adjacency in CSR form.
struct NodeElementAdjacency {
    std::vector<std::int32_t> offsets;   // node_count+1
    std::vector<std::int32_t> elements;  // concatenated element ids
};

inline NodeElementAdjacency build_node_element_adjacency(const UnstructuredMesh& mesh) {
    NodeElementAdjacency adj;
    adj.offsets.assign(mesh.node_count() + 1, 0);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.element(e);
        for (int a = 0; a < nodes_per_element(el.type); ++a) adj.offsets[el.nodes[a] + 1]++;
    }
    for (std::size_t i = 1; i < adj.offsets.size(); ++i) adj.offsets[i] += adj.offsets[i - 1];
    adj.elements.resize(adj.offsets.back());
    std::vector<std::int32_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.element(e);
        for (int a = 0; a < nodes_per_element(el.type); ++a)
            adj.elements[cursor[el.nodes[a]]++] = static_cast<std::int32_t>(e);
    }
    return adj;
}

// Per-node fits are independent; output is identical for any thread count.
inline NodalDensityField map_densities(const UnstructuredMesh& mesh,
                                       const ElementDensityField& element_densities,
                                       const NodalFitOptions& opt = {}, int threads = 0) {
    if (element_densities.size() != mesh.element_count())
        throw std::invalid_argument("map_densities: density count != element count");

    const NodeElementAdjacency adj = build_node_element_adjacency(mesh);
    std::vector<Vec3> centroids(mesh.element_count());
    for (std::size_t e = 0; e < mesh.element_count(); ++e) centroids[e] = mesh.element_centroid(e);

    NodalDensityField nodal(mesh.node_count(), 0.0);
    parallel_for(0, mesh.node_count(), [&](std::size_t a) {
        const std::int32_t lo = adj.offsets[a], hi = adj.offsets[a + 1];
        if (lo == hi) return;  // isolated node keeps density 0
        thread_local std::vector<Vec3> cbuf;
        thread_local std::vector<double> dbuf;
        cbuf.clear();
        dbuf.clear();
        for (std::int32_t i = lo; i < hi; ++i) {
            cbuf.push_back(centroids[adj.elements[i]]);
            dbuf.push_back(element_densities[adj.elements[i]]);
        }
        nodal[a] = fit_nodal_density(mesh.node(a), cbuf, dbuf, opt);
    }, threads);
    return nodal;
}

}  // namespace toposurf
