#include "fse/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <random>

#include "fse/errors.hpp"

namespace fse {

namespace {

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

double TriMesh::surface_area() const {
    double total = 0.0;
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
        total += triangle_area(vertices.row(triangles(t, 0)), vertices.row(triangles(t, 1)),
                               vertices.row(triangles(t, 2)));
    }
    return total;
}

void TriMesh::append(const TriMesh& other) {
    const Eigen::Index v0 = vertices.rows();
    const Eigen::Index t0 = triangles.rows();
    vertices.conservativeResize(v0 + other.vertices.rows(), 3);
    vertices.bottomRows(other.vertices.rows()) = other.vertices;
    triangles.conservativeResize(t0 + other.triangles.rows(), 3);
    triangles.bottomRows(other.triangles.rows()) =
        other.triangles.array() + static_cast<int>(v0);
}

TriMesh make_box(const Eigen::Vector3d& c, const Eigen::Vector3d& h) {
    TriMesh m;
    m.vertices.resize(8, 3);
    int k = 0;
    for (int xi : {-1, 1})
        for (int yi : {-1, 1})
            for (int zi : {-1, 1})
                m.vertices.row(k++) = Eigen::Vector3d(c.x() + xi * h.x(), c.y() + yi * h.y(),
                                                      c.z() + zi * h.z());
    // vertex index = 4*xi + 2*yi + zi with bits in {0,1}
    static const int faces[12][3] = {
        {0, 1, 3}, {0, 3, 2},  // -x
        {4, 6, 7}, {4, 7, 5},  // +x
        {0, 4, 5}, {0, 5, 1},  // -y
        {2, 3, 7}, {2, 7, 6},  // +y
        {0, 2, 6}, {0, 6, 4},  // -z
        {1, 5, 7}, {1, 7, 3},  // +z
    };
    m.triangles.resize(12, 3);
    for (int t = 0; t < 12; ++t)
        for (int j = 0; j < 3; ++j) m.triangles(t, j) = faces[t][j];
    return m;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> sample_surface(const TriMesh& mesh, int n,
                                                        std::uint64_t seed) {
    const Eigen::Index nt = mesh.triangles.rows();
    if (nt == 0) throw DataError("sample_surface: mesh has no triangles");

    std::vector<double> cumulative(nt);
    double total = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
        total += triangle_area(mesh.vertices.row(mesh.triangles(t, 0)),
                               mesh.vertices.row(mesh.triangles(t, 1)),
                               mesh.vertices.row(mesh.triangles(t, 2)));
        cumulative[t] = total;
    }
    if (total <= 0.0) throw DataError("sample_surface: degenerate mesh (zero surface area)");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::Matrix<double, Eigen::Dynamic, 3> points(n, 3);
    for (int i = 0; i < n; ++i) {
        const double u = uni(rng) * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const Eigen::Index t = std::min<Eigen::Index>(it - cumulative.begin(), nt - 1);
        const Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(t, 0));
        const Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(t, 1));
        const Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(t, 2));
        // uniform barycentric via square-root trick
        const double r1 = std::sqrt(uni(rng));
        const double r2 = uni(rng);
        points.row(i) = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
    }
    return points;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> sample_point_cloud(
    const std::vector<Component>& components, int n, std::uint64_t seed) {
    if (components.empty()) throw DataError("sample_point_cloud: no components");
    TriMesh merged;
    for (const Component& c : components) merged.append(c.mesh);
    auto points = sample_surface(merged, n, seed);
    const Eigen::Vector3d lo = points.colwise().minCoeff().transpose();
    const Eigen::Vector3d hi = points.colwise().maxCoeff().transpose();
    points.rowwise() -= (0.5 * (lo + hi)).transpose();
    return points;
}

}  // namespace fse
