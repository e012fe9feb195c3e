#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace fse {

struct TriMesh {
    Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
    Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;

    double surface_area() const;
    void append(const TriMesh& other);
};

/// One geometry unit of an assembly. The semantic label comes from the
/// generator and is used only for evaluation.
struct Component {
    std::string id;
    std::string label;
    TriMesh mesh;
};

/// Axis-aligned box, 12 triangles, outward-facing.
TriMesh make_box(const Eigen::Vector3d& center, const Eigen::Vector3d& half_extents);

/// Area-weighted uniform surface sampling over the union of all component
/// triangles, then translated so the axis-aligned bounding-box center of the
/// sampled points lands at the origin. No rescaling. Deterministic per seed.
Eigen::Matrix<double, Eigen::Dynamic, 3> sample_point_cloud(
    const std::vector<Component>& components, int n, std::uint64_t seed);

/// Uncentered variant used internally (contact tests need raw coordinates).
Eigen::Matrix<double, Eigen::Dynamic, 3> sample_surface(const TriMesh& mesh, int n,
                                                        std::uint64_t seed);

}  // namespace fse
