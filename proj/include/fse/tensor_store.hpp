#pragma once

#include <Eigen/Core>
#include <map>
#include <string>

namespace fse {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Named-tensor container file. Little-endian f64 payloads, versioned
/// manifest up front; round-trips bit-exactly.
struct TensorStore {
    std::map<std::string, Mat> tensors;

    void save(const std::string& path) const;
    static TensorStore load(const std::string& path);
};

}  // namespace fse
