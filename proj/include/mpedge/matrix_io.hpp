#pragma once

#include <string>

#include <Eigen/Dense>

namespace mpedge {

// 16-byte header: the 8 bytes "MPEDGE01", then M and N as little-endian uint32.
// Payload: M·N little-endian float64 in row-major order.
void dump_matrix(const std::string& path, const Eigen::MatrixXd& x);
Eigen::MatrixXd load_matrix(const std::string& path);

}  // namespace mpedge
