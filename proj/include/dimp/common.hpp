#ifndef DIMP_COMMON_HPP
#define DIMP_COMMON_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace dimp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
// M x 3 coordinate block, one point per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Numeric failure carrying enough context to name the offending quantity.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void check_arg(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline double sq(double x) { return x * x; }

inline double sq_dist(const Eigen::RowVector3d& a, const Eigen::RowVector3d& b) {
    return (a - b).squaredNorm();
}

} // namespace dimp

#endif
