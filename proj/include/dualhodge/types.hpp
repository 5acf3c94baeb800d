#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dualhodge {

using Index = std::int32_t;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode {
    InvalidArgument,
    Parse,
    Io,
    DegenerateCell,
    NotPositiveDefinite,
    NotConverged,
};

/// Every failure in the library is reported through this exception. The code
/// lets the C interface translate it into a status value without string
/// matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Thrown by the mesh loader when a cell is too flat to be used.
class DegenerateCellError : public Error {
public:
    DegenerateCellError(Index cell, const std::string& what)
        : Error(ErrorCode::DegenerateCell, what), cell_(cell)
    {}
    Index cell() const noexcept { return cell_; }

private:
    Index cell_;
};

} // namespace dualhodge
