#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>

namespace texsr {

using ProjectionMatrix = Eigen::Matrix<double, 3, 4>;

/// Calibrated pinhole view. `projection` is stored as given and equals
/// projective_scale * intrinsics * [rotation | translation], where intrinsics
/// is normalized to intrinsics(2, 2) = 1. The scale may be negative.
///
/// Pixel coordinates are continuous: pixel (x, y) covers [x, x + 1) x [y, y + 1)
/// and has its center at (x + 0.5, y + 0.5).
struct CameraView
{
    ProjectionMatrix projection = ProjectionMatrix::Zero();
    Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    double projective_scale = 1.0;
    int width = 0;
    int height = 0;
};

struct PixelProjection
{
    Eigen::Vector2d pixel;
    double depth = 0.0; // camera-space z, positive in front of the camera
};

/// Points closer to the image plane than this are treated as behind it.
inline constexpr double kMinDepth = 1e-12;

/// Factors P = K [R | t] by RQ decomposition of its left 3x3 block. Signs
/// are fixed so that K has a positive diagonal and det(R) = +1; the overall
/// projective scale (including its sign) goes to projective_scale so that
/// K(2, 2) = 1. The input matrix is kept bit-for-bit.
/// Throws SingularMatrix when the left block is (numerically) singular.
CameraView decompose_projection(const ProjectionMatrix& projection, int width, int height);

/// Camera built from factored parameters (K is normalized to K(2, 2) = 1).
CameraView make_camera(const Eigen::Matrix3d& intrinsics, const Eigen::Matrix3d& rotation,
                       const Eigen::Vector3d& translation, int width, int height);

/// LR camera for an image down-scaled by `factor`: the first two rows of K are
/// divided by the factor, extrinsics are unchanged and the image size uses
/// floor division. Throws InvalidFactor for factor < 1.
CameraView scale_camera(const CameraView& camera, int factor);

/// Throws BehindCamera when the point's depth is <= kMinDepth.
PixelProjection project_point(const CameraView& camera, const Eigen::Vector3d& point);
std::optional<PixelProjection> try_project_point(const CameraView& camera, const Eigen::Vector3d& point);

/// Pinhole intrinsics from physical lens and sensor sizes, square pixels and
/// the principal point at the image center.
Eigen::Matrix3d intrinsics_from_sensor(double focal_length_mm, double sensor_width_mm, int width, int height);

/// Plain-text camera file: three rows of four numbers (row-major P) followed
/// by "width height". Numbers are written with 17 significant digits.
void write_camera(const std::filesystem::path& path, const CameraView& camera);
CameraView read_camera(const std::filesystem::path& path);

} // namespace texsr
