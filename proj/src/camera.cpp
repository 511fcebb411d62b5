#include <texsr/camera.hpp>

#include <texsr/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace texsr {

namespace {

// M = upper * orthogonal, via QR of the row-reversed transpose.
void rq_decompose(const Eigen::Matrix3d& m, Eigen::Matrix3d& upper, Eigen::Matrix3d& orthogonal)
{
    Eigen::Matrix3d flip = Eigen::Matrix3d::Zero();
    flip(0, 2) = flip(1, 1) = flip(2, 0) = 1.0;
    const Eigen::Matrix3d a = (flip * m).transpose();
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
    const Eigen::Matrix3d q = qr.householderQ();
    const Eigen::Matrix3d r = qr.matrixQR().triangularView<Eigen::Upper>();
    upper = flip * r.transpose() * flip;
    orthogonal = flip * q.transpose();
}

} // namespace

CameraView decompose_projection(const ProjectionMatrix& projection, int width, int height)
{
    if (!projection.allFinite()) fail(ErrorCode::SingularMatrix, "projection matrix has non-finite entries");
    const Eigen::Matrix3d left = projection.leftCols<3>();
    const double scale = left.norm();
    const double det = left.determinant();
    if (!(scale > 0.0) || std::abs(det) < 1e-12 * scale * scale * scale) {
        fail(ErrorCode::SingularMatrix, "left 3x3 block of the projection matrix is singular");
    }

    // A negative determinant means P is a negative multiple of some K [R | t]
    // with det(R) = +1.
    const double sign = det < 0.0 ? -1.0 : 1.0;
    const ProjectionMatrix p = sign * projection;

    Eigen::Matrix3d k;
    Eigen::Matrix3d r;
    rq_decompose(p.leftCols<3>(), k, r);
    // Pair each sign flip of a column of K with the matching row of R.
    for (int i = 0; i < 3; ++i) {
        if (k(i, i) < 0.0) {
            k.col(i) *= -1.0;
            r.row(i) *= -1.0;
        }
    }
    const double k22 = k(2, 2);
    const ProjectionMatrix normalized = p / k22;
    k /= k22;
    k(1, 0) = k(2, 0) = k(2, 1) = 0.0;
    k(2, 2) = 1.0;

    CameraView cam;
    cam.intrinsics = k;
    cam.rotation = r;
    cam.translation = k.triangularView<Eigen::Upper>().solve(normalized.col(3));
    cam.projection = projection;
    cam.projective_scale = sign * k22;
    cam.width = width;
    cam.height = height;
    return cam;
}

CameraView make_camera(const Eigen::Matrix3d& intrinsics, const Eigen::Matrix3d& rotation,
                       const Eigen::Vector3d& translation, int width, int height)
{
    CameraView cam;
    cam.intrinsics = intrinsics / intrinsics(2, 2);
    cam.rotation = rotation;
    cam.translation = translation;
    cam.projection.leftCols<3>() = cam.intrinsics * rotation;
    cam.projection.col(3) = cam.intrinsics * translation;
    cam.width = width;
    cam.height = height;
    return cam;
}

CameraView scale_camera(const CameraView& camera, int factor)
{
    if (factor < 1) fail(ErrorCode::InvalidFactor, "scale factor " + std::to_string(factor));
    if (factor == 1) return camera;
    const double inv = 1.0 / factor;
    CameraView out = camera;
    out.intrinsics.topRows<2>() *= inv;
    out.projection.topRows<2>() *= inv;
    out.width = camera.width / factor;
    out.height = camera.height / factor;
    return out;
}

std::optional<PixelProjection> try_project_point(const CameraView& camera, const Eigen::Vector3d& point)
{
    const Eigen::Vector3d h = camera.projection.leftCols<3>() * point + camera.projection.col(3);
    const double depth = h.z() / camera.projective_scale;
    if (!(depth > kMinDepth)) return std::nullopt;
    return PixelProjection{Eigen::Vector2d(h.x() / h.z(), h.y() / h.z()), depth};
}

PixelProjection project_point(const CameraView& camera, const Eigen::Vector3d& point)
{
    auto p = try_project_point(camera, point);
    if (!p) fail(ErrorCode::BehindCamera, "point is not in front of the camera");
    return *p;
}

Eigen::Matrix3d intrinsics_from_sensor(double focal_length_mm, double sensor_width_mm, int width, int height)
{
    const double f = focal_length_mm / sensor_width_mm * width;
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = k(1, 1) = f;
    k(0, 2) = 0.5 * width;
    k(1, 2) = 0.5 * height;
    return k;
}

void write_camera(const std::filesystem::path& path, const CameraView& camera)
{
    std::ostringstream out;
    out << std::setprecision(17);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) out << (c ? " " : "") << camera.projection(r, c);
        out << '\n';
    }
    out << camera.width << ' ' << camera.height << '\n';
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
    file << out.str();
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
}

CameraView read_camera(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::FileNotFound, path.string());
    ProjectionMatrix p;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (!(in >> p(r, c))) fail(ErrorCode::ParseError, path.string() + ": expected 12 matrix entries");
        }
    }
    int width = 0;
    int height = 0;
    if (!(in >> width >> height) || width < 1 || height < 1) {
        fail(ErrorCode::ParseError, path.string() + ": expected a positive 'width height' row");
    }
    std::string extra;
    if (in >> extra) fail(ErrorCode::ParseError, path.string() + ": trailing content '" + extra + "'");
    return decompose_projection(p, width, height);
}

} // namespace texsr
