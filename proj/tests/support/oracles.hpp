#pragma once

// Straightforward reference computations used to check the library.

#include <texsr/formation.hpp>
#include <texsr/texture.hpp>

#include <Eigen/Core>

#include <vector>

namespace texsr::testing {

/// Keys cubic convolution kernel with a = -0.5, written out piecewise.
double keys_cubic(double x);

/// sinc(x) * sinc(x / 3) for |x| < 3, zero elsewhere.
double lanczos3(double x);

/// Windowed SSIM over luma evaluated window by window with long double
/// accumulation and the single-pass moment formulas.
double reference_ssim(const TextureAtlas& a, const TextureAtlas& b);

/// Dense pixels x texels matrix of an operator.
Eigen::MatrixXd dense_matrix(const SparseProjectionOperator& op);

/// One color channel of an image or texture as a dense vector.
Eigen::VectorXd channel_of(const std::vector<Color>& colors, int channel);

/// Direct 2D evaluation of bicubic down-sampling: for every output pixel the
/// full product-kernel footprint is enumerated on the unbounded grid and
/// out-of-range taps read the nearest edge pixel.
std::vector<double> downscale_oracle(const std::vector<double>& image, int width, int height, int factor);

/// Point-in-triangle by the sign of three cross products; boundary points are
/// reported as outside.
bool strictly_inside(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c);

} // namespace texsr::testing
