#pragma once

#include <texsr/formation.hpp>

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace texsr {

enum class KernelKind { Nearest, Bilinear, Bicubic, Lanczos };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view text);

/// Separable 1-D interpolation kernel. Bicubic is the Keys cubic with
/// a = -0.5; Lanczos uses a = 3.
struct InterpKernel
{
    KernelKind kind = KernelKind::Bilinear;

    double support() const;
    double operator()(double offset) const;
};

struct UpsampleResult
{
    TextureAtlas texture;
    /// HR texels inside the mask whose taps all fell on inactive LR texels.
    std::vector<std::uint8_t> unseen;
    std::size_t unseen_count = 0;
};

/// Mask-aware interpolation of an LR texture onto an HR grid of
/// (lr.width * scale) x (lr.height * scale) texels. HR texel x samples the LR
/// grid at (x + 0.5) / scale - 0.5; taps on inactive or out-of-range LR texels
/// are dropped and the remaining weights renormalized. Texels outside hr_mask
/// are zero. Throws InvalidFactor for scale outside {2, 3, 4} and MaskMismatch
/// when hr_mask has the wrong size.
UpsampleResult upsample_interp(const TextureAtlas& lr, int scale, InterpKernel kernel,
                               const std::vector<std::uint8_t>& hr_mask);

struct ModelSRConfig
{
    int scale = 2;
    double lambda_tv = 0.1;
    double step = 1.0;   // initial step of every backtracking line search
    int max_iters = 200;

    void validate() const;
};

/// Smoothing constant inside the square root of the total variation.
inline constexpr double kTvEpsilon = 1e-6;

struct ObjectiveTerms
{
    double data = 0.0;
    double tv = 0.0;
    double total = 0.0;
};

enum class SolverStatus { Converged, MaxIterations, Diverged };
std::string_view to_string(SolverStatus status);

struct ModelSRResult
{
    TextureAtlas texture;
    /// Objective of the initial texture followed by every accepted iterate.
    std::vector<ObjectiveTerms> trace;
    int iterations = 0;
    SolverStatus status = SolverStatus::MaxIterations;
};

/// Isotropic total variation over active 4-neighborhoods, summed over
/// channels: sum sqrt(dx^2 + dy^2 + eps), where a difference is zero unless
/// both texels are active.
double total_variation(const TextureAtlas& texture, double epsilon = kTvEpsilon);

/// Data term sum_i ||P_i T - H_i||^2 over covered pixels, plus weighted TV.
ObjectiveTerms model_sr_objective(std::span<const ViewImage> views, std::span<const SparseProjectionOperator> ops,
                                  const TextureAtlas& texture, double lambda_tv);

/// Texture-space multi-view super-resolution: minimizes the model SR
/// objective by projected gradient descent with step halving. Iterates are
/// projected onto [0, 1] and onto init's mask. Stops when no step size
/// decreases the objective (Converged), after max_iters iterations, or when
/// the objective stops being finite (Diverged; the best iterate is returned).
/// Throws ViewMismatch when views and operators disagree.
ModelSRResult model_sr_solve(std::span<const ViewImage> lr_views, std::span<const SparseProjectionOperator> lr_ops,
                             const TextureAtlas& init, const ModelSRConfig& config = {});

/// CSV with header "iteration,data,tv,total".
void write_trace_csv(const std::filesystem::path& path, const std::vector<ObjectiveTerms>& trace);

} // namespace texsr
