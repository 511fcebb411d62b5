#pragma once

#include <texsr/formation.hpp>

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace texsr {

enum class RetrievalMode { Backprojection, LeastSquares };

std::string_view to_string(RetrievalMode mode);
RetrievalMode parse_retrieval_mode(std::string_view text);

struct RetrievalConfig
{
    RetrievalMode mode = RetrievalMode::Backprojection;
    double lambda = 1e-3; // Tikhonov weight towards the backprojection
    int max_iters = 100;
    double tol = 1e-6;    // on ||A^T r_k|| / ||A^T r_0||

    void validate() const;
};

struct RetrievalResult
{
    TextureAtlas texture;
    /// 1 for active texels that no view observes; they stay active with color 0.
    std::vector<std::uint8_t> unseen;
    std::size_t unseen_count = 0;

    // Least-squares mode only.
    TextureAtlas unclamped;
    bool converged = true;
    int iterations = 0;
    /// Residual norm ||b - A x_k|| per channel, starting with k = 0.
    std::array<std::vector<double>, 3> residual_norms;
};

/// Weighted backprojection: each texel gets the weight-normalized sum of the
/// pixel colors it contributes to, over all views. Throws ViewMismatch when
/// the lists differ in length or disagree with the atlas, NoObservations when
/// no texel is seen.
RetrievalResult retrieve_backprojection(std::span<const SparseProjectionOperator> ops,
                                        std::span<const ViewImage> images, const TexelAtlasMap& atlas);

/// min_T sum_i ||P_i T - H_i||^2 + lambda ||T - T0||^2 by CGLS, one color
/// channel at a time, starting at the backprojection T0. Only observed texels
/// take part in the solve and only covered pixels enter the residual.
RetrievalResult retrieve_least_squares(std::span<const SparseProjectionOperator> ops,
                                       std::span<const ViewImage> images, const TexelAtlasMap& atlas,
                                       const RetrievalConfig& config = {});

RetrievalResult retrieve(std::span<const SparseProjectionOperator> ops, std::span<const ViewImage> images,
                         const TexelAtlasMap& atlas, const RetrievalConfig& config = {});

/// sum_i ||P_i T - H_i||^2 over covered pixels plus lambda ||T - T0||^2 over
/// the texels marked in `solved`, summed over the three channels.
double least_squares_objective(std::span<const SparseProjectionOperator> ops, std::span<const ViewImage> images,
                               const TextureAtlas& texture, const TextureAtlas& prior, double lambda,
                               const std::vector<std::uint8_t>& solved);

} // namespace texsr
