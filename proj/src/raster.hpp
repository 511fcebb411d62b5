#pragma once

// Scan conversion shared by the atlas rasterizer and the view depth buffer.
// Sample points are cell centers (i + 0.5, j + 0.5) in continuous cell units.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace texsr::detail {

// Twice the signed area of (a, b, p). Endpoints are put in lexicographic order
// before evaluation so that swapping a and b negates the result exactly; shared
// edges of adjacent triangles then agree bit-for-bit.
inline double edge_function(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p)
{
    const bool swap = b.x() < a.x() || (b.x() == a.x() && b.y() < a.y());
    const Eigen::Vector2d& s = swap ? b : a;
    const Eigen::Vector2d& e = swap ? a : b;
    const double v = (e.x() - s.x()) * (p.y() - s.y()) - (e.y() - s.y()) * (p.x() - s.x());
    return swap ? -v : v;
}

// Top-left rule for a positively oriented triangle. An edge and its reverse
// never both qualify.
inline bool owns_edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d d = b - a;
    return d.y() < 0.0 || (d.y() == 0.0 && d.x() > 0.0);
}

class RasterTriangle
{
public:
    RasterTriangle(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const Eigen::Vector2d& p2)
        : m_p{p0, p1, p2}
    {
        m_flipped = edge_function(p0, p1, p2) < 0.0;
        if (m_flipped) std::swap(m_p[1], m_p[2]);
        for (int k = 0; k < 3; ++k) {
            m_owns[k] = owns_edge(m_p[(k + 1) % 3], m_p[(k + 2) % 3]);
        }
    }

    // Barycentric coordinates of p with respect to the original corner order,
    // or false if p is outside (or on an edge the triangle does not own).
    bool cover(const Eigen::Vector2d& p, std::array<double, 3>& bary) const
    {
        std::array<double, 3> e;
        for (int k = 0; k < 3; ++k) {
            e[k] = edge_function(m_p[(k + 1) % 3], m_p[(k + 2) % 3], p);
            if (e[k] < 0.0 || (e[k] == 0.0 && !m_owns[k])) return false;
        }
        const double sum = e[0] + e[1] + e[2];
        if (!(sum > 0.0)) return false;
        bary = {e[0] / sum, e[1] / sum, e[2] / sum};
        if (m_flipped) std::swap(bary[1], bary[2]);
        return true;
    }

    double min_x() const { return std::min({m_p[0].x(), m_p[1].x(), m_p[2].x()}); }
    double max_x() const { return std::max({m_p[0].x(), m_p[1].x(), m_p[2].x()}); }
    double min_y() const { return std::min({m_p[0].y(), m_p[1].y(), m_p[2].y()}); }
    double max_y() const { return std::max({m_p[0].y(), m_p[1].y(), m_p[2].y()}); }

private:
    std::array<Eigen::Vector2d, 3> m_p;
    std::array<bool, 3> m_owns{};
    bool m_flipped = false;
};

// Inclusive range of cell indices whose centers may fall in [lo, hi].
inline std::pair<int, int> center_range(double lo, double hi, int size)
{
    const double a = std::ceil(lo - 0.5);
    const double b = std::floor(hi - 0.5);
    const int first = static_cast<int>(std::clamp(a, 0.0, double(size)));
    const int last = static_cast<int>(std::clamp(b, -1.0, double(size - 1)));
    return {first, last};
}

// Triangle indices bucketed by the rows their bounding boxes touch, in
// ascending triangle order within each row.
inline std::vector<std::vector<std::uint32_t>> bucket_rows(const std::vector<RasterTriangle>& tris,
                                                           const std::vector<std::uint8_t>& enabled, int height)
{
    std::vector<std::vector<std::uint32_t>> rows(height);
    for (std::size_t f = 0; f < tris.size(); ++f) {
        if (!enabled[f]) continue;
        const double lo = tris[f].min_y();
        const double hi = tris[f].max_y();
        if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
        auto [first, last] = center_range(lo, hi, height);
        for (int j = first; j <= last; ++j) rows[j].push_back(static_cast<std::uint32_t>(f));
    }
    return rows;
}

} // namespace texsr::detail
