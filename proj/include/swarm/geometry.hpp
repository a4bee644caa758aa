#pragma once

#include <Eigen/Core>

namespace swarm {

using Vec2 = Eigen::Vector2d;

/// Axis-aligned arena bounding box.
struct BoundingBox {
    Vec2 lo{0.0, 0.0};
    Vec2 hi{1.0, 1.0};

    bool contains(const Vec2& p, double slack = 0.0) const {
        return p.x() >= lo.x() - slack && p.x() <= hi.x() + slack &&
               p.y() >= lo.y() - slack && p.y() <= hi.y() + slack;
    }

    Vec2 clamp(const Vec2& p) const {
        return {std::clamp(p.x(), lo.x(), hi.x()), std::clamp(p.y(), lo.y(), hi.y())};
    }

    Vec2 extent() const { return hi - lo; }
    Vec2 center() const { return 0.5 * (lo + hi); }
    double max_extent() const { return extent().maxCoeff(); }
};

/// Mirror a point back into the box, coordinate-wise. Converges for any
/// finite point; used by the random-walk policy at arena edges.
inline Vec2 reflect_into(Vec2 p, const BoundingBox& box) {
    for (int d = 0; d < 2; ++d) {
        const double lo = box.lo[d], hi = box.hi[d], span = hi - lo;
        double v = p[d];
        while (v < lo || v > hi) {
            if (v < lo) v = 2.0 * lo - v;
            if (v > hi) v = 2.0 * hi - v;
            if (span <= 0.0) { v = lo; break; }
        }
        p[d] = v;
    }
    return p;
}

}  // namespace swarm
