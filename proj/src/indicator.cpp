#include "fractorus/perimeter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fractorus {

namespace {

// Arc membership on a periodic axis, half-open at the left cut: [a, b)
// once both are unwound to the same period. With cuts on grid points this
// keeps the sampled set exactly commensurate (width b - a covers exactly
// (b - a)/h cells), and the stripe and its complement tile the torus.
bool in_stripe(const FlatTorus& torus, const Pt& p, const Shape& sh) {
    double L = torus.side(sh.axis);
    double t = std::fmod(p[sh.axis] - sh.a, L);
    if (t < 0.0)
        t += L;
    // Guard the cuts against roundoff in x - a: a hair below L means "at
    // the left cut", a hair below b - a stays inside.
    double eps = 1e-9 * L;
    if (t > L - eps)
        t = 0.0;
    return t < sh.b - sh.a - eps;
}

bool in_shape(const FlatTorus& torus, const Pt& p, const Shape& sh) {
    if (sh.kind == ShapeKind::stripe)
        return in_stripe(torus, p, sh);
    return torus.geodesic_distance(p, sh.center) < sh.radius;
}

void validate_shape(const FlatTorus& torus, const Shape& sh) {
    if (sh.kind == ShapeKind::stripe) {
        if (sh.axis < 0 || sh.axis >= torus.dim())
            throw std::invalid_argument("stripe axis out of range");
        double w = sh.b - sh.a;
        if (!(w > 0.0) || !(w < torus.side(sh.axis)))
            throw std::invalid_argument(
                "stripe width must lie strictly between 0 and the axis length");
    } else {
        if (!(sh.radius > 0.0) || !(sh.radius < 0.5 * torus.min_side()))
            throw std::invalid_argument(
                "ball radius must lie strictly between 0 and half the shortest side");
    }
}

SetIndicator from_membership(const Grid& g, const std::vector<Shape>& shapes) {
    for (const Shape& sh : shapes)
        validate_shape(g.torus(), sh);
    SetIndicator e;
    e.field = GridField(g, -1.0);
    e.shapes = shapes;
    for (std::size_t i = 0; i < g.size(); ++i) {
        Pt p = g.point(i);
        for (const Shape& sh : shapes) {
            if (in_shape(g.torus(), p, sh)) {
                e.field.v[i] = 1.0;
                break;
            }
        }
    }
    return e;
}

} // namespace

SetIndicator make_stripe(const Grid& g, int axis, double a, double b) {
    Shape sh;
    sh.kind = ShapeKind::stripe;
    sh.axis = axis;
    sh.a = a;
    sh.b = b;
    return from_membership(g, {sh});
}

SetIndicator make_ball(const Grid& g, const Pt& center, double radius) {
    Shape sh;
    sh.kind = ShapeKind::ball;
    sh.center = center;
    sh.radius = radius;
    return from_membership(g, {sh});
}

SetIndicator make_shape_union(const Grid& g, const std::vector<Shape>& shapes) {
    return from_membership(g, shapes);
}

SetIndicator make_from_field(const GridField& f) {
    for (double v : f.v)
        if (v != 1.0 && v != -1.0)
            throw std::invalid_argument("indicator fields must be exactly +-1");
    SetIndicator e;
    e.field = f;
    return e;
}

SetIndicator complement(const SetIndicator& e) {
    SetIndicator c;
    c.field = e.field;
    for (double& v : c.field.v)
        v = -v;
    // The complement of a single stripe is again a stripe (the other arc);
    // anything else loses its exact-shape tag and falls back to the grid.
    if (e.shapes.size() == 1 && e.shapes[0].kind == ShapeKind::stripe) {
        const FlatTorus& torus = e.field.grid.torus();
        Shape sh = e.shapes[0];
        double a = sh.b;
        double b = sh.a + torus.side(sh.axis);
        sh.a = a;
        sh.b = b;
        c.shapes = {sh};
    }
    return c;
}

double set_volume(const SetIndicator& e) {
    double cells = 0.0;
    for (double v : e.field.v)
        if (v > 0.0)
            cells += 1.0;
    return cells * e.field.grid.weight();
}

double classical_perimeter(const SetIndicator& e) {
    const Grid& g = e.field.grid;
    const FlatTorus& torus = g.torus();
    int n = torus.dim();
    if (!e.shapes.empty()) {
        double per = 0.0;
        for (const Shape& sh : e.shapes) {
            if (sh.kind == ShapeKind::stripe) {
                double area = 1.0;
                for (int i = 0; i < n; ++i)
                    if (i != sh.axis)
                        area *= torus.side(i);
                per += 2.0 * area;
            } else {
                double R = sh.radius;
                if (n == 1)
                    per += 2.0;
                else if (n == 2)
                    per += 2.0 * std::numbers::pi * R;
                else
                    per += 4.0 * std::numbers::pi * R * R;
            }
        }
        return per;
    }
    // Raw grid set: every sign-change face contributes its area.
    double per = 0.0;
    for (int a = 0; a < n; ++a) {
        std::size_t flips = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::array<int, 3> m = g.unflatten(i);
            m[a] = (m[a] + 1) % g.npts(a);
            if (e.field.v[i] != e.field.v[g.flatten(m)])
                ++flips;
        }
        per += static_cast<double>(flips) * g.weight() / g.h(a);
    }
    return per;
}

} // namespace fractorus
