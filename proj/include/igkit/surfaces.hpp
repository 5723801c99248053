#pragma once

// Differential geometry of parametrized surface patches in R^3. A patch is an
// embedding (u, v) -> R^3 with optional analytic partial derivatives; when the
// partials are absent, central differences take over. Curvature can be
// computed three independent ways (shape operator, curvature tensor, and an
// intrinsic two-determinant formula using only E, F, G), which gives the test
// suite a cross-check that the routes agree.

#include <igkit/errors.hpp>
#include <igkit/numerics.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace igkit::surfaces {

using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

struct Domain {
    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();
    double v_min = -std::numeric_limits<double>::infinity();
    double v_max = std::numeric_limits<double>::infinity();

    bool contains(double u, double v) const {
        return u >= u_min && u <= u_max && v >= v_min && v <= v_max;
    }
};

struct SurfacePatch {
    std::function<Vec3(double, double)> embed;
    // Analytic partials; leave empty to fall back to finite differences.
    std::function<Vec3(double, double)> du, dv, duu, duv, dvv;
    Domain domain;
    double fd_step_first = 1e-5;
    double fd_step_second = 1e-4;

    bool has_analytic_partials() const { return du && dv && duu && duv && dvv; }
};

namespace detail {

inline void require_in_domain(const SurfacePatch& s, double u, double v) {
    if (!s.domain.contains(u, v))
        throw argument_error("point (u, v) lies outside the patch domain");
    const Vec3 p = s.embed(u, v);
    if (!p.allFinite()) throw argument_error("embedding is not finite at (u, v)");
}

inline Vec3 partial_u(const SurfacePatch& s, double u, double v) {
    if (s.du) return s.du(u, v);
    const double h = s.fd_step_first;
    return (s.embed(u + h, v) - s.embed(u - h, v)) / (2.0 * h);
}

inline Vec3 partial_v(const SurfacePatch& s, double u, double v) {
    if (s.dv) return s.dv(u, v);
    const double h = s.fd_step_first;
    return (s.embed(u, v + h) - s.embed(u, v - h)) / (2.0 * h);
}

inline Vec3 partial_uu(const SurfacePatch& s, double u, double v) {
    if (s.duu) return s.duu(u, v);
    const double h = s.fd_step_second;
    return (s.embed(u + h, v) - 2.0 * s.embed(u, v) + s.embed(u - h, v)) / (h * h);
}

inline Vec3 partial_vv(const SurfacePatch& s, double u, double v) {
    if (s.dvv) return s.dvv(u, v);
    const double h = s.fd_step_second;
    return (s.embed(u, v + h) - 2.0 * s.embed(u, v) + s.embed(u, v - h)) / (h * h);
}

inline Vec3 partial_uv(const SurfacePatch& s, double u, double v) {
    if (s.duv) return s.duv(u, v);
    const double h = s.fd_step_second;
    return (s.embed(u + h, v + h) - s.embed(u + h, v - h) - s.embed(u - h, v + h) +
            s.embed(u - h, v - h)) /
           (4.0 * h * h);
}

// Finite-difference steps for derived quantities. Patches with analytic
// partials produce forms that are exact up to round-off, so a small stencil
// step keeps truncation near machine precision; purely numeric patches carry
// finite-difference noise and need a wider step.
inline double gamma_diff_step(const SurfacePatch& s) {
    return s.has_analytic_partials() ? 1e-3 : 3e-2;
}
inline double form_diff_step(const SurfacePatch& s) {
    return s.has_analytic_partials() ? 5e-3 : 1e-2;
}

} // namespace detail

struct FirstForm {
    double E, F, G;
};

inline Mat2 metric_from_form(const FirstForm& f) {
    Mat2 g;
    g << f.E, f.F, f.F, f.G;
    return g;
}

namespace detail {

inline FirstForm first_form_unchecked(const SurfacePatch& s, double u, double v) {
    const Vec3 xu = partial_u(s, u, v);
    const Vec3 xv = partial_v(s, u, v);
    return {xu.dot(xu), xu.dot(xv), xv.dot(xv)};
}

} // namespace detail

inline FirstForm first_fundamental_form(const SurfacePatch& s, double u, double v) {
    detail::require_in_domain(s, u, v);
    const FirstForm f = detail::first_form_unchecked(s, u, v);
    if (!(f.E > 0.0) || !(f.G > 0.0) || !(f.E * f.G - f.F * f.F > 0.0))
        throw degeneracy_error("first fundamental form is not positive definite");
    return f;
}

// Second fundamental form [[L, M], [M, N]] against the unit normal
// n = x_u x x_v / |x_u x x_v|.
inline Mat2 second_fundamental_form(const SurfacePatch& s, double u, double v) {
    detail::require_in_domain(s, u, v);
    const Vec3 xu = detail::partial_u(s, u, v);
    const Vec3 xv = detail::partial_v(s, u, v);
    Vec3 n = xu.cross(xv);
    const double len = n.norm();
    if (!(len > 1e-14)) throw degeneracy_error("surface normal vanishes at (u, v)");
    n /= len;
    Mat2 ii;
    const double L = detail::partial_uu(s, u, v).dot(n);
    const double M = detail::partial_uv(s, u, v).dot(n);
    const double N = detail::partial_vv(s, u, v).dot(n);
    ii << L, M, M, N;
    return ii;
}

// Shape operator I^{-1} II; its eigenvalues are the principal curvatures (up
// to the orientation of the normal) and its determinant the Gauss curvature.
inline Mat2 shape_operator(const SurfacePatch& s, double u, double v) {
    const FirstForm f = first_fundamental_form(s, u, v);
    const Mat2 ii = second_fundamental_form(s, u, v);
    const double det = f.E * f.G - f.F * f.F;
    Mat2 inv;
    inv << f.G, -f.F, -f.F, f.E;
    inv /= det;
    return inv * ii;
}

inline double gaussian_curvature(const SurfacePatch& s, double u, double v) {
    return shape_operator(s, u, v).determinant();
}

// Christoffel symbols of the metric, gamma[k][i][j] = Gamma^k_ij. The (i, j)
// pair is computed once and mirrored, so the symmetry Gamma^k_ij = Gamma^k_ji
// holds exactly.
struct ChristoffelSymbols {
    double gamma[2][2][2];
};

namespace detail {

// d/du and d/dv of every metric entry. With analytic partials these come from
// the product rule on dot products; otherwise from central differences of the
// form itself.
inline void metric_partials(const SurfacePatch& s, double u, double v, Mat2& dg_u, Mat2& dg_v) {
    if (s.has_analytic_partials()) {
        const Vec3 xu = s.du(u, v), xv = s.dv(u, v);
        const Vec3 xuu = s.duu(u, v), xuv = s.duv(u, v), xvv = s.dvv(u, v);
        dg_u << 2.0 * xuu.dot(xu), xuu.dot(xv) + xu.dot(xuv), 0.0, 2.0 * xuv.dot(xv);
        dg_u(1, 0) = dg_u(0, 1);
        dg_v << 2.0 * xuv.dot(xu), xuv.dot(xv) + xu.dot(xvv), 0.0, 2.0 * xvv.dot(xv);
        dg_v(1, 0) = dg_v(0, 1);
        return;
    }
    const double h = s.fd_step_second;
    auto metric = [&](double a, double b) {
        return metric_from_form(first_form_unchecked(s, a, b));
    };
    dg_u = (metric(u + h, v) - metric(u - h, v)) / (2.0 * h);
    dg_v = (metric(u, v + h) - metric(u, v - h)) / (2.0 * h);
}

inline ChristoffelSymbols christoffel_unchecked(const SurfacePatch& s, double u, double v) {
    const FirstForm f = first_form_unchecked(s, u, v);
    const double det = f.E * f.G - f.F * f.F;
    if (!(det > 0.0)) throw degeneracy_error("metric is singular at (u, v)");
    Mat2 ginv;
    ginv << f.G, -f.F, -f.F, f.E;
    ginv /= det;
    Mat2 dg[2];
    metric_partials(s, u, v, dg[0], dg[1]);

    ChristoffelSymbols c{};
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j) {
                double sum = 0.0;
                for (int l = 0; l < 2; ++l)
                    sum += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                c.gamma[k][i][j] = 0.5 * sum;
                c.gamma[k][j][i] = c.gamma[k][i][j];
            }
    return c;
}

} // namespace detail

inline ChristoffelSymbols christoffel(const SurfacePatch& s, double u, double v) {
    detail::require_in_domain(s, u, v);
    return detail::christoffel_unchecked(s, u, v);
}

// Curvature tensor R^i_jkl = d_k Gamma^i_lj - d_l Gamma^i_kj
//                           + Gamma^i_kp Gamma^p_lj - Gamma^i_lp Gamma^p_kj,
// with the symbol derivatives taken by five-point stencils.
struct RiemannTensor {
    double r[2][2][2][2];
};

inline RiemannTensor riemann_tensor(const SurfacePatch& s, double u, double v) {
    detail::require_in_domain(s, u, v);
    const double h = detail::gamma_diff_step(s);
    ChristoffelSymbols stencil_u[5], stencil_v[5];
    for (int o = -2; o <= 2; ++o) {
        stencil_u[o + 2] = detail::christoffel_unchecked(s, u + o * h, v);
        stencil_v[o + 2] = detail::christoffel_unchecked(s, u, v + o * h);
    }
    const ChristoffelSymbols& c = stencil_u[2];
    auto d_gamma = [&](int coord, int k, int i, int j) {
        const ChristoffelSymbols* st = coord == 0 ? stencil_u : stencil_v;
        return (-st[4].gamma[k][i][j] + 8.0 * st[3].gamma[k][i][j] - 8.0 * st[1].gamma[k][i][j] +
                st[0].gamma[k][i][j]) /
               (12.0 * h);
    };

    RiemannTensor t{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    double val = d_gamma(k, i, l, j) - d_gamma(l, i, k, j);
                    for (int p = 0; p < 2; ++p)
                        val += c.gamma[i][k][p] * c.gamma[p][l][j] -
                               c.gamma[i][l][p] * c.gamma[p][k][j];
                    t.r[i][j][k][l] = val;
                }
    return t;
}

// Sectional curvature of the coordinate plane:
// K = g_1p R^p_212 / (g_11 g_22 - g_12^2).
inline double sectional_curvature(const SurfacePatch& s, double u, double v) {
    const FirstForm f = first_fundamental_form(s, u, v);
    const RiemannTensor t = riemann_tensor(s, u, v);
    const double lowered = f.E * t.r[0][1][0][1] + f.F * t.r[1][1][0][1];
    const double det = f.E * f.G - f.F * f.F;
    return lowered / det;
}

// Gauss curvature from E, F, G alone (no normal, no second form), via the
// classical two-determinant expression divided by (EG - F^2)^2.
inline double intrinsic_curvature(const SurfacePatch& s, double u, double v) {
    detail::require_in_domain(s, u, v);
    const double h = detail::form_diff_step(s);

    auto form = [&](double a, double b) { return detail::first_form_unchecked(s, a, b); };

    double E_u, E_v, F_u, F_v, G_u, G_v;
    std::function<FirstForm(double, double)> d_form_u, d_form_v;
    if (s.has_analytic_partials()) {
        auto first_derivs = [&](double a, double b) {
            const Vec3 xu = s.du(a, b), xv = s.dv(a, b);
            const Vec3 xuu = s.duu(a, b), xuv = s.duv(a, b), xvv = s.dvv(a, b);
            return std::pair<FirstForm, FirstForm>{
                {2.0 * xuu.dot(xu), xuu.dot(xv) + xu.dot(xuv), 2.0 * xuv.dot(xv)},
                {2.0 * xuv.dot(xu), xuv.dot(xv) + xu.dot(xvv), 2.0 * xvv.dot(xv)}};
        };
        const auto [fu, fv] = first_derivs(u, v);
        E_u = fu.E; F_u = fu.F; G_u = fu.G;
        E_v = fv.E; F_v = fv.F; G_v = fv.G;
        d_form_u = [first_derivs](double a, double b) { return first_derivs(a, b).first; };
        d_form_v = [first_derivs](double a, double b) { return first_derivs(a, b).second; };
    } else {
        auto d1 = [&](auto select, int coord, double a, double b) {
            auto g = [&](double t) {
                return coord == 0 ? select(form(t, b)) : select(form(a, t));
            };
            return central_diff_5pt(g, coord == 0 ? a : b, h);
        };
        auto selE = [](const FirstForm& f) { return f.E; };
        auto selF = [](const FirstForm& f) { return f.F; };
        auto selG = [](const FirstForm& f) { return f.G; };
        E_u = d1(selE, 0, u, v); E_v = d1(selE, 1, u, v);
        F_u = d1(selF, 0, u, v); F_v = d1(selF, 1, u, v);
        G_u = d1(selG, 0, u, v); G_v = d1(selG, 1, u, v);
    }

    double E_vv, G_uu, F_uv;
    if (s.has_analytic_partials()) {
        E_vv = central_diff_5pt([&](double t) { return d_form_v(u, t).E; }, v, h);
        G_uu = central_diff_5pt([&](double t) { return d_form_u(t, v).G; }, u, h);
        F_uv = central_diff_5pt([&](double t) { return d_form_v(t, v).F; }, u, h);
    } else {
        E_vv = second_diff_5pt([&](double t) { return form(u, t).E; }, v, h);
        G_uu = second_diff_5pt([&](double t) { return form(t, v).G; }, u, h);
        F_uv = central_diff_5pt(
            [&](double a) {
                return central_diff_5pt([&](double b) { return form(a, b).F; }, v, h);
            },
            u, h);
    }

    const FirstForm f = form(u, v);
    Eigen::Matrix3d m1, m2;
    m1 << -0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v,
          F_v - 0.5 * G_u, f.E, f.F,
          0.5 * G_v, f.F, f.G;
    m2 << 0.0, 0.5 * E_v, 0.5 * G_u,
          0.5 * E_v, f.E, f.F,
          0.5 * G_u, f.F, f.G;
    const double det = f.E * f.G - f.F * f.F;
    if (!(det > 0.0)) throw degeneracy_error("metric is singular at (u, v)");
    return (m1.determinant() - m2.determinant()) / (det * det);
}

// ---------------------------------------------------------------------------
// Geodesics by shooting: integrate u''^k + Gamma^k_ij u'^i u'^j = 0 with a
// fixed-step classical Runge-Kutta scheme.

struct GeodesicState {
    double u, v, du, dv;
};

struct GeodesicPath {
    std::vector<double> times;
    std::vector<GeodesicState> states;
};

struct trajectory_escape_error : error {
    trajectory_escape_error(std::string msg, GeodesicPath path, double t)
        : error(std::move(msg)), partial_path(std::move(path)), escape_time(t) {}
    GeodesicPath partial_path;
    double escape_time;
};

inline GeodesicPath geodesic_shoot(const SurfacePatch& s, double u0, double v0, double du0,
                                   double dv0, double t_max, int steps) {
    if (steps < 2) throw argument_error("geodesic integration needs at least two steps");
    if (!(t_max > 0.0)) throw argument_error("geodesic integration needs t_max > 0");
    detail::require_in_domain(s, u0, v0);

    auto accel = [&](const GeodesicState& y) {
        const ChristoffelSymbols c = detail::christoffel_unchecked(s, y.u, y.v);
        GeodesicState d{};
        d.u = y.du;
        d.v = y.dv;
        for (int k = 0; k < 2; ++k) {
            const double a = -(c.gamma[k][0][0] * y.du * y.du +
                               2.0 * c.gamma[k][0][1] * y.du * y.dv +
                               c.gamma[k][1][1] * y.dv * y.dv);
            (k == 0 ? d.du : d.dv) = a;
        }
        return d;
    };
    auto add = [](const GeodesicState& a, const GeodesicState& b, double scale) {
        return GeodesicState{a.u + scale * b.u, a.v + scale * b.v, a.du + scale * b.du,
                             a.dv + scale * b.dv};
    };

    GeodesicPath path;
    path.times.reserve(steps + 1);
    path.states.reserve(steps + 1);
    GeodesicState y{u0, v0, du0, dv0};
    path.times.push_back(0.0);
    path.states.push_back(y);

    const double dt = t_max / steps;
    for (int n = 1; n <= steps; ++n) {
        const GeodesicState k1 = accel(y);
        const GeodesicState k2 = accel(add(y, k1, 0.5 * dt));
        const GeodesicState k3 = accel(add(y, k2, 0.5 * dt));
        const GeodesicState k4 = accel(add(y, k3, dt));
        GeodesicState next{
            y.u + dt / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
            y.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
            y.du + dt / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du),
            y.dv + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv)};
        const double t = n * dt;
        if (!s.domain.contains(next.u, next.v))
            throw trajectory_escape_error("geodesic left the patch domain", std::move(path), t);
        y = next;
        path.times.push_back(t);
        path.states.push_back(y);
    }
    return path;
}

// Squared speed g(gamma', gamma') of a geodesic state; conserved along exact
// geodesics, so its drift measures integration error.
inline double squared_speed(const SurfacePatch& s, const GeodesicState& y) {
    const FirstForm f = detail::first_form_unchecked(s, y.u, y.v);
    return f.E * y.du * y.du + 2.0 * f.F * y.du * y.dv + f.G * y.dv * y.dv;
}

// ---------------------------------------------------------------------------
// Stock patches. All carry analytic partials.

inline SurfacePatch make_plane() {
    SurfacePatch s;
    s.embed = [](double u, double v) { return Vec3(u, v, 0.0); };
    s.du = [](double, double) { return Vec3(1, 0, 0); };
    s.dv = [](double, double) { return Vec3(0, 1, 0); };
    s.duu = [](double, double) { return Vec3(0, 0, 0); };
    s.duv = [](double, double) { return Vec3(0, 0, 0); };
    s.dvv = [](double, double) { return Vec3(0, 0, 0); };
    return s;
}

inline SurfacePatch make_cylinder() {
    SurfacePatch s;
    s.embed = [](double u, double v) { return Vec3(std::cos(u), std::sin(u), v); };
    s.du = [](double u, double) { return Vec3(-std::sin(u), std::cos(u), 0); };
    s.dv = [](double, double) { return Vec3(0, 0, 1); };
    s.duu = [](double u, double) { return Vec3(-std::cos(u), -std::sin(u), 0); };
    s.duv = [](double, double) { return Vec3(0, 0, 0); };
    s.dvv = [](double, double) { return Vec3(0, 0, 0); };
    return s;
}

// Longitude/latitude chart of the unit sphere; the domain stops short of the
// poles where the chart degenerates.
inline SurfacePatch make_sphere_chart() {
    SurfacePatch s;
    s.embed = [](double u, double v) {
        return Vec3(std::cos(u) * std::cos(v), std::sin(u) * std::cos(v), std::sin(v));
    };
    s.du = [](double u, double v) {
        return Vec3(-std::sin(u) * std::cos(v), std::cos(u) * std::cos(v), 0.0);
    };
    s.dv = [](double u, double v) {
        return Vec3(-std::cos(u) * std::sin(v), -std::sin(u) * std::sin(v), std::cos(v));
    };
    s.duu = [](double u, double v) {
        return Vec3(-std::cos(u) * std::cos(v), -std::sin(u) * std::cos(v), 0.0);
    };
    s.duv = [](double u, double v) {
        return Vec3(std::sin(u) * std::sin(v), -std::cos(u) * std::sin(v), 0.0);
    };
    s.dvv = [](double u, double v) {
        return Vec3(-std::cos(u) * std::cos(v), -std::sin(u) * std::cos(v), -std::sin(v));
    };
    s.domain = {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), -1.5, 1.5};
    return s;
}

// Torus of revolution with major radius R and tube radius r. Coordinate u is
// the angle around the symmetry axis, coordinate v the angle around the tube,
// so v = 0 is the outer equator and v = pi the inner one. The chart is
// periodic; the domain is left unbounded.
inline SurfacePatch make_torus(double R, double r) {
    if (!(R > r && r > 0.0)) throw argument_error("torus requires R > r > 0");
    SurfacePatch s;
    s.embed = [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        return Vec3(w * std::cos(u), w * std::sin(u), r * std::sin(v));
    };
    s.du = [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        return Vec3(-w * std::sin(u), w * std::cos(u), 0.0);
    };
    s.dv = [r](double u, double v) {
        return Vec3(-r * std::sin(v) * std::cos(u), -r * std::sin(v) * std::sin(u),
                    r * std::cos(v));
    };
    s.duu = [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        return Vec3(-w * std::cos(u), -w * std::sin(u), 0.0);
    };
    s.duv = [r](double u, double v) {
        return Vec3(r * std::sin(v) * std::sin(u), -r * std::sin(v) * std::cos(u), 0.0);
    };
    s.dvv = [r](double u, double v) {
        return Vec3(-r * std::cos(v) * std::cos(u), -r * std::cos(v) * std::sin(u),
                    -r * std::sin(v));
    };
    return s;
}

// Closed-form Gauss curvature of the torus, for cross-checks and reports.
inline double torus_curvature_formula(double R, double r, double v) {
    return std::cos(v) / (r * (R + r * std::cos(v)));
}

} // namespace igkit::surfaces
