#include "doctest.h"

#include "ahcf/connection.hpp"
#include "ahcf/lattice.hpp"
#include "ahcf/rng.hpp"
#include "ahcf/structure.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace ahcf;

namespace {

// g = e^(2 phi) * delta with phi = eps * sin(x0).
struct ConformalTorus {
  Lattice lat;
  double eps;
  Field g;

  ConformalTorus(int N, double eps_) : lat(1, N), eps(eps_), g(lat, {Slot::Lower, Slot::Lower}) {
    std::vector<double> x(lat.dim());
    for (std::int64_t p = 0; p < g.points(); ++p) {
      point_coords(lat, p, x.data());
      const double f = std::exp(2.0 * eps * std::sin(x[0]));
      g.at(p, g.comp2(0, 0)) = f;
      g.at(p, g.comp2(1, 1)) = f;
    }
  }

  double phi_x(std::int64_t p) const {
    std::vector<double> x(lat.dim());
    point_coords(lat, p, x.data());
    return eps * std::cos(x[0]);  // d phi / dx0
  }
  double lap_phi(std::int64_t p) const {
    std::vector<double> x(lat.dim());
    point_coords(lat, p, x.data());
    return -eps * std::sin(x[0]);
  }
  double conf(std::int64_t p) const {
    std::vector<double> x(lat.dim());
    point_coords(lat, p, x.data());
    return std::exp(2.0 * eps * std::sin(x[0]));
  }
};

// n = 2 structure with J conjugated by exp(eps E), metric re-compatibilized.
AHStructure conjugated_structure(const Lattice& lat, double eps, int seed,
                                 const ModeBand& band = ModeBand{1, 1}) {
  Rng rng(seed);
  Field E = random_band_limited(lat, {Slot::Upper, Slot::Lower}, band, rng);
  E *= eps;
  Field M = pointwise_expm(E);
  Field J = conjugate_endo(M, standard_complex_structure(lat));
  return build_structure(flat_metric(lat), J);
}

// Fourth-order FD partial for the bracket-definition Nijenhuis oracle.
Field fd4_partial(const Field& f, int axis) {
  const Lattice& lat = f.lattice();
  const int N = lat.points_per_axis;
  const std::int64_t stride = lat.axis_stride(axis);
  const double h = lat.spacing();
  Field out(lat, f.valence());
  for (int c = 0; c < f.comps(); ++c) {
    const double* in = f.component(c);
    double* dst = out.component(c);
    const std::int64_t outer = lat.num_points() / (static_cast<std::int64_t>(N) * stride);
    for (std::int64_t o = 0; o < outer; ++o)
      for (std::int64_t i = 0; i < stride; ++i) {
        const std::int64_t base = o * N * stride + i;
        for (int j = 0; j < N; ++j) {
          auto w = [&](int q) { return in[base + ((q % N + N) % N) * stride]; };
          dst[base + j * stride] =
              (-w(j + 2) + 8.0 * w(j + 1) - 8.0 * w(j - 1) + w(j - 2)) / (12.0 * h);
        }
      }
  }
  return out;
}

// N(d_j, d_k) = [J d_j, J d_k] - J [J d_j, d_k] - J [d_j, J d_k], evaluated
// with the supplied derivative operator.
Field nijenhuis_bracket(const Field& J, Field (*diff)(const Field&, int)) {
  const Lattice& lat = J.lattice();
  const int d = lat.dim();
  std::vector<Field> dJ;
  for (int a = 0; a < d; ++a) dJ.push_back(diff(J, a));
  Field N(lat, {Slot::Upper, Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < N.points(); ++p)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double acc = 0.0;
          for (int q = 0; q < d; ++q) {
            acc += J.at(p, J.comp2(q, j)) * dJ[q].at(p, J.comp2(i, k));
            acc -= J.at(p, J.comp2(q, k)) * dJ[q].at(p, J.comp2(i, j));
            acc -= J.at(p, J.comp2(i, q)) * dJ[j].at(p, J.comp2(q, k));
            acc += J.at(p, J.comp2(i, q)) * dJ[k].at(p, J.comp2(q, j));
          }
          N.at(p, N.comp3(i, j, k)) = acc;
        }
  return N;
}

}  // namespace

TEST_CASE("levi_civita: flat metric gives zero coefficients") {
  Lattice lat(1, 8);
  CHECK(levi_civita(flat_metric(lat)).gamma.max_abs() < 1e-12);
}

TEST_CASE("levi_civita matches the conformal closed form") {
  ConformalTorus ct(16, 0.05);
  Connection lc = levi_civita(ct.g);
  // Gamma^k_{ij} = delta^k_i phi_j + delta^k_j phi_i - delta_ij phi^k
  const int d = 2;
  for (std::int64_t p = 0; p < ct.g.points(); ++p) {
    const double grad[2] = {ct.phi_x(p), 0.0};
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double expect = 0.0;
          if (k == i) expect += grad[j];
          if (k == j) expect += grad[i];
          if (i == j) expect -= grad[k];
          CHECK(lc.gamma.at(p, lc.gamma.comp3(k, i, j)) ==
                doctest::Approx(expect).epsilon(1e-9).scale(1.0));
        }
  }
}

TEST_CASE("levi_civita: structural metricity and zero torsion") {
  Lattice lat(1, 16);
  Rng rng(21);
  Field bump = random_band_limited(lat, {Slot::Lower, Slot::Lower}, ModeBand{1, 2}, rng);
  Field g = flat_metric(lat);
  for (std::int64_t p = 0; p < g.points(); ++p)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double v = 0.02 * 0.5 * (bump.at(p, bump.comp2(i, j)) + bump.at(p, bump.comp2(j, i)));
        g.at(p, g.comp2(i, j)) += v;
      }
  Connection lc = levi_civita(g);
  CHECK(torsion(lc).max_abs() < 1e-12);
  Connection c = lc;
  CHECK(covariant_derivative(g, c).max_abs() < 1e-9);
}

TEST_CASE("curvature: flat connection vanishes; conformal scalar curvature") {
  Lattice lat(1, 8);
  CHECK(curvature(levi_civita(flat_metric(lat))).max_abs() < 1e-12);

  ConformalTorus ct(16, 0.02);
  Field s = scalar_curvature_lc(ct.g);
  for (std::int64_t p = 0; p < s.points(); ++p) {
    const double expect = -2.0 * ct.lap_phi(p) / ct.conf(p);
    CHECK(s.at(p) == doctest::Approx(expect).epsilon(1e-8).scale(0.05));
  }
}

TEST_CASE("ricci tensor matches the 2d conformal identity Ric = -lap(phi) delta") {
  ConformalTorus ct(16, 0.02);
  Field ric = ricci_tensor_lc(ct.g);
  for (std::int64_t p = 0; p < ric.points(); ++p) {
    CHECK(ric.at(p, ric.comp2(0, 0)) == doctest::Approx(-ct.lap_phi(p)).epsilon(1e-8).scale(0.05));
    CHECK(ric.at(p, ric.comp2(1, 1)) == doctest::Approx(-ct.lap_phi(p)).epsilon(1e-8).scale(0.05));
    CHECK(std::abs(ric.at(p, ric.comp2(0, 1))) < 1e-10);
  }
}

TEST_CASE("canonical connection: flat structure gives zero and zero residuals") {
  Lattice lat(1, 8);
  AHStructure s = flat_structure(lat);
  Connection can = canonical_connection(s);
  CHECK(can.gamma.max_abs() < 1e-12);
  CanonicalResiduals r = canonical_residuals(s, can);
  CHECK(r.max() < 1e-12);
}

TEST_CASE("canonical connection equals Levi-Civita on Kahler structures") {
  // n = 1: conformal metric with the standard J
  ConformalTorus ct(16, 0.02);
  AHStructure s1 = build_structure(ct.g, standard_complex_structure(ct.lat));
  Connection can1 = canonical_connection(s1);
  Field diff1 = can1.gamma;
  diff1 -= levi_civita(s1.g).gamma;
  CHECK(diff1.max_abs() < 1e-8);

  // n = 2: product of conformal factors, standard product J
  Lattice lat2(2, 8);
  Field g2 = flat_metric(lat2);
  std::vector<double> x(lat2.dim());
  for (std::int64_t p = 0; p < g2.points(); ++p) {
    point_coords(lat2, p, x.data());
    const double f1 = std::exp(2.0 * 0.01 * std::sin(x[0]));
    const double f2 = std::exp(2.0 * 0.015 * std::cos(x[2]));
    g2.at(p, g2.comp2(0, 0)) = f1;
    g2.at(p, g2.comp2(1, 1)) = f1;
    g2.at(p, g2.comp2(2, 2)) = f2;
    g2.at(p, g2.comp2(3, 3)) = f2;
  }
  AHStructure s2 = build_structure(g2, standard_complex_structure(lat2));
  CHECK(domega_residual(s2) < 1e-9);  // Kahler input
  Connection can2 = canonical_connection(s2);
  Field diff2 = can2.gamma;
  diff2 -= levi_civita(s2.g).gamma;
  CHECK(diff2.max_abs() < 1e-8);
}

TEST_CASE("canonical connection handles non-integrable J where Levi-Civita fails nabla J") {
  Lattice lat(2, 12);
  AHStructure s = conjugated_structure(lat, 5e-3, 101);

  Connection can = canonical_connection(s);
  CanonicalResiduals r = canonical_residuals(s, can);
  CHECK(r.nabla_omega < 1e-8);
  CHECK(r.nabla_J < 1e-8);
  CHECK(r.torsion_11 < 1e-8);

  Connection lc = levi_civita(s.g);
  const double lc_nabla_j = covariant_derivative(s.J, lc).max_abs();
  CHECK(lc_nabla_j > 1e-4);  // genuinely O(eps)
}

TEST_CASE("chern ricci form: flat vanishes; Kahler equals the Ricci form") {
  Lattice lat(1, 8);
  AHStructure flat = flat_structure(lat);
  CHECK(chern_ricci_form(flat, canonical_connection(flat)).max_abs() < 1e-12);

  // conformal oracle: rho_01 = -lap(phi) exactly in 2d
  ConformalTorus ct(16, 0.01);
  AHStructure s = build_structure(ct.g, standard_complex_structure(ct.lat));
  Field S = chern_ricci_form(s, canonical_connection(s));
  for (std::int64_t p = 0; p < S.points(); ++p) {
    CHECK(S.at(p, S.comp2(0, 1)) == doctest::Approx(-ct.lap_phi(p)).epsilon(1e-7).scale(0.01));
  }

  // independent route: Ricci form from the Levi-Civita Ricci tensor
  Field ric = ricci_tensor_lc(s.g);
  for (std::int64_t p = 0; p < S.points(); ++p) {
    double rho01 = 0.0;
    for (int a = 0; a < 2; ++a)
      rho01 += s.J.at(p, s.J.comp2(a, 0)) * ric.at(p, ric.comp2(a, 1));
    CHECK(S.at(p, S.comp2(0, 1)) == doctest::Approx(rho01).epsilon(1e-7).scale(0.01));
  }
}

TEST_CASE("chern ricci form scales linearly in the perturbation amplitude") {
  auto sup_s = [](double eps) {
    ConformalTorus ct(16, eps);
    AHStructure s = build_structure(ct.g, standard_complex_structure(ct.lat));
    return chern_ricci_form(s, canonical_connection(s)).max_abs();
  };
  const double s1 = sup_s(0.02);
  const double s2 = sup_s(0.01);
  CHECK(s1 / s2 == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("nijenhuis: constant J vanishes; pushforward of the standard J is integrable") {
  Lattice lat(2, 8);
  Field Jc = standard_complex_structure(lat);
  CHECK(nijenhuis(Jc).max_abs() < 1e-12);

  // J'(y) = (D psi)^-1 J D psi with psi(y) = y + v(y): the pullback of the
  // standard structure along a diffeomorphism, hence integrable.
  Lattice lat1(2, 16);
  Field J(lat1, {Slot::Upper, Slot::Lower});
  std::vector<double> x(lat1.dim());
  for (std::int64_t p = 0; p < J.points(); ++p) {
    point_coords(lat1, p, x.data());
    Eigen::Matrix4d dpsi = Eigen::Matrix4d::Identity();
    const double a = 3e-3;
    dpsi(0, 1) += a * std::cos(x[1]);
    dpsi(2, 0) += a * std::sin(x[0]);
    dpsi(3, 3) += a * std::cos(x[3]) * 0.5;
    Eigen::Matrix4d js = Eigen::Matrix4d::Zero();
    js(1, 0) = 1;
    js(0, 1) = -1;
    js(3, 2) = 1;
    js(2, 3) = -1;
    Eigen::Matrix4d jp = dpsi.inverse() * js * dpsi;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) J.at(p, J.comp2(i, j)) = jp(i, j);
  }
  CHECK(nijenhuis(J).max_abs() < 1e-7);
}

TEST_CASE("nijenhuis: O(eps) on generic conjugations, matches bracket FD oracle") {
  auto make_j = [](int N, double eps) {
    Lattice lat(2, N);
    Rng rng(7);
    Field E = random_band_limited(lat, {Slot::Upper, Slot::Lower}, ModeBand{1, 1}, rng);
    E *= eps;
    return conjugate_endo(pointwise_expm(E), standard_complex_structure(lat));
  };

  // amplitude scaling
  const double n1 = nijenhuis(make_j(8, 1e-2)).max_abs();
  const double n2 = nijenhuis(make_j(8, 5e-3)).max_abs();
  CHECK(n1 > 1e-4);
  CHECK(n1 / n2 == doctest::Approx(2.0).epsilon(0.1));

  // FD oracle convergence: |N_spectral - N_fd4| drops by about h^4
  auto gap = [&](int N) {
    Field J = make_j(N, 1e-2);
    Field a = nijenhuis(J);
    a -= nijenhuis_bracket(J, &fd4_partial);
    return a.max_abs();
  };
  const double e8 = gap(8);
  const double e16 = gap(16);
  CHECK(e8 / e16 > 10.0);
  CHECK(e8 / e16 < 24.0);

  // and the spectral evaluations of both routes agree
  Field J = make_j(8, 1e-2);
  Field diff = nijenhuis(J);
  diff -= nijenhuis_bracket(J, &partial);
  CHECK(diff.max_abs() < 1e-11);
}

TEST_CASE("nijenhuis divergence: zero on integrable J, linear in amplitude") {
  // n = 1 structures are always integrable
  Lattice lat1(1, 8);
  Rng rng(3);
  Field E1 = random_band_limited(lat1, {Slot::Upper, Slot::Lower}, ModeBand{1, 1}, rng);
  E1 *= 1e-2;
  AHStructure s1 =
      build_structure(flat_metric(lat1),
                      conjugate_endo(pointwise_expm(E1), standard_complex_structure(lat1)));
  CHECK(nijenhuis_divergence(s1, canonical_connection(s1)).max_abs() < 1e-10);

  // n = 2 generic: O(eps) with mode support near the input band
  Lattice lat(2, 8);
  AHStructure sa = conjugated_structure(lat, 1e-2, 55);
  AHStructure sb = conjugated_structure(lat, 5e-3, 55);
  Field ka = nijenhuis_divergence(sa, canonical_connection(sa));
  Field kb = nijenhuis_divergence(sb, canonical_connection(sb));
  CHECK(ka.max_abs() > 1e-5);
  CHECK(ka.max_abs() / kb.max_abs() == doctest::Approx(2.0).epsilon(0.1));

  Field tail = ka;
  tail -= dealias(ka);  // input band 1, quadratic tail above N/3 = 2
  CHECK(tail.max_abs() < 0.05 * ka.max_abs());
}

TEST_CASE("compatibility correction: zero input, J input, antisymmetry") {
  Lattice lat(2, 4);
  AHStructure s = flat_structure(lat);
  Field zero(lat, {Slot::Upper, Slot::Lower});
  CHECK(compatibility_correction(s, zero).max_abs() == 0.0);

  // j_dot = J gives omega back (pointwise bilinear oracle)
  Field H = compatibility_correction(s, s.J);
  Field diff = H;
  diff -= s.omega;
  CHECK(diff.max_abs() < 1e-13);

  Rng rng(5);
  Field raw = random_band_limited(lat, {Slot::Upper, Slot::Lower}, ModeBand{0, 1}, rng);
  Field jd = anti_commuting_part(raw, s.J);
  Field Hr = compatibility_correction(s, jd);
  for (std::int64_t p = 0; p < Hr.points(); ++p)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(std::abs(Hr.at(p, Hr.comp2(i, j)) + Hr.at(p, Hr.comp2(j, i))) < 1e-12);
}

TEST_CASE("curvature antisymmetry in the plane slots") {
  ConformalTorus ct(16, 0.02);
  Field R = curvature(levi_civita(ct.g));
  double worst = 0.0;
  for (std::int64_t p = 0; p < R.points(); ++p)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l)
            worst = std::max(worst, std::abs(R.at(p, R.comp4(i, j, k, l)) +
                                             R.at(p, R.comp4(i, j, l, k))));
  CHECK(worst < 1e-8);
}
