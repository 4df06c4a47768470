#include "ahcf/connection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace ahcf {

namespace {

using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

MatD get_mat(const Field& f, std::int64_t p) {
  const int d = f.lattice().dim();
  MatD m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = f.at(p, f.comp2(i, j));
  return m;
}

}  // namespace

double CanonicalResiduals::max() const {
  return std::max(std::max(nabla_g, nabla_omega), std::max(nabla_J, torsion_11));
}

Connection levi_civita(const Field& g) {
  const Lattice& lat = g.lattice();
  const int d = lat.dim();
  g.require_finite("levi_civita");
  Field dg = gradient(g);  // comp3(a, i, j) = d_a g_ij
  Connection c;
  c.kind = ConnectionKind::LeviCivita;
  c.gamma = Field(lat, {Slot::Upper, Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < g.points(); ++p) {
    MatD gm = get_mat(g, p);
    Eigen::LLT<MatD> llt(gm);
    if (llt.info() != Eigen::Success) throw Error("levi_civita: singular metric");
    MatD ginv = gm.inverse();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double acc = 0.0;
          for (int l = 0; l < d; ++l) {
            acc += ginv(i, l) * 0.5 *
                   (dg.at(p, dg.comp3(j, l, k)) + dg.at(p, dg.comp3(k, j, l)) -
                    dg.at(p, dg.comp3(l, j, k)));
          }
          c.gamma.at(p, c.gamma.comp3(i, j, k)) = acc;
        }
  }
  return c;
}

Field torsion(const Connection& c) {
  const Lattice& lat = c.lattice();
  const int d = lat.dim();
  Field t(lat, {Slot::Upper, Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < t.points(); ++p)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          t.at(p, t.comp3(i, j, k)) =
              c.gamma.at(p, c.gamma.comp3(i, j, k)) - c.gamma.at(p, c.gamma.comp3(i, k, j));
  return t;
}

Field curvature(const Connection& c) {
  const Lattice& lat = c.lattice();
  const int d = lat.dim();
  Field dG = gradient(c.gamma);  // comp4(a, i, j, k) = d_a Gamma^i_{jk}
  Field R(lat, {Slot::Upper, Slot::Lower, Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < R.points(); ++p) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) {
            double acc = dG.at(p, dG.comp4(k, i, l, j)) - dG.at(p, dG.comp4(l, i, k, j));
            for (int q = 0; q < d; ++q) {
              acc += c.gamma.at(p, c.gamma.comp3(i, k, q)) * c.gamma.at(p, c.gamma.comp3(q, l, j));
              acc -= c.gamma.at(p, c.gamma.comp3(i, l, q)) * c.gamma.at(p, c.gamma.comp3(q, k, j));
            }
            R.at(p, R.comp4(i, j, k, l)) = acc;
          }
  }
  return R;
}

Field covariant_derivative(const Field& T, const Connection& c) {
  const Lattice& lat = T.lattice();
  const int d = lat.dim();
  const int r = T.rank();
  const int nc = T.comps();
  Field out = gradient(T);
  if (r == 0) return out;

  std::vector<int> strides(r);
  int s = 1;
  for (int slot = r - 1; slot >= 0; --slot) {
    strides[slot] = s;
    s *= d;
  }

  std::vector<double> G(static_cast<std::size_t>(d) * d * d);
  for (std::int64_t p = 0; p < T.points(); ++p) {
    for (int i = 0; i < d * d * d; ++i) G[i] = c.gamma.at(p, i);
    auto gam = [&](int i, int j, int k) { return G[(i * d + j) * d + k]; };
    for (int a = 0; a < d; ++a) {
      for (int I = 0; I < nc; ++I) {
        double corr = 0.0;
        for (int slot = 0; slot < r; ++slot) {
          const int st = strides[slot];
          const int idx = (I / st) % d;
          const int base = I - idx * st;
          if (T.valence()[slot] == Slot::Upper) {
            for (int q = 0; q < d; ++q) corr += gam(idx, a, q) * T.at(p, base + q * st);
          } else {
            for (int q = 0; q < d; ++q) corr -= gam(q, a, idx) * T.at(p, base + q * st);
          }
        }
        out.at(p, a * nc + I) += corr;
      }
    }
  }
  return out;
}

Field form_part_11_per_value(const Field& T, const Field& J) {
  const Lattice& lat = T.lattice();
  const int d = lat.dim();
  if (T.rank() != 3) throw Error("form_part_11_per_value: expected a (1,2) field");
  Field out(lat, T.valence());
  for (std::int64_t p = 0; p < T.points(); ++p) {
    MatD jm = get_mat(J, p);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double pulled = 0.0;
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
              pulled += T.at(p, T.comp3(i, a, b)) * jm(a, j) * jm(b, k);
          out.at(p, out.comp3(i, j, k)) = 0.5 * (T.at(p, T.comp3(i, j, k)) + pulled);
        }
  }
  return out;
}

namespace {

// Orthonormal (Frobenius) basis of {E : EJ = JE, gE antisymmetric} at one
// point; dimension n^2 for compatible (g, J).
int commuting_skew_basis(const MatD& ginv, const MatD& jm, std::vector<MatD>& basis) {
  const int d = static_cast<int>(jm.rows());
  basis.clear();
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      MatD E = MatD::Zero(d, d);
      E.col(b) += ginv.col(a);
      E.col(a) -= ginv.col(b);
      // commuting projector
      MatD C = 0.5 * (E - jm * E * jm);
      for (const MatD& W : basis) C -= (W.array() * C.array()).sum() * W;
      const double n2 = C.squaredNorm();
      if (n2 > 1e-18) basis.push_back(C / std::sqrt(n2));
    }
  }
  return static_cast<int>(basis.size());
}

}  // namespace

Connection canonical_connection(const AHStructure& s, double tol) {
  const Lattice& lat = s.lattice();
  const int d = lat.dim();
  Connection lc = levi_civita(s.g);
  Field DJ = covariant_derivative(s.J, lc);  // comp3(a, p, k) = (nabla_a J)^p_k

  Connection can;
  can.kind = ConnectionKind::Canonical;
  can.gamma = lc.gamma;

  // base hermitian correction A_j = -J (nabla_j J) / 2
  Field A(lat, {Slot::Upper, Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < A.points(); ++p) {
    MatD jm = get_mat(s.J, p);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double acc = 0.0;
          for (int q = 0; q < d; ++q) acc += jm(i, q) * DJ.at(p, DJ.comp3(j, q, k));
          A.at(p, A.comp3(i, j, k)) = -0.5 * acc;
        }
  }

  // pointwise commuting g-skew term killing the J-invariant torsion part
  std::vector<MatD> basis;
  for (std::int64_t p = 0; p < A.points(); ++p) {
    MatD gm = get_mat(s.g, p);
    MatD jm = get_mat(s.J, p);
    MatD ginv = gm.inverse();
    const int m = commuting_skew_basis(ginv, jm, basis);
    const int ncols = d * m;

    Eigen::MatrixXd M(d * d * d, ncols);
    Eigen::VectorXd rhs(d * d * d);

    auto p11 = [&](auto&& T, int i, int j, int k) {
      double pulled = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) pulled += T(i, a, b) * jm(a, j) * jm(b, k);
      return 0.5 * (T(i, j, k) + pulled);
    };

    auto t0 = [&](int i, int j, int k) {
      return A.at(p, A.comp3(i, j, k)) - A.at(p, A.comp3(i, k, j));
    };
    int row = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k, ++row) rhs(row) = -p11(t0, i, j, k);

    for (int dir = 0; dir < d; ++dir) {
      for (int al = 0; al < m; ++al) {
        const MatD& W = basis[al];
        auto db = [&](int i, int j, int k) {
          double v = 0.0;
          if (j == dir) v += W(i, k);
          if (k == dir) v -= W(i, j);
          return v;
        };
        row = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k, ++row) M(row, dir * m + al) = p11(db, i, j, k);
      }
    }

    Eigen::VectorXd x = M.colPivHouseholderQr().solve(rhs);
    for (int dir = 0; dir < d; ++dir)
      for (int al = 0; al < m; ++al) {
        const MatD& W = basis[al];
        for (int i = 0; i < d; ++i)
          for (int k = 0; k < d; ++k)
            A.at(p, A.comp3(i, dir, k)) += x(dir * m + al) * W(i, k);
      }
  }

  can.gamma += A;

  CanonicalResiduals res = canonical_residuals(s, can);
  if (res.max() > tol)
    throw CanonicalConnectionError("canonical_connection: defining residuals exceed tolerance",
                                   res);
  return can;
}

CanonicalResiduals canonical_residuals(const AHStructure& s, const Connection& c) {
  CanonicalResiduals r;
  r.nabla_g = covariant_derivative(s.g, c).max_abs();
  r.nabla_omega = covariant_derivative(s.omega, c).max_abs();
  r.nabla_J = covariant_derivative(s.J, c).max_abs();
  r.torsion_11 = form_part_11_per_value(torsion(c), s.J).max_abs();
  return r;
}

Field chern_ricci_form(const AHStructure& s, const Connection& canonical) {
  const Lattice& lat = s.lattice();
  const int d = lat.dim();
  Field R = curvature(canonical);
  Field out(lat, {Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < out.points(); ++p) {
    MatD gm = get_mat(s.g, p);
    MatD winv = get_mat(s.omega, p).inverse();
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        // Omega_{klij} = g_{jm} R^m_{ikl}
        double acc = 0.0;
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) {
            double low = 0.0;
            for (int m = 0; m < d; ++m) low += gm(j, m) * R.at(p, R.comp4(m, i, k, l));
            acc += winv(k, l) * low;
          }
        acc *= 0.5;
        out.at(p, out.comp2(i, j)) = acc;
        out.at(p, out.comp2(j, i)) = -acc;
      }
  }
  return out;
}

Field nijenhuis(const Field& J) {
  const Lattice& lat = J.lattice();
  const int d = lat.dim();
  Field dJ = gradient(J);  // comp3(a, i, j) = d_a J^i_j
  Field N(lat, {Slot::Upper, Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < N.points(); ++p) {
    MatD jm = get_mat(J, p);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
          double acc = 0.0;
          for (int q = 0; q < d; ++q) {
            acc += jm(q, j) * dJ.at(p, dJ.comp3(q, i, k));
            acc -= jm(q, k) * dJ.at(p, dJ.comp3(q, i, j));
            acc -= jm(i, q) * dJ.at(p, dJ.comp3(j, q, k));
            acc += jm(i, q) * dJ.at(p, dJ.comp3(k, q, j));
          }
          N.at(p, N.comp3(i, j, k)) = acc;
          N.at(p, N.comp3(i, k, j)) = -acc;
        }
  }
  return N;
}

Field nijenhuis_divergence(const AHStructure& s, const Connection& canonical) {
  const Lattice& lat = s.lattice();
  const int d = lat.dim();
  Field N = nijenhuis(s.J);
  Field dN = covariant_derivative(N, canonical);  // comp4(k, i, l, j)
  Field out(lat, {Slot::Upper, Slot::Lower});
  for (std::int64_t p = 0; p < out.points(); ++p) {
    MatD winv = get_mat(s.omega, p).inverse();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) acc += winv(k, l) * dN.at(p, dN.comp4(k, i, l, j));
        out.at(p, out.comp2(i, j)) = 0.5 * acc;
      }
  }
  return out;
}

Field compatibility_correction(const AHStructure& s, const Field& j_dot) {
  Field t1 = form_pullback(s.omega, j_dot, s.J);
  Field t2 = form_pullback(s.omega, s.J, j_dot);
  Field H = t1 + t2;
  H *= 0.5;
  return H;
}

Field ricci_tensor_lc(const Field& g) {
  const Lattice& lat = g.lattice();
  const int d = lat.dim();
  Field R = curvature(levi_civita(g));
  Field ric(lat, {Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < ric.points(); ++p)
    for (int x = 0; x < d; ++x)
      for (int y = 0; y < d; ++y) {
        double acc = 0.0;
        for (int c = 0; c < d; ++c) acc += R.at(p, R.comp4(c, y, c, x));
        ric.at(p, ric.comp2(x, y)) = acc;
      }
  return ric;
}

Field scalar_curvature_lc(const Field& g) {
  const Lattice& lat = g.lattice();
  const int d = lat.dim();
  Field ric = ricci_tensor_lc(g);
  Field s = Field::scalar(lat);
  for (std::int64_t p = 0; p < s.points(); ++p) {
    MatD ginv = get_mat(g, p).inverse();
    double acc = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc += ginv(i, j) * ric.at(p, ric.comp2(i, j));
    s.at(p) = acc;
  }
  return s;
}

Field exterior_derivative_2form(const Field& h) {
  const Lattice& lat = h.lattice();
  const int d = lat.dim();
  Field dh = gradient(h);  // comp3(a, i, j)
  Field out(lat, {Slot::Lower, Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < out.points(); ++p)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          out.at(p, out.comp3(a, b, c)) = dh.at(p, dh.comp3(a, b, c)) -
                                          dh.at(p, dh.comp3(b, a, c)) +
                                          dh.at(p, dh.comp3(c, a, b));
  return out;
}

double domega_residual(const AHStructure& s) {
  return exterior_derivative_2form(s.omega).max_abs();
}

CurvatureBundle curvature_bundle(const AHStructure& s) {
  Connection can = canonical_connection(s);
  CurvatureBundle b;
  b.riemann = curvature(can);
  b.torsion = torsion(can);
  b.s_form = chern_ricci_form(s, can);
  b.scalar = scalar_curvature_lc(s.g);
  return b;
}

}  // namespace ahcf
