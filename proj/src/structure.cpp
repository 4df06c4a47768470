#include "ahcf/structure.hpp"

#include <Eigen/Dense>

#include <cmath>

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

void set_mat(Field& f, std::int64_t p, const MatD& m) {
  const int d = f.lattice().dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) f.at(p, f.comp2(i, j)) = m(i, j);
}
}  // namespace

Field standard_complex_structure(const Lattice& lat) {
  Field J(lat, {Slot::Upper, Slot::Lower});
  for (std::int64_t p = 0; p < J.points(); ++p) {
    for (int b = 0; b < lat.n; ++b) {
      // J e_{2b} = e_{2b+1}, J e_{2b+1} = -e_{2b}
      J.at(p, J.comp2(2 * b + 1, 2 * b)) = 1.0;
      J.at(p, J.comp2(2 * b, 2 * b + 1)) = -1.0;
    }
  }
  return J;
}

Field flat_metric(const Lattice& lat) {
  Field g(lat, {Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < g.points(); ++p)
    for (int i = 0; i < lat.dim(); ++i) g.at(p, g.comp2(i, i)) = 1.0;
  return g;
}

Field endo_identity(const Lattice& lat, double scale) {
  Field e(lat, {Slot::Upper, Slot::Lower});
  for (std::int64_t p = 0; p < e.points(); ++p)
    for (int i = 0; i < lat.dim(); ++i) e.at(p, e.comp2(i, i)) = scale;
  return e;
}

Field endo_compose(const Field& a, const Field& b) {
  const Lattice& lat = a.lattice();
  const int d = lat.dim();
  Field out(lat, {Slot::Upper, Slot::Lower});
  for (std::int64_t p = 0; p < out.points(); ++p) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += a.at(p, a.comp2(i, k)) * b.at(p, b.comp2(k, j));
        out.at(p, out.comp2(i, j)) = acc;
      }
  }
  return out;
}

Field endo_transpose(const Field& a) {
  const Lattice& lat = a.lattice();
  const int d = lat.dim();
  Field out(lat, a.valence());
  for (std::int64_t p = 0; p < out.points(); ++p)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out.at(p, out.comp2(i, j)) = a.at(p, a.comp2(j, i));
  return out;
}

Field form_pullback(const Field& b, const Field& A, const Field& B) {
  const Lattice& lat = b.lattice();
  const int d = lat.dim();
  Field out(lat, {Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < out.points(); ++p) {
    MatD bm = get_mat(b, p), am = get_mat(A, p), bm2 = get_mat(B, p);
    set_mat(out, p, am.transpose() * bm * bm2);
  }
  return out;
}

Field omega_from(const Field& g, const Field& J) {
  const Lattice& lat = g.lattice();
  Field out(lat, {Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < out.points(); ++p) {
    MatD w = get_mat(J, p).transpose() * get_mat(g, p);
    set_mat(out, p, 0.5 * (w - w.transpose()));
  }
  return out;
}

Field metric_from(const Field& omega, const Field& J) {
  const Lattice& lat = omega.lattice();
  Field out(lat, {Slot::Lower, Slot::Lower});
  for (std::int64_t p = 0; p < out.points(); ++p) {
    MatD m = get_mat(omega, p) * get_mat(J, p);
    set_mat(out, p, 0.5 * (m + m.transpose()));
  }
  return out;
}

double total_volume(const Field& g) {
  const Lattice& lat = g.lattice();
  Field dens = Field::scalar(lat);
  for (std::int64_t p = 0; p < dens.points(); ++p) {
    MatD m = get_mat(g, p);
    const double det = m.determinant();
    if (!(det > 0.0)) throw Error("total_volume: metric determinant not positive");
    dens.at(p) = std::sqrt(det);
  }
  return integrate(dens);
}

AHStructure assemble_structure_unchecked(const Field& g, const Field& J) {
  AHStructure s;
  s.g = g;
  s.J = J;
  s.omega = omega_from(g, J);
  s.volume = total_volume(g);
  return s;
}

AHStructure build_structure(const Field& g0, const Field& J, double j_tol) {
  const Lattice& lat = g0.lattice();
  const int d = lat.dim();
  g0.require_finite("build_structure");
  J.require_finite("build_structure");

  Field g(lat, {Slot::Lower, Slot::Lower});
  double jres = 0.0;
  for (std::int64_t p = 0; p < g.points(); ++p) {
    MatD jm = get_mat(J, p);
    MatD probe = jm * jm + MatD::Identity(d, d);
    jres = std::max(jres, probe.cwiseAbs().maxCoeff());
    MatD g0m = get_mat(g0, p);
    g0m = 0.5 * (g0m + g0m.transpose());
    MatD gm = 0.5 * (g0m + jm.transpose() * g0m * jm);
    Eigen::LLT<MatD> llt(gm);
    if (llt.info() != Eigen::Success)
      throw Error("build_structure: averaged metric lost positive definiteness");
    set_mat(g, p, gm);
  }
  if (jres > j_tol) throw Error("build_structure: J fails the almost-complex residual");
  return assemble_structure_unchecked(g, J);
}

AHStructure flat_structure(const Lattice& lat) {
  return assemble_structure_unchecked(flat_metric(lat), standard_complex_structure(lat));
}

StructureDiagnostics check_structure(const AHStructure& s) {
  const Lattice& lat = s.lattice();
  const int d = lat.dim();
  StructureDiagnostics out;
  out.min_metric_eigenvalue = 1e300;
  for (std::int64_t p = 0; p < s.g.points(); ++p) {
    MatD gm = get_mat(s.g, p), jm = get_mat(s.J, p), wm = get_mat(s.omega, p);
    MatD jsq = jm * jm + MatD::Identity(d, d);
    Eigen::JacobiSVD<MatD> svd(jsq);
    out.j_squared_residual = std::max(out.j_squared_residual, svd.singularValues()(0));
    out.compatibility_residual = std::max(
        out.compatibility_residual, (jm.transpose() * gm * jm - gm).cwiseAbs().maxCoeff());
    out.omega_residual =
        std::max(out.omega_residual, (wm - jm.transpose() * gm).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<MatD> es(gm);
    out.min_metric_eigenvalue = std::min(out.min_metric_eigenvalue, es.eigenvalues()(0));
  }
  return out;
}

Field anti_commuting_part(const Field& K, const Field& J) {
  Field jkj = endo_compose(J, endo_compose(K, J));
  Field out = K;
  out += jkj;
  out *= 0.5;
  return out;
}

Field commuting_part(const Field& K, const Field& J) {
  Field jkj = endo_compose(J, endo_compose(K, J));
  Field out = K;
  out -= jkj;
  out *= 0.5;
  return out;
}

EndoTypeBlocks decompose_endo(const Field& K, const AHStructure& ref) {
  EndoTypeBlocks b;
  Field anti = anti_commuting_part(K, ref.J);
  Field comm = commuting_part(K, ref.J);
  anti *= 0.5;
  comm *= 0.5;
  b.k_10_01 = anti;
  b.k_01_10 = anti;
  b.k_10_10 = comm;
  b.k_01_01 = comm;
  return b;
}

Field pointwise_expm(const Field& A) {
  const Lattice& lat = A.lattice();
  const int d = lat.dim();
  Field out(lat, A.valence());
  for (std::int64_t p = 0; p < A.points(); ++p) {
    MatD a = get_mat(A, p);
    int squarings = 0;
    double nrm = a.cwiseAbs().maxCoeff() * d;
    while (nrm > 0.5) {
      a *= 0.5;
      nrm *= 0.5;
      ++squarings;
    }
    MatD e = MatD::Identity(d, d);
    MatD term = MatD::Identity(d, d);
    for (int k = 1; k < 40; ++k) {
      term = term * a / static_cast<double>(k);
      e += term;
      if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int s = 0; s < squarings; ++s) e = e * e;
    set_mat(out, p, e);
  }
  return out;
}

Field conjugate_endo(const Field& M, const Field& J) {
  const Lattice& lat = M.lattice();
  Field out(lat, {Slot::Upper, Slot::Lower});
  for (std::int64_t p = 0; p < M.points(); ++p) {
    MatD m = get_mat(M, p);
    set_mat(out, p, m * get_mat(J, p) * m.inverse());
  }
  return out;
}

FormTypeBlocks decompose_form(const Field& h, const AHStructure& ref) {
  FormTypeBlocks b;
  Field pulled = form_pullback(h, ref.J, ref.J);  // h(JX, JY)
  b.part_11 = h;
  b.part_11 += pulled;
  b.part_11 *= 0.5;
  b.part_20_02 = h;
  b.part_20_02 -= pulled;
  b.part_20_02 *= 0.5;
  return b;
}

}  // namespace ahcf
