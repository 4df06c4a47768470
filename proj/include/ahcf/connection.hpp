#pragma once

#include "ahcf/structure.hpp"

namespace ahcf {

// Index conventions used throughout:
//   Gamma^i_{jk}: nabla_{e_j} e_k = Gamma^i_{jk} e_i   (direction j first)
//   torsion      T^i_{jk} = Gamma^i_{jk} - Gamma^i_{kj}
//   curvature    R^i_{jkl}: value i, argument j, plane slots (k, l), i.e.
//                R(e_k, e_l) e_j = R^i_{jkl} e_i
// Ricci(X, Y) = tr(Z -> R(Z, X) Y); scalar curvature is its g-trace.

enum class ConnectionKind { LeviCivita, Canonical };

struct Connection {
  Field gamma;  // (1,2): comp3(i, j, k) = Gamma^i_{jk}
  ConnectionKind kind = ConnectionKind::LeviCivita;
  const Lattice& lattice() const { return gamma.lattice(); }
};

struct CanonicalResiduals {
  double nabla_g = 0.0;
  double nabla_omega = 0.0;
  double nabla_J = 0.0;
  double torsion_11 = 0.0;
  double max() const;
};

struct CanonicalConnectionError : Error {
  CanonicalConnectionError(const std::string& msg, CanonicalResiduals r)
      : Error(msg), residuals(r) {}
  CanonicalResiduals residuals;
};

Connection levi_civita(const Field& g);

// The unique g- and J-parallel connection whose torsion has no J-invariant
// part. Built as Levi-Civita plus the -J(DJ)/2 correction plus a pointwise
// commuting g-skew term solving the torsion condition; the three defining
// residuals are then measured spectrally and must stay below tol.
Connection canonical_connection(const AHStructure& s, double tol = 1e-8);

CanonicalResiduals canonical_residuals(const AHStructure& s, const Connection& c);

Field torsion(const Connection& c);
Field curvature(const Connection& c);

// Covariant derivative for arbitrary valence; prepends one covariant slot.
Field covariant_derivative(const Field& T, const Connection& c);

// (1,1)-projection of a vector-valued 2-form in its lower pair.
Field form_part_11_per_value(const Field& T, const Field& J);

// S_ij = (1/2) (omega^-1)^{kl} Omega_{klij} with Omega the curvature of the
// canonical connection and omega^-1 the pointwise matrix inverse; the 1/2
// converts the complex-index pair contraction to real index sums. Equals the
// Ricci form of g on Kahler structures.
Field chern_ricci_form(const AHStructure& s, const Connection& canonical);

// Coordinate Nijenhuis tensor
// N^i_{jk} = J^p_j d_p J^i_k - J^p_k d_p J^i_j - J^i_p d_j J^p_k + J^i_p d_k J^p_j.
Field nijenhuis(const Field& J);

// K^i_j = (1/2) (omega^-1)^{kl} (nabla_k N)^i_{lj}, canonical connection.
Field nijenhuis_divergence(const AHStructure& s, const Connection& canonical);

// H(X,Y) = [omega(jdot X, JY) + omega(JX, jdot Y)] / 2, the correction that
// keeps omega compatible with the moving J.
Field compatibility_correction(const AHStructure& s, const Field& j_dot);

Field ricci_tensor_lc(const Field& g);
Field scalar_curvature_lc(const Field& g);

// Exterior derivative of an antisymmetric (0,2) field.
Field exterior_derivative_2form(const Field& h);
double domega_residual(const AHStructure& s);

struct CurvatureBundle {
  Field riemann;  // curvature of the canonical connection
  Field torsion;  // torsion of the canonical connection
  Field s_form;   // chern_ricci_form
  Field scalar;   // Riemannian scalar curvature of g
};

CurvatureBundle curvature_bundle(const AHStructure& s);

}  // namespace ahcf
