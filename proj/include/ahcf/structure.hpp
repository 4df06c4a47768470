#pragma once

#include "ahcf/lattice.hpp"

namespace ahcf {

// Compatible almost hermitian structure on the lattice: a metric g, an almost
// complex structure J (J|J = -Id) and the derived 2-form
// omega(X, Y) = g(J X, Y). omega is always recomputed from (g, J), never
// stored independently, so compatibility is structural.
struct AHStructure {
  Field g;      // symmetric (0,2)
  Field J;      // (1,1) endomorphism
  Field omega;  // antisymmetric (0,2), derived
  double volume = 0.0;

  const Lattice& lattice() const { return g.lattice(); }
};

struct StructureDiagnostics {
  double j_squared_residual = 0.0;   // sup-op-norm of J|J + Id
  double compatibility_residual = 0.0;  // sup of g(J.,J.) - g
  double omega_residual = 0.0;       // sup of omega - g(J.,.)
  double min_metric_eigenvalue = 0.0;
  bool ok(double tol) const {
    return j_squared_residual < tol && compatibility_residual < tol &&
           omega_residual < tol && min_metric_eigenvalue > 0.0;
  }
};

// The J-type split of an endomorphism. The two off-diagonal complex blocks of
// a real endomorphism are conjugate and carry the same real shadow, so each
// stores half of the anti-commuting projector split; likewise for the two
// diagonal (commuting) blocks. The four fields sum back to the input.
struct EndoTypeBlocks {
  Field k_10_01;  // anti-commuting half
  Field k_01_10;  // anti-commuting half
  Field k_10_10;  // commuting half
  Field k_01_01;  // commuting half

  Field anti() const { return k_10_01 + k_01_10; }
  Field comm() const { return k_10_10 + k_01_01; }
};

// J-invariant / J-anti-invariant split of an antisymmetric (0,2) field.
struct FormTypeBlocks {
  Field part_11;     // b(JX, JY) =  b(X, Y)
  Field part_20_02;  // b(JX, JY) = -b(X, Y)
};

// The standard flat structure: g = Euclidean metric, J the constant complex
// structure acting as a rotation in each (x_{2i}, x_{2i+1}) plane.
AHStructure flat_structure(const Lattice& lat);

Field standard_complex_structure(const Lattice& lat);
Field flat_metric(const Lattice& lat);

// g := (g0(X,Y) + g0(JX,JY)) / 2 (exactly compatible), omega derived, total
// volume cached. Rejects J with a large almost-complex residual and averaged
// metrics that lose positive definiteness.
AHStructure build_structure(const Field& g0, const Field& J, double j_tol = 1e-8);

// Rebuild omega/volume for a (g, J) pair that is already compatible to
// tolerance; used by the flow between projections. Performs no checks.
AHStructure assemble_structure_unchecked(const Field& g, const Field& J);

StructureDiagnostics check_structure(const AHStructure& s);

// Pointwise endomorphism composition (a o b), and action helpers.
Field endo_compose(const Field& a, const Field& b);
Field endo_identity(const Lattice& lat, double scale = 1.0);
Field endo_transpose(const Field& a);

// b'(X,Y) = b(AX, BY) for endomorphism fields A, B acting on a (0,2) field b.
Field form_pullback(const Field& b, const Field& A, const Field& B);

// omega(X,Y) = g(JX, Y) as matrices: antisym(J^T g).
Field omega_from(const Field& g, const Field& J);
// g = omega(X, JY) as matrices: sym(omega J).
Field metric_from(const Field& omega, const Field& J);

// Anti-commuting / commuting projector halves: (K + JKJ)/2 and (K - JKJ)/2.
Field anti_commuting_part(const Field& K, const Field& J);
Field commuting_part(const Field& K, const Field& J);

EndoTypeBlocks decompose_endo(const Field& K, const AHStructure& ref);
FormTypeBlocks decompose_form(const Field& h, const AHStructure& ref);

double total_volume(const Field& g);

// Pointwise matrix exponential (scaling and squaring, series to rounding).
Field pointwise_expm(const Field& A);

// Pointwise similarity M J M^-1 (exact inverse, so J' J' = -Id to rounding).
Field conjugate_endo(const Field& M, const Field& J);

}  // namespace ahcf
