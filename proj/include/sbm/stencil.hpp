#pragma once

#include "sbm/closure.hpp"
#include "sbm/field.hpp"

namespace sbm {

// Second-order finite-difference operators on node-centred grids. Variants
// taking a BoxClosure complete the stencil at box faces with ghost values;
// variants without one use one-sided three-point differences there.

// df/dx_axis.
ScalarField partial(const ScalarField& f, int axis);
ScalarField partial(const ScalarField& f, int axis, const BoxClosure& closure);

VectorField gradient(const ScalarField& f);
VectorField gradient(const ScalarField& f, const BoxClosure& closure);

// d/dx_a (coeff d f/dx_a) in flux form with face coefficients
// (coeff[i] + coeff[i+1]) / 2. The coefficient may take either sign.
ScalarField axis_flux_div(const ScalarField& coeff, const ScalarField& f,
                          int axis, const BoxClosure& closure = {});

// div(coeff grad f) summed over all axes; coeff must be non-negative.
ScalarField conservative_div(const ScalarField& coeff, const ScalarField& f,
                             const BoxClosure& closure = {});

// d/dx_outer (coeff d f/dx_inner) on the wide 2h stencil:
// (g[+outer] - g[-outer]) / (2 h_outer) with g = coeff * central d f/dx_inner.
ScalarField cross_derivative(const ScalarField& coeff, const ScalarField& f,
                             int outer, int inner);
ScalarField cross_derivative(const ScalarField& coeff, const ScalarField& f,
                             int outer, int inner, const BoxClosure& closure);

// (1/r) d/dr (r coeff df/dr) on an axisymmetric grid, in annulus flux form
// 2/(r_{i+1/2}^2 - r_{i-1/2}^2) [r_{i+1/2} c_{i+1/2} (f_{i+1} - f_i) - ...] / dr.
// No flux crosses the symmetry axis. The coefficient may take either sign.
ScalarField radial_flux_div(const ScalarField& coeff, const ScalarField& f,
                            const BoxClosure& closure = {});

// Axisymmetric div(coeff grad f): radial annulus term plus axial flux term.
ScalarField conservative_div_rz(const ScalarField& coeff, const ScalarField& f,
                                const BoxClosure& closure = {});

// Sum of f times dual-cell volume.
double integrate(const ScalarField& f);

}  // namespace sbm
