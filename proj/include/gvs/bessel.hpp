#pragma once

namespace gvs {

/// log(exp(-x) I_nu(x)) for nu >= 0, x > 0, where I_nu is the modified
/// Bessel function of the first kind.
///
/// Power series below x = max(30, nu), uniform (Debye) asymptotic expansion
/// above it. Finite for every finite x, including where I_nu itself
/// overflows a double.
double log_bessel_i_scaled(double nu, double x);

/// log I_nu(x) through the scaled form: log_bessel_i_scaled(nu, x) + x.
double log_bessel_i(double nu, double x);

}  // namespace gvs
