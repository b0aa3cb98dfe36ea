#include "gvs/bessel.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "gvs/error.hpp"

namespace gvs {

namespace {

// Debye polynomials u_k(p) = sum_j c[j] p^(k + 2j), k = 0..10.
struct DebyePoly {
    int lowest;
    std::vector<double> c;
};

const std::array<DebyePoly, 11>& debye() {
    static const std::array<DebyePoly, 11> table = {{
        {0, {1}},
        {1, {0.125, -0.20833333333333334}},
        {2, {0.0703125, -0.40104166666666669, 0.3342013888888889}},
        {3, {0.0732421875, -0.89121093750000002, 1.8464626736111112, -1.0258125964506173}},
        {4, {0.112152099609375, -2.3640869140624998, 8.78912353515625, -11.207002616222994, 4.6695844234262474}},
        {5,
         {0.22710800170898438, -7.3687943594796321, 42.534998745388457, -91.818241543240021, 84.636217674600729,
          -28.212072558200244}},
        {6,
         {0.57250142097473145, -26.491430486951554, 218.19051174421159, -699.57962737613252, 1059.9904525279999,
          -765.25246814118168, 212.57013003921713}},
        {7,
         {1.7277275025844574, -108.09091978839466, 1200.9029132163525, -5305.646978613403, 11655.393336864534,
          -13586.550006434138, 8061.7221817373093, -1919.4576623184071}},
        {8,
         {6.074042001273483, -493.915304773088, 7109.5143024893641, -41192.65496889755, 122200.46498301746,
          -203400.17728041555, 192547.00123253153, -96980.598388637518, 20204.291330966149}},
        {9,
         {24.380529699556064, -2499.8304818112097, 45218.768981362729, -331645.17248456361, 1268365.2733216248,
          -2813563.2265865342, 3763271.2976564039, -2998015.9185381066, 1311763.6146629772, -242919.18790055133}},
        {10,
         {110.01714026924674, -13886.08975371704, 308186.40461266239, -2785618.1280864547, 13288767.166421818,
          -37567176.660763353, 66344512.274729028, -74105148.211532652, 50952602.492664643, -19706819.118432228,
          3284469.8530720379}},
    }};
    return table;
}

double log_scaled_series(double nu, double x) {
    // I_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_k q^k / (k! (nu+1)_k), q = x^2/4.
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    double log_rescale = 0.0;
    for (int k = 1; k < 100000; ++k) {
        term *= q / (static_cast<double>(k) * (nu + static_cast<double>(k)));
        sum += term;
        if (sum > 1e250) {
            sum *= 1e-250;
            term *= 1e-250;
            log_rescale += 250.0 * std::numbers::ln10;
        }
        if (term < sum * 1e-17) break;
    }
    return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + std::log(sum) + log_rescale - x;
}

double log_scaled_uniform(double nu, double x) {
    // Rewritten in r = sqrt(nu^2 + x^2) so that nu = 0 needs no special case:
    //   u_k(p) / nu^k = sum_j c[j] nu^(2j) r^-(k+2j),  p = nu / r.
    const double r = std::hypot(nu, x);
    const double inv_r = 1.0 / r;
    double series = 0.0;
    double inv_r_k = 1.0;
    for (const auto& poly : debye()) {
        double acc = 0.0;
        double factor = inv_r_k;
        for (double c : poly.c) {
            acc += c * factor;
            factor *= nu * nu * inv_r * inv_r;
        }
        series += acc;
        inv_r_k *= inv_r;
    }
    // nu * eta - x, with nu * eta = r + nu log(x / (nu + r)).
    const double r_minus_x = nu * nu / (r + x);
    const double log_term = nu > 0.0 ? nu * std::log(x / (nu + r)) : 0.0;
    return r_minus_x + log_term - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(r) + std::log(series);
}

}  // namespace

double log_bessel_i_scaled(double nu, double x) {
    if (!(nu >= 0.0) || !(x > 0.0) || !std::isfinite(x)) {
        throw ParameterError("log_bessel_i_scaled needs nu >= 0 and finite x > 0");
    }
    if (x < std::max(30.0, nu)) return log_scaled_series(nu, x);
    return log_scaled_uniform(nu, x);
}

double log_bessel_i(double nu, double x) { return log_bessel_i_scaled(nu, x) + x; }

}  // namespace gvs
