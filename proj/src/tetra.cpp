#include "metacal/tetra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"

namespace metacal {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kTwoPi = 6.2831853071795864769;

// Gauss-Legendre half-node tables (6, 12, 20 points).
constexpr double kGlX6[3] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969};
constexpr double kGlW6[3] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910};

constexpr double kGlX12[6] = {-0.9815606342467192, -0.9041172563704749, -0.7699026741943047,
                              -0.5873179542866175, -0.3678314989981802, -0.1252334085114689};
constexpr double kGlW12[6] = {0.04717533638651183, 0.1069393259953184, 0.1600783285433462,
                              0.2031674267230659,  0.2334925365383548, 0.2491470458134028};

constexpr double kGlX20[10] = {-0.9931285991850949,  -0.9639719272779138, -0.9122344282513259,
                               -0.8391169718222188,  -0.7463319064601508, -0.6360536807265150,
                               -0.5108670019508271,  -0.3737060887154195, -0.2277858511416451,
                               -0.07652652113349734};
constexpr double kGlW20[10] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410907,
                               0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                               0.1316886384491766,  0.1420961093183820,  0.1491729864726037,
                               0.1527533871307258};

}  // namespace

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double probit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw NumericalError("probit: p must lie strictly inside (0, 1), got " +
                             std::to_string(p));
    }
    // Wichura's AS241 rational approximations.
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) *
                        r +
                    4.5921953931549871457e+4) *
                       r +
                   1.3731693765509461125e+4) *
                      r +
                  1.9715909503065514427e+3) *
                     r +
                 1.3314166789178437745e+2) *
                    r +
                3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) *
                        r +
                    2.1213794301586595867e+4) *
                       r +
                   5.3941960214247511077e+3) *
                      r +
                  6.8718700749205790830e+2) *
                     r +
                 4.2313330701600911252e+1) *
                    r +
                1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) *
                         r +
                     1.27045825245236838258e+0) *
                        r +
                    3.64784832476320460504e+0) *
                       r +
                   5.76949722146069140550e+0) *
                      r +
                  4.63033784615654529590e+0) *
                     r +
                 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) *
                         r +
                     1.48103976427480074590e-1) *
                        r +
                    6.89767334985100004550e-1) *
                       r +
                   1.67638483018380384940e+0) *
                      r +
                  2.05319162663775882187e+0) *
                     r +
                 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) *
                         r +
                     2.65321895265761230930e-2) *
                        r +
                    2.96560571828504891230e-1) *
                       r +
                   1.78482653991729133580e+0) *
                      r +
                  5.46378491116411436990e+0) *
                     r +
                 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) *
                         r +
                     7.86869131145613259100e-4) *
                        r +
                    1.48753612908506148525e-2) *
                       r +
                   1.36929880922735805310e-1) *
                      r +
                  5.99832206555887937690e-1) *
                     r +
                 1.0);
    }
    return (q < 0.0) ? -value : value;
}

double bvn_upper(double h, double k, double rho) {
    if (rho < -1.0 - 1e-12 || rho > 1.0 + 1e-12) {
        throw DataError("bvn_upper: rho outside [-1, 1]");
    }
    rho = std::clamp(rho, -1.0, 1.0);
    if (std::isinf(h) || std::isinf(k)) {
        if (h > 0.0 || k > 0.0) return 0.0;
        if (h < 0.0 && k < 0.0) return 1.0;
        return std::isinf(h) ? norm_cdf(-k) : norm_cdf(-h);
    }

    const double* gx;
    const double* gw;
    int ng;
    const double abs_rho = std::fabs(rho);
    if (abs_rho < 0.3) {
        gx = kGlX6, gw = kGlW6, ng = 3;
    } else if (abs_rho < 0.75) {
        gx = kGlX12, gw = kGlW12, ng = 6;
    } else {
        gx = kGlX20, gw = kGlW20, ng = 10;
    }

    double hk = h * k;
    double bvn = 0.0;
    if (abs_rho < 0.925) {
        if (abs_rho > 0.0) {
            const double hs = (h * h + k * k) / 2.0;
            const double asr = std::asin(rho);
            for (int i = 0; i < ng; ++i) {
                for (int is = -1; is <= 1; is += 2) {
                    const double sn = std::sin(asr * (is * gx[i] + 1.0) / 2.0);
                    bvn += gw[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
                }
            }
            bvn = bvn * asr / (2.0 * kTwoPi);
        }
        bvn += norm_cdf(-h) * norm_cdf(-k);
        return std::clamp(bvn, 0.0, 1.0);
    }

    // Drezner-Wesolowsky tail expansion for |rho| near 1.
    double hh = h;
    double kk = k;
    if (rho < 0.0) {
        kk = -kk;
        hk = -hk;
    }
    if (abs_rho < 1.0) {
        const double as = (1.0 - rho) * (1.0 + rho);
        double a = std::sqrt(as);
        const double bs = (hh - kk) * (hh - kk);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        double asr = -(bs / as + hk) / 2.0;
        if (asr > -100.0) {
            bvn = a * std::exp(asr) *
                  (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        }
        if (-hk < 100.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (int i = 0; i < ng; ++i) {
            for (int is = -1; is <= 1; is += 2) {
                const double t = a * (is * gx[i] + 1.0);
                const double xs = t * t;
                const double rs = std::sqrt(1.0 - xs);
                asr = -(bs / xs + hk) / 2.0;
                if (asr > -100.0) {
                    bvn += a * gw[i] * std::exp(asr) *
                           (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                            (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / kTwoPi;
    }
    if (rho > 0.0) {
        bvn += norm_cdf(-std::max(hh, kk));
    } else {
        bvn = -bvn;
        if (kk > hh) bvn += norm_cdf(kk) - norm_cdf(hh);
    }
    return std::clamp(bvn, 0.0, 1.0);
}

TetraEstimate estimate_tetrachoric(const ContingencyTable2x2& table) {
    if (table.n11 < 0 || table.n10 < 0 || table.n01 < 0 || table.n00 < 0) {
        throw DataError("estimate_tetrachoric: negative cell count");
    }
    if (table.total() < 1) {
        throw DataError("estimate_tetrachoric: empty table");
    }

    double n11 = static_cast<double>(table.n11);
    double n10 = static_cast<double>(table.n10);
    double n01 = static_cast<double>(table.n01);
    double n00 = static_cast<double>(table.n00);

    // Perfect agreement/disagreement sits at the Frechet bound whatever the
    // correction; clamp directly.
    if (table.n10 == 0 && table.n01 == 0) return {kRhoClamp, true};
    if (table.n11 == 0 && table.n00 == 0) return {-kRhoClamp, true};

    // Any zero cell (zero marginals included) takes the 0.5-per-cell
    // continuity correction; an uncorrected empty cell would pin rho at a
    // clamp even when the underlying correlation is moderate.
    bool adjusted = false;
    if (n11 == 0.0 || n10 == 0.0 || n01 == 0.0 || n00 == 0.0) {
        n11 += 0.5;
        n10 += 0.5;
        n01 += 0.5;
        n00 += 0.5;
        adjusted = true;
    }
    const double n = n11 + n10 + n01 + n00;
    const double p_a = (n11 + n10) / n;
    const double p_b = (n11 + n01) / n;
    const double p11 = n11 / n;

    // Exceedance orientation: P(Z > h) = p_a, so h = probit(1 - p_a). The
    // solved rho is orientation-invariant; reported thresholds elsewhere use
    // the probit(yes-rate) convention.
    const double h = probit(1.0 - p_a);
    const double k = probit(1.0 - p_b);

    double lo = -kRhoClamp;
    double hi = kRhoClamp;
    double f_lo = bvn_upper(h, k, lo) - p11;
    double f_hi = bvn_upper(h, k, hi) - p11;
    if (f_lo >= 0.0) return {lo, true};
    if (f_hi <= 0.0) return {hi, true};

    for (int iter = 0; iter < 200 && hi - lo > 1e-6; ++iter) {
        double cand = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        const double mid = 0.5 * (lo + hi);
        // Secant step when it stays well inside the bracket, else bisect.
        if (!(cand > lo + 1e-12 && cand < hi - 1e-12)) cand = mid;
        const double f_cand = bvn_upper(h, k, cand) - p11;
        if (f_cand == 0.0) return {cand, adjusted};
        if (f_cand < 0.0) {
            lo = cand;
            f_lo = f_cand;
        } else {
            hi = cand;
            f_hi = f_cand;
        }
        // Alternate in a plain bisection when the secant end stagnates.
        if (hi - lo > 1e-6 && (iter % 2) == 1) {
            const double m = 0.5 * (lo + hi);
            const double f_m = bvn_upper(h, k, m) - p11;
            if (f_m == 0.0) return {m, adjusted};
            if (f_m < 0.0) {
                lo = m;
                f_lo = f_m;
            } else {
                hi = m;
                f_hi = f_m;
            }
        }
    }
    return {0.5 * (lo + hi), adjusted};
}

TetrachoricMatrix tetrachoric_matrix(const JudgementMatrix& matrix,
                                     std::vector<Warning>* warnings) {
    const int n_models = static_cast<int>(matrix.model_ids.size());
    const int n_items = static_cast<int>(matrix.item_ids.size());
    if (n_models < 2) {
        throw DataError("tetrachoric_matrix: need at least 2 models");
    }

    TetrachoricMatrix out;
    out.model_ids = matrix.model_ids;
    out.rho = Eigen::MatrixXd::Identity(n_models, n_models);
    out.n_pairs = Eigen::MatrixXi::Zero(n_models, n_models);
    out.clamped.setZero(n_models, n_models);
    out.missing.setZero(n_models, n_models);
    out.thresholds.resize(n_models);

    for (int m = 0; m < n_models; ++m) {
        std::int64_t yes = 0, present = 0;
        for (int i = 0; i < n_items; ++i) {
            const int cell = matrix.at(i, m);
            if (cell < 0) continue;
            ++present;
            yes += cell;
        }
        out.n_pairs(m, m) = static_cast<int>(present);
        double rate = static_cast<double>(yes) / static_cast<double>(present);
        if (yes == 0 || yes == present) {
            rate = (static_cast<double>(yes) + 0.5) / (static_cast<double>(present) + 1.0);
        }
        out.thresholds[m] = probit(rate);
    }

    for (int a = 0; a < n_models; ++a) {
        for (int b = a + 1; b < n_models; ++b) {
            ContingencyTable2x2 table;
            for (int i = 0; i < n_items; ++i) {
                const int xa = matrix.at(i, a);
                const int xb = matrix.at(i, b);
                if (xa < 0 || xb < 0) continue;
                if (xa == 1 && xb == 1) ++table.n11;
                else if (xa == 1) ++table.n10;
                else if (xb == 1) ++table.n01;
                else ++table.n00;
            }
            const std::int64_t overlap = table.total();
            out.n_pairs(a, b) = out.n_pairs(b, a) = static_cast<int>(overlap);
            if (overlap == 0) {
                out.missing(a, b) = out.missing(b, a) = 1;
                out.rho(a, b) = out.rho(b, a) = std::numeric_limits<double>::quiet_NaN();
                if (warnings) {
                    warnings->push_back({"zero_overlap",
                                         "models " + matrix.model_ids[a] + " and " +
                                             matrix.model_ids[b] +
                                             " share no pairwise-complete items"});
                }
                continue;
            }
            const TetraEstimate est = estimate_tetrachoric(table);
            out.rho(a, b) = out.rho(b, a) = est.rho;
            out.clamped(a, b) = out.clamped(b, a) = est.clamped ? 1 : 0;
        }
    }
    return out;
}

}  // namespace metacal
