//! Log-gamma and polygamma functions for the amplitude model.
//!
//! Everything here is evaluated the classical way: arguments below a shift
//! threshold are pushed up by the recurrence relations, then a Bernoulli
//! asymptotic series is summed at the shifted point. With the threshold at 12
//! the truncated tails are far below f64 resolution, which keeps all four
//! functions within 1e-10 relative error over the range the estimator visits
//! (roughly 1e-2 to 500).

/// Arguments below this are raised by recurrence before the asymptotic
/// series is applied.
const SHIFT: f64 = 12.0;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
///
/// # Panics
/// Panics if `x <= 0`.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    // Nine-term Lanczos coefficients for g = 7.
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // One step of lnΓ(x) = lnΓ(x + 1) − ln x keeps the Lanczos sum in
        // its sweet spot.
        return ln_gamma(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut sum = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Digamma ψ(x) for `x > 0`.
///
/// # Panics
/// Panics if `x <= 0`.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma requires x > 0, got {x}");
    let mut acc = 0.0;
    let mut x = x;
    while x < SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // ψ(x) ~ ln x − 1/(2x) − Σ B_{2k} / (2k x^{2k})
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv2
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 120.0
                    + inv2
                        * (1.0 / 252.0
                            + inv2
                                * (-1.0 / 240.0
                                    + inv2
                                        * (1.0 / 132.0
                                            + inv2 * (-691.0 / 32_760.0 + inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - tail
}

/// Trigamma ψ₁(x) for `x > 0`.
///
/// # Panics
/// Panics if `x <= 0`.
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma requires x > 0, got {x}");
    let mut acc = 0.0;
    let mut x = x;
    while x < SHIFT {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    // ψ₁(x) ~ 1/x + 1/(2x²) + Σ B_{2k} / x^{2k+1}
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv * inv2
        * (1.0 / 6.0
            + inv2
                * (-1.0 / 30.0
                    + inv2
                        * (1.0 / 42.0
                            + inv2
                                * (-1.0 / 30.0
                                    + inv2
                                        * (5.0 / 66.0
                                            + inv2
                                                * (-691.0 / 2_730.0 + inv2 * (7.0 / 6.0)))))));
    acc + inv + 0.5 * inv2 + tail
}

/// Tetragamma ψ₂(x) for `x > 0`.
///
/// # Panics
/// Panics if `x <= 0`.
pub fn tetragamma(x: f64) -> f64 {
    assert!(x > 0.0, "tetragamma requires x > 0, got {x}");
    let mut acc = 0.0;
    let mut x = x;
    while x < SHIFT {
        acc -= 2.0 / (x * x * x);
        x += 1.0;
    }
    // ψ₂(x) ~ −1/x² − 1/x³ − 1/(2x⁴) + 1/(6x⁶) − ... (term-wise derivative
    // of the trigamma series).
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let inv4 = inv2 * inv2;
    let tail = inv4
        * (0.5
            - inv2
                * (1.0 / 6.0
                    - inv2
                        * (1.0 / 6.0
                            - inv2 * (3.0 / 10.0 - inv2 * (5.0 / 6.0 - inv2 * (691.0 / 210.0))))));
    acc - inv2 - inv2 * inv - tail
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(got: f64, want: f64, tol: f64, what: &str) {
        let rel = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
        assert!(
            rel <= tol,
            "{what}: got {got:.17e}, want {want:.17e}, rel err {rel:.3e}"
        );
    }

    // Reference values computed with 50-digit arbitrary-precision arithmetic,
    // rounded to 20 significant digits.
    const XS: [f64; 11] = [0.05, 0.1, 0.5, 1.0, 1.5, 2.0, 3.2, 7.5, 20.0, 147.3, 500.0];
    const PSI0: [f64; 11] = [
        -20.497844991299870371,
        -10.423754940411076795,
        -1.9635100260214234794,
        -0.57721566490153286061,
        0.036489973978576520559,
        0.42278433509846713939,
        0.99883889128659958324,
        1.9467574842460867881,
        2.9705239922421490509,
        4.9890730496311943305,
        6.2136077650889917424,
    ];
    const PSI1: [f64; 11] = [
        401.53235734211511931,
        101.43329915079275882,
        4.9348022005446793094,
        1.6449340668482264365,
        0.93480220054467930942,
        0.64493406684822643647,
        0.36632119073140079456,
        0.14261589669670379977,
        0.051270822935203119832,
        0.0068119627597400672594,
        0.0020020013333322666697,
    ];
    const PSI2: [f64; 11] = [
        -16002.108158021945433,
        -2001.8614573783440063,
        -16.828796644234319996,
        -2.4041138063191885708,
        -0.8287966442343199956,
        -0.4041138063191885708,
        -0.13280000680313121152,
        -0.020305252536644664065,
        -0.0026281224023146545934,
        -0.00004640265721008782434,
        -4.008007999989333376e-6,
    ];

    #[test]
    fn digamma_reference_table() {
        for (&x, &want) in XS.iter().zip(PSI0.iter()) {
            assert_rel(digamma(x), want, 1e-10, &format!("digamma({x})"));
        }
    }

    #[test]
    fn trigamma_reference_table() {
        for (&x, &want) in XS.iter().zip(PSI1.iter()) {
            assert_rel(trigamma(x), want, 1e-10, &format!("trigamma({x})"));
        }
    }

    #[test]
    fn tetragamma_reference_table() {
        for (&x, &want) in XS.iter().zip(PSI2.iter()) {
            assert_rel(tetragamma(x), want, 1e-10, &format!("tetragamma({x})"));
        }
    }

    #[test]
    fn classic_identities_at_one() {
        // ψ(1) = −γ, ψ₁(1) = π²/6, ψ₂(1) = −2ζ(3)
        assert_rel(digamma(1.0), -0.57721566490153286061, 1e-13, "psi(1)");
        assert_rel(
            trigamma(1.0),
            std::f64::consts::PI * std::f64::consts::PI / 6.0,
            1e-13,
            "psi1(1)",
        );
        assert_rel(tetragamma(1.0), -2.4041138063191885708, 1e-13, "psi2(1)");
    }

    #[test]
    fn recurrence_consistency_sweep() {
        // ψ_m(x+1) − ψ_m(x) must equal the m-th derivative of 1/x; checking
        // it across the shift threshold exercises both evaluation branches.
        let mut x = 0.07;
        while x < 40.0 {
            assert_rel(digamma(x + 1.0) - digamma(x), 1.0 / x, 1e-9, "psi0 rec");
            assert_rel(
                trigamma(x) - trigamma(x + 1.0),
                1.0 / (x * x),
                1e-9,
                "psi1 rec",
            );
            assert_rel(
                tetragamma(x + 1.0) - tetragamma(x),
                2.0 / (x * x * x),
                1e-9,
                "psi2 rec",
            );
            x *= 1.37;
        }
    }

    #[test]
    fn ln_gamma_known_points() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(2.0)).abs() < 1e-14);
        assert_rel(ln_gamma(0.5), 0.57236494292470008707, 1e-13, "lnΓ(1/2)");
        assert_rel(ln_gamma(5.0), 24.0f64.ln(), 1e-13, "lnΓ(5)");
        assert_rel(ln_gamma(500.0), 2605.1158503617335219, 1e-12, "lnΓ(500)");
    }

    #[test]
    fn ln_gamma_matches_factorials_and_recurrence() {
        let mut fact = 1.0f64;
        for n in 3..=18 {
            fact *= (n - 1) as f64;
            assert_rel(ln_gamma(n as f64), fact.ln(), 1e-12, &format!("lnΓ({n})"));
        }
        let mut x = 0.03;
        while x < 300.0 {
            assert_rel(
                ln_gamma(x + 1.0),
                ln_gamma(x) + x.ln(),
                1e-11,
                &format!("lnΓ rec at {x}"),
            );
            x *= 1.618;
        }
    }

    #[test]
    fn ln_gamma_agrees_with_statrs() {
        let mut x = 0.02;
        while x < 500.0 {
            let want = statrs::function::gamma::ln_gamma(x);
            assert_rel(ln_gamma(x), want, 1e-11, &format!("lnΓ({x}) vs statrs"));
            x *= 1.31;
        }
    }

    #[test]
    #[should_panic]
    fn digamma_rejects_nonpositive() {
        digamma(0.0);
    }
}
