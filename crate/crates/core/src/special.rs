//! Log-gamma and regularized incomplete gamma functions, enough to get
//! chi-square tail probabilities.

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Lower regularized incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_p needs a > 0");
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        series(a, x)
    } else {
        1.0 - continued_fraction(a, x)
    }
}

/// Upper regularized incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_q needs a > 0");
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - series(a, x)
    } else {
        continued_fraction(a, x)
    }
}

fn series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// modified Lentz
fn continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom. Zero degrees of freedom is the point mass at 0.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_gamma_reference_values() {
        assert!(rel(ln_gamma(0.5), 0.5723649429247) < 1e-12);
        assert!(rel(ln_gamma(10.0), 12.801827480081469) < 1e-13);
        assert!(rel(ln_gamma(100.5), 361.43554046777757) < 1e-13);
        assert!(ln_gamma(1.0).abs() < 1e-14 && ln_gamma(2.0).abs() < 1e-14);
    }

    #[test]
    fn incomplete_gamma_reference_values() {
        // (a, x, P, Q) from a reference implementation
        let table = [
            (0.5, 0.1, 0.34527915398142317, 0.6547208460185768),
            (2.5, 1.0, 0.15085496391539038, 0.8491450360846096),
            (10.0, 12.0, 0.7576078383294875, 0.24239216167051245),
            (3.0, 0.5, 0.014387677966970684, 0.9856123220330293),
        ];
        for (a, x, p, q) in table {
            assert!(rel(gamma_p(a, x), p) < 1e-12, "P({a},{x})");
            assert!(rel(gamma_q(a, x), q) < 1e-12, "Q({a},{x})");
        }
    }

    #[test]
    fn chi_square_tail_reference_values() {
        let table = [
            (3.841458820694124, 1, 0.05),
            (5.991464547107979, 2, 0.05),
            (43.40277777777778, 1, 4.4555519659989934e-11),
            (10.0, 4, 0.04042768199451279),
            (100.0, 50, 3.454931382984871e-05),
            (1e-3, 1, 0.9747728793699604),
            (20.0, 20, 0.4579297144718523),
        ];
        for (x, k, sf) in table {
            assert!(rel(chi_square_sf(x, k), sf) < 1e-9, "sf({x}, {k}) = {}", chi_square_sf(x, k));
        }
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
        assert_eq!(chi_square_sf(0.0, 0), 1.0);
        assert_eq!(chi_square_sf(f64::INFINITY, 2), 0.0);
    }
}
