//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Value and error estimate of one GK15 panel.
pub(crate) fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_a^b f` to within `max(abs_tol, rel_tol·|I|)`; returns `(value, error_estimate)`.
///
/// Bisects the panel with the largest error until the summed error estimate
/// meets the tolerance or `max_panels` is reached.
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)> {
    integrate_from_panels(f, a, b, 1, abs_tol, rel_tol, max_panels)
}

/// As [`integrate`], starting from `initial` equal panels.
pub fn integrate_from_panels<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    initial: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::invalid(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    let initial = initial.max(1);
    let width = (b - a) / initial as f64;
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_error = 0.0;
    for i in 0..initial {
        let lo = a + width * i as f64;
        let hi = if i + 1 == initial { b } else { lo + width };
        let (value, error) = gk15(f, lo, hi);
        total += value;
        total_error += error;
        heap.push(Panel { a: lo, b: hi, value, error });
    }
    loop {
        if !(total.is_finite() && total_error.is_finite()) {
            return Err(Error::OracleFailure("integrand is not finite".into()));
        }
        if total_error <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= max_panels {
            return Err(Error::OracleFailure(format!(
                "quadrature did not reach tolerance with {max_panels} panels (error {total_error:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        total += lv + rv - worst.value;
        total_error += le + re - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok((value, error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let (v, e) = integrate(&|x: f64| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 0.0, 10).unwrap();
        assert_relative_eq!(v, 64.0 / 6.0 - 4.0, max_relative = 1e-14);
        assert!(e < 1e-12);
    }

    #[test]
    fn gaussian_and_peaked_integrands() {
        let (v, _) = integrate(&|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-13, 1e-13, 500).unwrap();
        assert_relative_eq!(v, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        let (v, _) = integrate(&|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-10, 1e-10, 2000).unwrap();
        assert_relative_eq!(v, 4.0 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn failure_and_bad_intervals() {
        let err = integrate(&|x: f64| 1.0 / x.abs(), -1.0, 1.0, 1e-12, 0.0, 20).unwrap_err();
        assert!(matches!(err, Error::OracleFailure(_)));
        assert!(integrate(&|x: f64| x, 1.0, 0.0, 1e-8, 0.0, 10).is_err());
        assert_eq!(integrate(&|x: f64| x, 1.0, 1.0, 1e-8, 0.0, 10).unwrap(), (0.0, 0.0));
    }
}
