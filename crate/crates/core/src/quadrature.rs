//! Globally adaptive Gauss–Kronrod (7/15) quadrature on intervals and
//! rectangles.
//!
//! Both drivers keep a max-heap of regions keyed by their error estimate and
//! bisect the worst region until the summed estimate drops below the absolute
//! tolerance. Integrable endpoint singularities are handled by repeated
//! bisection; the Kronrod nodes never touch the region boundary.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default cap on the number of regions before giving up.
pub const MAX_REGIONS: usize = 20_000;

/// The 15 nodes on [-1, 1] with Kronrod and (embedded) Gauss weights.
fn rule() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    let mut idx = 0;
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        out[idx] = (-XGK[j], WGK[j], wg);
        out[idx + 1] = (XGK[j], WGK[j], wg);
        idx += 2;
    }
    out[14] = (0.0, WGK[7], WG[3]);
    out
}

struct Region<R> {
    region: R,
    value: f64,
    error: f64,
}

impl<R> PartialEq for Region<R> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<R> Eq for Region<R> {}
impl<R> PartialOrd for Region<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<R> Ord for Region<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk_interval<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (mut k, mut g) = (0.0, 0.0);
    for (x, wk, wg) in rule() {
        let y = f(c + h * x);
        k += wk * y;
        g += wg * y;
    }
    (k * h, ((k - g) * h).abs())
}

type Rect = (f64, f64, f64, f64);

fn gk_rect<F: Fn(f64, f64) -> f64>(f: &F, r: Rect) -> (f64, f64) {
    let (a, b, c, d) = r;
    let (cs, hs) = (0.5 * (a + b), 0.5 * (b - a));
    let (ct, ht) = (0.5 * (c + d), 0.5 * (d - c));
    let nodes = rule();
    let (mut k, mut g) = (0.0, 0.0);
    for (xs, wks, wgs) in nodes {
        let s = cs + hs * xs;
        for (xt, wkt, wgt) in nodes {
            let y = f(s, ct + ht * xt);
            k += wks * wkt * y;
            g += wgs * wgt * y;
        }
    }
    let area = hs * ht;
    (k * area, ((k - g) * area).abs())
}

fn drive<R: Copy, E, S>(
    initial: Vec<R>,
    abs_tol: f64,
    max_regions: usize,
    eval: E,
    split: S,
) -> Result<f64>
where
    E: Fn(R) -> (f64, f64),
    S: Fn(R) -> Vec<R>,
{
    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    for r in initial {
        let (value, error) = eval(r);
        err += error;
        heap.push(Region { region: r, value, error });
    }
    while err > abs_tol {
        if heap.len() >= max_regions {
            return Err(Error::numerical(
                format!("adaptive quadrature did not reach tolerance {abs_tol:e}"),
                err,
            ));
        }
        let worst = heap.pop().expect("heap holds at least one region");
        err -= worst.error;
        for child in split(worst.region) {
            let (value, error) = eval(child);
            err += error;
            heap.push(Region { region: child, value, error });
        }
        // re-sum periodically to stop drift from the running subtraction
        if heap.len() % 256 == 0 {
            err = heap.iter().map(|r| r.error).sum();
        }
    }
    Ok(heap.iter().map(|r| r.value).sum())
}

/// `∫_a^b f` to absolute tolerance `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    drive(
        vec![(a, b)],
        abs_tol,
        MAX_REGIONS,
        |(lo, hi)| gk_interval(&f, lo, hi),
        |(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            vec![(lo, mid), (mid, hi)]
        },
    )
}

/// `∫_a^b ∫_c^d f(s, t) dt ds` to absolute tolerance `abs_tol`.
pub fn integrate_rect<F: Fn(f64, f64) -> f64>(
    f: F,
    (a, b): (f64, f64),
    (c, d): (f64, f64),
    abs_tol: f64,
) -> Result<f64> {
    if b <= a || d <= c {
        return Ok(0.0);
    }
    drive(
        vec![(a, b, c, d)],
        abs_tol,
        MAX_REGIONS,
        |r| gk_rect(&f, r),
        |(a, b, c, d)| {
            // split the longer side
            if b - a >= d - c {
                let m = 0.5 * (a + b);
                vec![(a, m, c, d), (m, b, c, d)]
            } else {
                let m = 0.5 * (c + d);
                vec![(a, b, c, m), (a, b, m, d)]
            }
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} = 2
        let v = integrate(|x| x.powf(-0.5), 0.0, 1.0, 1e-11).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        // ∫_0^1 x^{-3/4} = 4
        let v = integrate(|x| x.powf(-0.75), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 4.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn rectangle_product() {
        let v = integrate_rect(|s, t| s.exp() * t.cos(), (0.0, 1.0), (0.0, 2.0), 1e-13).unwrap();
        let exact = (1f64.exp() - 1.0) * 2f64.sin();
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn degenerate_regions_are_zero() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-12).unwrap(), 0.0);
        assert_eq!(integrate_rect(|_, _| 1.0, (0.0, 0.0), (0.0, 1.0), 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn unreachable_tolerance_reports_failure() {
        let err = integrate(|x| (1.0 / x).sin() / x, 1e-9, 1.0, 1e-15).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }
}
