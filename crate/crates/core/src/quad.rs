//! Quadrature and interpolation primitives.
//!
//! * adaptive Gauss–Kronrod (7/15) over real or complex integrands,
//! * tanh-sinh (double exponential) for integrable endpoint singularities,
//! * fixed Gauss–Legendre rules,
//! * Chebyshev–Lobatto interpolants with Clenshaw–Curtis integrals.

use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{PdError, Result};

/// Values that can be integrated: real or complex.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        let s = f1 + f2;
        kron = kron + s * w;
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let val = kron * h;
    let err = ((kron - gauss) * h).magnitude();
    (val, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    val: T,
    err: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss–Kronrod 7/15 on `[a, b]`.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn gauss_kronrod<T, F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    const MAX_PANELS: usize = 4000;
    if a == b {
        return Ok(T::zero());
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, val: v, err: e });
    let mut total = v;
    let mut total_err = e;
    while total_err > abs_tol.max(rel_tol * total.magnitude()) {
        if heap.len() >= MAX_PANELS {
            return Err(PdError::Numeric(format!(
                "adaptive quadrature on [{a}, {b}] did not converge (err {total_err:.3e})"
            )));
        }
        let p = heap.pop().expect("non-empty heap");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total = total - p.val + v1 + v2;
        total_err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
    }
    // re-sum to shed accumulated rounding from the running total
    Ok(heap.into_iter().fold(T::zero(), |acc, p| acc + p.val))
}

/// Tanh-sinh quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` with the two distances computed
/// without cancellation, so singular factors like `(b - x)^(-0.7)` can be
/// evaluated accurately next to either endpoint.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    const MAX_LEVEL: u32 = 10;
    const T_MAX: f64 = 6.5;
    if a == b {
        return Ok(0.0);
    }
    let half = 0.5 * (b - a);
    let node = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cu * cu);
        // 1 - tanh(u) for u >= 0, as e^{-u}/cosh(u)
        let comp = (-u.abs()).exp() / cu;
        let (da, db) = if t >= 0.0 {
            (half * (2.0 - comp), half * comp)
        } else {
            (half * comp, half * (2.0 - comp))
        };
        if da <= 0.0 || db <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let x = if da < db { a + da } else { b - db };
        w * f(x, da, db)
    };
    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += node(k * h) + node(-k * h);
        k += 1.0;
    }
    let mut prev = sum * h * half;
    for _ in 0..MAX_LEVEL {
        h *= 0.5;
        let mut add = 0.0;
        let mut j = 1.0;
        while j * h <= T_MAX {
            add += node(j * h) + node(-j * h);
            j += 2.0;
        }
        sum += add;
        let cur = sum * h * half;
        if !cur.is_finite() {
            return Err(PdError::Numeric(format!("tanh-sinh on [{a}, {b}] produced {cur}")));
        }
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) || (cur - prev).abs() <= 1e-300 {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Tanh-sinh over `(0, ∞)` through `x = s / (1 - s)`.
pub fn tanh_sinh_half_line<F>(f: F, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    tanh_sinh(
        |_s, ds, dc| {
            // s = ds, 1 - s = dc
            let x = ds / dc;
            f(x) / dc / dc
        },
        0.0,
        1.0,
        tol,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Polynomial interpolant through Chebyshev–Lobatto points on `[a, b]`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl Chebyshev {
    /// Lobatto points `cos(jπ/n)` mapped to `[a, b]`, ascending.
    pub fn points(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|j| {
                let c = -(PI * j as f64 / n as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * c
            })
            .collect()
    }

    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Self {
        let n = values.len() - 1;
        Self { a, b, nodes: Self::points(a, b, n), values }
    }

    pub fn from_fn<F: FnMut(f64) -> Result<f64>>(a: f64, b: f64, n: usize, mut f: F) -> Result<Self> {
        let values = Self::points(a, b, n).into_iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(a, b, values))
    }

    pub fn lo(&self) -> f64 {
        self.a
    }

    pub fn hi(&self) -> f64 {
        self.b
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=n {
            let d = x - self.nodes[j];
            if d == 0.0 {
                return self.values[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            let q = w / d;
            num += q * self.values[j];
            den += q;
        }
        num / den
    }

    /// Clenshaw–Curtis integral of the interpolant over `[a, b]`.
    pub fn integral(&self) -> f64 {
        let n = self.values.len() - 1;
        let nf = n as f64;
        // values are stored at -cos(jπ/n); coefficients are symmetric in that ordering
        let mut total = 0.0;
        for k in (0..=n).step_by(2) {
            let mut ck = 0.0;
            for j in 0..=n {
                let mut term = self.values[j] * (PI * (j * k) as f64 / nf).cos();
                if j == 0 || j == n {
                    term *= 0.5;
                }
                ck += term;
            }
            ck *= 2.0 / nf;
            if k == 0 || k == n {
                ck *= 0.5;
            }
            total += ck * 2.0 / (1.0 - (k * k) as f64);
        }
        total * 0.5 * (self.b - self.a)
    }
}
