//! Discrete algebraic Riccati equation in filtering form.
//!
//! Solves
//!
//! ```text
//! P = A P A' + Q - (A P C' + S)(C P C' + R)^-1 (A P C' + S)'
//! ```
//!
//! and returns the innovations-form gain `K = (A P C' + S) V^-1` and
//! innovation covariance `V = C P C' + R`.
//!
//! The default solver is the structure-preserving doubling algorithm: step
//! `k` reproduces iterate `2^k` of the Kalman (fixed-point) recursion started
//! at `P = 0`, so it converges to the same stabilizing solution. The plain
//! fixed-point recursion is kept as [`dare_fixed_point`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DareMethod {
    /// Doubling, falling back to the fixed-point recursion when the doubling
    /// result fails the residual check.
    #[default]
    Auto,
    Doubling,
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareOptions {
    pub method: DareMethod,
    /// Convergence threshold on the max-abs change of `P` between iterates.
    pub tol: f64,
    /// Iteration cap of the fixed-point recursion.
    pub max_iter: usize,
    /// Cap on doubling steps (each step squares the covered horizon).
    pub max_doublings: usize,
    /// Accepted solutions must satisfy the equation to this max-abs residual.
    pub residual_tol: f64,
}

impl Default for DareOptions {
    fn default() -> Self {
        Self {
            method: DareMethod::Auto,
            tol: 1e-12,
            max_iter: 10_000,
            max_doublings: 64,
            residual_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DareSolution {
    pub gain: Mat,
    pub innov_cov: Mat,
    pub state_cov: Mat,
    /// Max-abs residual of the Riccati equation at the returned `P`.
    pub residual: f64,
    pub iterations: usize,
}

fn check_shapes(a: &Mat, c: &Mat, q: &Mat, r: &Mat, s: &Mat) -> Result<()> {
    let n = a.nrows();
    let p = c.nrows();
    let ok = a.is_square()
        && c.ncols() == n
        && q.shape() == (n, n)
        && r.shape() == (p, p)
        && s.shape() == (n, p);
    if !ok {
        return Err(Error::Argument(format!(
            "inconsistent DARE shapes: A {:?}, C {:?}, Q {:?}, R {:?}, S {:?}",
            a.shape(),
            c.shape(),
            q.shape(),
            r.shape(),
            s.shape()
        )));
    }
    for (m, name) in [(a, "A"), (c, "C"), (q, "Q"), (r, "R"), (s, "S")] {
        if !linalg::all_finite(m) {
            return Err(Error::IllPosed(format!("{name} has non-finite entries")));
        }
    }
    if !linalg::is_symmetric(q, 1e-9) || !linalg::is_symmetric(r, 1e-9) {
        return Err(Error::IllPosed("Q and R must be symmetric".into()));
    }
    Ok(())
}

fn check_stable(a: &Mat) -> Result<()> {
    let rho = linalg::spectral_radius(a);
    if rho >= 1.0 - crate::model::STABILITY_MARGIN {
        return Err(Error::RiccatiDivergence(format!(
            "state transition has spectral radius {rho:.6} >= 1"
        )));
    }
    Ok(())
}

/// Solves the DARE with default options.
pub fn dare_innovations(a: &Mat, c: &Mat, q: &Mat, r: &Mat, s: &Mat) -> Result<DareSolution> {
    dare_innovations_with(a, c, q, r, s, &DareOptions::default())
}

pub fn dare_innovations_with(
    a: &Mat,
    c: &Mat,
    q: &Mat,
    r: &Mat,
    s: &Mat,
    opts: &DareOptions,
) -> Result<DareSolution> {
    check_shapes(a, c, q, r, s)?;
    check_stable(a)?;
    solve_unchecked(a, c, q, r, s, opts)
}

/// Solver dispatch without the up-front stability check; callers must know
/// `A` is stable.
pub(crate) fn solve_unchecked(
    a: &Mat,
    c: &Mat,
    q: &Mat,
    r: &Mat,
    s: &Mat,
    opts: &DareOptions,
) -> Result<DareSolution> {
    match opts.method {
        DareMethod::Doubling => solve_doubling(a, c, q, r, s, opts),
        DareMethod::FixedPoint => fixed_point(a, c, q, r, s, opts),
        DareMethod::Auto => match solve_doubling(a, c, q, r, s, opts) {
            Ok(sol) => Ok(sol),
            // Doubling loses accuracy when R is tiny next to C P C'; the
            // Kalman recursion does not.
            Err(Error::RiccatiDivergence(_)) | Err(Error::IllPosed(_)) => {
                fixed_point(a, c, q, r, s, opts)
            }
            Err(e) => Err(e),
        },
    }
}

fn solve_doubling(
    a: &Mat,
    c: &Mat,
    q: &Mat,
    r: &Mat,
    s: &Mat,
    opts: &DareOptions,
) -> Result<DareSolution> {
    let n = a.nrows();
    let r_inv = linalg::spd_inverse(r, "observation noise covariance R")?;
    let s_rinv = s * &r_inv;
    // Remove the cross-covariance: A_bar = A - S R^-1 C, Q_bar = Q - S R^-1 S'.
    let a_bar = a - &s_rinv * c;
    let mut h = q - &s_rinv * s.transpose();
    linalg::symmetrize(&mut h);
    let mut g = c.transpose() * &r_inv * c;
    linalg::symmetrize(&mut g);
    let mut ak = a_bar.transpose();

    let eye = DMatrix::<f64>::identity(n, n);
    let mut steps = 0;
    loop {
        if steps >= opts.max_doublings {
            return Err(Error::RiccatiDivergence(format!(
                "no convergence after {steps} doubling steps"
            )));
        }
        steps += 1;
        let w = &eye + &g * &h;
        let w_inv = w.lu().try_inverse().ok_or_else(|| {
            Error::RiccatiDivergence(format!("singular doubling matrix at step {steps}"))
        })?;
        let wa = &w_inv * &ak;
        let wg = &w_inv * &g;
        let mut h_next = &h + ak.transpose() * (&h * &wa);
        linalg::symmetrize(&mut h_next);
        let mut g_next = &g + &ak * wg * ak.transpose();
        linalg::symmetrize(&mut g_next);
        let a_next = &ak * wa;

        if !linalg::all_finite(&h_next) {
            return Err(Error::RiccatiDivergence(format!(
                "non-finite iterate at doubling step {steps}"
            )));
        }
        let change = linalg::max_abs_diff(&h_next, &h);
        let scale = linalg::max_abs(&h_next).max(1.0);
        h = h_next;
        g = g_next;
        ak = a_next;
        if change <= opts.tol * scale {
            break;
        }
    }
    finish(a, c, q, r, s, h, steps, opts)
}

/// Plain fixed-point (Kalman recursion) solver started from `P = Q`.
pub fn dare_fixed_point(
    a: &Mat,
    c: &Mat,
    q: &Mat,
    r: &Mat,
    s: &Mat,
    opts: &DareOptions,
) -> Result<DareSolution> {
    check_shapes(a, c, q, r, s)?;
    check_stable(a)?;
    fixed_point(a, c, q, r, s, opts)
}

fn fixed_point(
    a: &Mat,
    c: &Mat,
    q: &Mat,
    r: &Mat,
    s: &Mat,
    opts: &DareOptions,
) -> Result<DareSolution> {
    let mut p = q.clone();
    let mut iterations = 0;
    loop {
        if iterations >= opts.max_iter {
            return Err(Error::RiccatiDivergence(format!(
                "no convergence within {} iterations",
                opts.max_iter
            )));
        }
        iterations += 1;
        let next = riccati_map(a, c, q, r, s, &p)?;
        if !linalg::all_finite(&next) {
            return Err(Error::RiccatiDivergence(format!(
                "non-finite iterate at iteration {iterations}"
            )));
        }
        let change = linalg::max_abs_diff(&next, &p);
        p = next;
        if change < opts.tol * linalg::max_abs(&p).max(1.0) {
            break;
        }
    }
    finish(a, c, q, r, s, p, iterations, opts)
}

/// Solution of the Stein equation `X = A X A' + Q` for stable `A`, by
/// doubling (`X = sum_i A^i Q A^i'`).
pub fn lyapunov(a: &Mat, q: &Mat, opts: &DareOptions) -> Result<Mat> {
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..opts.max_doublings {
        let add = &ak * &x * ak.transpose();
        let change = linalg::max_abs(&add);
        x += add;
        linalg::symmetrize(&mut x);
        if !linalg::all_finite(&x) {
            break;
        }
        if change <= opts.tol * linalg::max_abs(&x).max(1.0) {
            return Ok(x);
        }
        ak = &ak * &ak;
    }
    Err(Error::RiccatiDivergence(
        "Lyapunov doubling did not converge".into(),
    ))
}

fn riccati_map(a: &Mat, c: &Mat, q: &Mat, r: &Mat, s: &Mat, p: &Mat) -> Result<Mat> {
    let pc = p * c.transpose();
    let v = c * &pc + r;
    let v_inv = linalg::spd_inverse(&v, "innovation covariance")?;
    let m = a * &pc + s;
    let mut next = a * p * a.transpose() + q - &m * v_inv * m.transpose();
    linalg::symmetrize(&mut next);
    Ok(next)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    a: &Mat,
    c: &Mat,
    q: &Mat,
    r: &Mat,
    s: &Mat,
    p: Mat,
    iterations: usize,
    opts: &DareOptions,
) -> Result<DareSolution> {
    let pc = &p * c.transpose();
    let mut v = c * &pc + r;
    linalg::symmetrize(&mut v);
    let v_inv = linalg::spd_inverse(&v, "innovation covariance V")?;
    let m = a * &pc + s;
    let gain = &m * &v_inv;
    let mut rhs = a * &p * a.transpose() + q - &gain * m.transpose();
    linalg::symmetrize(&mut rhs);
    let residual = linalg::max_abs_diff(&rhs, &p);
    if !residual.is_finite() || residual > opts.residual_tol {
        return Err(Error::RiccatiDivergence(format!(
            "accepted iterate has residual {residual:e}"
        )));
    }
    Ok(DareSolution {
        gain,
        innov_cov: v,
        state_cov: p,
        residual,
        iterations,
    })
}
