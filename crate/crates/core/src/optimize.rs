//! Box-constrained Nelder–Mead.
//!
//! The simplex lives in an unbounded space; every coordinate is mapped onto
//! its open interval `(lower, upper)` by a scaled logistic before the
//! objective is evaluated, so no evaluated point ever touches the box.

use crate::error::{Error, Result};

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// An open box `lower[i] < x[i] < upper[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidBounds(i));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// True when `x` lies strictly inside the box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v > l && v < u)
    }

    fn squash(&self, z: &[f64], out: &mut [f64]) {
        for (i, (o, &zi)) in out.iter_mut().zip(z).enumerate() {
            let (l, u) = (self.lower[i], self.upper[i]);
            let mut x = l + (u - l) * logistic(zi);
            if x <= l {
                x = l.next_up();
            }
            if x >= u {
                x = u.next_down();
            }
            *o = x;
        }
    }

    fn unsquash(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let u = (xi - self.lower[i]) / (self.upper[i] - self.lower[i]);
                (u / (1.0 - u)).ln()
            })
            .collect()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop once every vertex is within this distance (max-norm, box coordinates) of the best.
    pub tol: f64,
    pub max_evals: usize,
    /// Restarts from the incumbent after convergence.
    pub restarts: usize,
    /// Edge length of the initial simplex in unbounded coordinates.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_evals: 2000,
            restarts: 1,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out before the simplex collapsed.
    pub converged: bool,
}

struct Problem<'a, F> {
    f: F,
    bounds: &'a BoxBounds,
    evals: usize,
    scratch: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Problem<'_, F> {
    fn eval(&mut self, z: &[f64]) -> f64 {
        self.bounds.squash(z, &mut self.scratch);
        self.evals += 1;
        let v = (self.f)(&self.scratch);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Minimizes `f` over the open box starting from `x0`.
pub fn minimize<F>(f: F, x0: &[f64], bounds: &BoxBounds, opts: NelderMeadOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = bounds.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    if let Some(i) = (0..n).find(|&i| !(x0[i] > bounds.lower[i] && x0[i] < bounds.upper[i])) {
        return Err(Error::StartOutsideBounds(i));
    }
    let mut problem = Problem {
        f,
        bounds,
        evals: 0,
        scratch: vec![0.0; n],
    };
    let z0 = bounds.unsquash(x0);
    let f0 = problem.eval(&z0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    if n == 0 {
        return Ok(Minimum {
            x: Vec::new(),
            f: f0,
            evals: problem.evals,
            converged: true,
        });
    }

    let (mut best_z, mut best_f, mut converged) = run_simplex(&mut problem, z0, f0, &opts);
    for _ in 0..opts.restarts {
        if problem.evals >= opts.max_evals {
            break;
        }
        let (z, fz, conv) = run_simplex(&mut problem, best_z.clone(), best_f, &opts);
        converged = conv;
        if fz <= best_f {
            best_z = z;
            best_f = fz;
        }
    }
    let mut x = vec![0.0; n];
    bounds.squash(&best_z, &mut x);
    Ok(Minimum {
        x,
        f: best_f,
        evals: problem.evals,
        converged,
    })
}

fn run_simplex<F: FnMut(&[f64]) -> f64>(
    p: &mut Problem<'_, F>,
    z0: Vec<f64>,
    f0: f64,
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, bool) {
    let n = z0.len();
    let mut verts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    verts.push((z0.clone(), f0));
    for i in 0..n {
        let mut z = z0.clone();
        z[i] += opts.initial_step;
        let fz = p.eval(&z);
        verts.push((z, fz));
    }

    let mut xa = vec![0.0; n];
    let mut xb = vec![0.0; n];
    let mut converged = false;
    loop {
        verts.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(p.bounds, &verts, &mut xa, &mut xb) < opts.tol {
            converged = true;
            break;
        }
        if p.evals >= opts.max_evals {
            break;
        }

        let worst = n;
        let mut centroid = vec![0.0; n];
        for (z, _) in &verts[..n] {
            for (c, v) in centroid.iter_mut().zip(z) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(REFLECTION, &verts[worst].0);
        let fr = p.eval(&reflected);
        if fr < verts[0].1 {
            let expanded = along(EXPANSION, &verts[worst].0);
            let fe = p.eval(&expanded);
            verts[worst] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < verts[n - 1].1 {
            verts[worst] = (reflected, fr);
            continue;
        }
        let accepted = if fr < verts[worst].1 {
            let outside = along(CONTRACTION * REFLECTION, &verts[worst].0);
            let fc = p.eval(&outside);
            (fc <= fr).then_some((outside, fc))
        } else {
            let inside = along(-CONTRACTION, &verts[worst].0);
            let fc = p.eval(&inside);
            (fc < verts[worst].1).then_some((inside, fc))
        };
        match accepted {
            Some(v) => verts[worst] = v,
            None => {
                let best = verts[0].0.clone();
                for (z, fz) in verts.iter_mut().skip(1) {
                    for (zi, bi) in z.iter_mut().zip(&best) {
                        *zi = bi + SHRINK * (*zi - bi);
                    }
                    *fz = p.eval(z);
                }
            }
        }
    }
    let (z, f) = verts.swap_remove(0);
    (z, f, converged)
}

fn diameter(b: &BoxBounds, verts: &[(Vec<f64>, f64)], xa: &mut [f64], xb: &mut [f64]) -> f64 {
    b.squash(&verts[0].0, xa);
    let mut d: f64 = 0.0;
    for (z, _) in &verts[1..] {
        b.squash(z, xb);
        for (a, v) in xa.iter().zip(xb.iter()) {
            d = d.max((a - v).abs());
        }
    }
    d
}
