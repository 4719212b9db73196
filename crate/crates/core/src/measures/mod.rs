//! Discrete probability measures on R^d and optimal transport between them.

mod assignment;
mod coupling;
mod transport;
mod wasserstein;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{check_dim, Error, Result};
use crate::linalg::norm;
use crate::scalar::Real;

pub use assignment::solve_assignment;
pub use coupling::Coupling;
pub use transport::{solve_transport, TransportPlan};
pub use wasserstein::{disintegration_bound_check, w1_dual_bound, wasserstein, wasserstein_with_coupling};

/// Weighted cloud of atoms in R^d. Points are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

pub(crate) fn mass_tolerance<T: Real>(n: usize) -> T {
    T::lit(1e-12).max(T::epsilon() * T::count(4 * n.max(1)))
}

impl<T: Real> DiscreteMeasure<T> {
    /// Builds a measure from row-major points, checking every invariant.
    pub fn from_flat(dim: usize, points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("a measure needs at least one atom".into()));
        }
        check_dim(weights.len() * dim, points.len())?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= T::zero())) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not a nonnegative number")));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("atom coordinates must be finite".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > mass_tolerance::<T>(weights.len()) {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, points, weights })
    }

    pub fn new(dim: usize, points: &[Vec<T>], weights: Vec<T>) -> Result<Self> {
        for p in points {
            check_dim(dim, p.len())?;
        }
        Self::from_flat(dim, points.concat(), weights)
    }

    /// Like [`DiscreteMeasure::from_flat`] but divides the weights by their sum first.
    pub fn normalized(dim: usize, points: Vec<T>, mut weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::InvalidMeasure("total mass must be positive".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::from_flat(dim, points, weights)
    }

    /// Caller guarantees the invariants (finite points, valid weights).
    pub(crate) fn from_parts_unchecked(dim: usize, points: Vec<T>, weights: Vec<T>) -> Self {
        debug_assert_eq!(points.len(), dim * weights.len());
        Self { dim, points, weights }
    }

    pub fn dirac(point: &[T]) -> Self {
        Self { dim: point.len(), points: point.to_vec(), weights: vec![T::one()] }
    }

    /// Equal weights on the given points.
    pub fn uniform(dim: usize, points: Vec<T>) -> Result<Self> {
        let n = points.len() / dim.max(1);
        let w = T::one() / T::count(n.max(1));
        Self::from_flat(dim, points, vec![w; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn flat_points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    /// Same weights, atoms moved to `points`. No merging takes place, so atom identity is kept.
    pub fn with_points(&self, points: Vec<T>) -> Result<Self> {
        check_dim(self.points.len(), points.len())?;
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("atom coordinates must be finite".into()));
        }
        Ok(Self { dim: self.dim, points, weights: self.weights.clone() })
    }

    /// Atoms displaced by `scale * field`, one row per atom, without merging.
    pub fn displaced(&self, field: &[T], scale: T) -> Result<Self> {
        check_dim(self.points.len(), field.len())?;
        let pts = self.points.iter().zip(field).map(|(&x, &v)| x + scale * v).collect();
        self.with_points(pts)
    }

    /// Image measure `f # mu`. Atoms landing on identical coordinates are merged.
    pub fn pushforward<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[T]) -> Vec<T>,
    {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut points = Vec::new();
        let mut weights: Vec<T> = Vec::new();
        let mut out_dim = None;
        for (x, &w) in self.points().zip(&self.weights) {
            let y = f(x);
            match out_dim {
                None => out_dim = Some(y.len()),
                Some(d) => check_dim(d, y.len())?,
            }
            if y.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMeasure("pushforward produced a non-finite point".into()));
            }
            let key = y.iter().map(|c| coordinate_key(*c)).collect::<Vec<_>>();
            match index.get(&key) {
                Some(&k) => weights[k] += w,
                None => {
                    index.insert(key, weights.len());
                    points.extend_from_slice(&y);
                    weights.push(w);
                }
            }
        }
        let dim = out_dim.unwrap_or(self.dim);
        if dim == 0 {
            return Err(Error::InvalidMeasure("pushforward map has empty output".into()));
        }
        Ok(Self { dim, points, weights })
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for (x, &w) in self.points().zip(&self.weights) {
            for (mk, &xk) in m.iter_mut().zip(x) {
                *mk += w * xk;
            }
        }
        m
    }

    /// `sum_i w_i f(x_i)` for a vector valued `f`.
    pub fn integrate_vec<F>(&self, len: usize, f: F) -> Vec<T>
    where
        F: Fn(&[T]) -> Vec<T>,
    {
        let mut acc = vec![T::zero(); len];
        for (x, &w) in self.points().zip(&self.weights) {
            for (a, v) in acc.iter_mut().zip(f(x)) {
                *a += w * v;
            }
        }
        acc
    }

    pub fn integrate<F>(&self, f: F) -> T
    where
        F: Fn(&[T]) -> T,
    {
        self.points().zip(&self.weights).map(|(x, &w)| w * f(x)).sum()
    }

    /// Largest Euclidean norm over atoms.
    pub fn support_radius(&self) -> T {
        self.points().map(norm).fold(T::zero(), T::max)
    }

    /// Writes `# dim=d` followed by one `w,x1,..,xd` row per atom.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# dim={}", self.dim)?;
        for (x, w) in self.points().zip(&self.weights) {
            write!(out, "{w}")?;
            for c in x {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut dim = None;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::InvalidMeasure(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(d) = rest.trim().strip_prefix("dim=") {
                    let d = d.trim().parse::<usize>().map_err(|e| Error::InvalidMeasure(format!("bad dim header: {e}")))?;
                    dim = Some(d);
                }
                continue;
            }
            let d = dim.ok_or_else(|| Error::InvalidMeasure("missing `# dim=d` header".into()))?;
            let vals = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map(T::lit))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| Error::InvalidMeasure(format!("bad number in `{line}`: {e}")))?;
            check_dim(d + 1, vals.len())?;
            weights.push(vals[0]);
            points.extend_from_slice(&vals[1..]);
        }
        let dim = dim.ok_or_else(|| Error::InvalidMeasure("missing `# dim=d` header".into()))?;
        Self::from_flat(dim, points, weights)
    }
}

fn coordinate_key<T: Real>(c: T) -> u64 {
    // -0.0 and 0.0 are the same coordinate.
    let c = c.as_f64();
    if c == 0.0 {
        0
    } else {
        c.to_bits()
    }
}

/// Cost matrix `|x_i - y_j|^p`.
pub(crate) fn cost_matrix<T: Real>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>, p: u32) -> crate::linalg::Matrix<T> {
    let mut c = crate::linalg::Matrix::zeros(mu.len(), nu.len());
    for (i, x) in mu.points().enumerate() {
        for (j, y) in nu.points().enumerate() {
            let d = crate::linalg::dist(x, y);
            c[(i, j)] = if p == 1 { d } else { d.powi(p as i32) };
        }
    }
    c
}
