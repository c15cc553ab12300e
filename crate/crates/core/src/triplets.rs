//! Lévy characteristics `(c, b, Q, ν)`, their symbols, and finite families
//! of them indexed by a control label.
//!
//! Jump measures are finite sums of weighted points. Atoms and pre-quadratured
//! density nodes are stored separately so that configurations round-trip, but
//! every computation treats them the same way.

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, MAX_DIM};

/// Symmetry and eigenvalue tolerance for diffusion matrices.
pub const PSD_TOLERANCE: f64 = 1e-12;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} unsupported (1..={MAX_DIM})"
        )));
    }
    Ok(())
}

/// Compensator indicator on the open interval `(0, 1)`: jumps of length
/// exactly one are not compensated.
#[inline]
pub fn is_compensated(y: &[f64]) -> bool {
    let r = linalg::norm(y);
    r > 0.0 && r < 1.0
}

/// A finite Lévy measure: weighted atoms plus optional quadrature nodes of a
/// density.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMeasure {
    dim: usize,
    atom_locations: Vec<f64>,
    atom_weights: Vec<f64>,
    node_locations: Vec<f64>,
    node_weights: Vec<f64>,
    levy_mass: f64,
}

fn validate_points(dim: usize, locations: &[f64], weights: &[f64]) -> Result<()> {
    if locations.len() != weights.len() * dim {
        return Err(Error::InvalidMeasure(format!(
            "{} coordinates for {} weights in dimension {dim}",
            locations.len(),
            weights.len()
        )));
    }
    for (k, w) in weights.iter().enumerate() {
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {w} at index {k} is not positive")));
        }
        let y = &locations[k * dim..(k + 1) * dim];
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite location at index {k}")));
        }
        if linalg::norm(y) == 0.0 {
            return Err(Error::InvalidMeasure(format!("point at the origin (index {k})")));
        }
    }
    Ok(())
}

impl JumpMeasure {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            atom_locations: Vec::new(),
            atom_weights: Vec::new(),
            node_locations: Vec::new(),
            node_weights: Vec::new(),
            levy_mass: 0.0,
        }
    }

    /// Atomic measure; `locations` is flat, `dim` coordinates per atom.
    pub fn atomic(dim: usize, locations: &[f64], weights: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        validate_points(dim, locations, weights)?;
        let mut m = Self::zero(dim);
        m.atom_locations = locations.to_vec();
        m.atom_weights = weights.to_vec();
        m.refresh_mass();
        Ok(m)
    }

    /// One-dimensional convenience constructor from `(location, weight)` pairs.
    pub fn atoms_1d(atoms: &[(f64, f64)]) -> Result<Self> {
        let locs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let ws: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        Self::atomic(1, &locs, &ws)
    }

    /// Attach quadrature nodes of a density (integrated by a fixed rule upstream).
    pub fn with_density(mut self, locations: &[f64], weights: &[f64]) -> Result<Self> {
        validate_points(self.dim, locations, weights)?;
        self.node_locations.extend_from_slice(locations);
        self.node_weights.extend_from_slice(weights);
        self.refresh_mass();
        Ok(self)
    }

    fn refresh_mass(&mut self) {
        self.levy_mass = self.iter().map(|(y, w)| w * linalg::dot(y, y).min(1.0)).sum();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atom_weights.len() + self.node_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All support points, atoms first, then density nodes.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        let d = self.dim;
        self.atom_locations
            .chunks(d)
            .zip(self.atom_weights.iter().copied())
            .chain(self.node_locations.chunks(d).zip(self.node_weights.iter().copied()))
    }

    pub fn atoms(&self) -> (&[f64], &[f64]) {
        (&self.atom_locations, &self.atom_weights)
    }

    pub fn density_nodes(&self) -> (&[f64], &[f64]) {
        (&self.node_locations, &self.node_weights)
    }

    /// `∫ min{1, |y|²} ν(dy)`, cached at construction.
    pub fn levy_mass(&self) -> f64 {
        self.levy_mass
    }

    /// `ν(ℝᵈ \ {0})`.
    pub fn total_mass(&self) -> f64 {
        self.iter().map(|(_, w)| w).sum()
    }

    /// `ν({|y| > r})`.
    pub fn mass_beyond(&self, r: f64) -> f64 {
        self.iter().filter(|(y, _)| linalg::norm(y) > r).map(|(_, w)| w).sum()
    }

    pub fn max_jump(&self) -> f64 {
        self.iter().map(|(y, _)| linalg::norm(y)).fold(0.0, f64::max)
    }

    /// `Σ_{0<|y|<1} w·y`, the drift moved by the compensator.
    pub fn compensator_drift(&self) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for (y, w) in self.iter().filter(|(y, _)| is_compensated(y)) {
            for (o, v) in out.iter_mut().zip(y) {
                *o += w * v;
            }
        }
        out
    }

    /// Multiply all weights by `s >= 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidArgument(format!("scale {s} must be >= 0")));
        }
        if s == 0.0 {
            return Ok(Self::zero(self.dim));
        }
        let mut m = self.clone();
        m.atom_weights.iter_mut().for_each(|w| *w *= s);
        m.node_weights.iter_mut().for_each(|w| *w *= s);
        m.refresh_mass();
        Ok(m)
    }

    /// Sum of two measures (support points concatenated, not merged).
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut m = self.clone();
        m.atom_locations.extend_from_slice(&other.atom_locations);
        m.atom_weights.extend_from_slice(&other.atom_weights);
        m.node_locations.extend_from_slice(&other.node_locations);
        m.node_weights.extend_from_slice(&other.node_weights);
        m.refresh_mass();
        Ok(m)
    }
}

/// One set of characteristics `(c, b, Q, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    dim: usize,
    killing: f64,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    jumps: JumpMeasure,
}

impl LevyTriplet {
    /// Validates `c >= 0`, symmetry of `Q` within [`PSD_TOLERANCE`] and its
    /// eigenvalues `>= -PSD_TOLERANCE`; small negative eigenvalues are clamped.
    pub fn new(killing: f64, drift: Vec<f64>, diffusion: Vec<f64>, jumps: JumpMeasure) -> Result<Self> {
        let dim = drift.len();
        check_dim(dim)?;
        if !(killing.is_finite() && killing >= 0.0) {
            return Err(Error::InvalidTriplet(format!("killing rate {killing} must be >= 0")));
        }
        if drift.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTriplet("non-finite drift".to_string()));
        }
        if diffusion.len() != dim * dim {
            return Err(Error::InvalidTriplet(format!(
                "diffusion has {} entries, expected {}",
                diffusion.len(),
                dim * dim
            )));
        }
        if diffusion.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTriplet("non-finite diffusion".to_string()));
        }
        if jumps.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: jumps.dim() });
        }
        let mut diffusion = diffusion;
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (diffusion[i * dim + j], diffusion[j * dim + i]);
                if (a - b).abs() > PSD_TOLERANCE {
                    return Err(Error::InvalidTriplet(format!("diffusion not symmetric: {a} vs {b}")));
                }
                let m = 0.5 * (a + b);
                diffusion[i * dim + j] = m;
                diffusion[j * dim + i] = m;
            }
        }
        let (eig, _) = linalg::symmetric_eigen(&diffusion, dim);
        let min_eig = eig[..dim].iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::InvalidTriplet(format!(
                "diffusion has negative eigenvalue {min_eig}"
            )));
        }
        if min_eig < 0.0 {
            linalg::clamp_psd(&mut diffusion, dim);
        }
        Ok(Self { dim, killing, drift, diffusion, jumps })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            killing: 0.0,
            drift: alloc::vec![0.0; dim],
            diffusion: alloc::vec![0.0; dim * dim],
            jumps: JumpMeasure::zero(dim),
        }
    }

    /// One-dimensional constructor: `(c, b, Q)` scalars and `(y, w)` atoms.
    pub fn one_d(killing: f64, drift: f64, diffusion: f64, atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            killing,
            alloc::vec![drift],
            alloc::vec![diffusion],
            JumpMeasure::atoms_1d(atoms)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn killing(&self) -> f64 {
        self.killing
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    /// Row-major `d x d` diffusion matrix.
    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    pub fn is_conservative(&self) -> bool {
        self.killing == 0.0
    }

    /// Characteristic exponent `q(ξ)`; see [`levy_khintchine_symbol`].
    pub fn symbol(&self, xi: &[f64]) -> Complex64 {
        debug_assert_eq!(xi.len(), self.dim);
        let d = self.dim;
        let b_xi = linalg::dot(&self.drift, xi);
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += xi[i] * self.diffusion[i * d + j] * xi[j];
            }
        }
        let mut re = self.killing + 0.5 * quad;
        let mut im = -b_xi;
        for (y, w) in self.jumps.iter() {
            let phase = linalg::dot(y, xi);
            let comp = if is_compensated(y) { phase } else { 0.0 };
            re += w * (1.0 - phase.cos());
            im += w * (comp - phase.sin());
        }
        Complex64::new(re, im)
    }

    /// `|c| + |b| + |Q|_F + ∫ min{1,|y|²} ν(dy)`.
    pub fn mass(&self) -> f64 {
        self.killing.abs()
            + linalg::norm(&self.drift)
            + linalg::frobenius(&self.diffusion)
            + self.jumps.levy_mass()
    }

    /// Scale every characteristic by `s >= 0`; `q` and the generator scale by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let jumps = self.jumps.scaled(s)?;
        Ok(Self {
            dim: self.dim,
            killing: self.killing * s,
            drift: self.drift.iter().map(|v| v * s).collect(),
            diffusion: self.diffusion.iter().map(|v| v * s).collect(),
            jumps,
        })
    }

    /// Convex combination `(1-λ)·self + λ·other`; the jump measure is the mixture.
    pub fn interpolate(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if lambda <= 0.0 {
            return Ok(self.clone());
        }
        if lambda >= 1.0 {
            return Ok(other.clone());
        }
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect()
        };
        let jumps = self.jumps.scaled(1.0 - lambda)?.union(&other.jumps.scaled(lambda)?)?;
        Ok(Self {
            dim: self.dim,
            killing: (1.0 - lambda) * self.killing + lambda * other.killing,
            drift: mix(&self.drift, &other.drift),
            diffusion: mix(&self.diffusion, &other.diffusion),
            jumps,
        })
    }
}

/// `q(ξ) = c − i b·ξ + ½ ξ·Qξ + Σ w (1 − e^{iy·ξ} + i y·ξ 𝟙_{0<|y|<1})`.
pub fn levy_khintchine_symbol(triplet: &LevyTriplet, xi: &[f64]) -> Complex64 {
    triplet.symbol(xi)
}

pub fn triplet_mass(triplet: &LevyTriplet) -> f64 {
    triplet.mass()
}

/// Control label of a family member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub String);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    /// One triplet per label, independent of `x`.
    Invariant(Vec<LevyTriplet>),
    /// `table[θ][k]` holds the triplet at `nodes[k]` (d = 1); values between
    /// nodes are convex mixtures, values outside are clamped.
    Tabulated { nodes: Vec<f64>, table: Vec<Vec<LevyTriplet>> },
}

/// Finite indexed family `θ ↦ (c_θ(x), b_θ(x), Q_θ(x), ν_θ(x, ·))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicFamily {
    name: String,
    dim: usize,
    labels: Vec<Label>,
    coefficients: Coefficients,
    mass_bound: f64,
}

impl CharacteristicFamily {
    pub fn invariant(labels: Vec<Label>, triplets: Vec<LevyTriplet>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidFamily("index set is empty".to_string()));
        }
        if labels.len() != triplets.len() {
            return Err(Error::InvalidFamily(format!(
                "{} labels for {} triplets",
                labels.len(),
                triplets.len()
            )));
        }
        let dim = triplets[0].dim();
        if let Some(t) = triplets.iter().find(|t| t.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: t.dim() });
        }
        let mass_bound = triplets.iter().map(LevyTriplet::mass).fold(0.0, f64::max);
        Self::check_bound(mass_bound)?;
        Ok(Self {
            name: String::new(),
            dim,
            labels,
            coefficients: Coefficients::Invariant(triplets),
            mass_bound,
        })
    }

    /// The linear case: a single triplet.
    pub fn singleton(triplet: LevyTriplet) -> Self {
        let mass_bound = triplet.mass();
        Self {
            name: String::new(),
            dim: triplet.dim(),
            labels: alloc::vec![Label::from("0")],
            coefficients: Coefficients::Invariant(alloc::vec![triplet]),
            mass_bound,
        }
    }

    /// One-dimensional x-dependent family given on increasing `nodes`.
    pub fn tabulated(labels: Vec<Label>, nodes: Vec<f64>, table: Vec<Vec<LevyTriplet>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidFamily("index set is empty".to_string()));
        }
        if table.len() != labels.len() {
            return Err(Error::InvalidFamily("table rows must match labels".to_string()));
        }
        if nodes.is_empty() || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidFamily("nodes must be strictly increasing".to_string()));
        }
        let mut mass_bound: f64 = 0.0;
        for row in &table {
            if row.len() != nodes.len() {
                return Err(Error::InvalidFamily("table row length must match nodes".to_string()));
            }
            for t in row {
                if t.dim() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: t.dim() });
                }
                mass_bound = mass_bound.max(t.mass());
            }
        }
        Self::check_bound(mass_bound)?;
        Ok(Self {
            name: String::new(),
            dim: 1,
            labels,
            coefficients: Coefficients::Tabulated { nodes, table },
            mass_bound,
        })
    }

    /// Tabulate closed-form coefficients `field(θ, x)` on `nodes`.
    pub fn tabulate<F>(labels: Vec<Label>, nodes: Vec<f64>, mut field: F) -> Result<Self>
    where
        F: FnMut(usize, f64) -> Result<LevyTriplet>,
    {
        let mut table = Vec::with_capacity(labels.len());
        for theta in 0..labels.len() {
            let row = nodes.iter().map(|&x| field(theta, x)).collect::<Result<Vec<_>>>()?;
            table.push(row);
        }
        Self::tabulated(labels, nodes, table)
    }

    fn check_bound(bound: f64) -> Result<()> {
        if bound.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidFamily("characteristics are not uniformly bounded".to_string()))
        }
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, theta: usize) -> &Label {
        &self.labels[theta]
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.coefficients, Coefficients::Invariant(_))
    }

    /// Triplets of a translation-invariant family.
    pub fn invariant_triplets(&self) -> Result<&[LevyTriplet]> {
        match &self.coefficients {
            Coefficients::Invariant(t) => Ok(t),
            Coefficients::Tabulated { .. } => Err(Error::NotTranslationInvariant),
        }
    }

    /// `sup_θ,x` of the triplet mass over the stored coefficients.
    pub fn mass_bound(&self) -> f64 {
        self.mass_bound
    }

    /// Every stored triplet has zero killing rate.
    pub fn is_conservative(&self) -> bool {
        match &self.coefficients {
            Coefficients::Invariant(t) => t.iter().all(LevyTriplet::is_conservative),
            Coefficients::Tabulated { table, .. } => table.iter().flatten().all(LevyTriplet::is_conservative),
        }
    }

    /// Triplet of member `theta` at `x`.
    pub fn at(&self, theta: usize, x: &[f64]) -> Cow<'_, LevyTriplet> {
        match &self.coefficients {
            Coefficients::Invariant(t) => Cow::Borrowed(&t[theta]),
            Coefficients::Tabulated { nodes, table } => {
                let row = &table[theta];
                let x = x[0];
                if x <= nodes[0] {
                    return Cow::Borrowed(&row[0]);
                }
                let last = nodes.len() - 1;
                if x >= nodes[last] {
                    return Cow::Borrowed(&row[last]);
                }
                let k = nodes.partition_point(|&v| v <= x) - 1;
                let lambda = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
                if lambda == 0.0 {
                    return Cow::Borrowed(&row[k]);
                }
                // Both ends are valid triplets, so the mixture is too.
                Cow::Owned(row[k].interpolate(&row[k + 1], lambda).expect("mixture of valid triplets"))
            }
        }
    }
}

/// `sup_θ ν_θ(x, {|y| > r})`.
pub fn tightness_defect(family: &CharacteristicFamily, x: &[f64], r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    Ok((0..family.len())
        .map(|theta| family.at(theta, x).jumps().mass_beyond(r))
        .fold(0.0, f64::max))
}

/// Defect trace over an increasing radius sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TightnessTrace {
    pub radii: Vec<f64>,
    pub defects: Vec<f64>,
    /// First index at which the defect is below `eps` with a non-increasing tail.
    pub settled_at: Option<usize>,
    pub tight: bool,
}

pub fn is_tight(family: &CharacteristicFamily, x: &[f64], radii: &[f64], eps: f64) -> Result<TightnessTrace> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radius sequence must be increasing".to_string()));
    }
    let defects = radii
        .iter()
        .map(|&r| tightness_defect(family, x, r))
        .collect::<Result<Vec<_>>>()?;
    let settled_at = (0..defects.len())
        .find(|&i| defects[i] < eps && defects[i..].windows(2).all(|w| w[1] <= w[0]));
    Ok(TightnessTrace { radii: radii.to_vec(), tight: settled_at.is_some(), defects, settled_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn remark_family(n: usize) -> CharacteristicFamily {
        let labels = (1..=n).map(|k| Label(format!("{k}"))).collect();
        let triplets = (1..=n)
            .map(|k| LevyTriplet::one_d(0.0, 0.0, 0.0, &[(k as f64, 0.5), (-(k as f64), 0.5)]).unwrap())
            .collect();
        CharacteristicFamily::invariant(labels, triplets).unwrap()
    }

    #[test]
    fn empty_characteristics_have_zero_symbol() {
        let t = LevyTriplet::zero(1);
        assert_eq!(t.symbol(&[3.7]), Complex64::new(0.0, 0.0));
        assert_eq!(t.mass(), 0.0);
    }

    #[test]
    fn brownian_symbol_is_half_xi_squared() {
        let t = LevyTriplet::one_d(0.0, 0.0, 1.0, &[]).unwrap();
        let q = t.symbol(&[2.0]);
        assert_eq!(q, Complex64::new(2.0, 0.0));
    }

    #[test]
    fn symmetric_pair_gives_one_minus_cos() {
        let t = LevyTriplet::one_d(0.0, 0.0, 0.0, &[(3.0, 0.5), (-3.0, 0.5)]).unwrap();
        let q = t.symbol(&[1.0]);
        assert!((q.re - (1.0 - 3.0f64.cos())).abs() < 1e-15);
        assert!((q.re - 1.98999).abs() < 1e-5);
        assert!(q.im.abs() < 1e-15);
        // Compensated pair: the i·y·ξ terms cancel as well.
        let t = LevyTriplet::one_d(0.0, 0.0, 0.0, &[(0.3, 0.5), (-0.3, 0.5)]).unwrap();
        assert!(t.symbol(&[1.7]).im.abs() < 1e-15);
    }

    #[test]
    fn unit_jump_is_not_compensated() {
        let t = LevyTriplet::one_d(0.0, 0.0, 0.0, &[(1.0, 1.0)]).unwrap();
        let xi = 0.8;
        let q = t.symbol(&[xi]);
        assert_eq!(q.im, -xi.sin());
        let t = LevyTriplet::one_d(0.0, 0.0, 0.0, &[(0.999, 1.0)]).unwrap();
        assert!((t.symbol(&[xi]).im - (0.999 * xi - (0.999 * xi).sin())).abs() < 1e-15);
    }

    #[test]
    fn mass_examples() {
        let t = LevyTriplet::one_d(1.0, 2.0, 9.0, &[(0.5, 4.0)]).unwrap();
        // Independent scalar evaluation of the bracket.
        let expected = 1.0f64.abs() + 2.0f64.abs() + 9.0f64.abs() + 4.0 * (0.5f64 * 0.5).min(1.0);
        assert_eq!(expected, 13.0);
        assert_eq!(t.mass(), expected);
        let t = LevyTriplet::one_d(0.0, 0.0, 0.0, &[(2.0, 3.0)]).unwrap();
        assert_eq!(t.mass(), 3.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(LevyTriplet::one_d(-0.1, 0.0, 0.0, &[]).is_err());
        assert!(LevyTriplet::one_d(0.0, 0.0, -1e-6, &[]).is_err());
        assert!(LevyTriplet::one_d(0.0, 0.0, 0.0, &[(0.0, 1.0)]).is_err());
        assert!(LevyTriplet::one_d(0.0, 0.0, 0.0, &[(1.0, 0.0)]).is_err());
        assert!(LevyTriplet::new(0.0, vec![0.0, 0.0], vec![1.0, 0.5, 0.4, 1.0], JumpMeasure::zero(2)).is_err());
        assert!(CharacteristicFamily::invariant(vec![], vec![]).is_err());
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clamped() {
        let t = LevyTriplet::new(
            0.0,
            vec![0.0, 0.0],
            vec![1.0, 1.0, 1.0, 1.0 - 5e-13],
            JumpMeasure::zero(2),
        )
        .unwrap();
        let (eig, _) = linalg::symmetric_eigen(t.diffusion(), 2);
        assert!(eig[0] >= 0.0 && eig[1] >= 0.0);
    }

    #[test]
    fn defect_examples() {
        let f = remark_family(10);
        assert_eq!(tightness_defect(&f, &[0.0], 5.0).unwrap(), 1.0);
        let single = CharacteristicFamily::singleton(LevyTriplet::one_d(0.0, 0.0, 0.0, &[(3.0, 2.0)]).unwrap());
        assert_eq!(tightness_defect(&single, &[0.0], 2.5).unwrap(), 2.0);
        let compact = CharacteristicFamily::singleton(LevyTriplet::one_d(0.0, 0.0, 0.0, &[(0.5, 2.0), (-1.0, 1.0)]).unwrap());
        assert_eq!(tightness_defect(&compact, &[0.0], 2.0).unwrap(), 0.0);
        assert!(tightness_defect(&compact, &[0.0], 0.0).is_err());
    }

    #[test]
    fn tightness_traces() {
        let f = remark_family(10);
        let radii: Vec<f64> = (1..=12).map(|k| k as f64 - 0.5).collect();
        let trace = is_tight(&f, &[0.0], &radii, 0.5).unwrap();
        assert!(trace.tight);
        for (r, d) in trace.radii.iter().zip(&trace.defects) {
            if *r < 10.0 {
                assert!(*d >= 1.0);
            } else {
                assert_eq!(*d, 0.0);
            }
        }
        let labels = (1..=100).map(|k| Label(format!("{k}"))).collect();
        let triplets = (1..=100).map(|k| LevyTriplet::one_d(0.0, 0.0, 0.0, &[(k as f64, 1.0)]).unwrap()).collect();
        let f = CharacteristicFamily::invariant(labels, triplets).unwrap();
        let radii: Vec<f64> = (1..=50).map(|k| k as f64).collect();
        let trace = is_tight(&f, &[0.0], &radii, 0.5).unwrap();
        assert!(!trace.tight);
        assert!(trace.defects.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn tabulated_family_interpolates() {
        let labels = vec![Label::from("a")];
        let f = CharacteristicFamily::tabulate(labels, vec![0.0, 1.0], |_, x| LevyTriplet::one_d(x, 2.0 * x, 0.0, &[])).unwrap();
        let t = f.at(0, &[0.25]);
        assert!((t.killing() - 0.25).abs() < 1e-15);
        assert!((t.drift()[0] - 0.5).abs() < 1e-15);
        assert_eq!(f.at(0, &[5.0]).killing(), 1.0);
        assert!(!f.is_translation_invariant());
    }
}
