use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConvexTerm, EnergyFlags, EnergyFunctional};
use crate::space::{Field, MeasureSpace, PointSet};
use crate::{Error, Result};

const EVEN_GROUNDED: EnergyFlags = EnergyFlags { even: true, grounded: true, translation_invariant: false };

fn free(n: usize) -> Vec<(f64, f64)> {
    vec![(f64::NEG_INFINITY, f64::INFINITY); n]
}

fn unit_box(n: usize) -> Vec<(f64, f64)> {
    vec![(-1.0, 1.0); n]
}

#[derive(Debug)]
struct Quadratic {
    q: DMatrix<f64>,
}

impl ConvexTerm for Quadratic {
    fn value(&self, u: &[f64]) -> f64 {
        let n = u.len();
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.q[(i, j)] * u[j];
            }
            s += u[i] * row;
        }
        s
    }

    fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for i in 0..n {
            out[i] = 2.0 * (0..n).map(|j| self.q[(i, j)] * u[j]).sum::<f64>();
        }
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn quadratic_form(&self) -> Option<DMatrix<f64>> {
        Some(self.q.clone())
    }
}

/// An edge `{i, j}` with weight `w ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(schemars::JsonSchema)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// `Σ_edges w |u_i − u_j|^p`.
#[derive(Debug)]
struct GraphTerm {
    edges: Vec<Edge>,
    p: f64,
    n: usize,
}

impl GraphTerm {
    fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.i, e.i)] += e.w;
            l[(e.j, e.j)] += e.w;
            l[(e.i, e.j)] -= e.w;
            l[(e.j, e.i)] -= e.w;
        }
        l
    }
}

impl ConvexTerm for GraphTerm {
    fn value(&self, u: &[f64]) -> f64 {
        let p = self.p;
        self.edges
            .iter()
            .map(|e| {
                let d = (u[e.i] - u[e.j]).abs();
                e.w * if p == 1.0 {
                    d
                } else if p == 2.0 {
                    d * d
                } else {
                    d.powf(p)
                }
            })
            .sum()
    }

    fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for e in &self.edges {
            let d = u[e.i] - u[e.j];
            let g = if self.p == 1.0 {
                e.w * sign(d)
            } else {
                e.w * self.p * d.abs().powf(self.p - 1.0) * sign(d)
            };
            out[e.i] += g;
            out[e.j] -= g;
        }
    }

    fn is_smooth(&self) -> bool {
        self.p >= 2.0
    }

    fn is_polyhedral(&self) -> bool {
        self.p == 1.0
    }

    fn quadratic_form(&self) -> Option<DMatrix<f64>> {
        (self.p == 2.0).then(|| self.laplacian())
    }
}

/// Sign with `sign(0) = 0`, a valid selection of `∂|·|`.
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The collar `(|h|₁ − 1)₊`, squared or not.
#[derive(Debug)]
struct CollarTerm {
    squared: bool,
}

impl ConvexTerm for CollarTerm {
    fn value(&self, u: &[f64]) -> f64 {
        let s = (u.iter().map(|x| x.abs()).sum::<f64>() - 1.0).max(0.0);
        if self.squared {
            s * s
        } else {
            s
        }
    }

    fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        let s = u.iter().map(|x| x.abs()).sum::<f64>() - 1.0;
        let scale = match (self.squared, s > 0.0) {
            (_, false) => 0.0,
            (true, true) => 2.0 * s,
            (false, true) => 1.0,
        };
        for (o, x) in out.iter_mut().zip(u) {
            *o = scale * sign(*x);
        }
    }

    fn is_smooth(&self) -> bool {
        self.squared
    }

    fn is_polyhedral(&self) -> bool {
        !self.squared
    }
}

/// `Σ_i (u_{i+1} − u_i)₊`.
#[derive(Debug)]
struct OneSidedTerm;

impl ConvexTerm for OneSidedTerm {
    fn value(&self, u: &[f64]) -> f64 {
        u.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
    }

    fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..u.len().saturating_sub(1) {
            if u[i + 1] > u[i] {
                out[i + 1] += 1.0;
                out[i] -= 1.0;
            }
        }
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn is_polyhedral(&self) -> bool {
        true
    }
}

/// `E ≡ 0`.
pub fn zero_energy(space: &Arc<MeasureSpace>) -> EnergyFunctional {
    let n = space.len();
    let flags = EnergyFlags { even: true, grounded: true, translation_invariant: true };
    EnergyFunctional::new("zero", space.clone(), Arc::new(Quadratic { q: DMatrix::zeros(n, n) }), free(n), flags, Field::zeros(space))
        .expect("zero energy is proper")
}

/// `E(u) = ‖u‖² = Σ m_i u_i²`.
pub fn squared_l2(space: &Arc<MeasureSpace>) -> EnergyFunctional {
    let n = space.len();
    let q = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(space.weights()));
    EnergyFunctional::new("squared_l2", space.clone(), Arc::new(Quadratic { q }), free(n), EVEN_GROUNDED, Field::zeros(space))
        .expect("squared norm is proper")
}

/// `E(u) = Σ_{edges} w |u_i − u_j|^p` with `p ≥ 1`.
///
/// Repeated edges accumulate; zero-weight edges and self-loops are dropped.
pub fn graph_p_energy(space: &Arc<MeasureSpace>, edges: &[Edge], p: f64) -> Result<EnergyFunctional> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be a finite number >= 1, got {p}")));
    }
    let n = space.len();
    let mut kept: Vec<Edge> = Vec::with_capacity(edges.len());
    for e in edges {
        if e.i >= n || e.j >= n {
            return Err(Error::InvalidParameter(format!("edge ({}, {}) refers to a point outside 0..{n}", e.i, e.j)));
        }
        if !(e.w >= 0.0 && e.w.is_finite()) {
            return Err(Error::InvalidParameter(format!("edge ({}, {}) has invalid weight {}", e.i, e.j, e.w)));
        }
        if e.w == 0.0 || e.i == e.j {
            continue;
        }
        let (i, j) = (e.i.min(e.j), e.i.max(e.j));
        match kept.iter_mut().find(|k| k.i == i && k.j == j) {
            Some(k) => k.w += e.w,
            None => kept.push(Edge { i, j, w: e.w }),
        }
    }
    kept.sort_by_key(|e| (e.i, e.j));
    let flags = EnergyFlags { even: true, grounded: true, translation_invariant: true };
    let n_edges = kept.len();
    let term = GraphTerm { edges: kept, p, n };
    Ok(EnergyFunctional::new("graph_p_energy", space.clone(), Arc::new(term), free(n), flags, Field::zeros(space))?
        .with_param("p", p)
        .with_param("edges", n_edges))
}

/// Discrete `∫₀¹ |u′|²` on an `n`-point path grid with `Δx = 1/(n−1)`,
/// restricted to the unit box.
pub fn box_h1(n: usize) -> Result<EnergyFunctional> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("box_h1 needs at least 2 points, got {n}")));
    }
    box_h1_with_dx(n, 1.0 / (n - 1) as f64)
}

/// `E(u) = Σ_i (u_{i+1} − u_i)²/Δx` if `‖u‖∞ ≤ 1`, else `+∞`.
pub fn box_h1_with_dx(n: usize, dx: f64) -> Result<EnergyFunctional> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("box_h1 needs at least 2 points, got {n}")));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::InvalidParameter(format!("dx must be positive, got {dx}")));
    }
    let space = MeasureSpace::path_grid(n)?;
    let edges: Vec<Edge> = (0..n - 1).map(|i| Edge { i, j: i + 1, w: 1.0 / dx }).collect();
    let term = GraphTerm { edges, p: 2.0, n };
    Ok(EnergyFunctional::new("box_h1", space.clone(), Arc::new(term), unit_box(n), EVEN_GROUNDED, Field::zeros(&space))?
        .with_param("n", n)
        .with_param("dx", dx))
}

fn r2_space() -> Arc<MeasureSpace> {
    MeasureSpace::uniform(2).expect("two unit atoms")
}

/// `(|h|₁ − 1)₊²` on the box `|h|∞ ≤ 1` of the two-point space.
pub fn r2_quadratic_box() -> EnergyFunctional {
    let space = r2_space();
    EnergyFunctional::new("r2_quadratic_box", space.clone(), Arc::new(CollarTerm { squared: true }), unit_box(2), EVEN_GROUNDED, Field::zeros(&space))
        .expect("collar energy is proper")
}

/// `(|h|₁ − 1)₊` on the box `|h|∞ ≤ 1` of the two-point space.
pub fn r2_linear_box() -> EnergyFunctional {
    let space = r2_space();
    EnergyFunctional::new("r2_linear_box", space.clone(), Arc::new(CollarTerm { squared: false }), unit_box(2), EVEN_GROUNDED, Field::zeros(&space))
        .expect("collar energy is proper")
}

/// `E(u) = Σ_i (u_{i+1} − u_i)₊` in the point order of `space`.
pub fn one_sided_slope(space: &Arc<MeasureSpace>) -> Result<EnergyFunctional> {
    let n = space.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("one_sided_slope needs at least 2 points, got {n}")));
    }
    let flags = EnergyFlags { even: false, grounded: true, translation_invariant: true };
    EnergyFunctional::new("one_sided_slope", space.clone(), Arc::new(OneSidedTerm), free(n), flags, Field::zeros(space))
}

/// `E + I_{H_P}`: the energy of `u` if `u` vanishes off `y`, else `+∞`.
pub fn restrict_to_subspace(e: &EnergyFunctional, y: &PointSet) -> Result<EnergyFunctional> {
    let space = e.space().clone();
    let mask = y.mask(&space)?;
    let mut lo = e.lower().to_vec();
    let mut hi = e.upper().to_vec();
    for (i, inside) in mask.iter().enumerate() {
        if !inside {
            if !(lo[i] <= 0.0 && 0.0 <= hi[i]) {
                return Err(Error::InvalidParameter(format!(
                    "restriction has empty domain: coordinate {i} cannot vanish"
                )));
            }
            lo[i] = 0.0;
            hi[i] = 0.0;
        }
    }
    let zero = Field::zeros(&space);
    let masked = e.witness().indicator_multiply(y)?;
    let candidate = [zero, masked]
        .into_iter()
        .find(|w| e.value_raw(w.values()).is_finite())
        .ok_or_else(|| Error::InvalidParameter("restriction has no finite-energy witness".into()))?;
    let mut flags = e.flags();
    flags.translation_invariant &= y.len() == space.len();
    let name = format!("restrict({})", e.name());
    Ok(e.clone()
        .restricted(name, lo, hi, candidate)
        .with_flags(flags)
        .with_param("subset", y.indices().iter().map(|&i| space.points()[i].clone()).collect::<Vec<_>>()))
}

/// `Ě = E − E(0)`.
pub fn ground_energy(e: &EnergyFunctional) -> Result<EnergyFunctional> {
    let e0 = e.evaluate(&Field::zeros(e.space()))?;
    let e0 = e0.finite_value().ok_or(Error::InfiniteAtZero)?;
    if e0 == 0.0 {
        let flags = EnergyFlags { grounded: true, ..e.flags() };
        return Ok(e.clone().with_flags(flags));
    }
    Ok(e.clone().shifted(format!("ground({})", e.name()), -e0, true))
}

/// `E + c`.
pub fn shift_energy(e: &EnergyFunctional, c: f64) -> Result<EnergyFunctional> {
    if !c.is_finite() {
        return Err(Error::InvalidParameter(format!("shift must be finite, got {c}")));
    }
    let grounded = e.flags().grounded && c == 0.0;
    Ok(e.clone().shifted(format!("shift({})", e.name()), c, grounded).with_param("shift", c))
}

/// A point named by index or by identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[derive(schemars::JsonSchema)]
pub enum PointRef {
    Index(usize),
    Id(String),
}

impl PointRef {
    pub fn resolve(&self, space: &MeasureSpace) -> Result<usize> {
        match self {
            PointRef::Index(i) if *i < space.len() => Ok(*i),
            PointRef::Index(i) => Err(Error::UnknownPoint(i.to_string())),
            PointRef::Id(s) => space.index_of(s).ok_or_else(|| Error::UnknownPoint(s.clone())),
        }
    }
}

fn default_weight() -> f64 {
    1.0
}

fn default_probability() -> f64 {
    0.5
}

fn default_min_weight() -> f64 {
    0.1
}

/// Edge sets for graph energies in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub enum GraphSpec {
    /// Listed edges `[a, b, w]`.
    Explicit { edges: Vec<(PointRef, PointRef, f64)> },
    /// Consecutive points in space order.
    Path {
        #[serde(default = "default_weight")]
        weight: f64,
    },
    Cycle {
        #[serde(default = "default_weight")]
        weight: f64,
    },
    Complete {
        #[serde(default = "default_weight")]
        weight: f64,
    },
    /// Each pair is an edge with the given probability, weight uniform in
    /// `[min_weight, max_weight]`.
    Random {
        seed: u64,
        #[serde(default = "default_probability")]
        probability: f64,
        #[serde(default = "default_min_weight")]
        min_weight: f64,
        #[serde(default = "default_weight")]
        max_weight: f64,
    },
    /// Complete graphs on each block, no edges between blocks.
    Blocks {
        blocks: Vec<Vec<PointRef>>,
        #[serde(default = "default_weight")]
        weight: f64,
    },
}

impl GraphSpec {
    pub fn edges(&self, space: &MeasureSpace) -> Result<Vec<Edge>> {
        let n = space.len();
        let mut out = Vec::new();
        match self {
            GraphSpec::Explicit { edges } => {
                for (a, b, w) in edges {
                    out.push(Edge { i: a.resolve(space)?, j: b.resolve(space)?, w: *w });
                }
            }
            GraphSpec::Path { weight } => out.extend((1..n).map(|i| Edge { i: i - 1, j: i, w: *weight })),
            GraphSpec::Cycle { weight } => {
                out.extend((1..n).map(|i| Edge { i: i - 1, j: i, w: *weight }));
                if n > 2 {
                    out.push(Edge { i: n - 1, j: 0, w: *weight });
                }
            }
            GraphSpec::Complete { weight } => {
                for i in 0..n {
                    out.extend((i + 1..n).map(|j| Edge { i, j, w: *weight }));
                }
            }
            GraphSpec::Random { seed, probability, min_weight, max_weight } => {
                if !(0.0..=1.0).contains(probability) || !(0.0 <= *min_weight && min_weight <= max_weight) {
                    return Err(Error::InvalidParameter("random graph needs probability in [0,1] and 0 <= min_weight <= max_weight".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for i in 0..n {
                    for j in i + 1..n {
                        let keep = rng.gen::<f64>() < *probability;
                        let w = min_weight + (max_weight - min_weight) * rng.gen::<f64>();
                        if keep {
                            out.push(Edge { i, j, w });
                        }
                    }
                }
            }
            GraphSpec::Blocks { blocks, weight } => {
                for block in blocks {
                    let idx = block.iter().map(|p| p.resolve(space)).collect::<Result<Vec<_>>>()?;
                    for (a, &i) in idx.iter().enumerate() {
                        out.extend(idx[a + 1..].iter().map(|&j| Edge { i, j, w: *weight }));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Builtin energies addressable by `{"kind": ..., params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub enum EnergySpec {
    Zero,
    SquaredL2,
    GraphPEnergy { p: f64, graph: GraphSpec },
    /// Builds its own `n`-point path grid.
    BoxH1 { n: usize, dx: Option<f64> },
    /// Builds its own two-point space.
    R2QuadraticBox,
    R2LinearBox,
    /// Builds its own `n`-point path grid.
    OneSidedSlope { n: usize },
    Luxembourg { base: Box<EnergySpec> },
    Restrict { base: Box<EnergySpec>, subset: Vec<PointRef> },
    Ground { base: Box<EnergySpec> },
    Shift { base: Box<EnergySpec>, constant: f64 },
}

impl EnergySpec {
    /// Names of every builtin kind, in listing order.
    pub const KINDS: &'static [(&'static str, &'static str)] = &[
        ("zero", "{}"),
        ("squared_l2", "{}"),
        ("graph_p_energy", "{p: number >= 1, graph: {kind: explicit|path|cycle|complete|random|blocks, ...}}"),
        ("box_h1", "{n: integer >= 2, dx?: number}"),
        ("r2_quadratic_box", "{}"),
        ("r2_linear_box", "{}"),
        ("one_sided_slope", "{n: integer >= 2}"),
        ("luxembourg", "{base: energy}"),
        ("restrict", "{base: energy, subset: [point]}"),
        ("ground", "{base: energy}"),
        ("shift", "{base: energy, constant: number}"),
    ];

    /// Whether this kind constructs its own measure space.
    pub fn owns_space(&self) -> bool {
        match self {
            EnergySpec::BoxH1 { .. } | EnergySpec::R2QuadraticBox | EnergySpec::R2LinearBox | EnergySpec::OneSidedSlope { .. } => true,
            EnergySpec::Luxembourg { base } | EnergySpec::Restrict { base, .. } | EnergySpec::Ground { base } | EnergySpec::Shift { base, .. } => {
                base.owns_space()
            }
            _ => false,
        }
    }

    /// Builds the energy. `path` names this spec's location for diagnostics.
    pub fn build(&self, space: Option<&Arc<MeasureSpace>>, path: &str) -> Result<EnergyFunctional> {
        let at = |field: &str, e: Error| Error::config(format!("{path}.{field}"), e.to_string());
        let need_space = || space.cloned().ok_or_else(|| Error::config("space", format!("required by energy at `{path}`")));
        if self.owns_space() && space.is_some() {
            return Err(Error::config("space", format!("energy at `{path}` builds its own space; remove `space`")));
        }
        match self {
            EnergySpec::Zero => Ok(zero_energy(&need_space()?)),
            EnergySpec::SquaredL2 => Ok(squared_l2(&need_space()?)),
            EnergySpec::GraphPEnergy { p, graph } => {
                let space = need_space()?;
                let edges = graph.edges(&space).map_err(|e| at("graph", e))?;
                graph_p_energy(&space, &edges, *p).map_err(|e| at("p", e))
            }
            EnergySpec::BoxH1 { n, dx } => match dx {
                Some(dx) => box_h1_with_dx(*n, *dx).map_err(|e| at("dx", e)),
                None => box_h1(*n).map_err(|e| at("n", e)),
            },
            EnergySpec::R2QuadraticBox => Ok(r2_quadratic_box()),
            EnergySpec::R2LinearBox => Ok(r2_linear_box()),
            EnergySpec::OneSidedSlope { n } => {
                let space = MeasureSpace::path_grid(*n).map_err(|e| at("n", e))?;
                one_sided_slope(&space).map_err(|e| at("n", e))
            }
            EnergySpec::Luxembourg { base } => {
                let b = base.build(space, &format!("{path}.base"))?;
                super::luxembourg(&b).map_err(|e| at("base", e))
            }
            EnergySpec::Restrict { base, subset } => {
                let b = base.build(space, &format!("{path}.base"))?;
                let idx = subset.iter().map(|p| p.resolve(b.space())).collect::<Result<Vec<_>>>().map_err(|e| at("subset", e))?;
                let y = PointSet::from_indices(b.space(), idx).map_err(|e| at("subset", e))?;
                restrict_to_subspace(&b, &y).map_err(|e| at("subset", e))
            }
            EnergySpec::Ground { base } => {
                let b = base.build(space, &format!("{path}.base"))?;
                ground_energy(&b).map_err(|e| at("base", e))
            }
            EnergySpec::Shift { base, constant } => {
                let b = base.build(space, &format!("{path}.base"))?;
                shift_energy(&b, *constant).map_err(|e| at("constant", e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Capability;

    fn field(space: &Arc<MeasureSpace>, v: &[f64]) -> Field {
        Field::new(space.clone(), v.to_vec()).unwrap()
    }

    fn two_node(p: f64) -> EnergyFunctional {
        let s = MeasureSpace::uniform(2).unwrap();
        graph_p_energy(&s, &[Edge { i: 0, j: 1, w: 1.0 }], p).unwrap()
    }

    #[test]
    fn graph_examples() {
        let e = two_node(2.0);
        let s = e.space().clone();
        assert_eq!(e.evaluate(&field(&s, &[1.0, 0.0])).unwrap().value(), 1.0);
        assert_eq!(e.evaluate(&field(&s, &[3.5, 3.5])).unwrap().value(), 0.0);
        assert_eq!(e.capability(), Capability::ClosedFormProx);
        let e3 = two_node(3.0);
        assert_eq!(e3.evaluate(&field(&s, &[2.0, 0.0])).unwrap().value(), 8.0);
        assert_eq!(e3.capability(), Capability::SmoothPlusBox);
        assert_eq!(two_node(1.0).capability(), Capability::SubgradientOnly);
        assert!(graph_p_energy(&s, &[], 0.5).is_err());
    }

    #[test]
    fn box_h1_examples() {
        let e = box_h1(3).unwrap();
        let s = e.space().clone();
        assert_eq!(e.evaluate(&Field::zeros(&s)).unwrap().value(), 0.0);
        assert!((e.evaluate(&field(&s, &[0.0, 0.5, 1.0])).unwrap().value() - 1.0).abs() < 1e-15);
        assert!(e.evaluate(&field(&s, &[0.0, 1.01, 0.0])).unwrap().is_infinite());
        assert_eq!(e.capability(), Capability::SmoothPlusBox);
        assert_eq!(e.project_domain(&field(&s, &[2.0, -3.0, 0.5])).unwrap().values(), &[1.0, -1.0, 0.5]);
    }

    #[test]
    fn r2_examples() {
        let q = r2_quadratic_box();
        let l = r2_linear_box();
        let s = q.space().clone();
        let ev = |e: &EnergyFunctional, v: &[f64]| e.evaluate(&field(&s, v)).unwrap().value();
        assert_eq!(ev(&q, &[0.5, 0.3]), 0.0);
        assert!((ev(&q, &[0.9, 0.6]) - 0.25).abs() < 1e-15);
        assert!(ev(&q, &[1.5, 0.2]).is_infinite());
        assert_eq!(ev(&l, &[0.5, 0.3]), 0.0);
        assert!((ev(&l, &[0.9, 0.6]) - 0.5).abs() < 1e-15);
        assert!(ev(&l, &[0.0, 1.2]).is_infinite());
        let h = [0.9, 0.6];
        assert!(ev(&q, &[h[0], 0.0]) + ev(&q, &[0.0, h[1]]) < ev(&q, &h));
        assert_eq!(q.capability(), Capability::SmoothPlusBox);
        assert_eq!(l.capability(), Capability::SubgradientOnly);
    }

    #[test]
    fn one_sided_examples() {
        let s = MeasureSpace::path_grid(3).unwrap();
        let e = one_sided_slope(&s).unwrap();
        assert_eq!(e.evaluate(&field(&s, &[0.0, 1.0, 2.0])).unwrap().value(), 2.0);
        assert_eq!(e.evaluate(&field(&s, &[2.0, 1.0, 0.0])).unwrap().value(), 0.0);
        assert_eq!(e.evaluate(&field(&s, &[4.0, 4.0, 4.0])).unwrap().value(), 0.0);
        assert!(!e.flags().even);
    }

    #[test]
    fn restriction_and_grounding() {
        let s = MeasureSpace::uniform(4).unwrap();
        let blocks = GraphSpec::Blocks {
            blocks: vec![vec![PointRef::Index(0), PointRef::Index(1)], vec![PointRef::Index(2), PointRef::Index(3)]],
            weight: 1.0,
        };
        let e = graph_p_energy(&s, &blocks.edges(&s).unwrap(), 2.0).unwrap();
        let y = PointSet::from_indices(&s, vec![0, 1]).unwrap();
        let r = restrict_to_subspace(&e, &y).unwrap();
        let inside = field(&s, &[1.0, -1.0, 0.0, 0.0]);
        assert_eq!(r.evaluate(&inside).unwrap(), e.evaluate(&inside).unwrap());
        assert!(r.evaluate(&field(&s, &[0.0, 0.0, 1.0, 0.0])).unwrap().is_infinite());
        assert_eq!(r.capability(), Capability::ClosedFormProx);
        let all = restrict_to_subspace(&e, &PointSet::all(&s)).unwrap();
        assert_eq!(all.evaluate(&inside).unwrap(), e.evaluate(&inside).unwrap());

        let shifted = shift_energy(&e, 5.0).unwrap();
        assert!(!shifted.flags().grounded);
        let g = ground_energy(&shifted).unwrap();
        assert!(g.flags().grounded);
        assert_eq!(g.evaluate(&inside).unwrap(), e.evaluate(&inside).unwrap());
        let b = box_h1(5).unwrap();
        let gb = ground_energy(&b).unwrap();
        assert_eq!(gb.name(), "box_h1");
    }

    #[test]
    fn builtins_pass_spot_checks() {
        let s = MeasureSpace::with_weights(vec![0.5, 1.0, 2.0, 1.5, 0.25]).unwrap();
        let edges = GraphSpec::Random { seed: 3, probability: 0.6, min_weight: 0.1, max_weight: 1.0 }.edges(&s).unwrap();
        let mut all = vec![zero_energy(&s), squared_l2(&s), box_h1(6).unwrap(), r2_quadratic_box(), r2_linear_box()];
        for p in [1.0, 1.5, 2.0, 3.0] {
            all.push(graph_p_energy(&s, &edges, p).unwrap());
        }
        all.push(one_sided_slope(&MeasureSpace::path_grid(5).unwrap()).unwrap());
        for e in &all {
            e.spot_check(11, 100).unwrap_or_else(|err| panic!("{}: {err}", e.name()));
        }
    }

    #[test]
    fn spot_check_catches_false_flags() {
        let s = MeasureSpace::path_grid(4).unwrap();
        let lying = one_sided_slope(&s).unwrap().with_flags(EnergyFlags { even: true, grounded: true, translation_invariant: true });
        assert!(matches!(lying.spot_check(1, 50), Err(Error::SpotCheck(_))));
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"restrict","base":{"kind":"graph_p_energy","p":2,"graph":{"kind":"path"}},"subset":["0",1]}"#;
        let spec: EnergySpec = serde_json::from_str(json).unwrap();
        let s = MeasureSpace::uniform(3).unwrap();
        let e = spec.build(Some(&s), "energy").unwrap();
        assert!(e.evaluate(&field(&s, &[0.0, 0.0, 1.0])).unwrap().is_infinite());
        let bad: EnergySpec = serde_json::from_str(r#"{"kind":"graph_p_energy","p":0.5,"graph":{"kind":"path"}}"#).unwrap();
        match bad.build(Some(&s), "energy") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "energy.p"),
            other => panic!("unexpected {other:?}"),
        }
        let own: EnergySpec = serde_json::from_str(r#"{"kind":"box_h1","n":4}"#).unwrap();
        assert!(own.build(Some(&s), "energy").is_err());
        assert!(serde_json::from_str::<EnergySpec>(r#"{"kind":"nope"}"#).is_err());
    }
}
