//! Integral patches of a subspace family.
//!
//! The patch is the graph `z ↦ z + ψ(z)` over a grid in `M₀`-coordinates,
//! where `ψ` solves `ψ′(z) = α(z + ψ(z))` with `ψ` equal to the `E*`-part of
//! `x₀` at the base node. The PDE is integrated along axis-ordered polylines
//! with the classical fourth-order Runge–Kutta method; re-integrating along the
//! reversed axis order measures how path-independent the result is.

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::family::{DifferentiableMap, SubspaceFamily};
use crate::geninv::{ball_check, d_op, GenInverse};
use crate::linalg::{kernel_of, oblique_projector, Vector};

/// A rectangular grid centred on the base point with an odd number of nodes per axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    /// Half-width per axis.
    pub extent: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl GridSpec {
    pub fn new(extent: Vec<f64>, nodes: Vec<usize>) -> Result<Self> {
        if extent.len() != nodes.len() {
            return Err(Error::Grid(format!(
                "{} extents for {} axes",
                extent.len(),
                nodes.len()
            )));
        }
        for (e, &n) in extent.iter().zip(&nodes) {
            if !(e.is_finite() && *e > 0.0) {
                return Err(Error::Grid(format!("extent {e} is not a positive number")));
            }
            if n % 2 == 0 {
                return Err(Error::Grid(format!("{n} nodes per axis: the count must be odd")));
            }
        }
        Ok(Self { extent, nodes })
    }

    /// Same extent and node count on every axis.
    pub fn uniform(dim: usize, extent: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![extent; dim], vec![nodes; dim])
    }

    /// Node spacing equal to `step` (rounded so the extent is hit exactly).
    pub fn with_spacing(dim: usize, extent: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Step(step));
        }
        let half = (extent / step).round().max(1.0) as usize;
        Self::uniform(dim, extent, 2 * half + 1)
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn half(&self, axis: usize) -> usize {
        self.nodes[axis] / 2
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        match self.half(axis) {
            0 => 0.0,
            h => self.extent[axis] / h as f64,
        }
    }

    /// Row-major flat index, last axis fastest.
    fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.nodes).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    fn multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            out[axis] = idx % self.nodes[axis];
            idx /= self.nodes[axis];
        }
        out
    }

    fn center(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.half(a)).collect()
    }

    fn offset(&self, multi: &[usize]) -> Vector {
        Vector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|a| (multi[a] as f64 - self.half(a) as f64) * self.spacing(a)),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchBase {
    /// `M₀`-coordinates of `P^{E*}_{M₀}x₀`.
    pub m0: Vec<f64>,
    /// `E*`-coordinates of `P^{M₀}_{E*}x₀`.
    pub estar: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Breach {
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchDiagnostics {
    pub step: f64,
    pub spacing: Vec<f64>,
    pub substeps: Vec<usize>,
    pub initial_condition_error: f64,
    /// Largest gap between the axis-ordered and reversed-order sweeps.
    pub path_residual: f64,
    pub tangency_residual: Option<f64>,
    /// Largest gap between finite-difference `∂ψ/∂zᵢ` and `α·eᵢ`.
    pub ode_residual: Option<f64>,
    pub breaches: Vec<Breach>,
    pub unreached: usize,
    /// Grid indices whose reconstructed point is outside the co-final set.
    pub non_cofinal_nodes: Vec<usize>,
}

/// A discrete graph `ψ` over a grid in `M₀`-coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct IntegralPatch {
    pub nodes_per_axis: Vec<usize>,
    /// Absolute `M₀`-coordinates of every node, in row-major grid order.
    pub grid: Vec<Vec<f64>>,
    /// `E*`-coordinates of `ψ`, `None` beyond a co-final breach.
    pub psi: Vec<Option<Vec<f64>>>,
    pub base: PatchBase,
    pub diagnostics: PatchDiagnostics,
}

impl IntegralPatch {
    pub fn is_complete(&self) -> bool {
        self.diagnostics.unreached == 0 && self.diagnostics.non_cofinal_nodes.is_empty()
    }

    /// The patch itself, or the first breach as an error.
    pub fn require_complete(self) -> Result<Self> {
        if let Some(b) = self.diagnostics.breaches.first() {
            return Err(Error::CofinalBreach {
                point: b.point.clone(),
                reason: b.reason.clone(),
            });
        }
        if let Some(&i) = self.diagnostics.non_cofinal_nodes.first() {
            return Err(Error::CofinalBreach {
                point: self.grid[i].clone(),
                reason: "reconstructed node is outside the co-final set".into(),
            });
        }
        Ok(self)
    }

    /// Reconstructed ambient points `z + ψ(z)` (skipping unreached nodes).
    pub fn ambient_points(&self, family: &SubspaceFamily) -> Vec<(usize, Vector)> {
        self.psi
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.as_ref().map(|w| {
                    (
                        i,
                        family.compose(&Vector::from_column_slice(&self.grid[i]), &Vector::from_column_slice(w)),
                    )
                })
            })
            .collect()
    }

    /// Index of the grid node nearest to `z`.
    pub fn nearest(&self, z: &[f64]) -> Option<usize> {
        self.grid
            .iter()
            .enumerate()
            .map(|(i, g)| (i, g.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    /// `x1,…,psi1,…` rows for the reached nodes.
    pub fn to_csv(&self) -> String {
        let d = self.nodes_per_axis.len();
        let e = self.base.estar.len();
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        header.extend((1..=e).map(|i| format!("psi{i}")));
        let mut out = header.join(",");
        out.push('\n');
        for (z, p) in self.grid.iter().zip(&self.psi) {
            if let Some(w) = p {
                let row: Vec<String> = z.iter().chain(w.iter()).map(|v| format!("{v}")).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        out
    }
}

enum Walk {
    Reached(Vector),
    Breach(Breach),
}

struct Sweeper<'a> {
    family: &'a SubspaceFamily,
    grid: &'a GridSpec,
    z0: Vector,
    substeps: Vec<usize>,
    cfg: &'a Config,
}

impl Sweeper<'_> {
    fn rhs(&self, z: &Vector, w: &Vector, axis: usize, sign: f64) -> Result<Vector> {
        let x = self.family.compose(z, w);
        let alpha = self.family.alpha_at(&x, self.cfg)?;
        let v = alpha.alpha.column(axis) * sign;
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::CofinalBreach {
                point: x.iter().copied().collect(),
                reason: "coordinate operator is not finite".into(),
            });
        }
        Ok(v)
    }

    /// One grid interval along `axis` in direction `sign` by RK4 sub-steps.
    fn interval(&self, z_start: &Vector, w: &Vector, axis: usize, sign: f64) -> Result<Walk> {
        let k = self.substeps[axis];
        let h = self.grid.spacing(axis) / k as f64;
        let mut z = z_start.clone();
        let mut w = w.clone();
        for _ in 0..k {
            let stage = |t: f64, w: &Vector| {
                let mut zt = z.clone();
                zt[axis] += sign * t;
                self.rhs(&zt, w, axis, sign)
            };
            let result = (|| -> Result<Vector> {
                let k1 = stage(0.0, &w)?;
                let k2 = stage(0.5 * h, &(&w + &k1 * (0.5 * h)))?;
                let k3 = stage(0.5 * h, &(&w + &k2 * (0.5 * h)))?;
                let k4 = stage(h, &(&w + &k3 * h))?;
                Ok(&w + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
            })();
            match result {
                Ok(next) => w = next,
                Err(Error::CofinalBreach { point, reason }) => return Ok(Walk::Breach(Breach { point, reason })),
                Err(e) => return Err(e),
            }
            z[axis] += sign * h;
        }
        Ok(Walk::Reached(w))
    }

    fn sweep(&self, order: &[usize], w0: &Vector, breaches: &mut Vec<Breach>) -> Result<Vec<Option<Vector>>> {
        let g = self.grid;
        let mut vals: Vec<Option<Vector>> = vec![None; g.len()];
        let center = g.center();
        vals[g.index(&center)] = Some(w0.clone());
        for &axis in order {
            let seeds: Vec<usize> = (0..g.len())
                .filter(|&i| vals[i].is_some() && g.multi(i)[axis] == center[axis])
                .collect();
            for seed in seeds {
                for sign in [1.0, -1.0] {
                    let mut multi = g.multi(seed);
                    let mut w = vals[seed].clone().expect("seed is reached");
                    for _ in 0..g.half(axis) {
                        let z = &self.z0 + g.offset(&multi);
                        match self.interval(&z, &w, axis, sign)? {
                            Walk::Reached(next) => {
                                if sign > 0.0 {
                                    multi[axis] += 1;
                                } else {
                                    multi[axis] -= 1;
                                }
                                vals[g.index(&multi)] = Some(next.clone());
                                w = next;
                            }
                            Walk::Breach(b) => {
                                breaches.push(b);
                                break;
                            }
                        }
                    }
                }
            }
        }
        Ok(vals)
    }
}

/// Integrates the family over `grid` around its base point with RK4 steps no
/// longer than `step`. Co-final breaches truncate the affected paths; the
/// returned patch records them instead of failing.
pub fn integrate(family: &SubspaceFamily, grid: &GridSpec, step: f64, cfg: &Config) -> Result<IntegralPatch> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Step(step));
    }
    if family.param_dim() != family.ambient_dim() {
        return Err(Error::Dimension(format!(
            "integration needs points in the ambient space R^{}, family takes R^{}",
            family.ambient_dim(),
            family.param_dim()
        )));
    }
    let d = family.base_subspace().dim();
    if grid.dim() != d {
        return Err(Error::Grid(format!("grid has {} axes but dim M₀ = {d}", grid.dim())));
    }
    let (z0, w0) = family.split(family.base_point());
    let substeps: Vec<usize> = (0..d)
        .map(|a| ((grid.spacing(a) / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
        .collect();
    let sweeper = Sweeper {
        family,
        grid,
        z0: z0.clone(),
        substeps: substeps.clone(),
        cfg,
    };

    let order: Vec<usize> = (0..d).collect();
    let mut breaches = Vec::new();
    let forward = sweeper.sweep(&order, &w0, &mut breaches)?;
    let mut path_residual = 0.0_f64;
    if d > 1 {
        let reversed: Vec<usize> = order.iter().rev().copied().collect();
        let mut extra = Vec::new();
        let backward = sweeper.sweep(&reversed, &w0, &mut extra)?;
        for (a, b) in forward.iter().zip(&backward) {
            if let (Some(a), Some(b)) = (a, b) {
                path_residual = path_residual.max((a - b).amax());
            }
        }
    }

    let center = grid.index(&grid.center());
    let initial_condition_error = forward[center].as_ref().map_or(f64::INFINITY, |w| (w - &w0).amax());
    let mut non_cofinal_nodes = Vec::new();
    for (i, w) in forward.iter().enumerate() {
        if let Some(w) = w {
            let x = family.compose(&(&z0 + grid.offset(&grid.multi(i))), w);
            if !family.cofinal_member(&x, cfg)? {
                non_cofinal_nodes.push(i);
            }
        }
    }

    let mut patch = IntegralPatch {
        nodes_per_axis: grid.nodes.clone(),
        grid: (0..grid.len())
            .map(|i| (&z0 + grid.offset(&grid.multi(i))).iter().copied().collect())
            .collect(),
        base: PatchBase {
            m0: z0.iter().copied().collect(),
            estar: w0.iter().copied().collect(),
        },
        diagnostics: PatchDiagnostics {
            step,
            spacing: (0..d).map(|a| grid.spacing(a)).collect(),
            substeps,
            initial_condition_error,
            path_residual,
            tangency_residual: None,
            ode_residual: None,
            unreached: forward.iter().filter(|v| v.is_none()).count(),
            breaches,
            non_cofinal_nodes,
        },
        psi: forward
            .into_iter()
            .map(|v| v.map(|w| w.iter().copied().collect()))
            .collect(),
    };
    if grid.nodes.iter().all(|&n| n >= 3) && d > 0 {
        if let Ok(r) = tangency_check(&patch, family, cfg) {
            patch.diagnostics.tangency_residual = Some(r.tangency);
            patch.diagnostics.ode_residual = Some(r.ode);
        }
    }
    Ok(patch)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TangencyResiduals {
    /// Largest component of a finite-difference tangent `eᵢ + ∂ψ/∂zᵢ` orthogonal to `M(z + ψ(z))`.
    pub tangency: f64,
    /// Largest `‖∂ψ/∂zᵢ − α(z + ψ(z))·eᵢ‖∞`.
    pub ode: f64,
    pub nodes_checked: usize,
}

/// Finite-difference tangency check at interior nodes. Axes with at least
/// five nodes use the five-point stencil, shorter axes the three-point one.
pub fn tangency_check(patch: &IntegralPatch, family: &SubspaceFamily, cfg: &Config) -> Result<TangencyResiduals> {
    let nodes = &patch.nodes_per_axis;
    if let Some(&n) = nodes.iter().find(|&&n| n < 3) {
        return Err(Error::Grid(format!("{n} nodes on an axis; at least 3 are needed")));
    }
    let d = nodes.len();
    let spacing = &patch.diagnostics.spacing;
    let reach: Vec<isize> = nodes.iter().map(|&n| if n >= 5 { 2 } else { 1 }).collect();
    let strides: Vec<usize> = (0..d).map(|a| nodes[a + 1..].iter().product()).collect();
    let value = |i: usize| patch.psi[i].as_ref().map(|w| Vector::from_column_slice(w));

    let mut out = TangencyResiduals {
        tangency: 0.0,
        ode: 0.0,
        nodes_checked: 0,
    };
    'nodes: for i in 0..patch.grid.len() {
        let Some(w) = value(i) else { continue };
        let mut multi = vec![0usize; d];
        let mut rest = i;
        for a in (0..d).rev() {
            multi[a] = rest % nodes[a];
            rest /= nodes[a];
        }
        let mut derivs = Vec::with_capacity(d);
        for a in 0..d {
            let r = reach[a];
            let pos = multi[a] as isize;
            if pos - r < 0 || pos + r >= nodes[a] as isize {
                continue 'nodes;
            }
            let at = |k: isize| value((i as isize + k * strides[a] as isize) as usize);
            let deriv = if r == 2 {
                match (at(-2), at(-1), at(1), at(2)) {
                    (Some(m2), Some(m1), Some(p1), Some(p2)) => (m2 - m1 * 8.0 + p1 * 8.0 - p2) / (12.0 * spacing[a]),
                    _ => continue 'nodes,
                }
            } else {
                match (at(-1), at(1)) {
                    (Some(m1), Some(p1)) => (p1 - m1) / (2.0 * spacing[a]),
                    _ => continue 'nodes,
                }
            };
            derivs.push(deriv);
        }
        let x = family.compose(&Vector::from_column_slice(&patch.grid[i]), &w);
        let mx = family.eval(&x)?;
        let alpha = family.alpha_at(&x, cfg)?;
        for (a, deriv) in derivs.iter().enumerate() {
            let tangent = family.base_subspace().basis().column(a) + family.complement().lift(deriv);
            out.tangency = out.tangency.max(mx.residual(&tangent));
            out.ode = out.ode.max((deriv - alpha.alpha.column(a)).amax());
        }
        out.nodes_checked += 1;
    }
    if out.nodes_checked == 0 {
        return Err(Error::Grid("no interior node has the neighbours the stencil needs".into()));
    }
    Ok(out)
}

/// `ψ(z)` from the explicit construction: with `φ(x) = T₀⁺(f(x) − f(x₀)) + P^{E*}_{N₀}x`,
/// solve `φ(x) = z` by Newton's method and return the `E*`-coordinates of
/// `P^{N₀}_{E*}x`. `z` is given in `N₀`-coordinates.
///
/// The `N₀`-part of `φ` is the constant linear map `P^{E*}_{N₀}`, so the full
/// Jacobian is `T₀⁺f′(x) + P^{E*}_{N₀} = D_{T₀}(T₀⁺, f′(x))`.
pub fn explicit_psi(f: &DifferentiableMap, gi0: &GenInverse, x0: &Vector, z: &Vector, cfg: &Config) -> Result<Vector> {
    let n0 = kernel_of(&gi0.forward, cfg.tol_split);
    let estar = &gi0.range_complement;
    if z.len() != n0.dim() {
        return Err(Error::Dimension(format!(
            "z has {} coordinates but dim N₀ = {}",
            z.len(),
            n0.dim()
        )));
    }
    let onto_n0 = oblique_projector(&n0, estar, cfg.tol_split)?;
    let onto_estar = onto_n0.complementary();
    let f0 = f.eval(x0)?;
    let target = n0.lift(z);
    let phi = |x: &Vector| -> Result<Vector> { Ok(&gi0.inverse * (f.eval(x)? - &f0) + &onto_n0.matrix * x) };

    let mut x = &target + &onto_estar.matrix * x0;
    let mut trace = Vec::new();
    for _ in 0..cfg.newton_max_iter {
        let residual = phi(&x)? - &target;
        let norm = residual.norm();
        trace.push(norm);
        if !norm.is_finite() {
            break;
        }
        if norm <= cfg.newton_tol * (1.0 + x.norm()) {
            return Ok(estar.coords(&(&onto_estar.matrix * &x)));
        }
        let tx = f.jacobian(&x)?;
        ball_check(gi0, &tx)?;
        let delta = d_op(gi0, &tx)
            .lu()
            .solve(&residual)
            .ok_or_else(|| Error::NewtonDivergence { trace: trace.clone() })?;
        x -= delta;
    }
    Err(Error::NewtonDivergence { trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::squared_norm;
    use crate::family::kernel_family;
    use crate::geninv::moore_penrose_with_tol;
    use crate::linalg::Subspace;

    const CFG: Config = Config::DEFAULT;

    fn circle() -> (DifferentiableMap, SubspaceFamily) {
        let f = squared_norm(2);
        let fam = kernel_family(&f, &Vector::from_vec(vec![0.0, 1.0]), &CFG).unwrap();
        (f, fam)
    }

    #[test]
    fn grid_layout() {
        let g = GridSpec::uniform(2, 1.0, 5).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.spacing(0), 0.5);
        assert_eq!(g.index(&g.center()), 12);
        assert_eq!(g.multi(7), vec![1, 2]);
        assert_eq!(g.offset(&[0, 4]).as_slice(), &[-1.0, 1.0]);
        assert!(GridSpec::uniform(1, 1.0, 4).is_err());
        assert!(GridSpec::uniform(1, -1.0, 5).is_err());
        assert_eq!(GridSpec::with_spacing(1, 0.9, 1e-3).unwrap().nodes, vec![1801]);
    }

    #[test]
    fn constant_family_gives_flat_patch() {
        let m0 = Subspace::span_of(&[Vector::from_vec(vec![1.0, 0.0, 0.0]), Vector::from_vec(vec![0.0, 1.0, 0.0])]);
        let fam = SubspaceFamily::new(move |_: &Vector| Ok(m0.clone()), Vector::from_vec(vec![0.2, 0.1, 0.7]), &CFG).unwrap();
        let patch = integrate(&fam, &GridSpec::uniform(2, 0.5, 5).unwrap(), 0.1, &CFG).unwrap();
        assert!(patch.is_complete());
        for p in &patch.psi {
            assert!((p.as_ref().unwrap()[0] - 0.7).abs() < 1e-15);
        }
        assert_eq!(patch.base.m0, vec![0.2, 0.1]);
        assert!(patch.diagnostics.tangency_residual.unwrap() < 1e-15);
    }

    #[test]
    fn circle_patch_on_coarse_grid() {
        let (_, fam) = circle();
        let patch = integrate(&fam, &GridSpec::uniform(1, 0.8, 9).unwrap(), 1e-3, &CFG).unwrap();
        assert_eq!(patch.diagnostics.substeps, vec![200]);
        for (z, p) in patch.grid.iter().zip(&patch.psi) {
            let exact = (1.0 - z[0] * z[0]).sqrt();
            assert!((p.as_ref().unwrap()[0] - exact).abs() < 1e-9, "{z:?}");
        }
        let row = patch.to_csv().lines().nth(8).unwrap().to_string();
        assert!(row.starts_with("0.6"), "{row}");
    }

    #[test]
    fn breach_truncates_paths() {
        // M(x) turns into E* itself once x₁ ≥ 0.5
        let fam = SubspaceFamily::new(
            |p: &Vector| {
                let v = if p[0] < 0.5 { vec![1.0, 0.2] } else { vec![0.0, 1.0] };
                Ok(Subspace::span_of(&[Vector::from_vec(v)]))
            },
            Vector::from_vec(vec![0.0, 0.0]),
            &CFG,
        )
        .unwrap()
        .with_complement(Subspace::span_of(&[Vector::from_vec(vec![0.0, 1.0])]), &CFG)
        .unwrap();
        let patch = integrate(&fam, &GridSpec::uniform(1, 1.0, 11).unwrap(), 0.05, &CFG).unwrap();
        assert!(!patch.is_complete());
        assert_eq!(patch.diagnostics.breaches.len(), 1);
        assert_eq!(patch.diagnostics.unreached, 3);
        assert!(patch.psi[7].is_some() && patch.psi[8].is_none());
        assert_eq!(patch.psi[0].as_ref().unwrap()[0], 0.0);
        assert!(matches!(patch.require_complete(), Err(Error::CofinalBreach { .. })));
    }

    #[test]
    fn bad_step_and_grid() {
        let (_, fam) = circle();
        let grid = GridSpec::uniform(1, 0.5, 5).unwrap();
        assert!(matches!(integrate(&fam, &grid, 0.0, &CFG), Err(Error::Step(_))));
        assert!(matches!(
            integrate(&fam, &GridSpec::uniform(2, 0.5, 5).unwrap(), 0.1, &CFG),
            Err(Error::Grid(_))
        ));
        let tiny = integrate(&fam, &GridSpec::uniform(1, 0.5, 1).unwrap(), 0.1, &CFG).unwrap();
        assert!(matches!(tangency_check(&tiny, &fam, &CFG), Err(Error::Grid(_))));
    }

    #[test]
    fn explicit_psi_on_circle() {
        let (f, _) = circle();
        let x0 = Vector::from_vec(vec![0.0, 1.0]);
        let gi0 = moore_penrose_with_tol(&f.jacobian(&x0).unwrap(), CFG.tol_split);
        let at_base = explicit_psi(&f, &gi0, &x0, &Vector::from_vec(vec![0.0]), &CFG).unwrap();
        assert!((at_base[0] - 1.0).abs() < 1e-15);
        let y = explicit_psi(&f, &gi0, &x0, &Vector::from_vec(vec![0.6]), &CFG).unwrap();
        assert!((y[0] - 0.8).abs() < 1e-12);
        assert!(matches!(
            explicit_psi(&f, &gi0, &x0, &Vector::from_vec(vec![1.5]), &CFG),
            Err(Error::NewtonDivergence { .. }) | Err(Error::Ball(_))
        ));
    }

    #[test]
    fn sphere_patch_matches_closed_form() {
        let f = squared_norm(3);
        let x0 = Vector::from_vec(vec![0.0, 0.0, 1.0]);
        let fam = kernel_family(&f, &x0, &CFG).unwrap();
        let patch = integrate(&fam, &GridSpec::uniform(2, 0.5, 11).unwrap(), 1e-2, &CFG).unwrap();
        assert!(patch.is_complete());
        assert!(patch.diagnostics.path_residual < 1e-6);
        for (z, p) in patch.grid.iter().zip(&patch.psi) {
            let exact = (1.0 - z[0] * z[0] - z[1] * z[1]).sqrt();
            assert!((p.as_ref().unwrap()[0] - exact).abs() < 1e-6);
        }
    }
}
