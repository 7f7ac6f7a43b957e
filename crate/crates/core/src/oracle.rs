//! Exact transportation LPs between small discrete laws, used as ground
//! truth for the AMR coupling.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::chains::admissible;
use crate::costs::ConcaveCost;
use crate::coupling::Decomposition;
use crate::error::{Error, Result};
use crate::math::{abs, ceil, floor, log, pow, sqrt};
use crate::measures::{Atom, Distribution1D, Law};
use crate::rng::open01;

pub const MAX_ATOMS: usize = 64;
/// Tolerated mismatch between the two total masses.
pub const MASS_MISMATCH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub row_support: Vec<f64>,
    pub col_support: Vec<f64>,
    pub plan: Vec<Vec<f64>>,
    pub value: f64,
    /// Smallest reduced cost at termination; `>= -1e-10` certifies optimality.
    pub min_reduced_cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.col_support.len()).map(|j| self.plan.iter().map(|r| r[j]).sum()).collect()
    }

    /// `sum plan[i][j] * f(|x_i - y_j|)`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut v = 0.0;
        for (i, row) in self.plan.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if *p > 0.0 {
                    v += p * f(abs(self.row_support[i] - self.col_support[j]));
                }
            }
        }
        v
    }
}

/// Optimal plan and value of `min sum pi_ij c_ij` over couplings of the
/// two mass vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSolution {
    pub plan: Vec<Vec<f64>>,
    pub value: f64,
    pub min_reduced_cost: f64,
}

/// Minimum-cost transport between discrete laws for a concave cost of the
/// distance.
pub fn solve_transport(mu: &Distribution1D, nu: &Distribution1D, cost: &ConcaveCost) -> Result<TransportPlan> {
    solve_transport_with(mu, nu, |d| cost.eval(d))
}

/// As [`solve_transport`] for any cost of the distance.
pub fn solve_transport_with(mu: &Distribution1D, nu: &Distribution1D, cost: impl Fn(f64) -> f64) -> Result<TransportPlan> {
    let (rows, cols) = (atoms_of(mu)?, atoms_of(nu)?);
    let c: Vec<Vec<f64>> = rows.iter().map(|r| cols.iter().map(|q| cost(abs(r.x - q.x))).collect()).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let b: Vec<f64> = cols.iter().map(|q| q.p).collect();
    let sol = solve_matrix(&a, &b, &c)?;
    Ok(TransportPlan {
        row_support: rows.iter().map(|r| r.x).collect(),
        col_support: cols.iter().map(|q| q.x).collect(),
        plan: sol.plan,
        value: sol.value,
        min_reduced_cost: sol.min_reduced_cost,
    })
}

fn atoms_of(d: &Distribution1D) -> Result<&[Atom]> {
    if !d.is_atomic() {
        return Err(Error::InvalidDistribution("transport oracle needs purely atomic laws".into()));
    }
    if d.atoms().len() > MAX_ATOMS {
        return Err(Error::InvalidDistribution(format!("{} atoms exceed the limit of {MAX_ATOMS}", d.atoms().len())));
    }
    Ok(d.atoms())
}

/// Transportation simplex: north-west corner start, potentials for the
/// reduced costs, Bland's smallest-index rule for entering and leaving
/// cells. Degenerate bases keep explicit zero-flow cells.
pub fn solve_matrix(a: &[f64], b: &[f64], c: &[Vec<f64>]) -> Result<MatrixSolution> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 || c.len() != m || c.iter().any(|r| r.len() != n) {
        return Err(Error::Infeasible("empty or misshapen transport instance".into()));
    }
    if a.iter().chain(b).any(|v| !(*v >= 0.0)) {
        return Err(Error::Infeasible("negative mass".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if abs(sa - sb) > MASS_MISMATCH {
        return Err(Error::Infeasible(format!("marginal masses differ by {:.3e}", sa - sb)));
    }

    // North-west corner: exactly m + n - 1 basic cells.
    let mut flow = vec![vec![0.0; n]; m];
    let mut basic = vec![vec![false; n]; m];
    let (mut s, mut d) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let q = s[i].min(d[j]);
        flow[i][j] = q;
        basic[i][j] = true;
        if i == m - 1 && j == n - 1 {
            break;
        }
        let row_done = s[i] <= d[j];
        s[i] -= q;
        d[j] -= q;
        if i == m - 1 || (j < n - 1 && !row_done) {
            j += 1;
        } else {
            i += 1;
        }
    }
    // Absorb the rounding gap of the two totals into the last cell.
    let fixed: f64 = flow.iter().flatten().sum::<f64>() - flow[m - 1][n - 1];
    flow[m - 1][n - 1] = (sa.min(sb) - fixed).max(0.0);

    let scale = c.iter().flatten().fold(0.0f64, |acc, v| acc.max(abs(*v))).max(1.0);
    let tol = 1e-13 * scale;
    let mut min_rc;
    let mut iterations = 0;
    loop {
        let (u, v) = potentials(&basic, c);
        min_rc = f64::INFINITY;
        let mut entering = None;
        for (i, row) in c.iter().enumerate() {
            for (j, cij) in row.iter().enumerate() {
                if basic[i][j] {
                    continue;
                }
                let rc = cij - u[i] - v[j];
                min_rc = min_rc.min(rc);
                if entering.is_none() && rc < -tol {
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else { break };
        iterations += 1;
        if iterations > 100_000 {
            return Err(Error::Infeasible("transportation simplex did not terminate".into()));
        }
        let path = tree_path(&basic, ei, ej);
        let k = path.len();
        // Cells on the path alternate signs, the one next to the entering
        // column being a donor.
        let mut theta = f64::INFINITY;
        for (t, &(pi, pj)) in path.iter().enumerate() {
            if (k - 1 - t).is_multiple_of(2) {
                theta = theta.min(flow[pi][pj]);
            }
        }
        let mut leaving = None;
        for (t, &(pi, pj)) in path.iter().enumerate() {
            if (k - 1 - t).is_multiple_of(2) && flow[pi][pj] <= theta && leaving.is_none_or(|l: (usize, usize)| (pi, pj) < l) {
                leaving = Some((pi, pj));
            }
        }
        let (li, lj) = leaving.expect("cycle has donor cells");
        for (t, &(pi, pj)) in path.iter().enumerate() {
            if (k - 1 - t).is_multiple_of(2) {
                flow[pi][pj] = (flow[pi][pj] - theta).max(0.0);
            } else {
                flow[pi][pj] += theta;
            }
        }
        flow[ei][ej] = theta;
        basic[ei][ej] = true;
        basic[li][lj] = false;
        flow[li][lj] = 0.0;
    }
    let value = flow.iter().zip(c).map(|(f, r)| f.iter().zip(r).map(|(x, y)| x * y).sum::<f64>()).sum();
    Ok(MatrixSolution { plan: flow, value, min_reduced_cost: if min_rc.is_finite() { min_rc } else { 0.0 } })
}

/// Dual potentials with `u_0 = 0` and `u_i + v_j = c_ij` on basic cells.
fn potentials(basic: &[Vec<bool>], c: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (basic.len(), basic[0].len());
    let mut u = vec![f64::NAN; m];
    let mut v = vec![f64::NAN; n];
    u[0] = 0.0;
    let mut stack = vec![(true, 0usize)];
    while let Some((is_row, k)) = stack.pop() {
        if is_row {
            for j in 0..n {
                if basic[k][j] && v[j].is_nan() {
                    v[j] = c[k][j] - u[k];
                    stack.push((false, j));
                }
            }
        } else {
            for i in 0..m {
                if basic[i][k] && u[i].is_nan() {
                    u[i] = c[i][k] - v[k];
                    stack.push((true, i));
                }
            }
        }
    }
    (u, v)
}

/// Basic cells on the tree path from row `i` to column `j`.
fn tree_path(basic: &[Vec<bool>], i: usize, j: usize) -> Vec<(usize, usize)> {
    let (m, n) = (basic.len(), basic[0].len());
    // Nodes 0..m are rows, m..m+n columns.
    let mut parent = vec![usize::MAX; m + n];
    parent[i] = i;
    let mut queue = alloc::collections::VecDeque::from([i]);
    while let Some(node) = queue.pop_front() {
        if node == m + j {
            break;
        }
        let next: Vec<usize> = if node < m {
            (0..n).filter(|&q| basic[node][q]).map(|q| m + q).collect()
        } else {
            (0..m).filter(|&r| basic[r][node - m]).collect()
        };
        for nb in next {
            if parent[nb] == usize::MAX {
                parent[nb] = node;
                queue.push_back(nb);
            }
        }
    }
    let mut cells = Vec::new();
    let mut node = m + j;
    while node != i {
        let p = parent[node];
        cells.push(if node < m { (node, p - m) } else { (p, node - m) });
        node = p;
    }
    cells.reverse();
    cells
}

/// A random feasible plan: Sinkhorn scaling of a random positive matrix.
pub fn random_feasible_plan<R: RngCore + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> Vec<Vec<f64>> {
    let mut k: Vec<Vec<f64>> = a.iter().map(|_| b.iter().map(|_| -log(open01(rng))).collect()).collect();
    for _ in 0..10_000 {
        for (row, ai) in k.iter_mut().zip(a) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x *= ai / s);
        }
        let mut err: f64 = 0.0;
        for (j, bj) in b.iter().enumerate() {
            let s: f64 = k.iter().map(|r| r[j]).sum();
            err = err.max(abs(s - bj));
            k.iter_mut().for_each(|r| r[j] *= bj / s);
        }
        if err < 1e-14 {
            break;
        }
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPointPlan {
    /// `0 -> alpha`, `1 -> 1 + alpha`.
    Synchronous,
    /// `0 -> 1 + alpha`, `1 -> alpha`.
    Reflection,
}

/// `f = (1 + alpha)^g + |1 - alpha|^g - 2 alpha^g`, twice the cost excess of
/// the reflection plan over the synchronous one for `phi(d) = d^g`.
pub fn two_point_f(gamma: f64, alpha: f64) -> f64 {
    pow(1.0 + alpha, gamma) + pow(abs(1.0 - alpha), gamma) - 2.0 * pow(alpha, gamma)
}

pub fn two_point_example(gamma: f64, alpha: f64) -> Result<(f64, TwoPointPlan)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma {gamma} must lie in (0, 1)")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha {alpha} must be positive")));
    }
    let f = two_point_f(gamma, alpha);
    Ok((f, if f > 0.0 { TwoPointPlan::Synchronous } else { TwoPointPlan::Reflection }))
}

/// The `2 x 2` instance `{0, 1}` against `{alpha, 1 + alpha}`.
pub fn two_point_lp(gamma: f64, alpha: f64) -> Result<(TransportPlan, TwoPointPlan)> {
    let half = |x: f64, y: f64| Distribution1D::discrete(vec![Atom { x, p: 0.5 }, Atom { x: y, p: 0.5 }]);
    let plan = solve_transport(&half(0.0, 1.0)?, &half(alpha, 1.0 + alpha)?, &ConcaveCost::Power { p: gamma })?;
    // The synchronous plan keeps the mass on the diagonal.
    let kind = if plan.plan[0][0] >= 0.25 { TwoPointPlan::Synchronous } else { TwoPointPlan::Reflection };
    Ok((plan, kind))
}

/// The sign-change root of `f(gamma, .)` on `(0, 1)`.
pub fn two_point_root(gamma: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-12, 1.0);
    if !(two_point_f(gamma, lo) > 0.0 && two_point_f(gamma, hi) < 0.0) {
        return Err(Error::Domain(format!("no sign change of f for gamma {gamma}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if two_point_f(gamma, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The `alpha` at which the optimal `2 x 2` LP plan switches from
/// synchronous to reflection, by bisection on the LP alone.
pub fn two_point_lp_switch(gamma: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-9);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if two_point_lp(gamma, mid)?.1 == TwoPointPlan::Synchronous {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of the small-exponent limit `ln((1 - alpha^2) / alpha^2) = 0`.
pub fn two_point_limit_root() -> f64 {
    sqrt(0.5)
}

/// Lattice discretisation of `F` and `F(. - a)` on at most `n_atoms`
/// atoms each, with spacing dividing `a` so the shift stays on the lattice.
pub fn discretize_shift(f: &Distribution1D, a: f64, n_atoms: usize) -> Result<(Distribution1D, Distribution1D)> {
    if !(2..=MAX_ATOMS).contains(&n_atoms) {
        return Err(Error::Domain(format!("n_atoms {n_atoms} must lie in 2..={MAX_ATOMS}")));
    }
    if f.is_atomic() {
        return Ok((f.clone(), f.shift(a)));
    }
    let (lo, hi) = f.effective_support(1e-6);
    let span = hi - lo;
    let h = if a > 0.0 {
        let k = floor(a * n_atoms as f64 / span).max(1.0);
        a / k
    } else {
        span / n_atoms as f64
    };
    let cells = (ceil(span / h) as usize).clamp(1, n_atoms);
    let shift_cells = if a > 0.0 { crate::math::round(a / h) as usize } else { 0 };
    let mid = 0.5 * (lo + hi);
    let start = mid - 0.5 * cells as f64 * h;
    // Both laws index one lattice so shared atoms coincide bit for bit.
    let node = |i: usize| start + (i as f64 + 0.5) * h;
    let mut masses = Vec::with_capacity(cells);
    for i in 0..cells {
        let l = start + i as f64 * h;
        masses.push(f.cdf(l + h) - f.cdf(l));
    }
    let total: f64 = masses.iter().sum();
    let build = |offset: usize| {
        let atoms = masses.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, p)| Atom { x: node(i + offset), p: p / total }).collect();
        Distribution1D::discrete(atoms)
    };
    Ok((build(0)?, build(shift_cells)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub lp_value: f64,
    pub amr_value: f64,
    /// `|amr - lp| / max(|lp|, 1e-12)`, zero when both vanish.
    pub relative_gap: f64,
    pub n_atoms: usize,
    pub min_reduced_cost: f64,
}

/// Compares the AMR cost with the LP optimum on a common discretisation.
pub fn verify_amr_optimal(f: &Distribution1D, a: f64, cost: &ConcaveCost, n_atoms: usize) -> Result<OptimalityReport> {
    let a = abs(a);
    let (d, g) = discretize_shift(f, a, n_atoms)?;
    let lp = solve_transport(&d, &g, cost)?;
    let amr_value =
        if a == 0.0 { 0.0 } else { Decomposition::new(&d, &g)?.joint_atomic()?.iter().map(|(x, y, m)| m * cost.eval(y - x)).sum() };
    let denom = abs(lp.value).max(1e-12);
    let gap = abs(amr_value - lp.value);
    Ok(OptimalityReport {
        lp_value: lp.value,
        amr_value,
        relative_gap: if gap == 0.0 { 0.0 } else { gap / denom },
        n_atoms: d.atoms().len(),
        min_reduced_cost: lp.min_reduced_cost,
    })
}

/// Optimal `n`-step payoff over Markovian couplings of two walks with an
/// atomic jump law, by backward induction with one transport LP per
/// separation and step.
pub fn dp_chain_value(law: &Distribution1D, a: f64, n: usize, terminal: &impl Fn(f64) -> f64) -> Result<f64> {
    admissible(law)?;
    atoms_of(law)?;
    let mut memo = BTreeMap::new();
    dp_value(law, abs(a), n, terminal, &mut memo)
}

fn dp_value(law: &Distribution1D, a: f64, n: usize, terminal: &impl Fn(f64) -> f64, memo: &mut BTreeMap<(u64, usize), f64>) -> Result<f64> {
    if n == 0 {
        return Ok(terminal(a));
    }
    if let Some(v) = memo.get(&(a.to_bits(), n)) {
        return Ok(*v);
    }
    let atoms = law.atoms();
    let mass: Vec<f64> = atoms.iter().map(|t| t.p).collect();
    let mut payoff = vec![vec![0.0; atoms.len()]; atoms.len()];
    for (i, xi) in atoms.iter().enumerate() {
        for (j, yj) in atoms.iter().enumerate() {
            payoff[i][j] = dp_value(law, abs(yj.x + a - xi.x), n - 1, terminal, memo)?;
        }
    }
    let neg: Vec<Vec<f64>> = payoff.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let v = -solve_matrix(&mass, &mass, &neg)?.value;
    memo.insert((a.to_bits(), n), v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{chain_value, psi};
    use crate::coupling::band_payoff;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn discrete(points: &[(f64, f64)]) -> Distribution1D {
        Distribution1D::discrete(points.iter().map(|&(x, p)| Atom { x, p }).collect()).unwrap()
    }

    fn check_feasible(plan: &TransportPlan, mu: &Distribution1D, nu: &Distribution1D, cost: &ConcaveCost) {
        for (s, a) in plan.row_sums().iter().zip(mu.atoms()) {
            assert!((s - a.p).abs() < 1e-12);
        }
        for (s, a) in plan.col_sums().iter().zip(nu.atoms()) {
            assert!((s - a.p).abs() < 1e-12);
        }
        assert!(plan.plan.iter().flatten().all(|p| *p >= 0.0));
        assert!((plan.expectation(|d| cost.eval(d)) - plan.value).abs() < 1e-12);
        assert!(plan.min_reduced_cost >= -1e-10);
    }

    #[test]
    fn dirac_to_dirac() {
        let d = Distribution1D::dirac(0.0);
        let plan = solve_transport(&d, &d, &ConcaveCost::Power { p: 0.5 }).unwrap();
        assert_eq!(plan.plan, vec![vec![1.0]]);
        assert_eq!(plan.value, 0.0);
    }

    #[test]
    fn rejects_mass_mismatch_and_densities() {
        assert!(matches!(solve_matrix(&[0.5, 0.5], &[0.5, 0.6], &[vec![0.0; 2], vec![0.0; 2]]), Err(Error::Infeasible(_))));
        let u = Distribution1D::uniform(0.0, 1.0).unwrap();
        assert!(solve_transport(&u, &u, &ConcaveCost::BoundedExp).is_err());
    }

    #[test]
    fn two_point_endpoints() {
        for gamma in [0.1, 0.5, 0.9] {
            for alpha in [0.2, 0.5, 0.8, 1.3] {
                let (lp, _) = two_point_lp(gamma, alpha).unwrap();
                let sync = pow(alpha, gamma);
                let refl = 0.5 * pow(1.0 + alpha, gamma) + 0.5 * pow(abs(1.0 - alpha), gamma);
                assert!((lp.value - sync.min(refl)).abs() < 1e-12);
                let (f, kind) = two_point_example(gamma, alpha).unwrap();
                assert!((f - 2.0 * (refl - sync)).abs() < 1e-12);
                if f.abs() > 1e-9 {
                    assert_eq!(kind, two_point_lp(gamma, alpha).unwrap().1);
                }
            }
        }
    }

    #[test]
    fn two_point_values_and_roots() {
        let (f, kind) = two_point_example(0.5, 0.5).unwrap();
        assert!((f - (1.5f64.sqrt() - 0.5f64.sqrt())).abs() < 1e-12);
        assert!((f - 0.5176).abs() < 1e-4);
        assert_eq!(kind, TwoPointPlan::Synchronous);
        let r = two_point_root(0.9).unwrap();
        assert!(r > 0.9 && r < 0.95);
        assert!((two_point_lp_switch(0.9).unwrap() - r).abs() < 1e-6);
        // Roots increase with gamma and approach the limit from above.
        let r01 = two_point_root(0.01).unwrap();
        assert!(r01 > two_point_limit_root() && r01 < two_point_root(0.1).unwrap());
        assert!((two_point_root(1e-6).unwrap() - two_point_limit_root()).abs() < 1e-5);
        assert!(two_point_example(1.0, 0.5).is_err());
        // Past alpha = 1 the synchronous plan is never the cheaper one.
        assert!((1..40).all(|k| two_point_f(0.3, 1.0 + 0.1 * k as f64) <= 0.0));
    }

    #[test]
    fn band_payoff_against_lp() {
        let (d, g) = discretize_shift(&Distribution1D::uniform(0.0, 1.0).unwrap(), 0.5, 32).unwrap();
        let cost = ConcaveCost::Capped { c: 0.5 };
        let plan = solve_transport(&d, &g, &cost).unwrap();
        check_feasible(&plan, &d, &g, &cost);
        let f = Distribution1D::uniform(0.0, 1.0).unwrap();
        let band = band_payoff(&f, &f.shift(0.5), 0.5).unwrap();
        assert!((0.5 - plan.value - band).abs() < 1e-2, "{} vs {band}", 0.5 - plan.value);
    }

    #[test]
    fn min_cost_and_max_payoff_agree() {
        let f = Distribution1D::laplace(0.0, 1.0).unwrap();
        let (d, g) = discretize_shift(&f, 0.8, 24).unwrap();
        for cost in [ConcaveCost::Capped { c: 0.6 }, ConcaveCost::BoundedExp] {
            let b = cost.bound().unwrap();
            let min = solve_transport(&d, &g, &cost).unwrap();
            let max = solve_transport_with(&d, &g, |x| -(b - cost.eval(x))).unwrap();
            assert!((b - min.value - (-max.value)).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_beats_random_plans() {
        let f = Distribution1D::laplace(0.0, 1.0).unwrap();
        let (d, g) = discretize_shift(&f, 1.0, 16).unwrap();
        let c = 0.7;
        let band = |x: f64| (c - x).max(0.0);
        let best = solve_transport_with(&d, &g, |x| -band(x)).unwrap();
        let opt = -best.value;
        let a: Vec<f64> = d.atoms().iter().map(|t| t.p).collect();
        let b: Vec<f64> = g.atoms().iter().map(|t| t.p).collect();
        let mut rng = stream(5, 0, 0);
        for _ in 0..100 {
            let plan = random_feasible_plan(&a, &b, &mut rng);
            let tp = TransportPlan {
                row_support: best.row_support.clone(),
                col_support: best.col_support.clone(),
                plan,
                value: 0.0,
                min_reduced_cost: 0.0,
            };
            assert!(tp.expectation(band) <= opt + 1e-12);
        }
    }

    #[test]
    fn amr_matches_lp_on_discretisations() {
        let lap = Distribution1D::laplace(0.0, 1.0).unwrap();
        let uni = Distribution1D::uniform(0.0, 1.0).unwrap();
        let r = verify_amr_optimal(&lap, 1.0, &ConcaveCost::Power { p: 0.5 }, 32).unwrap();
        assert!(r.relative_gap < 1e-2, "{r:?}");
        let r = verify_amr_optimal(&uni, 0.3, &ConcaveCost::Capped { c: 0.4 }, 32).unwrap();
        assert!(r.relative_gap < 1e-2, "{r:?}");
        let r = verify_amr_optimal(&lap, 0.0, &ConcaveCost::BoundedExp, 32).unwrap();
        assert_eq!((r.lp_value, r.amr_value, r.relative_gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn chain_dp_equals_amr_chain() {
        let law = discrete(&[(-2.0, 0.05), (-1.0, 0.15), (0.0, 0.4), (1.0, 0.25), (2.0, 0.15)]);
        let terminal = |d: f64| (-d).exp();
        for a in [1.0, 3.0] {
            for n in 1..=2 {
                let dp = dp_chain_value(&law, a, n, &terminal).unwrap();
                let amr = chain_value(&law, a, n, terminal).unwrap();
                assert!((dp - amr).abs() < 1e-9, "a={a} n={n}: {dp} vs {amr}");
            }
        }
    }

    #[test]
    fn one_step_band_dp_is_psi() {
        let law = discrete(&[(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]);
        let c = 1.5;
        let dp = dp_chain_value(&law, 2.0, 1, &|d: f64| (c - d).max(0.0)).unwrap();
        assert!((dp - psi(&law, 2.0, c).unwrap()).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn random_instances_are_feasible_and_certified(
            m in 1usize..7, n in 1usize..7, seed in 0u64..1000, gamma in 0.1f64..0.9,
        ) {
            let mut r = stream(seed, 1, 0);
            let mk = |k: usize, r: &mut crate::rng::StreamRng| {
                let w: Vec<f64> = (0..k).map(|_| open01(r)).collect();
                let s: f64 = w.iter().sum();
                let mut atoms: Vec<Atom> = w.iter().map(|p| Atom { x: 4.0 * open01(r), p: p / s }).collect();
                atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
                Distribution1D::discrete(atoms).unwrap()
            };
            let mu = mk(m, &mut r);
            let nu = mk(n, &mut r);
            let cost = ConcaveCost::Power { p: gamma };
            let plan = solve_transport(&mu, &nu, &cost).unwrap();
            for (s, a) in plan.row_sums().iter().zip(mu.atoms()) {
                prop_assert!((s - a.p).abs() < 1e-12);
            }
            for (s, a) in plan.col_sums().iter().zip(nu.atoms()) {
                prop_assert!((s - a.p).abs() < 1e-12);
            }
            prop_assert!(plan.min_reduced_cost >= -1e-10);
            // No random feasible plan does better.
            let a: Vec<f64> = mu.atoms().iter().map(|t| t.p).collect();
            let b: Vec<f64> = nu.atoms().iter().map(|t| t.p).collect();
            for _ in 0..5 {
                let tp = TransportPlan { plan: random_feasible_plan(&a, &b, &mut r), ..plan.clone() };
                prop_assert!(tp.expectation(|d| cost.eval(d)) >= plan.value - 1e-12);
            }
        }
    }
}
