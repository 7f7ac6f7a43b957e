//! Probability laws on the line: finitely many atoms plus one density.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, erfc, exp, expm1, log, log1p, sqrt, SQRT_2};

/// Validation tolerance on total mass.
pub const MASS_TOL: f64 = 1e-12;

/// Tail mass at which unbounded supports are cut for grid-based work.
pub const TAIL_CUT: f64 = 1e-12;

/// Distribution-function access shared by full laws and the parts of a
/// decomposition.
///
/// The inverse methods take `z` in `(0, 1)` without checking it.
pub trait Law {
    /// `P[X <= x]`.
    fn cdf(&self, x: f64) -> f64;
    /// `P[X < x]`.
    fn cdf_left(&self, x: f64) -> f64;
    /// `inf { x : F(x) > z }`.
    fn inverse_plus(&self, z: f64) -> f64;
    /// `inf { x : F(x) >= z }`.
    fn inverse_minus(&self, z: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

/// Closed-form densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Uniform { lo: f64, hi: f64 },
    Triangular { lo: f64, mode: f64, hi: f64 },
    Laplace { loc: f64, scale: f64 },
    Exponential { rate: f64, loc: f64 },
    Gaussian { mean: f64, sd: f64 },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Family::Triangular { lo, mode, hi } => lo.is_finite() && hi.is_finite() && lo < hi && lo <= mode && mode <= hi,
            Family::Laplace { loc, scale } => loc.is_finite() && scale > 0.0 && scale.is_finite(),
            Family::Exponential { rate, loc } => loc.is_finite() && rate > 0.0 && rate.is_finite(),
            Family::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(format!("bad parameters {self:?}")))
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Family::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Triangular { lo, mode, hi } => {
                let peak = 2.0 / (hi - lo);
                if x < lo || x > hi {
                    0.0
                } else if x < mode {
                    peak * (x - lo) / (mode - lo)
                } else if x > mode {
                    peak * (hi - x) / (hi - mode)
                } else {
                    peak
                }
            }
            Family::Laplace { loc, scale } => exp(-abs(x - loc) / scale) / (2.0 * scale),
            Family::Exponential { rate, loc } => {
                if x < loc {
                    0.0
                } else {
                    rate * exp(-rate * (x - loc))
                }
            }
            Family::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                exp(-0.5 * z * z) / (sd * sqrt(2.0 * core::f64::consts::PI))
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Family::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Triangular { lo, mode, hi } => {
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else if x <= mode {
                    (x - lo) * (x - lo) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - x) * (hi - x) / ((hi - lo) * (hi - mode))
                }
            }
            Family::Laplace { loc, scale } => {
                if x < loc {
                    0.5 * exp((x - loc) / scale)
                } else {
                    1.0 - 0.5 * exp(-(x - loc) / scale)
                }
            }
            Family::Exponential { rate, loc } => {
                if x <= loc {
                    0.0
                } else {
                    -expm1(-rate * (x - loc))
                }
            }
            Family::Gaussian { mean, sd } => 0.5 * erfc(-(x - mean) / (sd * SQRT_2)),
        }
    }

    /// Inverse of a continuous distribution function; `t` in `[0, 1]`.
    ///
    /// All families are strictly increasing on their support, so the plus
    /// and minus inverses agree inside `(0, 1)`.
    pub fn inverse(&self, t: f64) -> f64 {
        match *self {
            Family::Uniform { lo, hi } => lo + t * (hi - lo),
            Family::Triangular { lo, mode, hi } => {
                let split = (mode - lo) / (hi - lo);
                if t <= split {
                    lo + sqrt(t * (hi - lo) * (mode - lo))
                } else {
                    hi - sqrt((1.0 - t) * (hi - lo) * (hi - mode))
                }
            }
            Family::Laplace { loc, scale } => {
                if t < 0.5 {
                    loc + scale * log(2.0 * t)
                } else {
                    loc - scale * log(2.0 * (1.0 - t))
                }
            }
            Family::Exponential { rate, loc } => loc - log1p(-t) / rate,
            Family::Gaussian { mean, sd } => mean + sd * standard_normal_inverse(t),
        }
    }

    pub fn shifted(&self, a: f64) -> Family {
        match *self {
            Family::Uniform { lo, hi } => Family::Uniform { lo: lo + a, hi: hi + a },
            Family::Triangular { lo, mode, hi } => Family::Triangular { lo: lo + a, mode: mode + a, hi: hi + a },
            Family::Laplace { loc, scale } => Family::Laplace { loc: loc + a, scale },
            Family::Exponential { rate, loc } => Family::Exponential { rate, loc: loc + a },
            Family::Gaussian { mean, sd } => Family::Gaussian { mean: mean + a, sd },
        }
    }

    /// Points where the density has a kink or a jump.
    fn breakpoints(&self, out: &mut Vec<f64>) {
        match *self {
            Family::Uniform { lo, hi } => out.extend([lo, hi]),
            Family::Triangular { lo, mode, hi } => out.extend([lo, mode, hi]),
            Family::Laplace { loc, .. } => out.push(loc),
            Family::Exponential { loc, .. } => out.push(loc),
            Family::Gaussian { .. } => {}
        }
    }

    /// Largest breach of "nondecreasing on (-inf, 0), nonincreasing on
    /// (0, inf)" for the unit-mass density.
    fn unimodal_breach(&self) -> f64 {
        match *self {
            Family::Uniform { lo, hi } => {
                if lo > 0.0 || hi < 0.0 {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Triangular { lo, mode, hi } => {
                let peak = self.pdf(mode);
                if mode > 0.0 {
                    peak - self.pdf(lo.max(0.0))
                } else if mode < 0.0 {
                    peak - self.pdf(hi.min(0.0))
                } else {
                    0.0
                }
            }
            Family::Laplace { loc, scale } => (1.0 - exp(-abs(loc) / scale)) / (2.0 * scale),
            Family::Exponential { rate, loc } => {
                if loc > 0.0 {
                    rate
                } else {
                    -rate * expm1(rate * loc)
                }
            }
            Family::Gaussian { mean, .. } => self.pdf(mean) - self.pdf(0.0),
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Family::Uniform { lo, hi } | Family::Triangular { lo, hi, .. } => (lo, hi),
            Family::Exponential { loc, .. } => (loc, f64::INFINITY),
            Family::Laplace { .. } | Family::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Acklam's rational approximation refined by one Halley step.
fn standard_normal_inverse(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] =
        [-5.447_609_879_822_406e1, 1.615_858_368_580_409e2, -1.556_989_798_598_866e2, 6.680_131_188_771_972e1, -1.328_068_155_288_572e1];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    let low = 0.024_25;
    let x = if p < low {
        let q = sqrt(-2.0 * log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * log1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * erfc(-x / SQRT_2) - p;
    let u = e * sqrt(2.0 * core::f64::consts::PI) * exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Piecewise-constant density on a strictly increasing grid, normalised to
/// unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: Vec<f64>,
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl Tabulated {
    /// `values[i]` is the density on `[grid[i], grid[i + 1])`. Values are
    /// rescaled so the density integrates to one.
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || values.len() + 1 != grid.len() {
            return Err(Error::InvalidDistribution(format!(
                "tabulated density needs len(grid) = len(values) + 1 >= 2, got {} and {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution("grid must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDistribution("density values must be finite and >= 0".into()));
        }
        let mut cum = Vec::with_capacity(grid.len());
        cum.push(0.0);
        let mut acc = 0.0;
        for (i, v) in values.iter().enumerate() {
            acc += v * (grid[i + 1] - grid[i]);
            cum.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::InvalidDistribution("tabulated density has zero mass".into()));
        }
        let values = values.into_iter().map(|v| v / acc).collect();
        for c in cum.iter_mut() {
            *c /= acc;
        }
        let last = cum.len() - 1;
        cum[last] = 1.0;
        Ok(Tabulated { grid, values, cum })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn cell(&self, x: f64) -> Option<usize> {
        let n = self.values.len();
        if x < self.grid[0] || x >= self.grid[n] {
            return None;
        }
        Some(self.grid.partition_point(|&g| g <= x) - 1)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.cell(x).map_or(0.0, |i| self.values[i])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.values.len();
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[n] {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        (self.cum[i] + self.values[i] * (x - self.grid[i])).min(self.cum[i + 1])
    }

    fn inverse(&self, t: f64, strict: bool) -> f64 {
        let n = self.values.len();
        let upper = &self.cum[1..];
        let i = if strict { upper.partition_point(|&c| c <= t) } else { upper.partition_point(|&c| c < t) };
        if i >= n {
            return self.grid[n];
        }
        if self.values[i] <= 0.0 {
            return self.grid[i];
        }
        let x = self.grid[i] + (t - self.cum[i]) / self.values[i];
        x.clamp(self.grid[i], self.grid[i + 1])
    }

    fn shifted(&self, a: f64) -> Tabulated {
        Tabulated { grid: self.grid.iter().map(|g| g + a).collect(), values: self.values.clone(), cum: self.cum.clone() }
    }

    fn unimodal_breach(&self) -> f64 {
        let n = self.values.len();
        let mut breach: f64 = 0.0;
        // Left of zero: the density must not drop. Outside the grid it is 0.
        let mut prev = 0.0;
        for i in 0..n {
            if self.grid[i] >= 0.0 {
                break;
            }
            breach = breach.max(prev - self.values[i]);
            prev = self.values[i];
        }
        if self.grid[n] < 0.0 {
            breach = breach.max(prev);
        }
        // Right of zero: the density must not rise.
        let mut prev = if self.grid[0] > 0.0 { 0.0 } else { f64::INFINITY };
        for i in 0..n {
            if self.grid[i + 1] <= 0.0 {
                continue;
            }
            breach = breach.max(self.values[i] - prev);
            prev = self.values[i];
        }
        breach
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Family(Family),
    Tabulated(Tabulated),
}

impl Density {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Density::Family(f) => f.pdf(x),
            Density::Tabulated(t) => t.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Density::Family(f) => f.cdf(x),
            Density::Tabulated(t) => t.cdf(x),
        }
    }

    fn inverse(&self, t: f64, strict: bool) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Density::Family(f) => f.inverse(t),
            Density::Tabulated(tab) => tab.inverse(t, strict),
        }
    }

    fn shifted(&self, a: f64) -> Density {
        match self {
            Density::Family(f) => Density::Family(f.shifted(a)),
            Density::Tabulated(t) => Density::Tabulated(t.shifted(a)),
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Density::Family(f) => f.breakpoints(out),
            Density::Tabulated(t) => out.extend_from_slice(&t.grid),
        }
    }

    fn unimodal_breach(&self) -> f64 {
        match self {
            Density::Family(f) => f.unimodal_breach(),
            Density::Tabulated(t) => t.unimodal_breach(),
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Density::Family(f) => f.support(),
            Density::Tabulated(t) => (t.grid[0], t.grid[t.grid.len() - 1]),
        }
    }
}

/// Result of [`Distribution1D::check_unimodal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnimodalityReport {
    pub is_unimodal_at_zero: bool,
    /// Largest monotonicity breach of the (mass-weighted) density.
    pub max_violation: f64,
    /// True when some atom sits away from zero.
    pub atom_violation: bool,
}

/// A probability law: sorted atoms plus `density_mass` times a unit density.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution1D {
    atoms: Vec<Atom>,
    density: Option<Density>,
    density_mass: f64,
}

impl Distribution1D {
    /// Validates masses, sorts atoms and drops zero-mass atoms.
    pub fn new(mut atoms: Vec<Atom>, density: Option<Density>, density_mass: f64) -> Result<Self> {
        for a in &atoms {
            if !(a.x.is_finite() && a.p.is_finite() && a.p >= 0.0) {
                return Err(Error::InvalidDistribution(format!("bad atom {a:?}")));
            }
        }
        if !(density_mass.is_finite() && (0.0..=1.0 + MASS_TOL).contains(&density_mass)) {
            return Err(Error::InvalidDistribution(format!("density_mass {density_mass} not in [0, 1]")));
        }
        if density.is_none() && density_mass > MASS_TOL {
            return Err(Error::InvalidDistribution("density_mass > 0 without a density".into()));
        }
        if let Some(Density::Family(f)) = &density {
            f.validate()?;
        }
        atoms.retain(|a| a.p > 0.0);
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        if atoms.windows(2).any(|w| w[0].x == w[1].x) {
            return Err(Error::InvalidDistribution("atom locations must be distinct".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.p).sum::<f64>() + density_mass;
        if abs(total - 1.0) > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {total} differs from 1")));
        }
        let density = if density_mass > 0.0 { density } else { None };
        Ok(Distribution1D { atoms, density_mass: if density.is_some() { density_mass } else { 0.0 }, density })
    }

    pub fn dirac(x: f64) -> Self {
        Distribution1D { atoms: alloc::vec![Atom { x, p: 1.0 }], density: None, density_mass: 0.0 }
    }

    pub fn discrete(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms, None, 0.0)
    }

    pub fn from_family(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(Distribution1D { atoms: Vec::new(), density: Some(Density::Family(family)), density_mass: 1.0 })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::from_family(Family::Uniform { lo, hi })
    }

    pub fn triangular(lo: f64, mode: f64, hi: f64) -> Result<Self> {
        Self::from_family(Family::Triangular { lo, mode, hi })
    }

    pub fn laplace(loc: f64, scale: f64) -> Result<Self> {
        Self::from_family(Family::Laplace { loc, scale })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::from_family(Family::Exponential { rate, loc: 0.0 })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Self::from_family(Family::Gaussian { mean, sd })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let t = Tabulated::new(grid, values)?;
        Ok(Distribution1D { atoms: Vec::new(), density: Some(Density::Tabulated(t)), density_mass: 1.0 })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn density_mass(&self) -> f64 {
        self.density_mass
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }

    pub fn atom_mass_at(&self, x: f64) -> f64 {
        match self.atoms.binary_search_by(|a| a.x.total_cmp(&x)) {
            Ok(i) => self.atoms[i].p,
            Err(_) => 0.0,
        }
    }

    /// Mass-weighted density of the continuous part.
    pub fn pdf(&self, x: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| self.density_mass * d.pdf(x))
    }

    fn density_cdf(&self, x: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| self.density_mass * d.cdf(x))
    }

    pub fn quantile_plus(&self, z: f64) -> Result<f64> {
        check_level(z)?;
        Ok(self.inverse_plus(z))
    }

    pub fn quantile_minus(&self, z: f64) -> Result<f64> {
        check_level(z)?;
        Ok(self.inverse_minus(z))
    }

    /// Skorokhod sample: `quantile_plus(u)`.
    pub fn sample(&self, u: f64) -> f64 {
        self.inverse_plus(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }

    pub fn shift(&self, a: f64) -> Self {
        Distribution1D {
            atoms: self.atoms.iter().map(|at| Atom { x: at.x + a, p: at.p }).collect(),
            density: self.density.as_ref().map(|d| d.shifted(a)),
            density_mass: self.density_mass,
        }
    }

    /// `w * delta_0 + (1 - w) * self`.
    pub fn mix_with_dirac(&self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("Dirac weight {w} not in [0, 1]")));
        }
        let mut atoms: Vec<Atom> = self.atoms.iter().map(|a| Atom { x: a.x, p: (1.0 - w) * a.p }).collect();
        match atoms.iter_mut().find(|a| a.x == 0.0) {
            Some(a) => a.p += w,
            None => atoms.push(Atom { x: 0.0, p: w }),
        }
        let density = if w < 1.0 { self.density.clone() } else { None };
        Distribution1D::new(atoms, density, (1.0 - w) * self.density_mass)
    }

    /// Atom locations and density kinks, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.atoms.iter().map(|a| a.x).collect();
        if let Some(d) = &self.density {
            d.breakpoints(&mut out);
        }
        out.retain(|x| x.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Finite interval carrying all but `eps` of the mass on each side,
    /// always including every atom.
    pub fn effective_support(&self, eps: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let (Some(first), Some(last)) = (self.atoms.first(), self.atoms.last()) {
            lo = first.x;
            hi = last.x;
        }
        if let Some(d) = &self.density {
            let (s_lo, s_hi) = d.support();
            let d_lo = if s_lo.is_finite() { s_lo } else { d.inverse(eps, true) };
            let d_hi = if s_hi.is_finite() { s_hi } else { d.inverse(1.0 - eps, false) };
            lo = lo.min(d_lo);
            hi = hi.max(d_hi);
        }
        (lo, hi)
    }

    pub fn check_unimodal(&self, tol: f64) -> UnimodalityReport {
        let atom_violation = self.atoms.iter().any(|a| a.x != 0.0);
        let max_violation = self.density.as_ref().map_or(0.0, |d| self.density_mass * d.unimodal_breach());
        UnimodalityReport { is_unimodal_at_zero: max_violation <= tol && !atom_violation, max_violation, atom_violation }
    }

    /// Purely atomic law on `offset + spacing * Z` whose mass function is
    /// nondecreasing up to an atom at 0 and nonincreasing after it.
    pub fn is_lattice_unimodal_at_zero(&self) -> bool {
        let Some(spacing) = self.lattice_spacing() else {
            return false;
        };
        if self.atom_mass_at(0.0) <= 0.0 {
            return false;
        }
        let lo = self.atoms[0].x;
        let n = crate::math::round((self.atoms[self.atoms.len() - 1].x - lo) / spacing) as usize + 1;
        let mut pmf = alloc::vec![0.0; n];
        for a in &self.atoms {
            pmf[crate::math::round((a.x - lo) / spacing) as usize] = a.p;
        }
        let zero = crate::math::round(-lo / spacing) as usize;
        pmf[..=zero].windows(2).all(|w| w[0] <= w[1] + MASS_TOL) && pmf[zero..].windows(2).all(|w| w[0] + MASS_TOL >= w[1])
    }

    /// Common spacing of a purely atomic law whose atoms include or straddle
    /// a lattice through the first atom.
    pub fn lattice_spacing(&self) -> Option<f64> {
        if !self.is_atomic() {
            return None;
        }
        if self.atoms.len() == 1 {
            return Some(1.0);
        }
        let spacing = self.atoms.windows(2).map(|w| w[1].x - w[0].x).fold(f64::INFINITY, f64::min);
        let lo = self.atoms[0].x;
        let on_lattice = self.atoms.iter().all(|a| {
            let k = (a.x - lo) / spacing;
            abs(k - crate::math::round(k)) < 1e-9
        });
        on_lattice.then_some(spacing)
    }

    /// Centre of symmetry, if the law is symmetric about one.
    pub fn symmetry_center(&self, tol: f64) -> Option<f64> {
        let center = 0.5 * (self.inverse_plus(0.5) + self.inverse_minus(0.5));
        let mut probes = self.breakpoints();
        for k in 1..32 {
            probes.push(self.inverse_plus(k as f64 / 32.0));
        }
        let symmetric = probes.iter().all(|&x| {
            let d = x - center;
            let lhs = self.cdf(center + d);
            let rhs = 1.0 - self.cdf_left(center - d);
            abs(lhs - rhs) <= tol
        });
        symmetric.then_some(center)
    }

    fn inverse(&self, z: f64, strict: bool) -> f64 {
        let exceeds = |v: f64| if strict { v > z } else { v >= z };
        let dm = self.density_mass;
        let mut acc = 0.0;
        let mut prev = f64::NEG_INFINITY;
        for atom in &self.atoms {
            if let Some(d) = &self.density {
                if exceeds(acc + dm * d.cdf(atom.x)) {
                    let x = d.inverse((z - acc) / dm, strict);
                    return x.max(prev).min(atom.x);
                }
            }
            acc += atom.p;
            if exceeds(acc + self.density_cdf(atom.x)) {
                return atom.x;
            }
            prev = atom.x;
        }
        match &self.density {
            Some(d) => d.inverse((z - acc) / dm, strict).max(prev),
            None => prev,
        }
    }
}

impl Law for Distribution1D {
    fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.x <= x);
        let atoms: f64 = self.atoms[..k].iter().map(|a| a.p).sum();
        (atoms + self.density_cdf(x)).min(1.0)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.x < x);
        let atoms: f64 = self.atoms[..k].iter().map(|a| a.p).sum();
        (atoms + self.density_cdf(x)).min(1.0)
    }

    fn inverse_plus(&self, z: f64) -> f64 {
        self.inverse(z, true)
    }

    fn inverse_minus(&self, z: f64) -> f64 {
        self.inverse(z, false)
    }
}

fn check_level(z: f64) -> Result<()> {
    if z > 0.0 && z < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("quantile level {z} not in (0, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half_exp() -> Distribution1D {
        Distribution1D::exponential(1.0).unwrap().mix_with_dirac(0.5).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let u = Distribution1D::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.cdf(0.5), 0.5);
        let d = Distribution1D::dirac(0.0);
        assert_eq!(d.cdf(-0.1), 0.0);
        assert_eq!(d.cdf(0.0), 1.0);
        assert_eq!(half_exp().cdf(0.0), 0.5);
    }

    #[test]
    fn quantile_examples() {
        let two = Distribution1D::discrete(vec![Atom { x: 0.0, p: 0.5 }, Atom { x: 1.0, p: 0.5 }]).unwrap();
        assert_eq!(two.quantile_plus(0.5).unwrap(), 1.0);
        assert_eq!(two.quantile_minus(0.5).unwrap(), 0.0);

        let u = Distribution1D::uniform(0.0, 1.0).unwrap();
        assert!((u.quantile_plus(0.3).unwrap() - 0.3).abs() < 1e-15);
        assert!((u.quantile_minus(0.3).unwrap() - 0.3).abs() < 1e-15);

        let m = half_exp();
        assert_eq!(m.quantile_plus(0.25).unwrap(), 0.0);
        assert_eq!(m.quantile_minus(0.25).unwrap(), 0.0);
        // Bisection on the cdf as an independent route.
        let mut lo = 0.0;
        let mut hi = 10.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if m.cdf(mid) > 0.75 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let ln2 = core::f64::consts::LN_2;
        assert!((hi - ln2).abs() < 1e-12);
        assert!((m.quantile_plus(0.75).unwrap() - ln2).abs() < 1e-12);
        assert!((m.quantile_minus(0.75).unwrap() - ln2).abs() < 1e-12);
    }

    #[test]
    fn quantile_domain_errors() {
        let u = Distribution1D::uniform(0.0, 1.0).unwrap();
        assert!(matches!(u.quantile_plus(0.0), Err(Error::Domain(_))));
        assert!(matches!(u.quantile_minus(1.0), Err(Error::Domain(_))));
        assert!(u.quantile_plus(f64::NAN).is_err());
    }

    #[test]
    fn shift_examples() {
        assert_eq!(Distribution1D::dirac(0.0).shift(2.5), Distribution1D::dirac(2.5));
        let u = Distribution1D::uniform(0.0, 1.0).unwrap().shift(0.5);
        assert_eq!(u, Distribution1D::uniform(0.5, 1.5).unwrap());
        let l = Distribution1D::laplace(0.3, 2.0).unwrap();
        let back = l.shift(1.7).shift(-1.7);
        for k in -40..=40 {
            let x = k as f64 * 0.25;
            assert!((back.cdf(x) - l.cdf(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn mix_with_dirac_examples() {
        let e = Distribution1D::exponential(1.0).unwrap();
        assert_eq!(e.mix_with_dirac(0.0).unwrap().cdf(1.0), e.cdf(1.0));
        assert_eq!(e.mix_with_dirac(1.0).unwrap(), Distribution1D::dirac(0.0));
        assert_eq!(e.mix_with_dirac(0.5).unwrap().cdf(0.0), 0.5);
        // Merges with an existing atom at zero.
        let d = half_exp().mix_with_dirac(0.5).unwrap();
        assert_eq!(d.atoms().len(), 1);
        assert!((d.atom_mass_at(0.0) - 0.75).abs() < 1e-15);
        assert!(e.mix_with_dirac(1.5).is_err());
    }

    #[test]
    fn sample_examples() {
        assert_eq!(Distribution1D::dirac(0.0).sample(0.77), 0.0);
        assert!((Distribution1D::uniform(0.0, 1.0).unwrap().sample(0.42) - 0.42).abs() < 1e-15);
    }

    #[test]
    fn unimodality_examples() {
        assert!(Distribution1D::laplace(0.0, 1.0).unwrap().check_unimodal(1e-12).is_unimodal_at_zero);
        assert!(Distribution1D::exponential(1.0).unwrap().check_unimodal(1e-12).is_unimodal_at_zero);
        assert!(half_exp().check_unimodal(1e-12).is_unimodal_at_zero);
        let bad =
            Distribution1D::new(vec![Atom { x: 1.0, p: 0.5 }], Some(Density::Family(Family::Uniform { lo: 0.0, hi: 1.0 })), 0.5).unwrap();
        let r = bad.check_unimodal(1e-12);
        assert!(!r.is_unimodal_at_zero && r.atom_violation);

        let off = Distribution1D::laplace(1.0, 1.0).unwrap().check_unimodal(1e-12);
        assert!(!off.is_unimodal_at_zero);
        assert!((off.max_violation - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-14);

        let tab = Distribution1D::tabulated(vec![-2.0, -1.0, 0.0, 1.0, 3.0], vec![0.1, 0.3, 0.4, 0.05]).unwrap();
        assert!(tab.check_unimodal(1e-12).is_unimodal_at_zero);
        let tab_bad = Distribution1D::tabulated(vec![-2.0, -1.0, 0.0, 1.0, 3.0], vec![0.3, 0.1, 0.4, 0.05]).unwrap();
        assert!(!tab_bad.check_unimodal(1e-12).is_unimodal_at_zero);
        let tab_gap = Distribution1D::tabulated(vec![1.0, 2.0], vec![1.0]).unwrap();
        assert!(!tab_gap.check_unimodal(1e-12).is_unimodal_at_zero);
    }

    #[test]
    fn validation_rejects_bad_mass() {
        assert!(Distribution1D::discrete(vec![Atom { x: 0.0, p: 0.6 }]).is_err());
        assert!(Distribution1D::discrete(vec![Atom { x: 0.0, p: 0.5 }, Atom { x: 0.0, p: 0.5 }]).is_err());
        assert!(Distribution1D::uniform(1.0, 1.0).is_err());
        assert!(Distribution1D::tabulated(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn tabulated_quantiles_skip_empty_cells() {
        let t = Distribution1D::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.quantile_plus(0.5).unwrap(), 2.0);
        assert_eq!(t.quantile_minus(0.5).unwrap(), 1.0);
        assert!((t.quantile_plus(0.75).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_inverse_matches_cdf() {
        let g = Distribution1D::gaussian(1.0, 2.0).unwrap();
        for k in 1..100 {
            let z = k as f64 / 100.0;
            let x = g.quantile_plus(z).unwrap();
            assert!((g.cdf(x) - z).abs() < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn symmetry_detection() {
        assert_eq!(Distribution1D::laplace(0.0, 1.0).unwrap().symmetry_center(1e-12), Some(0.0));
        assert_eq!(Distribution1D::uniform(0.0, 1.0).unwrap().symmetry_center(1e-12), Some(0.5));
        assert!(Distribution1D::exponential(1.0).unwrap().symmetry_center(1e-9).is_none());
        let lattice = Distribution1D::discrete(vec![Atom { x: -1.0, p: 0.5 }, Atom { x: 1.0, p: 0.5 }]).unwrap();
        assert_eq!(lattice.symmetry_center(1e-12), Some(0.0));
    }

    #[test]
    fn lattice_unimodality() {
        let pmf = Distribution1D::discrete(vec![Atom { x: -1.0, p: 0.25 }, Atom { x: 0.0, p: 0.5 }, Atom { x: 1.0, p: 0.25 }]).unwrap();
        assert!(pmf.is_lattice_unimodal_at_zero());
        let ext = Distribution1D::discrete(vec![Atom { x: -1.0, p: 0.5 }, Atom { x: 1.0, p: 0.5 }]).unwrap().mix_with_dirac(0.5).unwrap();
        assert!(ext.is_lattice_unimodal_at_zero());
        let dip = Distribution1D::discrete(vec![Atom { x: -2.0, p: 0.3 }, Atom { x: -1.0, p: 0.1 }, Atom { x: 0.0, p: 0.6 }]).unwrap();
        assert!(!dip.is_lattice_unimodal_at_zero());
    }

    fn laws() -> Vec<Distribution1D> {
        vec![
            Distribution1D::uniform(-1.0, 2.0).unwrap(),
            Distribution1D::laplace(0.0, 1.0).unwrap(),
            Distribution1D::triangular(-1.0, 0.0, 2.0).unwrap(),
            Distribution1D::gaussian(0.5, 0.7).unwrap(),
            half_exp(),
            Distribution1D::discrete(vec![Atom { x: 0.0, p: 0.5 }, Atom { x: 1.0, p: 0.5 }]).unwrap(),
            Distribution1D::tabulated(vec![-1.0, 0.0, 0.5, 2.0], vec![0.2, 0.0, 0.6]).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn quantile_inverse_bracket(idx in 0usize..7, z in 1e-9f64..(1.0 - 1e-9)) {
            let d = &laws()[idx];
            let plus = d.quantile_plus(z).unwrap();
            let minus = d.quantile_minus(z).unwrap();
            prop_assert!(minus <= plus);
            prop_assert!(d.cdf(plus) >= z - 1e-12);
            // Strictly left of the minus inverse the cdf stays at or below z.
            let left = minus - 1e-9 * (1.0 + minus.abs());
            prop_assert!(d.cdf(left) <= z + 1e-12);
        }

        #[test]
        fn quantiles_nondecreasing(idx in 0usize..7, z1 in 1e-6f64..0.999, dz in 0.0f64..1e-3) {
            let d = &laws()[idx];
            let z2 = (z1 + dz).min(1.0 - 1e-9);
            prop_assert!(d.quantile_plus(z1).unwrap() <= d.quantile_plus(z2).unwrap());
            prop_assert!(d.quantile_minus(z1).unwrap() <= d.quantile_minus(z2).unwrap());
        }

        #[test]
        fn cdf_monotone_and_shift_consistent(idx in 0usize..7, x in -5.0f64..5.0, dx in 0.0f64..1.0, a in -3.0f64..3.0) {
            let d = &laws()[idx];
            prop_assert!(d.cdf(x) <= d.cdf(x + dx));
            prop_assert!(d.cdf_left(x) <= d.cdf(x));
            prop_assert!((d.shift(a).cdf(x + a) - d.cdf(x)).abs() < 1e-12);
        }

        #[test]
        fn unimodality_is_shift_covariant(idx in 0usize..7, a in -3.0f64..3.0) {
            // Unimodal at its own mode iff the shifted copy is unimodal at the
            // shifted mode: recentre and compare.
            let d = &laws()[idx];
            let back = d.shift(a).shift(-a);
            prop_assert_eq!(d.check_unimodal(1e-9).is_unimodal_at_zero, back.check_unimodal(1e-9).is_unimodal_at_zero);
        }

        #[test]
        fn dirac_mix_keeps_unit_mass(idx in 0usize..7, w in 0.0f64..=1.0) {
            let m = laws()[idx].mix_with_dirac(w).unwrap();
            let total: f64 = m.atoms().iter().map(|a| a.p).sum::<f64>() + m.density_mass();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn plus_and_minus_samples_agree_almost_surely(idx in 0usize..7, u in 1e-9f64..(1.0 - 1e-9)) {
            // X+ != X- only on the countable set of flat cdf levels.
            let d = &laws()[idx];
            let gap = d.quantile_plus(u).unwrap() - d.quantile_minus(u).unwrap();
            prop_assert!(gap.abs() < 1e-9);
        }
    }
}
