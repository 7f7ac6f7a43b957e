//! Meet, Hahn-Jordan decomposition and the anti-monotonic rearrangement
//! (AMR) coupling of a dominated pair of laws.
//!
//! Throughout, `F` is the lower law (`F >= G` pointwise), `h = F - G`, and
//! `zeta` is the left end of the set where `h` (or its left limit) is
//! maximal. On `(-inf, zeta)` the meet equals `G`, on `(zeta, inf)` it
//! equals `F`, and at `zeta` it carries the smaller of the two atoms.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, bisect, golden_max, sqrt};
use crate::measures::{Atom, Distribution1D, Law, TAIL_CUT};
use crate::quadrature::integrate_pieces;

/// Tolerance on `h` when testing domination, connectivity and peak level.
pub const LEVEL_TOL: f64 = 1e-12;

const GRID_POINTS: usize = 2048;
const BAND_TAIL: f64 = 1e-12;
const BAND_TOL: f64 = 1e-11;

/// Which substitute inverse drives the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseRule {
    #[default]
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupleSample {
    pub x: f64,
    pub y: f64,
    pub coupled: bool,
}

/// The three pieces of `mu_1 - mu_2 = p nu_1 - p nu_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// `nu_1`, supported left of `zeta`.
    Left,
    /// `nu_2`, supported right of `zeta`.
    Right,
    /// `nu*`, the normalised meet.
    Common,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    f: Distribution1D,
    g: Distribution1D,
    p: f64,
    zeta: f64,
    atom_at_zeta: f64,
    g_left_zeta: f64,
    f_zeta: f64,
    scale: f64,
    snap: Vec<f64>,
    rule: InverseRule,
}

impl Decomposition {
    /// Decomposes a dominated pair with connected super-level sets.
    pub fn new(f: &Distribution1D, g: &Distribution1D) -> Result<Self> {
        match locate_peak(f, g)? {
            Some(zeta) => Ok(Self::assemble(f.clone(), g.clone(), zeta)),
            None => Ok(Self::identical(f)),
        }
    }

    /// Decomposition of `F` against `F(. - a)` for `a >= 0`.
    ///
    /// When `F` is a density that is unimodal about its leftmost mode, plus
    /// possibly an atom at that mode, the peak is found by a sign search on
    /// the densities. Other laws go through [`Decomposition::new`].
    pub fn of_shift(f: &Distribution1D, a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("shift {a} must be finite and >= 0")));
        }
        if a == 0.0 {
            return Ok(Self::identical(f));
        }
        match shift_mode(f) {
            Some(m) => Ok(Self::of_shift_unimodal(f, m, a)),
            None => Self::new(f, &f.shift(a)),
        }
    }

    /// Shift decomposition for a law already known to be unimodal about `m`
    /// in the sense of [`shift_mode`].
    pub(crate) fn of_shift_unimodal(f: &Distribution1D, m: f64, a: f64) -> Self {
        if a == 0.0 {
            return Self::identical(f);
        }
        let g = f.shift(a);
        let mut snap = f.breakpoints();
        snap.extend(g.breakpoints());
        snap.sort_by(f64::total_cmp);
        snap.dedup();
        let descends = |x: f64| f.pdf(x) - f.pdf(x - a) <= 0.0;
        let zeta = if descends(m) { m } else { bisect(m, m + a, &snap, descends) };
        Self::assemble(f.clone(), g, zeta)
    }

    /// `F = G`: nothing to transport, every sample is coupled.
    pub fn identical(f: &Distribution1D) -> Self {
        let zeta = f.inverse_plus(0.5);
        let mut d = Self::assemble(f.clone(), f.clone(), zeta);
        d.p = 0.0;
        d
    }

    fn assemble(f: Distribution1D, g: Distribution1D, zeta: f64) -> Self {
        let atom_at_zeta = f.atom_mass_at(zeta).min(g.atom_mass_at(zeta));
        let g_left_zeta = g.cdf_left(zeta);
        let f_zeta = f.cdf(zeta);
        let p = (f_zeta - g_left_zeta - atom_at_zeta).clamp(0.0, 1.0);
        let mut snap = f.breakpoints();
        snap.extend(g.breakpoints());
        snap.push(zeta);
        snap.sort_by(f64::total_cmp);
        snap.dedup();
        let spread = f.inverse_plus(0.9) - f.inverse_plus(0.1);
        let scale = if spread > 0.0 { spread } else { 1.0 };
        Decomposition { f, g, p, zeta, atom_at_zeta, g_left_zeta, f_zeta, scale, snap, rule: InverseRule::Plus }
    }

    pub fn with_rule(mut self, rule: InverseRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn rule(&self) -> InverseRule {
        self.rule
    }

    /// Residual mass: the probability that the AMR pair is not coupled.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Mass of the meet at `zeta`.
    pub fn atom_at_zeta(&self) -> f64 {
        self.atom_at_zeta
    }

    pub fn meet_mass(&self) -> f64 {
        1.0 - self.p
    }

    pub fn f(&self) -> &Distribution1D {
        &self.f
    }

    pub fn g(&self) -> &Distribution1D {
        &self.g
    }

    pub fn nu1(&self) -> Part<'_> {
        Part { dec: self, which: Component::Left }
    }

    pub fn nu2(&self) -> Part<'_> {
        Part { dec: self, which: Component::Right }
    }

    /// `None` when the supports are disjoint (`p = 1`).
    pub fn nu_star(&self) -> Option<Part<'_>> {
        (self.p < 1.0).then_some(Part { dec: self, which: Component::Common })
    }

    /// Unnormalised cdf of a component; `left` selects the left limit.
    pub fn raw_cdf(&self, which: Component, x: f64, left: bool) -> f64 {
        let (fx, gx) = if left { (self.f.cdf_left(x), self.g.cdf_left(x)) } else { (self.f.cdf(x), self.g.cdf(x)) };
        let before = x < self.zeta || (left && x == self.zeta);
        let m = if before { gx } else { self.g_left_zeta + self.atom_at_zeta + fx - self.f_zeta };
        match which {
            Component::Common => m.clamp(0.0, 1.0 - self.p),
            Component::Left => {
                if before {
                    (fx - gx).clamp(0.0, self.p)
                } else {
                    self.p
                }
            }
            Component::Right => {
                if before {
                    0.0
                } else {
                    (gx - m).clamp(0.0, self.p)
                }
            }
        }
    }

    /// `inf { x : raw_cdf(x) > w }` (or `>=` for the minus rule).
    pub fn raw_inverse(&self, which: Component, w: f64, strict: bool) -> f64 {
        let past = |v: f64| if strict { v > w } else { v >= w };
        match which {
            Component::Common => {
                let before = if strict { w < self.g_left_zeta } else { w <= self.g_left_zeta };
                let at = if strict { w < self.g_left_zeta + self.atom_at_zeta } else { w <= self.g_left_zeta + self.atom_at_zeta };
                if before {
                    inverse(&self.g, w, strict).min(self.zeta)
                } else if at {
                    self.zeta
                } else {
                    let level = w - self.g_left_zeta - self.atom_at_zeta + self.f_zeta;
                    inverse(&self.f, level, strict).max(self.zeta)
                }
            }
            Component::Left => {
                let pred = |x: f64| x >= self.zeta || past(self.raw_cdf(Component::Left, x, false));
                let mut step = self.scale;
                let mut lo = self.zeta - step;
                while pred(lo) && lo.is_finite() {
                    step *= 2.0;
                    lo = self.zeta - step;
                }
                bisect(lo, self.zeta, &self.snap, pred)
            }
            Component::Right => {
                let pred = |x: f64| x >= self.zeta && past(self.raw_cdf(Component::Right, x, false));
                if pred(self.zeta) {
                    return self.zeta;
                }
                let mut step = self.scale;
                let mut hi = self.zeta + step;
                while !pred(hi) && hi.is_finite() {
                    step *= 2.0;
                    hi = self.zeta + step;
                }
                bisect(self.zeta, hi, &self.snap, pred)
            }
        }
    }

    /// AMR sample driven by one uniform.
    pub fn sample(&self, u: f64) -> CoupleSample {
        let strict = self.rule == InverseRule::Plus;
        let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        if u >= self.p {
            let x = self.raw_inverse(Component::Common, (u - self.p).max(f64::MIN_POSITIVE), strict);
            CoupleSample { x, y: x, coupled: true }
        } else {
            let x = self.raw_inverse(Component::Left, u, strict);
            let y = self.raw_inverse(Component::Right, self.p - u, strict);
            CoupleSample { x, y, coupled: x == y }
        }
    }

    /// `P[(X, Y) in (a, b]^2]` under the AMR coupling.
    pub fn joint_square_prob(&self, a: f64, b: f64) -> Result<f64> {
        self.check_square(a, b)?;
        let meet = self.raw_cdf(Component::Common, b, false) - self.raw_cdf(Component::Common, a, false);
        let r1 = |x| self.raw_cdf(Component::Left, x, false);
        let r2 = |x| self.raw_cdf(Component::Right, x, false);
        // X in (a, b] for u in (R1(a), R1(b)]; Y in (a, b] for u in [p - R2(b), p - R2(a)).
        let lo = r1(a).max(self.p - r2(b));
        let hi = r1(b).min(self.p - r2(a));
        Ok((meet + (hi - lo).max(0.0)).clamp(0.0, 1.0))
    }

    /// The same probability assembled from the four regional formulas.
    /// Valid when neither law has an atom at `zeta`.
    pub fn joint_square_prob_cases(&self, a: f64, b: f64) -> Result<f64> {
        self.check_square(a, b)?;
        let (f, g, z) = (&self.f, &self.g, self.zeta);
        if b <= z {
            return Ok(g.cdf(b) - g.cdf(a));
        }
        if a > z {
            return Ok(f.cdf(b) - f.cdf(a));
        }
        let coupled = g.cdf(z) - g.cdf(a) + f.cdf(b) - f.cdf(z);
        let apart = if b > self.underline_amr(a) {
            (f.cdf(z) - f.cdf(a)) - (g.cdf(z) - g.cdf(a))
        } else {
            (g.cdf(b) - g.cdf(z)) - (f.cdf(b) - f.cdf(z))
        };
        Ok(coupled + apart)
    }

    /// `inf { y > zeta : h(x) >= h(y) }` for `x <= zeta`.
    pub fn underline_amr(&self, x: f64) -> f64 {
        let level = self.h(x);
        let pred = |y: f64| y > self.zeta && self.h(y) <= level;
        let mut step = self.scale;
        let mut hi = self.zeta + step;
        while !pred(hi) && hi.is_finite() {
            step *= 2.0;
            hi = self.zeta + step;
        }
        bisect(self.zeta, hi, &self.snap, pred)
    }

    fn h(&self, x: f64) -> f64 {
        self.f.cdf(x) - self.g.cdf(x)
    }

    fn check_square(&self, a: f64, b: f64) -> Result<()> {
        if !(a < b) {
            return Err(Error::Domain(format!("need a < b, got ({a}, {b}]")));
        }
        for x in [a, b] {
            if self.f.atom_mass_at(x) > 0.0 || self.g.atom_mass_at(x) > 0.0 {
                return Err(Error::AtomCollision { at: x });
            }
        }
        Ok(())
    }

    /// Joint law `(x, y, mass)` of the AMR pair for purely atomic laws.
    ///
    /// Coupled atoms come first, then the residuals matched with `nu_1`
    /// ascending against `nu_2` descending.
    pub fn joint_atomic(&self) -> Result<Vec<(f64, f64, f64)>> {
        if !(self.f.is_atomic() && self.g.is_atomic()) {
            return Err(Error::InvalidDistribution("joint_atomic needs purely atomic laws".into()));
        }
        let jump = |which, x| self.raw_cdf(which, x, false) - self.raw_cdf(which, x, true);
        let mut out = Vec::new();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for &x in &self.snap {
            let m = jump(Component::Common, x);
            if m > 0.0 {
                out.push((x, x, m));
            }
            let r1 = jump(Component::Left, x);
            if r1 > 0.0 {
                left.push((x, r1));
            }
            let r2 = jump(Component::Right, x);
            if r2 > 0.0 {
                right.push((x, r2));
            }
        }
        right.reverse();
        let (mut i, mut j) = (0, 0);
        let (mut ri, mut rj) = (left.first().map_or(0.0, |l| l.1), right.first().map_or(0.0, |r| r.1));
        while i < left.len() && j < right.len() {
            let m = ri.min(rj);
            if m > 0.0 {
                out.push((left[i].0, right[j].0, m));
            }
            ri -= m;
            rj -= m;
            if ri <= 1e-15 {
                i += 1;
                ri = left.get(i).map_or(0.0, |l| l.1);
            }
            if rj <= 1e-15 {
                j += 1;
                rj = right.get(j).map_or(0.0, |r| r.1);
            }
        }
        Ok(out)
    }
}

/// Leftmost mode of a law that is a density unimodal about that point plus
/// possibly an atom there.
pub(crate) fn shift_mode(f: &Distribution1D) -> Option<f64> {
    let density = f.density()?;
    let m = match f.atoms() {
        [] => leftmost_mode(density),
        [only] => only.x,
        _ => return None,
    };
    f.shift(-m).check_unimodal(LEVEL_TOL).is_unimodal_at_zero.then_some(m)
}

fn leftmost_mode(d: &crate::measures::Density) -> f64 {
    use crate::measures::{Density, Family};
    match d {
        Density::Family(fam) => match *fam {
            Family::Uniform { lo, .. } => lo,
            Family::Triangular { mode, .. } => mode,
            Family::Laplace { loc, .. } => loc,
            Family::Exponential { loc, .. } => loc,
            Family::Gaussian { mean, .. } => mean,
        },
        Density::Tabulated(t) => {
            let peak = t.values().iter().copied().fold(0.0, f64::max);
            let i = t.values().iter().position(|&v| v == peak).unwrap_or(0);
            t.grid()[i]
        }
    }
}

fn inverse(d: &Distribution1D, level: f64, strict: bool) -> f64 {
    let z = level.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    if strict {
        d.inverse_plus(z)
    } else {
        d.inverse_minus(z)
    }
}

/// Normalised view of one component of a decomposition.
#[derive(Debug, Clone, Copy)]
pub struct Part<'a> {
    dec: &'a Decomposition,
    which: Component,
}

impl Part<'_> {
    pub fn mass(&self) -> f64 {
        match self.which {
            Component::Common => 1.0 - self.dec.p,
            _ => self.dec.p,
        }
    }
}

impl Law for Part<'_> {
    fn cdf(&self, x: f64) -> f64 {
        let m = self.mass();
        if m <= 0.0 {
            return if x >= self.dec.zeta { 1.0 } else { 0.0 };
        }
        self.dec.raw_cdf(self.which, x, false) / m
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let m = self.mass();
        if m <= 0.0 {
            return if x > self.dec.zeta { 1.0 } else { 0.0 };
        }
        self.dec.raw_cdf(self.which, x, true) / m
    }

    fn inverse_plus(&self, z: f64) -> f64 {
        if self.mass() <= 0.0 {
            return self.dec.zeta;
        }
        self.dec.raw_inverse(self.which, z * self.mass(), true)
    }

    fn inverse_minus(&self, z: f64) -> f64 {
        if self.mass() <= 0.0 {
            return self.dec.zeta;
        }
        self.dec.raw_inverse(self.which, z * self.mass(), false)
    }
}

/// Sorted candidate points for grid searches over `h = F - G`.
fn candidates(f: &Distribution1D, g: &Distribution1D, extra: &[f64]) -> Vec<f64> {
    let mut xs = f.breakpoints();
    xs.extend(g.breakpoints());
    xs.extend_from_slice(extra);
    if !(f.is_atomic() && g.is_atomic()) {
        let (l1, h1) = f.effective_support(TAIL_CUT);
        let (l2, h2) = g.effective_support(TAIL_CUT);
        let (lo, hi) = (l1.min(l2), h1.max(h2));
        let n = GRID_POINTS - 1;
        xs.extend((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
    }
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// `h` at `x-` and at `x`, interleaved along the candidate points.
fn h_profile(f: &Distribution1D, g: &Distribution1D, xs: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().map(|&x| (f.cdf_left(x) - g.cdf_left(x), f.cdf(x) - g.cdf(x))).collect()
}

fn check_profile(xs: &[f64], prof: &[(f64, f64)]) -> Result<usize> {
    for (x, (l, r)) in xs.iter().zip(prof) {
        if l.min(*r) < -LEVEL_TOL {
            return Err(Error::DominationViolated { witness: *x });
        }
    }
    let seq: Vec<(f64, f64)> = xs.iter().zip(prof).flat_map(|(x, (l, r))| [(*x, *l), (*x, *r)]).collect();
    let top = seq.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let peak = seq.iter().position(|s| s.1 == top).unwrap_or(0);
    for w in seq[..=peak].windows(2) {
        if w[1].1 < w[0].1 - LEVEL_TOL {
            return Err(Error::SuperlevelDisconnected { at: w[1].0, rise: w[0].1 - w[1].1 });
        }
    }
    for w in seq[peak..].windows(2) {
        if w[1].1 > w[0].1 + LEVEL_TOL {
            return Err(Error::SuperlevelDisconnected { at: w[1].0, rise: w[1].1 - w[0].1 });
        }
    }
    Ok(peak / 2)
}

/// Peak of `h`, or `None` when the laws coincide on the candidate grid.
fn locate_peak(f: &Distribution1D, g: &Distribution1D) -> Result<Option<f64>> {
    let xs = candidates(f, g, &[]);
    let prof = h_profile(f, g, &xs);
    let i = check_profile(&xs, &prof)?;
    let big_h = |x: f64| (f.cdf_left(x) - g.cdf_left(x)).max(f.cdf(x) - g.cdf(x));
    let mut level = prof[i].0.max(prof[i].1);
    let mut best = xs[i];
    if !(f.is_atomic() && g.is_atomic()) {
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(xs.len() - 1)];
        if lo < hi {
            let (xg, hg) = golden_max(|x| f.cdf(x) - g.cdf(x), lo, hi);
            if hg > level {
                level = hg;
                best = xg;
            }
        }
    }
    if level <= LEVEL_TOL {
        return Ok(None);
    }
    let target = level - LEVEL_TOL;
    let start = xs[0] - 1.0;
    let z0 = if big_h(xs[0]) >= target { xs[0] } else { bisect(start, best, &xs, |x| big_h(x) >= target) };
    if xs.binary_search_by(|v| v.total_cmp(&z0)).is_ok() || f.density().is_none() || g.density().is_none() {
        return Ok(Some(z0));
    }
    // A smooth peak is flat to second order, so sharpen with the density sign.
    let scale = (xs[xs.len() - 1] - xs[0]).max(1e-300);
    let left = z0 - 1e-6 * scale;
    let right = z0 + 1e-6 * scale + (best - z0).max(0.0);
    let falls = |x: f64| f.pdf(x) - g.pdf(x) <= 0.0;
    if !falls(left) && falls(right) {
        let z = bisect(left, right, &xs, falls);
        if big_h(z) >= level - sqrt(LEVEL_TOL) {
            return Ok(Some(z));
        }
    }
    Ok(Some(z0))
}

/// `mu_1 ^ mu_2`: pointwise minimum of densities and of co-located atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Meet {
    atoms: Vec<Atom>,
    first: Distribution1D,
    second: Distribution1D,
    lo: f64,
    breaks: Vec<f64>,
    mass: f64,
}

impl Meet {
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.first.pdf(x).min(self.second.pdf(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.x <= x).map(|a| a.p).sum();
        if x <= self.lo {
            return atoms;
        }
        atoms + integrate_pieces(&|t| self.pdf(t), self.lo, x, &self.breaks, BAND_TOL)
    }
}

pub fn meet(d1: &Distribution1D, d2: &Distribution1D) -> Meet {
    let atoms: Vec<Atom> = d1
        .atoms()
        .iter()
        .filter_map(|a| {
            let p = a.p.min(d2.atom_mass_at(a.x));
            (p > 0.0).then_some(Atom { x: a.x, p })
        })
        .collect();
    let mut breaks = d1.breakpoints();
    breaks.extend(d2.breakpoints());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (l1, h1) = d1.effective_support(TAIL_CUT);
    let (l2, h2) = d2.effective_support(TAIL_CUT);
    let lo = l1.max(l2);
    let hi = h1.min(h2);
    let mut out = Meet { atoms, first: d1.clone(), second: d2.clone(), lo, breaks, mass: 0.0 };
    let dens = if d1.density().is_some() && d2.density().is_some() && hi > lo {
        integrate_pieces(&|t| out.pdf(t), lo, hi, &out.breaks, BAND_TOL)
    } else {
        0.0
    };
    out.mass = out.atoms.iter().map(|a| a.p).sum::<f64>() + dens;
    out
}

/// Domination check plus connectivity of `{F - G >= l}` on a grid of
/// `grid_resolution` points (plus all atoms and kinks).
pub fn superlevel_connected(f: &Distribution1D, g: &Distribution1D, grid_resolution: usize) -> Result<bool> {
    let (l1, h1) = f.effective_support(TAIL_CUT);
    let (l2, h2) = g.effective_support(TAIL_CUT);
    let (lo, hi) = (l1.min(l2), h1.max(h2));
    let n = grid_resolution.max(2) - 1;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let xs = candidates(f, g, &grid);
    let prof = h_profile(f, g, &xs);
    match check_profile(&xs, &prof) {
        Ok(_) => Ok(true),
        Err(Error::SuperlevelDisconnected { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

pub fn hahn_jordan(f: &Distribution1D, g: &Distribution1D) -> Result<Decomposition> {
    Decomposition::new(f, g)
}

pub fn amr_sample(dec: &Decomposition, u: f64) -> CoupleSample {
    dec.sample(u)
}

pub fn joint_square_prob(dec: &Decomposition, a: f64, b: f64) -> Result<f64> {
    dec.joint_square_prob(a, b)
}

/// The anti-monotonic rearrangement map `rho(x) = inf { y >= zeta : h(y) <= h(x) }`
/// for atomless laws and `x <= zeta`.
pub fn amr_density_map(f: &Distribution1D, g: &Distribution1D, x: f64) -> Result<f64> {
    if !f.atoms().is_empty() || !g.atoms().is_empty() || f.density().is_none() || g.density().is_none() {
        return Err(Error::Domain("the AMR map needs atomless laws with densities".into()));
    }
    let dec = Decomposition::new(f, g)?;
    amr_map_with(&dec, x)
}

pub(crate) fn amr_map_with(dec: &Decomposition, x: f64) -> Result<f64> {
    if x > dec.zeta {
        return Err(Error::Domain(format!("x = {x} lies right of zeta = {}", dec.zeta)));
    }
    let level = dec.h(x);
    let pred = |y: f64| y >= dec.zeta && dec.h(y) <= level;
    if pred(dec.zeta) {
        return Ok(dec.zeta);
    }
    let mut step = dec.scale;
    let mut hi = dec.zeta + step;
    while !pred(hi) && hi.is_finite() {
        step *= 2.0;
        hi = dec.zeta + step;
    }
    Ok(bisect(dec.zeta, hi, &dec.snap, pred))
}

/// `int min { F(t) - F(t - c), G(t) - G(t - c) } dt`, the largest value of
/// `E[(c - |X - Y|)^+]` over couplings of a dominated pair.
pub fn band_payoff(f: &Distribution1D, g: &Distribution1D, c: f64) -> Result<f64> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("band width {c} must be finite and >= 0")));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let (l1, h1) = f.effective_support(BAND_TAIL);
    let (l2, h2) = g.effective_support(BAND_TAIL);
    let lo = l1.min(l2);
    let hi = h1.max(h2) + c;
    let mut breaks = f.breakpoints();
    breaks.extend(g.breakpoints());
    let shifted: Vec<f64> = breaks.iter().map(|b| b + c).collect();
    breaks.extend(shifted);
    let integrand = |t: f64| (f.cdf(t) - f.cdf(t - c)).min(g.cdf(t) - g.cdf(t - c)).max(0.0);
    Ok(integrate_pieces(&integrand, lo, hi, &breaks, BAND_TOL))
}

/// Both sides of `E[(c - |X - Y|)^+] = int P[(X, Y) in (t - c, t]^2] dt`
/// evaluated on a sample of pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs`.
    pub std_error: f64,
}

/// The right side integrates the empirical joint probability of the moving
/// square by sweeping over the times `t` at which pairs enter and leave it.
pub fn band_identity_check(pairs: &[(f64, f64)], c: f64) -> BandIdentity {
    let payoffs: Vec<f64> = pairs.iter().map(|(x, y)| (c - abs(x - y)).max(0.0)).collect();
    let (lhs, std_error) = crate::stats::mean_se(&payoffs);
    // Pair (x, y) is inside (t - c, t]^2 for t in [max(x, y), min(x, y) + c).
    let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * pairs.len());
    for (x, y) in pairs {
        let enter = x.max(*y);
        let leave = x.min(*y) + c;
        if leave > enter {
            events.push((enter, 1));
            events.push((leave, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut inside = 0i64;
    let mut area = 0.0;
    let mut last = f64::NEG_INFINITY;
    for (t, d) in events {
        if inside > 0 {
            area += inside as f64 * (t - last);
        }
        inside += d;
        last = t;
    }
    BandIdentity { lhs, rhs: area / pairs.len().max(1) as f64, std_error }
}
