//! Streaming grid masses of `eta_s` by descent of the x-family tree.
//!
//! Positions are tracked in double precision in units of the grid cell, with a
//! per-generation bound on the accumulated error that also absorbs the width of
//! the lambda enclosure. A node whose widened support fits in one cell adds its
//! exact dyadic mass there; nodes still straddling a cell boundary at the depth
//! cap add their mass to an "uncertain" counter of every cell they touch. Masses
//! are integers in units of `2^-W`.

use rug::float::Round;
use rug::{Float, Integer, Rational};

use super::{PairParam, RotationScheme, Skew};
use crate::error::{precondition, Error, Result};
use crate::measures::BitWord;
use crate::real::{rpow, BoundedValue, MassBound, Real, DEFAULT_PREC};

const MAX_WEIGHT_BITS: u32 = 60;
const CHUNK: i64 = 1 << 20;
const EPS: f64 = f64::EPSILON;

/// Grid `{[origin + j a^n, origin + (j+1) a^n)}`.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub n: u32,
    pub origin: Real,
}

impl GridSpec {
    pub fn standard(n: u32) -> Self {
        GridSpec { n, origin: Real::from_int(0, DEFAULT_PREC) }
    }

    pub fn offset(n: u32, origin: &Rational) -> Self {
        GridSpec { n, origin: Real::from_rational(origin, DEFAULT_PREC) }
    }
}

#[derive(Clone, Debug)]
pub struct TauOptions {
    /// Order of the moment; 2 gives `tau_n`.
    pub q: f64,
    /// Absolute bound on the enclosure width.
    pub tol: f64,
    /// When set, the width bound is `rel * lower bound` instead.
    pub rel: Option<f64>,
    pub start_extra: u32,
    pub max_extra: u32,
}

impl Default for TauOptions {
    fn default() -> Self {
        TauOptions { q: 2.0, tol: 1e-6, rel: None, start_extra: 3, max_extra: 24 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauBound {
    pub n: u32,
    pub q: f64,
    pub value: BoundedValue,
    /// Depth cap used, in generations beyond `n`.
    pub extra_depth: u32,
    /// Number of cells with certified positive mass.
    pub occupied: u64,
}

struct Tree {
    depth: usize,
    root: f64,
    len: Vec<f64>,
    err: Vec<f64>,
    offsets: Vec<Vec<f64>>,
    shift: Vec<u32>,
    weight_bits: u32,
    first_cell: i64,
    end_cell: i64,
}

fn to_f64_err(x: &Real) -> (f64, f64) {
    let mid = x.mid_f64();
    let p = x.prec();
    let d1 = Float::with_val_round(p, x.hi() - mid, Round::Up).0.to_f64_round(Round::Up);
    let d2 = Float::with_val_round(p, mid - x.lo(), Round::Up).0.to_f64_round(Round::Up);
    let e = d1.max(d2).max(0.0);
    (mid, e + mid.abs() * EPS)
}

impl Tree {
    fn build(pp: &PairParam, scheme: &RotationScheme, lambda: &Real, grid: &GridSpec, depth: usize) -> Result<Tree> {
        let (a, b) = (pp.a(), pp.b());
        let prec = lambda.prec().max(DEFAULT_PREC);
        let depths = scheme.y_depths(depth + 1);
        let weight_bits = depth as u32 + depths[depth];
        if weight_bits > MAX_WEIGHT_BITS {
            return Err(Error::Unresolved(format!("depth {depth} needs {weight_bits} bits of mass resolution (max {MAX_WEIGHT_BITS})")));
        }
        let inv_h = rpow(&Rational::from(a.recip_ref()), grid.n);
        let inv_h_r = Real::from_rational(&inv_h, prec);
        let (root, root_err) = to_f64_err(&grid.origin.neg().mul(&inv_h_r));
        let one_minus_a = Rational::from(1 - a.clone());
        let one_minus_b = Rational::from(1 - b.clone());
        let mut len = Vec::with_capacity(depth + 1);
        let mut offsets = Vec::with_capacity(depth);
        let mut off_err = Vec::with_capacity(depth);
        let mut shift = Vec::with_capacity(depth + 1);
        for k in 0..=depth {
            let ak = rpow(a, k as u32);
            let bm = rpow(b, depths[k]);
            let l = Real::from_rational(&Rational::from(&ak * &inv_h), prec)
                .add(&lambda.mul(&Real::from_rational(&Rational::from(&bm * &inv_h), prec)));
            len.push(l.hi_f64());
            shift.push(weight_bits - (k as u32 + depths[k]));
            if k == depth {
                break;
            }
            let dy = depths[k + 1] - depths[k];
            let x_unit = Rational::from(&one_minus_a * &ak) * &inv_h;
            let y_unit = Rational::from(&one_minus_b * &bm) * &inv_h;
            let mut offs = Vec::with_capacity(2 << dy);
            let mut worst = 0.0f64;
            for i in 0..2u32 {
                for v in BitWord::all(dy as usize) {
                    let x = Rational::from(&x_unit * i);
                    let y = Rational::from(&y_unit * v.weighted_sum(b));
                    let o = Real::from_rational(&x, prec).add(&lambda.mul(&Real::from_rational(&y, prec)));
                    let (m, e) = to_f64_err(&o);
                    offs.push(m);
                    worst = worst.max(e);
                }
            }
            offsets.push(offs);
            off_err.push(worst);
        }
        let magnitude = root.abs() + len[0] + 2.0;
        let add_err = magnitude * EPS;
        let mut err = Vec::with_capacity(depth + 1);
        let mut acc = root_err;
        for k in 0..=depth {
            err.push(acc + 4.0 * add_err);
            if k < depth {
                acc += off_err[k] + add_err;
            }
        }
        let first_cell = (root - err[0]).floor() as i64;
        let end_cell = (root + len[0] + err[0]).ceil() as i64 + 1;
        Ok(Tree { depth, root, len, err, offsets, shift, weight_bits, first_cell, end_cell })
    }

    fn visit_chunk(&self, c0: i64, c1: i64, exact: &mut [u64], unc: &mut [u64]) {
        let mut ctx = Visit { c0, c0f: c0 as f64, c1f: c1 as f64, exact, unc };
        self.place(self.root, 0, &mut ctx);
    }

    /// Adds the node at `pos` of generation `k` to the chunk, descending while
    /// it straddles a cell boundary.
    fn place(&self, pos: f64, k: usize, ctx: &mut Visit<'_>) {
        let e = self.err[k];
        let lo = pos - e;
        let hi = pos + self.len[k] + e;
        if hi <= ctx.c0f || lo >= ctx.c1f {
            return;
        }
        let jl = floor_i(lo);
        let jh = ceil_i(hi) - 1;
        if jh <= jl {
            ctx.exact[(jl - ctx.c0) as usize] += 1u64 << self.shift[k];
            return;
        }
        if k == self.depth {
            let w = 1u64 << self.shift[k];
            let c1 = ctx.c1f as i64;
            for j in jl.max(ctx.c0)..=jh.min(c1 - 1) {
                ctx.unc[(j - ctx.c0) as usize] += w;
            }
            return;
        }
        for &off in &self.offsets[k] {
            self.place(pos + off, k + 1, ctx);
        }
    }

    /// Calls `f(first_cell, exact, uncertain)` chunk by chunk, left to right.
    fn for_each_chunk(&self, mut f: impl FnMut(i64, &[u64], &[u64])) {
        let total = self.end_cell - self.first_cell;
        let size = total.min(CHUNK) as usize;
        let mut exact = vec![0u64; size];
        let mut unc = vec![0u64; size];
        let mut c0 = self.first_cell;
        while c0 < self.end_cell {
            let c1 = (c0 + CHUNK).min(self.end_cell);
            let w = (c1 - c0) as usize;
            exact[..w].fill(0);
            unc[..w].fill(0);
            self.visit_chunk(c0, c1, &mut exact[..w], &mut unc[..w]);
            f(c0, &exact[..w], &unc[..w]);
            c0 = c1;
        }
    }
}

struct Visit<'a> {
    c0: i64,
    c0f: f64,
    c1f: f64,
    exact: &'a mut [u64],
    unc: &'a mut [u64],
}

// floor and ceil without a libm call; |x| stays far below 2^63
#[inline(always)]
fn floor_i(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) > x {
        t - 1
    } else {
        t
    }
}

#[inline(always)]
fn ceil_i(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) < x {
        t + 1
    } else {
        t
    }
}

fn dyadic_down(x: u128, bits: u32) -> f64 {
    let f = Float::with_val_round(64, Integer::from(x), Round::Down).0 >> bits;
    f.to_f64_round(Round::Down)
}

fn dyadic_up(x: u128, bits: u32) -> f64 {
    let f = Float::with_val_round(64, Integer::from(x), Round::Up).0 >> bits;
    f.to_f64_round(Round::Up)
}

struct Moments {
    lo: f64,
    hi: f64,
    occupied: u64,
}

fn moments(tree: &Tree, q: f64) -> Moments {
    let w = tree.weight_bits;
    let mut occupied = 0u64;
    if q == 2.0 {
        let (mut lo, mut hi) = (0u128, 0u128);
        tree.for_each_chunk(|_, ex, un| {
            for (&e, &u) in ex.iter().zip(un) {
                if e > 0 {
                    occupied += 1;
                }
                let (e, t) = (e as u128, (e + u) as u128);
                lo += e * e;
                hi += t * t;
            }
        });
        return Moments { lo: dyadic_down(lo, 2 * w), hi: dyadic_up(hi, 2 * w), occupied };
    }
    let unit = (-(w as f64)).exp2();
    let (mut lo, mut hi, mut terms) = (0.0f64, 0.0f64, 0u64);
    tree.for_each_chunk(|_, ex, un| {
        for (&e, &u) in ex.iter().zip(un) {
            if e == 0 && u == 0 {
                continue;
            }
            if e > 0 {
                occupied += 1;
            }
            terms += 1;
            lo += (e as f64 * unit).powf(q);
            hi += ((e + u) as f64 * unit).powf(q);
        }
    });
    // rounding of the conversions, the powers and the running sums
    let rel = (terms as f64 + 4.0 * q.max(1.0) + 8.0) * EPS;
    Moments { lo: (lo * (1.0 - rel)).max(0.0), hi: hi * (1.0 + rel), occupied }
}

fn tau_on_grid(pp: &PairParam, scheme: &RotationScheme, grid: &GridSpec, s: &Skew, opts: &TauOptions) -> Result<TauBound> {
    if opts.q < 1.0 || !opts.q.is_finite() {
        return precondition(format!("moment order q = {} must be at least 1", opts.q));
    }
    if opts.tol <= 0.0 && opts.rel.map_or(true, |r| r <= 0.0) {
        return precondition("tolerance must be positive");
    }
    let lambda = s.lambda(DEFAULT_PREC);
    let a_f = pp.pa().a_f64();
    let mut extra = opts.start_extra.min(opts.max_extra);
    loop {
        let tree = Tree::build(pp, scheme, &lambda, grid, (grid.n + extra) as usize)?;
        let m = moments(&tree, opts.q);
        let width = m.hi - m.lo;
        let target = match opts.rel {
            Some(r) => r * m.lo,
            None => opts.tol,
        };
        if width <= target {
            return Ok(TauBound { n: grid.n, q: opts.q, value: BoundedValue::new(m.lo, m.hi), extra_depth: extra, occupied: m.occupied });
        }
        if extra >= opts.max_extra {
            return Err(Error::Unresolved(format!(
                "tau_{} enclosure [{:e}, {:e}] wider than {target:e} at depth cap {}",
                grid.n,
                m.lo,
                m.hi,
                grid.n + extra
            )));
        }
        // the straddling mass shrinks roughly like a^extra
        let steps = if target > 0.0 && width > 0.0 { ((width / target).ln() / (1.0 / a_f).ln()).ceil().max(1.0) as u32 } else { 1 };
        extra = (extra + steps).min(opts.max_extra);
    }
}

/// Enclosure of `sum_I eta_s(I)^q` over the standard grid of mesh `a^n`.
pub fn tau(pp: &PairParam, scheme: &RotationScheme, n: u32, s: &Skew, opts: &TauOptions) -> Result<TauBound> {
    if opts.q <= 1.0 {
        return precondition(format!("q = {} must exceed 1", opts.q));
    }
    tau_on_grid(pp, scheme, &GridSpec::standard(n), s, opts)
}

/// `tau` with a relative width bound.
pub fn tau_rel(pp: &PairParam, scheme: &RotationScheme, n: u32, s: &Skew, q: f64, rel: f64) -> Result<TauBound> {
    let opts = TauOptions { q, tol: 0.0, rel: Some(rel), ..TauOptions::default() };
    tau(pp, scheme, n, s, &opts)
}

/// Like `tau` on an arbitrary (offset) grid.
pub(crate) fn tau_grid(pp: &PairParam, scheme: &RotationScheme, grid: &GridSpec, s: &Skew, opts: &TauOptions) -> Result<TauBound> {
    if opts.q <= 1.0 {
        return precondition(format!("q = {} must exceed 1", opts.q));
    }
    tau_on_grid(pp, scheme, grid, s, opts)
}

/// `sum_I eta_s(I)`, which must enclose 1.
pub fn total_mass(pp: &PairParam, scheme: &RotationScheme, n: u32, s: &Skew, extra: u32) -> Result<BoundedValue> {
    let tree = Tree::build(pp, scheme, &s.lambda(DEFAULT_PREC), &GridSpec::standard(n), (n + extra) as usize)?;
    let m = moments(&tree, 1.0);
    Ok(BoundedValue::new(m.lo, m.hi))
}

/// Per-cell mass enclosures on a grid, cells with no possible mass omitted.
#[derive(Clone, Debug)]
pub struct GridMasses {
    pub grid: GridSpec,
    pub weight_bits: u32,
    /// `(j, exact, uncertain)` in units of `2^-weight_bits`.
    pub cells: Vec<(i64, u64, u64)>,
}

impl GridMasses {
    pub fn mass(&self, idx: usize) -> MassBound {
        let (_, e, u) = self.cells[idx];
        let unit = Integer::from(1) << self.weight_bits;
        MassBound::new(Rational::from((e, unit.clone())), Rational::from((e + u, unit)))
    }
}

/// Cell masses with depth cap `n + extra`; meant for small grids.
pub fn grid_masses(pp: &PairParam, scheme: &RotationScheme, grid: &GridSpec, s: &Skew, extra: u32) -> Result<GridMasses> {
    let tree = Tree::build(pp, scheme, &s.lambda(DEFAULT_PREC), grid, (grid.n + extra) as usize)?;
    let mut cells = Vec::new();
    tree.for_each_chunk(|c0, ex, un| {
        for (i, (&e, &u)) in ex.iter().zip(un).enumerate() {
            if e > 0 || u > 0 {
                cells.push((c0 + i as i64, e, u));
            }
        }
    });
    Ok(GridMasses { grid: grid.clone(), weight_bits: tree.weight_bits, cells })
}

/// Enclosure of `eta_s([lo, hi))` with width at most `tol`.
pub fn eta_strip_mass(
    pp: &PairParam,
    scheme: &RotationScheme,
    s: &Skew,
    lo: &Rational,
    hi: &Rational,
    tol: &Rational,
) -> Result<MassBound> {
    if *tol <= 0 {
        return precondition("tolerance must be positive");
    }
    if hi <= lo {
        return Ok(MassBound::new(Rational::new(), Rational::new()));
    }
    let lambda = s.lambda(DEFAULT_PREC);
    let grid = GridSpec::standard(0);
    let (c_lo, c_hi) = (to_down(lo), to_up(lo));
    let (d_lo, d_hi) = (to_down(hi), to_up(hi));
    let mut depth = 4usize;
    loop {
        let tree = Tree::build(pp, scheme, &lambda, &grid, depth)?;
        let (inside, straddle) = strip_descent(&tree, c_lo, c_hi, d_lo, d_hi);
        let unit = Integer::from(1) << tree.weight_bits;
        let m_lo = Rational::from((Integer::from(inside), unit.clone()));
        let m_hi = Rational::from((Integer::from(inside + straddle), unit.clone()));
        if Rational::from(&m_hi - &m_lo) <= *tol {
            return Ok(MassBound::new(m_lo, m_hi));
        }
        if tree.weight_bits + 8 > MAX_WEIGHT_BITS || tree.err[depth] > tree.len[depth] {
            return Err(Error::Unresolved(format!(
                "strip mass of [{lo}, {hi}) stuck at width {} (depth {depth})",
                Rational::from(&m_hi - &m_lo)
            )));
        }
        depth += 4;
    }
}

fn to_down(r: &Rational) -> f64 {
    Float::with_val_round(64, r, Round::Down).0.to_f64_round(Round::Down)
}

fn to_up(r: &Rational) -> f64 {
    Float::with_val_round(64, r, Round::Up).0.to_f64_round(Round::Up)
}

fn strip_descent(tree: &Tree, c_lo: f64, c_hi: f64, d_lo: f64, d_hi: f64) -> (u128, u128) {
    let (mut inside, mut straddle) = (0u128, 0u128);
    let mut stack = vec![(tree.root, 0u32)];
    while let Some((pos, k)) = stack.pop() {
        let k = k as usize;
        let lo = pos - tree.err[k];
        let hi = pos + tree.len[k] + tree.err[k];
        if hi <= c_lo || lo >= d_hi {
            continue;
        }
        let w = 1u128 << tree.shift[k];
        if lo >= c_hi && hi <= d_lo {
            inside += w;
            continue;
        }
        if k == tree.depth {
            straddle += w;
            continue;
        }
        for &off in &tree.offsets[k] {
            stack.push((pos + off, k as u32 + 1));
        }
    }
    (inside, straddle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_rotation, enumerate_x};
    use crate::real::rat;

    fn setup(a: (i64, i64), b: (i64, i64)) -> (PairParam, RotationScheme) {
        let pp = PairParam::from_ratios(rat(a.0, a.1), rat(b.0, b.1)).unwrap();
        let s = build_rotation(&pp, None).unwrap();
        (pp, s)
    }

    #[test]
    fn tau_zero_is_half() {
        let (pp, sc) = setup((1, 4), (1, 3));
        let one = Skew::from_lambda(rat(1, 1)).unwrap();
        let t = tau(&pp, &sc, 0, &one, &TauOptions { tol: 1e-6, ..Default::default() }).unwrap();
        assert!(t.value.contains(0.5), "{}", t.value);
        assert!(t.value.width() <= 1e-6);
    }

    #[test]
    fn total_mass_is_one() {
        let (pp, sc) = setup((1, 4), (1, 3));
        for (n, s) in [(0, "1"), (3, "s=1/2"), (5, "7/5")] {
            let m = total_mass(&pp, &sc, n, &Skew::parse(s).unwrap(), 6).unwrap();
            assert!(m.contains(1.0), "{m}");
        }
    }

    #[test]
    fn strip_masses() {
        let (pp, sc) = setup((1, 4), (1, 3));
        let one = Skew::from_lambda(rat(1, 1)).unwrap();
        let tol = rat(1, 1 << 20);
        let m = eta_strip_mass(&pp, &sc, &one, &rat(0, 1), &rat(1, 1), &tol).unwrap();
        assert!(m.contains(&rat(1, 2)));
        let far = eta_strip_mass(&pp, &sc, &one, &rat(3, 1), &rat(4, 1), &tol).unwrap();
        assert_eq!(far.hi, 0);
        let s = Skew::parse("s=2/3").unwrap();
        let whole = eta_strip_mass(&pp, &sc, &s, &rat(-1, 1), &rat(5, 1), &tol).unwrap();
        assert_eq!(whole.lo, 1);
    }

    // for a = b = 1/4 the digit sums give tau_n = (3/8)^n / 2 exactly
    #[test]
    fn resonant_case_matches_closed_form() {
        let (pp, sc) = setup((1, 4), (1, 4));
        let one = Skew::from_lambda(rat(1, 1)).unwrap();
        for n in 0..8u32 {
            let t = tau_rel(&pp, &sc, n, &one, 2.0, 1e-4).unwrap();
            let exact = 0.5 * (3.0f64 / 8.0).powi(n as i32);
            assert!(t.value.lo <= exact * (1.0 + 1e-15) && exact * (1.0 - 1e-15) <= t.value.hi, "n={n} {}", t.value);
            assert!(t.value.width() <= 1e-4 * t.value.lo);
        }
    }

    #[test]
    fn level_masses_agree_with_enumeration() {
        let (pp, sc) = setup((1, 4), (1, 3));
        let lam = rat(3, 2);
        let s = Skew::from_lambda(lam.clone()).unwrap();
        let n = 3u32;
        let gm = grid_masses(&pp, &sc, &GridSpec::standard(n), &s, 8).unwrap();
        // every generation-n rectangle projects to an interval; cells far from
        // all of them must be empty, and the total mass must enclose 1
        let nodes = enumerate_x(&pp, &sc, n as usize).unwrap();
        let h = rpow(pp.a(), n);
        let mut covered = std::collections::BTreeSet::new();
        for node in &nodes {
            let lo = Rational::from(&node.translation.0 + &lam * node.translation.1.clone());
            let hi = Rational::from(&lo + &node.width) + Rational::from(&lam * &node.height);
            let j0 = Rational::from(&lo / &h).floor().numer().to_i64().unwrap();
            let j1 = Rational::from(&hi / &h).ceil().numer().to_i64().unwrap();
            for j in j0..j1 {
                covered.insert(j);
            }
        }
        let (mut lo, mut hi) = (Rational::new(), Rational::new());
        for idx in 0..gm.cells.len() {
            assert!(gm.cells[idx].1 == 0 || covered.contains(&gm.cells[idx].0));
            let m = gm.mass(idx);
            lo += &m.lo;
            hi += &m.hi;
        }
        assert!(lo <= 1 && hi >= 1);
    }

    #[test]
    fn rejects_bad_order() {
        let (pp, sc) = setup((1, 4), (1, 3));
        let one = Skew::from_lambda(rat(1, 1)).unwrap();
        assert!(tau(&pp, &sc, 2, &one, &TauOptions { q: 1.0, ..Default::default() }).is_err());
        let t3 = tau(&pp, &sc, 3, &one, &TauOptions { q: 3.0, tol: 1e-6, ..Default::default() }).unwrap();
        let t2 = tau(&pp, &sc, 3, &one, &TauOptions { q: 2.0, tol: 1e-6, ..Default::default() }).unwrap();
        assert!(t3.value.hi <= t2.value.hi);
    }
}
