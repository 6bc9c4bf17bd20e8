use rug::{Integer, Rational};

use super::engine::{grid_masses, tau_grid, GridSpec};
use super::family::{NodeKind, RectNode};
use super::{PairParam, RotationScheme, Skew, TauBound, TauOptions};
use crate::error::{precondition, Result};
use crate::real::{rpow, Real, DEFAULT_PREC};

const COVER_EXTRA_DEPTH: u32 = 8;

/// The offset grid of mesh `a^n` restricted to cells meeting `Pi_s(E)`.
/// `certain` cells carry positive mass; `possible` cells could not be ruled
/// out at the depth used and are kept so the union still covers the set.
#[derive(Clone, Debug)]
pub struct GoodCover {
    pub n: u32,
    pub offset: Rational,
    pub certain: Vec<i64>,
    pub possible: Vec<i64>,
}

impl GoodCover {
    pub fn cells(&self) -> Vec<i64> {
        let mut all: Vec<i64> = self.certain.iter().chain(&self.possible).copied().collect();
        all.sort_unstable();
        all
    }

    pub fn intervals(&self, a: &Rational) -> Vec<(Rational, Rational)> {
        let h = rpow(a, self.n);
        self.cells()
            .into_iter()
            .map(|j| {
                let lo = Rational::from(&h * j) + &self.offset;
                let hi = Rational::from(&lo + &h);
                (lo, hi)
            })
            .collect()
    }
}

fn split(cells: &[(i64, u64, u64)]) -> (Vec<i64>, Vec<i64>) {
    let certain = cells.iter().filter(|c| c.1 > 0).map(|c| c.0).collect();
    let possible = cells.iter().filter(|c| c.1 == 0).map(|c| c.0).collect();
    (certain, possible)
}

pub fn good_cover(pp: &PairParam, scheme: &RotationScheme, n: u32, s: &Skew, offset: &Rational) -> Result<GoodCover> {
    if *offset < 0 || *offset >= rpow(pp.a(), n) {
        return precondition(format!("offset {offset} must lie in [0, a^{n})"));
    }
    let gm = grid_masses(pp, scheme, &GridSpec::offset(n, offset), s, COVER_EXTRA_DEPTH)?;
    let (certain, possible) = split(&gm.cells);
    Ok(GoodCover { n, offset: offset.clone(), certain, possible })
}

/// `sum_C eta_s(C)^2` over the offset grid, which is the covering sum of the
/// good cover with that offset.
pub fn cover_tau(pp: &PairParam, scheme: &RotationScheme, n: u32, s: &Skew, offset: &Rational, opts: &TauOptions) -> Result<TauBound> {
    if *offset < 0 || *offset >= rpow(pp.a(), n) {
        return precondition(format!("offset {offset} must lie in [0, a^{n})"));
    }
    tau_grid(pp, scheme, &GridSpec::offset(n, offset), s, opts)
}

/// The family `Pi_t f_xi^-1 Pi_s^-1 I` for grid cells `I` of mesh `a^(m+n)`
/// meeting `Pi_s(E(xi))`. Each member is `a^-n (I - Pi_s d_xi)`, so the family
/// is the mesh-`a^m` grid with origin `-a^-n Pi_s d_xi`, restricted to cells
/// meeting `Pi_t(E)`.
#[derive(Clone, Debug)]
pub struct RenormalizedCover {
    pub m: u32,
    /// The renormalized skew `e^t`.
    pub t: Skew,
    /// Whether `xi` came from the y-family (`t = R^n(0) + s - beta`).
    pub shifted: bool,
    /// Grid origin, reduced into `[0, a^m)` up to its enclosure width.
    pub origin: Real,
    pub certain: Vec<i64>,
    pub possible: Vec<i64>,
}

impl RenormalizedCover {
    pub fn cells(&self) -> Vec<i64> {
        let mut all: Vec<i64> = self.certain.iter().chain(&self.possible).copied().collect();
        all.sort_unstable();
        all
    }

    pub fn interval(&self, a: &Rational, j: i64) -> (Real, Real) {
        let h = Real::from_rational(&rpow(a, self.m), DEFAULT_PREC);
        let lo = self.origin.add(&h.mul(&Real::from_int(j, DEFAULT_PREC)));
        let hi = lo.add(&h);
        (lo, hi)
    }
}

pub fn renormalized_cover(pp: &PairParam, scheme: &RotationScheme, node: &RectNode, m: u32, s: &Skew) -> Result<RenormalizedCover> {
    let n = node.generation;
    let expected_v = scheme.y_depth(n) as usize + if node.kind == NodeKind::Y { scheme.ell() as usize } else { 0 };
    if node.xi.length_pair() != (n, expected_v) {
        return precondition(format!("{} is not a generation-{n} word of its family", node.xi));
    }
    // e^t = lambda * height / width
    let t = s.scaled(&Rational::from(&node.height / &node.width));
    let lambda = s.lambda(DEFAULT_PREC);
    let inv_an = rpow(&Rational::from(pp.a().recip_ref()), n as u32);
    let corner = node.projected_corner(&lambda);
    let origin = corner.mul(&Real::from_rational(&inv_an, DEFAULT_PREC)).neg();
    let h = rpow(pp.a(), m);
    let k = Real::from_rational(&h, DEFAULT_PREC).recip().mul(&origin).mid().floor().to_integer().unwrap_or_else(Integer::new);
    let origin = origin.sub(&Real::from_rational(&Rational::from(&h * &k), DEFAULT_PREC));
    let gm = grid_masses(pp, scheme, &GridSpec { n: m, origin: origin.clone() }, &t, COVER_EXTRA_DEPTH)?;
    let (certain, possible) = split(&gm.cells);
    Ok(RenormalizedCover { m, t, shifted: node.kind == NodeKind::Y, origin, certain, possible })
}
