use std::fmt;

use rand::RngCore;
use rug::Rational;

use super::{PairParam, RotationScheme};
use crate::error::{precondition, Result};
use crate::measures::BitWord;
use crate::real::{rpow, Real, DEFAULT_PREC};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexPair {
    pub u: BitWord,
    pub v: BitWord,
}

impl IndexPair {
    pub fn new(u: BitWord, v: BitWord) -> Self {
        IndexPair { u, v }
    }

    pub fn length_pair(&self) -> (usize, usize) {
        (self.u.len(), self.v.len())
    }

    pub fn concat(&self, other: &IndexPair) -> IndexPair {
        IndexPair { u: self.u.concat(&other.u), v: self.v.concat(&other.v) }
    }

    pub fn matches(&self, omega: &[u8], omega_prime: &[u8]) -> bool {
        self.u.is_prefix_of(omega) && self.v.is_prefix_of(omega_prime)
    }
}

impl fmt::Display for IndexPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    X,
    Y,
}

/// The rectangle `Q(xi) = f_xi([0,1]^2)` for `xi` in generation `n` of the
/// x- or y-family.
#[derive(Clone, Debug, PartialEq)]
pub struct RectNode {
    pub xi: IndexPair,
    pub generation: usize,
    pub kind: NodeKind,
    pub translation: (Rational, Rational),
    pub width: Rational,
    pub height: Rational,
}

impl RectNode {
    /// `(a^n, a^n e^{R^n(0)})`, or `a^n e^{R^n(0) - beta}` for y-family nodes,
    /// with the height taken from the orbit enclosure.
    pub fn size_from_orbit(&self, scheme: &RotationScheme) -> (Rational, Real) {
        let mut log_e = scheme.orbit(self.generation);
        if self.kind == NodeKind::Y {
            log_e = log_e.sub(scheme.beta());
        }
        let h = Real::from_rational(&self.width, DEFAULT_PREC).mul(&log_e.exp());
        (self.width.clone(), h)
    }

    /// Lower-left corner projected by `Pi_s`, `dx + lambda dy`.
    pub fn projected_corner(&self, lambda: &Real) -> Real {
        let p = lambda.prec();
        Real::from_rational(&self.translation.0, p).add(&lambda.mul(&Real::from_rational(&self.translation.1, p)))
    }
}

pub fn root_node() -> RectNode {
    RectNode {
        xi: IndexPair::default(),
        generation: 0,
        kind: NodeKind::X,
        translation: (Rational::new(), Rational::new()),
        width: Rational::from(1),
        height: Rational::from(1),
    }
}

fn extend(pp: &PairParam, node: &RectNode, x_step: bool, y_levels: u32, kind: NodeKind) -> Vec<RectNode> {
    let (a, b) = (pp.a(), pp.b());
    let xs: &[u8] = if x_step { &[0, 1] } else { &[0] };
    let mut out = Vec::with_capacity(xs.len() << y_levels);
    for &i in xs {
        for v in BitWord::all(y_levels as usize) {
            let mut u = node.xi.u.clone();
            let mut dx = node.translation.0.clone();
            let mut width = node.width.clone();
            if x_step {
                u.push(i);
                if i == 1 {
                    dx += Rational::from(1 - a.clone()) * &node.width;
                }
                width *= a;
            }
            let dy = Rational::from(1 - b.clone()) * &node.height * v.weighted_sum(b) + &node.translation.1;
            let height = Rational::from(&node.height * rpow(b, y_levels));
            out.push(RectNode {
                xi: IndexPair { u, v: node.xi.v.concat(&v) },
                generation: node.generation + usize::from(x_step),
                kind,
                translation: (dx, dy),
                width,
                height,
            });
        }
    }
    out
}

/// The children in the x-family: 4 when `R^n(0) + alpha < beta`, else
/// `2 * 2^(l+1)`.
pub fn children(pp: &PairParam, scheme: &RotationScheme, node: &RectNode) -> Result<Vec<RectNode>> {
    if node.kind != NodeKind::X {
        return precondition("children are defined for x-family nodes only");
    }
    let n = node.generation;
    if node.xi.length_pair() != (n, scheme.y_depth(n) as usize) {
        return precondition(format!("{} is not a generation-{n} x-family word", node.xi));
    }
    let dy = scheme.y_depth(n + 1) - scheme.y_depth(n);
    Ok(extend(pp, node, true, dy, NodeKind::X))
}

/// The `2^l` y-family descendants `(xi)(empty, v)`.
pub fn y_family(pp: &PairParam, scheme: &RotationScheme, node: &RectNode) -> Result<Vec<RectNode>> {
    if node.kind != NodeKind::X {
        return precondition("the y-family is built from x-family nodes");
    }
    Ok(extend(pp, node, false, scheme.ell(), NodeKind::Y))
}

const ENUMERATION_LIMIT: u32 = 22;

/// All of generation `n` of the x-family; refuses beyond `2^22` words.
pub fn enumerate_x(pp: &PairParam, scheme: &RotationScheme, n: usize) -> Result<Vec<RectNode>> {
    let bits = n as u32 + scheme.y_depth(n);
    if bits > ENUMERATION_LIMIT {
        return precondition(format!("generation {n} has 2^{bits} words, too many to list"));
    }
    let mut level = vec![root_node()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * 4);
        for node in &level {
            next.extend(children(pp, scheme, node)?);
        }
        level = next;
    }
    Ok(level)
}

pub fn enumerate_y(pp: &PairParam, scheme: &RotationScheme, n: usize) -> Result<Vec<RectNode>> {
    if n as u32 + scheme.y_depth(n) + scheme.ell() > ENUMERATION_LIMIT {
        return precondition(format!("y-family generation {n} is too large to list"));
    }
    let mut out = Vec::new();
    for node in enumerate_x(pp, scheme, n)? {
        out.extend(y_family(pp, scheme, &node)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub n: usize,
    pub trials: usize,
    pub x_size: u128,
    pub y_size: u128,
    /// `|X_{k+1}| / |X_k|` for `k < n`.
    pub growth: Vec<u128>,
    pub violations: Vec<String>,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn count_matches(
    pp: &PairParam,
    scheme: &RotationScheme,
    node: &RectNode,
    n: usize,
    omega: &[u8],
    omega_prime: &[u8],
    y: bool,
) -> Result<usize> {
    if node.generation == n {
        if !y {
            return Ok(usize::from(node.xi.matches(omega, omega_prime)));
        }
        return Ok(y_family(pp, scheme, node)?.iter().filter(|c| c.xi.matches(omega, omega_prime)).count());
    }
    let mut total = 0;
    for c in children(pp, scheme, node)? {
        if c.xi.matches(omega, omega_prime) {
            total += count_matches(pp, scheme, &c, n, omega, omega_prime, y)?;
        }
    }
    Ok(total)
}

fn random_bits<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    let mut word = 0u64;
    for i in 0..len {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        out.push((word & 1) as u8);
        word >>= 1;
    }
    out
}

/// Checks on random prefix pairs that exactly one word of each family matches.
/// Small generations are matched against the full list; larger ones by a
/// descent that follows every matching child.
pub fn partition_check<R: RngCore + ?Sized>(
    pp: &PairParam,
    scheme: &RotationScheme,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<PartitionReport> {
    let m = scheme.y_depth(n) as usize;
    let x_size = 1u128 << (n + m);
    let y_size = x_size << scheme.ell();
    let mut growth = Vec::with_capacity(n);
    let allowed = [4u128, 1u128 << (scheme.ell() + 2)];
    let mut violations = Vec::new();
    for k in 0..n {
        let g = 1u128 << (1 + scheme.y_depth(k + 1) - scheme.y_depth(k));
        if !allowed.contains(&g) {
            violations.push(format!("growth {g} at generation {k}"));
        }
        growth.push(g);
    }
    let listed = if n + m <= 14 { Some((enumerate_x(pp, scheme, n)?, enumerate_y(pp, scheme, n)?)) } else { None };
    let root = root_node();
    for t in 0..trials {
        let omega = random_bits(n, rng);
        let omega_prime = random_bits(m + scheme.ell() as usize, rng);
        let (cx, cy) = match &listed {
            Some((xs, ys)) => (
                xs.iter().filter(|r| r.xi.matches(&omega, &omega_prime)).count(),
                ys.iter().filter(|r| r.xi.matches(&omega, &omega_prime)).count(),
            ),
            None => (
                count_matches(pp, scheme, &root, n, &omega, &omega_prime, false)?,
                count_matches(pp, scheme, &root, n, &omega, &omega_prime, true)?,
            ),
        };
        if cx != 1 {
            violations.push(format!("trial {t}: {cx} x-family matches"));
        }
        if cy != 1 {
            violations.push(format!("trial {t}: {cy} y-family matches"));
        }
    }
    Ok(PartitionReport { n, trials, x_size, y_size, growth, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_rotation;
    use crate::measures::cylinder_interval;
    use crate::real::rat;
    use rand::SeedableRng;

    fn setup() -> (PairParam, RotationScheme) {
        let pp = PairParam::from_ratios(rat(1, 4), rat(1, 3)).unwrap();
        let s = build_rotation(&pp, None).unwrap();
        (pp, s)
    }

    #[test]
    fn child_counts_follow_branch() {
        let (pp, s) = setup();
        let mut node = root_node();
        for n in 0..12 {
            let ch = children(&pp, &s, &node).unwrap();
            let expected = if s.branch(n) { 4 } else { 2 << (s.ell() + 1) };
            assert_eq!(ch.len(), expected);
            assert!(ch.iter().all(|c| c.width == rpow(pp.a(), n as u32 + 1)));
            node = ch.into_iter().last().unwrap();
        }
        assert!((0..12).any(|n| !s.branch(n)));
    }

    #[test]
    fn nodes_are_cylinder_products() {
        let (pp, s) = setup();
        for node in enumerate_x(&pp, &s, 4).unwrap() {
            let (x0, x1) = cylinder_interval(pp.pa(), &node.xi.u).unwrap();
            let (y0, y1) = cylinder_interval(pp.pb(), &node.xi.v).unwrap();
            assert_eq!(node.translation, (x0.clone(), y0.clone()));
            assert_eq!(Rational::from(&x1 - &x0), node.width);
            assert_eq!(Rational::from(&y1 - &y0), node.height);
            let (_, h) = node.size_from_orbit(&s);
            assert!(h.contains_rational(&node.height));
            let ecc = Rational::from(&node.height / &node.width);
            assert!(ecc >= 1 && ecc < s.exp_beta());
        }
    }

    #[test]
    fn y_family_is_wide() {
        let (pp, s) = setup();
        let ys = enumerate_y(&pp, &s, 5).unwrap();
        assert_eq!(ys.len(), enumerate_x(&pp, &s, 5).unwrap().len() << s.ell());
        let lp = ys[0].xi.length_pair();
        for y in &ys {
            assert_eq!(y.xi.length_pair(), lp);
            assert!(y.width > y.height);
            let (_, h) = y.size_from_orbit(&s);
            assert!(h.contains_rational(&y.height));
        }
    }

    #[test]
    fn partition_small_and_walked() {
        let (pp, s) = setup();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let r0 = partition_check(&pp, &s, 0, 5, &mut rng).unwrap();
        assert!(r0.passed());
        assert_eq!(r0.x_size, 1);
        let r = partition_check(&pp, &s, 5, 50, &mut rng).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        let big = partition_check(&pp, &s, 12, 20, &mut rng).unwrap();
        assert!(big.passed(), "{:?}", big.violations);
    }
}
