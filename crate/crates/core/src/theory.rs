//! Hardcoded catalog of the four theories plus differential-tuple helpers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Result, StokesError};
use crate::poly::ComplexPoly;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoryName {
    A1A2,
    A1A3,
    A2A1,
    A2A2,
}

impl TheoryName {
    pub const ALL: [TheoryName; 4] = [Self::A1A2, Self::A1A3, Self::A2A1, Self::A2A2];
}

impl fmt::Display for TheoryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::A1A2 => "A1A2",
            Self::A1A3 => "A1A3",
            Self::A2A1 => "A2A1",
            Self::A2A2 => "A2A2",
        };
        f.write_str(s)
    }
}

impl FromStr for TheoryName {
    type Err = StokesError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A1A2" => Ok(Self::A1A2),
            "A1A3" => Ok(Self::A1A3),
            "A2A1" => Ok(Self::A2A1),
            "A2A2" => Ok(Self::A2A2),
            other => Err(StokesError::UnknownTheory(other.to_string())),
        }
    }
}

/// Polynomial differentials `(P2 dz^2)` or `(P2 dz^2, P3 dz^3)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferentialTuple {
    pub rank: usize,
    pub p2: ComplexPoly,
    /// Zero polynomial when `rank == 2`.
    pub p3: ComplexPoly,
}

impl DifferentialTuple {
    pub fn rank2(p2: ComplexPoly) -> Self {
        Self { rank: 2, p2, p3: ComplexPoly::zero() }
    }

    pub fn rank3(p2: ComplexPoly, p3: ComplexPoly) -> Self {
        Self { rank: 3, p2, p3 }
    }

    /// The top differential `P_N`.
    pub fn top(&self) -> &ComplexPoly {
        if self.rank == 2 {
            &self.p2
        } else {
            &self.p3
        }
    }

    pub fn degree(&self) -> usize {
        self.top().degree().unwrap_or(0)
    }

    /// Checks `deg P_N = d` and `deg P_k < (k/N) d` for `k < N`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.top().degree() != Some(d) {
            return Err(StokesError::DegreeViolation(format!(
                "deg P_{} = {:?}, expected {d}",
                self.rank,
                self.top().degree()
            )));
        }
        if self.rank == 3 {
            if let Some(k2) = self.p2.degree() {
                if 3 * k2 >= 2 * d {
                    return Err(StokesError::DegreeViolation(format!(
                        "deg P_2 = {k2} is not below 2d/3 for d = {d}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rescale `(P2, P3) -> (t^2 P2, t^3 P3)`.
pub fn scale_differentials(w: &DifferentialTuple, t: Complex64) -> Result<DifferentialTuple> {
    if t == c64(0.0, 0.0) {
        return Err(StokesError::ZeroScale);
    }
    Ok(DifferentialTuple {
        rank: w.rank,
        p2: w.p2.scale(t * t),
        p3: w.p3.scale(t * t * t),
    })
}

/// Coordinate change `z = a z' + b` with `a > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: f64,
    pub b: Complex64,
}

impl AffineMap {
    pub fn identity() -> Self {
        Self { a: 1.0, b: c64(0.0, 0.0) }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        z * self.a + self.b
    }
}

/// Pull back along `f(z) = a z + b`: each `P_k dz^k` becomes `a^k P_k(a z + b) dz^k`.
pub fn pullback(w: &DifferentialTuple, f: AffineMap) -> DifferentialTuple {
    let a = c64(f.a, 0.0);
    DifferentialTuple {
        rank: w.rank,
        p2: w.p2.compose_affine(a, f.b).scale(a * a),
        p3: w.p3.compose_affine(a, f.b).scale(a * a * a),
    }
}

/// Makes `|lead P_N| = 1` and removes the `z^{d-1}` term of `P_N`.
pub fn normalize_quasi_monic_centered(w: &DifferentialTuple) -> (DifferentialTuple, AffineMap) {
    let top = w.top();
    let d = top.degree().expect("P_N must be nonzero");
    assert!(d >= 1, "P_N must be nonconstant");
    let lead = top.leading();
    let b = -top.coeff(d - 1) / (lead * d as f64);
    let a = lead.norm().powf(-1.0 / (d + w.rank) as f64);
    let f = AffineMap { a, b };
    (pullback(w, f), f)
}

/// Argument in `[-pi, pi)`.
fn arg_half_open(z: Complex64) -> f64 {
    let a = z.arg();
    if a >= PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Phase of the leading coefficient of `s^{-N} P_N`, kept continuous in `arg s`.
pub fn leading_phase(w: &DifferentialTuple, spectral_param: Complex64) -> Result<f64> {
    if spectral_param == c64(0.0, 0.0) {
        return Err(StokesError::ZeroSpectralParameter);
    }
    Ok(arg_half_open(w.top().leading()) - w.rank as f64 * spectral_param.arg())
}

/// Bisectors of the `d+N` Stokes sectors, in label order `j = 1..d+N`, reduced to `[0, 2pi)`.
///
/// Sector `j` is bisected by `(pi (2j - 1) - argA) / (d + N)`. The list is not sorted by angle:
/// the coordinate formulas address sectors by label.
pub fn stokes_ray_directions(w: &DifferentialTuple, spectral_param: Complex64) -> Result<Vec<f64>> {
    let arg_a = leading_phase(w, spectral_param)?;
    let m = (w.degree() + w.rank) as f64;
    Ok((1..=w.degree() + w.rank)
        .map(|j| ((PI * (2 * j - 1) as f64 - arg_a) / m).rem_euclid(2.0 * PI))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusKind {
    Oper,
    Hitchin,
}

/// Max root modulus over the nonconstant differentials.
pub fn root_radius(w: &DifferentialTuple) -> f64 {
    let mut r0: f64 = 0.0;
    for p in [&w.p2, &w.p3] {
        if p.degree().unwrap_or(0) >= 1 {
            r0 = r0.max(p.max_root_modulus());
        }
    }
    r0
}

/// Integration radius. Opers use `max(8, 8 r0)`. For the Hitchin section the PDE box
/// half-width is `max(2 r0 + 2, r_wkb)` where `r_wkb` is the radius at which the WKB
/// exponent `N/(d+N) r^{(d+N)/N}` of the normalized top differential reaches 12.
pub fn choose_radius(w: &DifferentialTuple, kind: RadiusKind) -> f64 {
    let r0 = root_radius(w);
    match kind {
        RadiusKind::Oper => f64::max(8.0, 8.0 * r0),
        RadiusKind::Hitchin => {
            let n = w.rank as f64;
            let m = (w.degree() + w.rank) as f64;
            let r_wkb = (12.0 * m / n).powf(n / m);
            f64::max(2.0 * r0 + 2.0, r_wkb)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChargeVector(pub Vec<i64>);

impl ChargeVector {
    pub fn basis(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        Self(v)
    }

    pub fn zero(rank: usize) -> Self {
        Self(vec![0; rank])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpsState {
    pub charge: ChargeVector,
    pub omega: i64,
}

/// One factor in a coordinate formula: `p(i1..iN)` or the hexapod `q(a..f)`; indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetTerm {
    P(Vec<usize>),
    Q([usize; 6]),
}

impl DetTerm {
    pub fn indices(&self) -> Vec<usize> {
        match self {
            DetTerm::P(v) => v.clone(),
            DetTerm::Q(a) => a.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateFormula {
    pub numerator: Vec<DetTerm>,
    pub denominator: Vec<DetTerm>,
    pub sign: i8,
}

impl CoordinateFormula {
    fn new(numerator: Vec<DetTerm>, denominator: Vec<DetTerm>) -> Self {
        Self { numerator, denominator, sign: 1 }
    }

    /// Each sector label occurs equally often upstairs and downstairs.
    pub fn is_balanced(&self) -> bool {
        let count = |terms: &[DetTerm]| {
            let mut m = BTreeMap::new();
            for t in terms {
                for i in t.indices() {
                    *m.entry(i).or_insert(0usize) += 1;
                }
            }
            m
        };
        count(&self.numerator) == count(&self.denominator)
    }

    pub fn max_index(&self) -> usize {
        self.numerator
            .iter()
            .chain(&self.denominator)
            .flat_map(|t| t.indices())
            .max()
            .unwrap_or(0)
    }
}

/// Contour realizing a basis period, anchored at basepoint root locations.
/// Endpoints are matched to the nearest root of the actual polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PeriodContour {
    /// `sign * 2 * int_from^to sqrt(-P2) dz`, principal branch at the midpoint.
    Segment { from: Complex64, to: Complex64, sign: f64 },
    /// `sign * w^sheet (1 - w) int_b^a (-P3)^{1/3} dz`, `w = e^{2 pi i/3}`, principal branch at the midpoint.
    FigureEight { a: Complex64, b: Complex64, sheet: u8, sign: f64 },
    /// `sign * contour integral of y dz` counterclockwise around a circle enclosing all roots, on
    /// the sheet with `y ~ w^sheet (-lead)^{1/3} z` at large `z`.
    CircleAtInfinity { sheet: u8, sign: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `P2 = z^3 - lambda z - c`.
    A1A2,
    /// `P2 = z^4 - 1`.
    A1A3,
    /// `P2 = c`, `P3 = (1 - z^2)/2`.
    A2A1,
    /// `P2 = 0`, `P3 = (z^3 - 3 z^2 - 2)/2`.
    A2A2,
}

impl Family {
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            Family::A1A2 => &["lambda", "c"],
            Family::A2A1 => &["c"],
            Family::A1A3 | Family::A2A2 => &[],
        }
    }

    pub fn basepoint(&self) -> BTreeMap<String, Complex64> {
        let mut m = BTreeMap::new();
        match self {
            Family::A1A2 => {
                m.insert("lambda".to_string(), c64(0.0, 0.0));
                m.insert("c".to_string(), c64(1.0, 0.0));
            }
            Family::A2A1 => {
                m.insert("c".to_string(), c64(0.0, 0.0));
            }
            Family::A1A3 | Family::A2A2 => {}
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    pub name: TheoryName,
    pub rank: usize,
    pub degree: usize,
    pub family: Family,
    pub lattice_rank: usize,
    pub intersection: Vec<Vec<i64>>,
    /// One representative of each pair `+-gamma`.
    pub gamma_prime: Vec<BpsState>,
    pub base_periods: Vec<Complex64>,
    pub theta0: f64,
    pub coord_formulas: Vec<CoordinateFormula>,
    pub contours: Vec<PeriodContour>,
}

/// `sqrt(3 pi) Gamma(4/3) / Gamma(11/6)`, the modulus of the basis periods of A1A2 at `c = 1`.
pub fn a1a2_modulus() -> f64 {
    (3.0 * PI).sqrt() * gamma(4.0 / 3.0) / gamma(11.0 / 6.0)
}

fn p(idx: &[usize]) -> DetTerm {
    DetTerm::P(idx.to_vec())
}

fn charges(rows: &[&[i64]]) -> Vec<BpsState> {
    rows.iter()
        .map(|r| BpsState { charge: ChargeVector(r.to_vec()), omega: 1 })
        .collect()
}

pub fn get_theory(name: TheoryName) -> Theory {
    let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    match name {
        TheoryName::A1A2 => {
            let m = a1a2_modulus();
            Theory {
                name,
                rank: 2,
                degree: 3,
                family: Family::A1A2,
                lattice_rank: 2,
                intersection: vec![vec![0, 1], vec![-1, 0]],
                gamma_prime: charges(&[&[1, 0], &[0, 1], &[1, 1]]),
                base_periods: vec![Complex64::from_polar(m, 5.0 * PI / 6.0), c64(0.0, -m)],
                theta0: 0.0,
                coord_formulas: vec![
                    CoordinateFormula::new(vec![p(&[2, 3]), p(&[1, 5])], vec![p(&[1, 2]), p(&[3, 5])]),
                    // X_{gamma2} = X_{-gamma1} X_{-gamma3}
                    CoordinateFormula::new(
                        vec![p(&[1, 2]), p(&[3, 4]), p(&[3, 5])],
                        vec![p(&[2, 3]), p(&[4, 5]), p(&[1, 3])],
                    ),
                ],
                contours: vec![
                    PeriodContour::Segment { from: c64(1.0, 0.0), to: w, sign: 1.0 },
                    PeriodContour::Segment { from: w, to: w * w, sign: 1.0 },
                ],
            }
        }
        TheoryName::A1A3 => {
            let z1 = 2.0 * PI.sqrt() * gamma(1.25) / gamma(1.75);
            let z2 = c64(0.5, 0.5) * z1;
            Theory {
                name,
                rank: 2,
                degree: 4,
                family: Family::A1A3,
                lattice_rank: 3,
                intersection: vec![vec![0, 1, 1], vec![-1, 0, 0], vec![-1, 0, 0]],
                gamma_prime: charges(&[
                    &[1, 0, 0],
                    &[0, 1, 0],
                    &[0, 0, 1],
                    &[1, 0, -1],
                    &[1, -1, 0],
                    &[1, -1, -1],
                ]),
                base_periods: vec![c64(z1, 0.0), z2, z2],
                theta0: 0.4,
                coord_formulas: vec![
                    CoordinateFormula::new(vec![p(&[1, 3]), p(&[4, 6])], vec![p(&[1, 6]), p(&[3, 4])]),
                    CoordinateFormula::new(vec![p(&[2, 3]), p(&[1, 4])], vec![p(&[1, 2]), p(&[3, 4])]),
                    CoordinateFormula::new(vec![p(&[1, 4]), p(&[5, 6])], vec![p(&[4, 5]), p(&[1, 6])]),
                ],
                contours: vec![
                    PeriodContour::Segment { from: c64(-1.0, 0.0), to: c64(1.0, 0.0), sign: 1.0 },
                    PeriodContour::Segment { from: c64(-1.0, 0.0), to: c64(0.0, 1.0), sign: 1.0 },
                    PeriodContour::Segment { from: c64(0.0, -1.0), to: c64(1.0, 0.0), sign: 1.0 },
                ],
            }
        }
        TheoryName::A2A1 => {
            // Gamma(-1/6) is negative, so the modulus is taken explicitly.
            let m = (12.0 * 2f64.powf(2.0 / 3.0) * PI.powf(1.5)
                / (5.0 * gamma(-1.0 / 6.0) * gamma(2.0 / 3.0)))
            .abs();
            let z1 = Complex64::from_polar(m, 5.0 * PI / 6.0);
            Theory {
                name,
                rank: 3,
                degree: 2,
                family: Family::A2A1,
                lattice_rank: 2,
                intersection: vec![vec![0, 1], vec![-1, 0]],
                gamma_prime: charges(&[&[1, 0], &[0, 1], &[1, 1]]),
                base_periods: vec![z1, w * z1],
                theta0: 0.0,
                coord_formulas: vec![
                    CoordinateFormula::new(
                        vec![p(&[2, 3, 4]), p(&[1, 4, 5])],
                        vec![p(&[1, 2, 4]), p(&[3, 4, 5])],
                    ),
                    CoordinateFormula::new(
                        vec![p(&[1, 2, 3]), p(&[1, 2, 4]), p(&[3, 4, 5])],
                        vec![p(&[1, 2, 5]), p(&[1, 3, 4]), p(&[2, 3, 4])],
                    ),
                ],
                contours: vec![
                    PeriodContour::FigureEight { a: c64(1.0, 0.0), b: c64(-1.0, 0.0), sheet: 2, sign: 1.0 },
                    PeriodContour::FigureEight { a: c64(1.0, 0.0), b: c64(-1.0, 0.0), sheet: 0, sign: 1.0 },
                ],
            }
        }
        TheoryName::A2A2 => {
            let flavor = 2.0 * PI * 2f64.powf(-1.0 / 3.0);
            let z0 = c64(3.195823345445646, 0.0);
            let z1 = c64(-0.0979116727228236, 0.7850032632435902);
            let z2 = z1.conj();
            Theory {
                name,
                rank: 3,
                degree: 3,
                family: Family::A2A2,
                lattice_rank: 4,
                intersection: vec![
                    vec![0, 1, 0, 0],
                    vec![-1, 0, 0, 0],
                    vec![0, 0, 0, 0],
                    vec![0, 0, 0, 0],
                ],
                gamma_prime: charges(&[
                    &[1, 0, 0, 0],
                    &[0, 1, 0, 0],
                    &[1, 1, 0, 0],
                    &[0, 1, 1, 0],
                    &[0, 1, 1, 1],
                    &[1, 0, -1, 0],
                    &[1, 0, -1, -1],
                    &[1, -1, -1, 0],
                    &[1, -1, -1, -1],
                    &[1, -1, -2, -1],
                    &[1, -2, -2, -1],
                    &[2, -1, -2, -1],
                ]),
                base_periods: vec![
                    c64(2.3029811167798955, 0.0),
                    c64(5.470331086656921, 4.487923893149248),
                    Complex64::from_polar(flavor, 5.0 * PI / 6.0),
                    c64(0.0, -flavor),
                ],
                // zero is a BPS ray here (Z1 is real); see the decisions ledger
                theta0: 0.1,
                coord_formulas: vec![
                    CoordinateFormula::new(
                        vec![DetTerm::Q([1, 2, 3, 4, 5, 6])],
                        vec![p(&[1, 2, 3]), p(&[4, 5, 6])],
                    ),
                    CoordinateFormula::new(
                        vec![p(&[1, 2, 5]), p(&[3, 5, 6]), p(&[4, 5, 6])],
                        vec![p(&[1, 5, 6]), p(&[2, 5, 6]), p(&[3, 4, 5])],
                    ),
                    CoordinateFormula::new(
                        vec![p(&[1, 2, 6]), p(&[3, 4, 5])],
                        vec![p(&[1, 2, 3]), p(&[4, 5, 6])],
                    ),
                    CoordinateFormula::new(
                        vec![p(&[1, 5, 6]), p(&[2, 3, 4])],
                        vec![p(&[1, 2, 6]), p(&[3, 4, 5])],
                    ),
                ],
                contours: vec![
                    PeriodContour::FigureEight { a: z2, b: z1, sheet: 1, sign: 1.0 },
                    PeriodContour::FigureEight { a: z2, b: z0, sheet: 2, sign: 1.0 },
                    PeriodContour::CircleAtInfinity { sheet: 1, sign: -1.0 },
                    PeriodContour::CircleAtInfinity { sheet: 2, sign: -1.0 },
                ],
            }
        }
    }
}

pub fn get_theory_by_name(name: &str) -> Result<Theory> {
    Ok(get_theory(name.parse()?))
}

/// Differentials of the theory's family; unspecified parameters take basepoint values.
pub fn build_differentials(
    theory: &Theory,
    params: &BTreeMap<String, Complex64>,
) -> Result<DifferentialTuple> {
    let allowed = theory.family.parameter_names();
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(StokesError::BadParameter(format!(
                "{} has no parameter `{k}` (expects {:?})",
                theory.name, allowed
            )));
        }
    }
    let mut vals = theory.family.basepoint();
    vals.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
    let get = |k: &str| vals[k];
    let one = c64(1.0, 0.0);
    let zero = c64(0.0, 0.0);
    let w = match theory.family {
        Family::A1A2 => {
            DifferentialTuple::rank2(ComplexPoly::new(vec![-get("c"), -get("lambda"), zero, one]))
        }
        Family::A1A3 => DifferentialTuple::rank2(ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0])),
        Family::A2A1 => DifferentialTuple::rank3(
            ComplexPoly::new(vec![get("c")]),
            ComplexPoly::from_real(&[0.5, 0.0, -0.5]),
        ),
        Family::A2A2 => DifferentialTuple::rank3(
            ComplexPoly::zero(),
            ComplexPoly::from_real(&[-1.0, 0.0, -1.5, 0.5]),
        ),
    };
    w.validate(theory.degree)?;
    Ok(w)
}

impl Theory {
    pub fn pairing(&self, a: &ChargeVector, b: &ChargeVector) -> i64 {
        let n = self.lattice_rank;
        let mut s = 0;
        for i in 0..n {
            for j in 0..n {
                s += a.0[i] * self.intersection[i][j] * b.0[j];
            }
        }
        s
    }

    pub fn basis_charge(&self, i: usize) -> ChargeVector {
        ChargeVector::basis(self.lattice_rank, i)
    }

    /// Signs on the basis for the quadratic refinement that equals `-1` on all of `Gamma'`.
    pub fn refinement_basis_signs(&self) -> Vec<i8> {
        let n = self.lattice_rank;
        for mask in 0u32..(1 << n) {
            let signs: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            if self
                .gamma_prime
                .iter()
                .all(|s| self.refinement_with(&signs, &s.charge) == -1)
            {
                return signs;
            }
        }
        panic!("no quadratic refinement is -1 on Gamma' for {}", self.name);
    }

    fn refinement_with(&self, signs: &[i8], charge: &ChargeVector) -> i8 {
        let n = self.lattice_rank;
        let mut parity: i64 = 0;
        let mut sign: i8 = 1;
        for i in 0..n {
            if charge.0[i].rem_euclid(2) == 1 {
                sign *= signs[i];
            }
            for j in (i + 1)..n {
                parity += charge.0[i] * charge.0[j] * self.intersection[i][j];
            }
        }
        if parity.rem_euclid(2) == 1 {
            -sign
        } else {
            sign
        }
    }

    /// Quadratic refinement `sigma(gamma)` relating code and paper sign conventions.
    pub fn refinement_sign(&self, charge: &ChargeVector) -> i8 {
        self.refinement_with(&self.refinement_basis_signs(), charge)
    }

    pub fn differentials_at_basepoint(&self) -> DifferentialTuple {
        build_differentials(self, &BTreeMap::new()).expect("basepoint is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in TheoryName::ALL {
            assert_eq!(n.to_string().parse::<TheoryName>().unwrap(), n);
        }
        assert!(matches!("A3A1".parse::<TheoryName>(), Err(StokesError::UnknownTheory(_))));
    }

    #[test]
    fn arg_half_open_puts_negative_reals_at_minus_pi() {
        assert_eq!(arg_half_open(c64(-0.5, 0.0)), -PI);
        assert!((arg_half_open(c64(0.0, 1.0)) - PI / 2.0).abs() < 1e-15);
    }
}
