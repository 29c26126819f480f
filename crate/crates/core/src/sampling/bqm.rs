//! Binary quadratic models, their Ising form, and hardware-range clamping.
//!
//! Conventions:
//!
//! ```text
//! BQM:    E(q) = Σ_i Q_ii q_i + Σ_{i<j} Q_ij q_i q_j + offset,       q ∈ {0,1}^n
//! Ising:  E(s) = -Σ_i h_i s_i - Σ_{i<j} J_ij s_i s_j + offset,       s ∈ {-1,1}^n
//! ```
//!
//! related by `q = (s + 1) / 2`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::ebm::EbmModel;
use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Bqm {
    q: Matrix,
    pub offset: f64,
}

impl Bqm {
    pub fn new(n: usize) -> Self {
        Self {
            q: Matrix::zeros(n, n),
            offset: 0.0,
        }
    }

    /// Wraps an upper-triangular coefficient matrix. Entries below the
    /// diagonal must be exactly zero.
    pub fn from_upper(q: Matrix, offset: f64) -> Result<Self> {
        check_len("bqm matrix columns", q.rows(), q.cols())?;
        for r in 0..q.rows() {
            for c in 0..r {
                if q[(r, c)] != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "bqm coefficient ({r}, {c}) lies below the diagonal"
                    )));
                }
            }
        }
        Ok(Self { q, offset })
    }

    pub fn num_variables(&self) -> usize {
        self.q.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn linear(&self, i: usize) -> f64 {
        self.q[(i, i)]
    }

    pub fn set_linear(&mut self, i: usize, value: f64) {
        self.q[(i, i)] = value;
    }

    /// Quadratic coefficient of the pair `{i, j}`, `i != j`, in either order.
    pub fn quadratic(&self, i: usize, j: usize) -> f64 {
        let (a, b) = ordered(i, j);
        self.q[(a, b)]
    }

    pub fn set_quadratic(&mut self, i: usize, j: usize, value: f64) {
        let (a, b) = ordered(i, j);
        self.q[(a, b)] = value;
    }

    /// `qᵀ Q q + offset` for a 0/1 assignment.
    pub fn energy(&self, q: &[u8]) -> f64 {
        let n = self.num_variables();
        assert_eq!(q.len(), n, "bqm energy: assignment length");
        let mut e = self.offset;
        for i in (0..n).filter(|&i| q[i] == 1) {
            e += self.q[(i, i)];
            for j in (i + 1..n).filter(|&j| q[j] == 1) {
                e += self.q[(i, j)];
            }
        }
        e
    }

    /// Text interchange format: `n offset`, then `i i value` for every
    /// linear term and `i j value` (`i < j`) for every nonzero quadratic
    /// term, values with 17 significant digits.
    pub fn to_text(&self) -> String {
        let n = self.num_variables();
        write_text(n, self.offset, (0..n).map(|i| self.linear(i)), |i, j| self.q[(i, j)])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (n, offset, terms) = parse_text(text)?;
        let mut bqm = Bqm::new(n);
        bqm.offset = offset;
        for (i, j, v) in terms {
            if i == j {
                bqm.set_linear(i, v);
            } else {
                bqm.set_quadratic(i, j, v);
            }
        }
        Ok(bqm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    pub h: Vec<f64>,
    /// Strictly upper-triangular couplings.
    j: Matrix,
    pub offset: f64,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        Self {
            h: vec![0.0; n],
            j: Matrix::zeros(n, n),
            offset: 0.0,
        }
    }

    pub fn num_spins(&self) -> usize {
        self.h.len()
    }

    pub fn couplings(&self) -> &Matrix {
        &self.j
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        let (a, b) = ordered(a, b);
        self.j[(a, b)]
    }

    pub fn set_coupling(&mut self, a: usize, b: usize, value: f64) {
        let (a, b) = ordered(a, b);
        self.j[(a, b)] = value;
    }

    /// Nonzero couplings as `(i, j, J_ij)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.num_spins();
        (0..n).flat_map(move |a| {
            (a + 1..n).filter_map(move |b| {
                let v = self.j[(a, b)];
                (v != 0.0).then_some((a, b, v))
            })
        })
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        assert_eq!(s.len(), self.num_spins(), "ising energy: assignment length");
        let mut e = self.offset;
        for (hi, &si) in self.h.iter().zip(s) {
            e -= hi * si as f64;
        }
        for (a, b, v) in self.edges() {
            e -= v * (s[a] * s[b]) as f64;
        }
        e
    }

    pub fn to_text(&self) -> String {
        let n = self.num_spins();
        write_text(n, self.offset, self.h.iter().copied(), |a, b| self.j[(a, b)])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (n, offset, terms) = parse_text(text)?;
        let mut ising = IsingModel::new(n);
        ising.offset = offset;
        for (a, b, v) in terms {
            if a == b {
                ising.h[a] = v;
            } else {
                ising.set_coupling(a, b, v);
            }
        }
        Ok(ising)
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    assert_ne!(i, j, "quadratic terms need two distinct variables");
    (i.min(j), i.max(j))
}

/// BQM whose Boltzmann distribution at inverse temperature `beta_eff` is the
/// model's conditional `P(k, y | x)`.
///
/// Variables are the `K` hidden units followed by the `M` outputs. Diagonal
/// entries hold `-(W1 x + b) / beta_eff` and `-c / beta_eff`; the block
/// linking hidden unit `j` to output `l` holds `-W2[l, j] / beta_eff`. Then
/// `beta_eff · E_BQM(k, y) = E(x, k, y)` exactly.
pub fn build_conditional_bqm(model: &EbmModel, x: &[f64], beta_eff: f64) -> Result<Bqm> {
    if !(beta_eff > 0.0 && beta_eff.is_finite()) {
        return Err(Error::InvalidConfig("beta_eff must be positive and finite".into()));
    }
    model.check_input(x)?;
    let d = model.dims();
    let scale = -1.0 / beta_eff;
    let mut bqm = Bqm::new(d.sampled_vars());
    for (j, f) in model.hidden_field(x).into_iter().enumerate() {
        bqm.set_linear(j, scale * f);
    }
    for (l, &c) in model.params.output_bias.iter().enumerate() {
        bqm.set_linear(d.hidden + l, scale * c);
        for j in 0..d.hidden {
            bqm.set_quadratic(j, d.hidden + l, scale * model.params.w2[(l, j)]);
        }
    }
    Ok(bqm)
}

pub fn bqm_to_ising(bqm: &Bqm) -> IsingModel {
    let n = bqm.num_variables();
    let mut ising = IsingModel::new(n);
    let mut offset = bqm.offset;
    // Coefficient of s_i before the sign flip into h.
    let mut linear = vec![0.0; n];
    for i in 0..n {
        let qii = bqm.linear(i);
        linear[i] += qii / 2.0;
        offset += qii / 2.0;
        for j in i + 1..n {
            let qij = bqm.q[(i, j)];
            if qij == 0.0 {
                continue;
            }
            linear[i] += qij / 4.0;
            linear[j] += qij / 4.0;
            offset += qij / 4.0;
            ising.j[(i, j)] = -qij / 4.0;
        }
    }
    for (h, l) in ising.h.iter_mut().zip(linear) {
        *h = -l;
    }
    ising.offset = offset;
    ising
}

pub fn ising_to_bqm(ising: &IsingModel) -> Bqm {
    let n = ising.num_spins();
    let mut bqm = Bqm::new(n);
    let mut offset = ising.offset;
    for i in 0..n {
        // Q_ii = -2 h_i + 2 Σ_{j≠i} J_ij
        let mut qii = -2.0 * ising.h[i];
        for j in 0..n {
            if j != i {
                qii += 2.0 * ising.coupling(i, j);
            }
        }
        bqm.q[(i, i)] = qii;
        offset -= qii / 2.0;
        for j in i + 1..n {
            let qij = -4.0 * ising.j[(i, j)];
            bqm.q[(i, j)] = qij;
            offset -= qij / 4.0;
        }
    }
    bqm.offset = offset;
    bqm
}

/// Programmable coefficient ranges of the annealer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardwareRange {
    pub field: f64,
    pub coupling: f64,
}

impl Default for HardwareRange {
    fn default() -> Self {
        Self {
            field: 2.0,
            coupling: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    Field(usize),
    Coupling(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clip {
    pub coefficient: Coefficient,
    pub original: f64,
    pub clamped: f64,
}

impl Clip {
    pub fn magnitude(&self) -> f64 {
        crate::float::abs(self.original - self.clamped)
    }
}

/// Coefficients altered by [`clamp_to_hardware`]. A nonempty report means
/// the clamped model samples a different distribution than the original.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClampReport {
    pub clips: Vec<Clip>,
}

impl ClampReport {
    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.clips.iter().map(Clip::magnitude).fold(0.0, f64::max)
    }
}

/// Clips `h` to `[-2, 2]` and `J` to `[-1, 1]`.
pub fn clamp_to_hardware(ising: &IsingModel) -> (IsingModel, ClampReport) {
    clamp_to_range(ising, HardwareRange::default())
}

pub fn clamp_to_range(ising: &IsingModel, range: HardwareRange) -> (IsingModel, ClampReport) {
    let mut out = ising.clone();
    let mut report = ClampReport::default();
    for (i, h) in out.h.iter_mut().enumerate() {
        let clamped = h.clamp(-range.field, range.field);
        if clamped != *h {
            report.clips.push(Clip {
                coefficient: Coefficient::Field(i),
                original: *h,
                clamped,
            });
            *h = clamped;
        }
    }
    let n = out.num_spins();
    for a in 0..n {
        for b in a + 1..n {
            let v = out.j[(a, b)];
            let clamped = v.clamp(-range.coupling, range.coupling);
            if clamped != v {
                report.clips.push(Clip {
                    coefficient: Coefficient::Coupling(a, b),
                    original: v,
                    clamped,
                });
                out.j[(a, b)] = clamped;
            }
        }
    }
    (out, report)
}

fn write_text(n: usize, offset: f64, linear: impl Iterator<Item = f64>, upper: impl Fn(usize, usize) -> f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{n} {offset:.16e}");
    for (i, v) in linear.enumerate() {
        let _ = writeln!(s, "{i} {i} {v:.16e}");
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = upper(i, j);
            if v != 0.0 {
                let _ = writeln!(s, "{i} {j} {v:.16e}");
            }
        }
    }
    s
}

type Terms = Vec<(usize, usize, f64)>;

fn parse_text(text: &str) -> Result<(usize, f64, Terms)> {
    let bad = |line: usize, reason: &str| Error::Parse {
        line,
        reason: reason.into(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let mut fields = header.split_whitespace();
    let n: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad(hline, "bad variable count"))?;
    let offset: f64 = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad(hline, "bad offset"))?;

    let mut terms = Vec::new();
    for (lineno, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad(lineno, "expected `i j value`"));
        }
        let i: usize = f[0].parse().map_err(|_| bad(lineno, "bad index"))?;
        let j: usize = f[1].parse().map_err(|_| bad(lineno, "bad index"))?;
        let v: f64 = f[2].parse().map_err(|_| bad(lineno, "bad value"))?;
        if i >= n || j >= n || i > j {
            return Err(bad(lineno, "index out of range or not upper-triangular"));
        }
        terms.push((i, j, v));
    }
    Ok((n, offset, terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_substitution() {
        let mut bqm = Bqm::new(1);
        bqm.set_linear(0, 1.0);
        let ising = bqm_to_ising(&bqm);
        assert_eq!(ising.h, [-0.5]);
        assert_eq!(ising.offset, 0.5);
        assert_eq!(ising.energy(&[1]), 1.0);
        assert_eq!(ising.energy(&[-1]), 0.0);
    }

    #[test]
    fn zero_bqm_maps_to_zero_ising() {
        let ising = bqm_to_ising(&Bqm::new(4));
        assert_eq!(ising, IsingModel::new(4));
    }

    #[test]
    fn lower_triangle_is_rejected() {
        let q = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.5, 1.0]).unwrap();
        assert!(Bqm::from_upper(q, 0.0).is_err());
    }

    #[test]
    fn clamp_identity_when_in_range() {
        let mut ising = IsingModel::new(2);
        ising.h = vec![1.5, -2.0];
        ising.set_coupling(0, 1, -1.0);
        let (out, report) = clamp_to_hardware(&ising);
        assert_eq!(out, ising);
        assert!(report.is_empty());
    }

    #[test]
    fn clamp_reports_clip() {
        let mut ising = IsingModel::new(1);
        ising.h = vec![5.0];
        let (out, report) = clamp_to_hardware(&ising);
        assert_eq!(out.h, [2.0]);
        assert_eq!(report.len(), 1);
        assert_eq!(report.clips[0].coefficient, Coefficient::Field(0));
        assert_eq!(report.max_magnitude(), 3.0);
    }

    #[test]
    fn text_format_golden() {
        let mut bqm = Bqm::new(2);
        bqm.set_linear(0, 0.8);
        bqm.set_linear(1, -0.2);
        bqm.set_quadratic(0, 1, 0.1);
        bqm.offset = 0.0;
        let text = bqm.to_text();
        let expected = "2 0.0000000000000000e0\n\
                        0 0 8.0000000000000004e-1\n\
                        1 1 -2.0000000000000001e-1\n\
                        0 1 1.0000000000000001e-1\n";
        assert_eq!(text, expected);
        assert_eq!(Bqm::from_text(&text).unwrap(), bqm);
    }

    #[test]
    fn text_parse_errors_name_the_line() {
        assert!(matches!(Bqm::from_text(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            Bqm::from_text("2 0\n1 0 3.0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            IsingModel::from_text("1 0\n0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
