//! CSS code constructors and the detector models built from them.
//!
//! Available families: rotated surface codes, repetition codes, hypergraph
//! products of two classical parity-check matrices, and bivariate bicycle
//! codes. Every constructor checks `hx·hzᵀ = 0` and derives logical
//! operators by rank before returning.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{kernel_basis, plu_decompose, ColumnOutcome, SparseBinaryMatrix};
use crate::model::{DetectorModel, ModelError};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("surface code distance must be odd and at least 3, got {0}")]
    Distance(usize),
    #[error("bivariate bicycle polynomials need at least one term each")]
    EmptyPolynomial,
    #[error("group dimensions must be positive, got l={l} m={m}")]
    GroupShape { l: usize, m: usize },
    #[error("physical error rate {0} outside (0, 1)")]
    Probability(f64),
    #[error("at least one round is required")]
    NoRounds,
    #[error("check matrices do not commute")]
    NotCommuting,
    #[error("no {checks}x{bits} seed matrix with the requested degrees after {attempts} attempts")]
    SeedSearch { checks: usize, bits: usize, attempts: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which check type a detector model decodes. `Z` uses the Z checks (and
/// therefore detects X errors), scoring failures with the Z logicals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    X,
    Z,
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Side::X),
            "z" => Ok(Side::Z),
            other => Err(format!("unknown side {other:?}, expected x or z")),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::X => "x",
            Side::Z => "z",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CssCode {
    pub hx: SparseBinaryMatrix,
    pub hz: SparseBinaryMatrix,
    pub lx: SparseBinaryMatrix,
    pub lz: SparseBinaryMatrix,
}

impl CssCode {
    /// Validates commutation and computes a logical basis for each side.
    pub fn new(hx: SparseBinaryMatrix, hz: SparseBinaryMatrix) -> Result<Self, CodeError> {
        if hx.num_cols() != hz.num_cols() || !hx.mul(&hz.transpose()).map_err(|_| CodeError::NotCommuting)?.is_zero() {
            return Err(CodeError::NotCommuting);
        }
        let lz = logical_basis(&hx, &hz);
        let lx = logical_basis(&hz, &hx);
        Ok(Self { hx, hz, lx, lz })
    }

    pub fn n(&self) -> usize {
        self.hx.num_cols()
    }

    pub fn k(&self) -> usize {
        self.n() - self.hx.rank() - self.hz.rank()
    }

    pub fn checks(&self, side: Side) -> &SparseBinaryMatrix {
        match side {
            Side::X => &self.hx,
            Side::Z => &self.hz,
        }
    }

    pub fn logicals(&self, side: Side) -> &SparseBinaryMatrix {
        match side {
            Side::X => &self.lx,
            Side::Z => &self.lz,
        }
    }
}

/// Basis of `ker(commuting) / rowspace(stabilizers)` as rows.
fn logical_basis(commuting: &SparseBinaryMatrix, stabilizers: &SparseBinaryMatrix) -> SparseBinaryMatrix {
    let n = commuting.num_cols();
    let mut fact = plu_decompose(&stabilizers.transpose());
    let mut rows = Vec::new();
    for (i, v) in kernel_basis(commuting).into_iter().enumerate() {
        if let Ok(ColumnOutcome::Pivot { .. }) = fact.add_column(stabilizers.num_rows() + i, &v, |_| false) {
            rows.push(v);
        }
    }
    SparseBinaryMatrix::from_rows(n, rows).expect("kernel vectors are well-formed")
}

/// Rotated surface code of odd distance `d` on a `d × d` grid of qubits,
/// qubit `(r, c)` at index `r·d + c`.
pub fn surface_code(d: usize) -> Result<CssCode, CodeError> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(CodeError::Distance(d));
    }
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    // Face (i, j) covers the qubits at the corners (i-1..=i, j-1..=j).
    for i in 0..=d {
        for j in 0..=d {
            let qubits: Vec<usize> = [(i.wrapping_sub(1), j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i, j)]
                .into_iter()
                .filter(|&(r, c)| r < d && c < d)
                .map(|(r, c)| r * d + c)
                .collect();
            let is_x = (i + j) % 2 == 0;
            let top_bottom = i == 0 || i == d;
            let left_right = j == 0 || j == d;
            let keep = match qubits.len() {
                4 => true,
                2 => (is_x && top_bottom) || (!is_x && left_right),
                _ => false,
            };
            if keep {
                if is_x {
                    xs.push(qubits);
                } else {
                    zs.push(qubits);
                }
            }
        }
    }
    let n = d * d;
    CssCode::new(
        SparseBinaryMatrix::from_rows(n, xs).expect("faces are well-formed"),
        SparseBinaryMatrix::from_rows(n, zs).expect("faces are well-formed"),
    )
}

/// `(n-1) × n` parity checks of the length-`n` repetition code.
pub fn repetition_parity(n: usize) -> SparseBinaryMatrix {
    SparseBinaryMatrix::from_rows(n, (1..n).map(|i| vec![i - 1, i]).collect()).expect("chain is well-formed")
}

/// Repetition code as a CSS code protecting against X errors: the Z checks
/// are the chain parities and there are no X checks.
pub fn repetition_code(n: usize) -> Result<CssCode, CodeError> {
    CssCode::new(SparseBinaryMatrix::zeros(0, n), repetition_parity(n))
}

/// Hypergraph product `hx = [h1 ⊗ I | I ⊗ h2ᵀ]`, `hz = [I ⊗ h2 | h1ᵀ ⊗ I]`.
pub fn hypergraph_product(h1: &SparseBinaryMatrix, h2: &SparseBinaryMatrix) -> Result<CssCode, CodeError> {
    let (m1, n1) = (h1.num_rows(), h1.num_cols());
    let (m2, n2) = (h2.num_rows(), h2.num_cols());
    let hx = h1
        .kron(&SparseBinaryMatrix::identity(n2))
        .hstack(&SparseBinaryMatrix::identity(m1).kron(&h2.transpose()))
        .expect("blocks share m1·n2 rows");
    let hz = SparseBinaryMatrix::identity(n1)
        .kron(h2)
        .hstack(&h1.transpose().kron(&SparseBinaryMatrix::identity(m2)))
        .expect("blocks share n1·m2 rows");
    CssCode::new(hx, hz)
}

/// Bivariate bicycle code parameters; each term `[a, b]` is the monomial
/// `x^a y^b` with `x = S_l ⊗ I_m` and `y = I_l ⊗ S_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BivariateBicycleConfig {
    pub l: usize,
    pub m: usize,
    pub a: Vec<[usize; 2]>,
    pub b: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl BivariateBicycleConfig {
    pub fn build(&self) -> Result<CssCode, CodeError> {
        bivariate_bicycle(self.l, self.m, &self.a, &self.b)
    }
}

fn bb_polynomial(l: usize, m: usize, terms: &[[usize; 2]]) -> SparseBinaryMatrix {
    let size = l * m;
    let mut cols = vec![Vec::new(); size];
    for (i, j) in (0..l).flat_map(|i| (0..m).map(move |j| (i, j))) {
        let row = i * m + j;
        for &[a, b] in terms {
            let col = ((i + a) % l) * m + (j + b) % m;
            cols[col].push(row);
        }
    }
    for col in &mut cols {
        col.sort_unstable();
        let mut reduced: Vec<usize> = Vec::with_capacity(col.len());
        for &r in col.iter() {
            if reduced.last() == Some(&r) {
                reduced.pop();
            } else {
                reduced.push(r);
            }
        }
        *col = reduced;
    }
    SparseBinaryMatrix::from_columns(size, cols).expect("cancelled terms are well-formed")
}

/// Bivariate bicycle code `hx = [A | B]`, `hz = [Bᵀ | Aᵀ]`.
pub fn bivariate_bicycle(l: usize, m: usize, a: &[[usize; 2]], b: &[[usize; 2]]) -> Result<CssCode, CodeError> {
    if l == 0 || m == 0 {
        return Err(CodeError::GroupShape { l, m });
    }
    if a.is_empty() || b.is_empty() {
        return Err(CodeError::EmptyPolynomial);
    }
    let pa = bb_polynomial(l, m, a);
    let pb = bb_polynomial(l, m, b);
    let hx = pa.hstack(&pb).expect("square blocks");
    let hz = pb.transpose().hstack(&pa.transpose()).expect("square blocks");
    CssCode::new(hx, hz)
}

/// Random `checks × bits` matrix with every column of weight `col_weight`
/// and every row of weight `row_weight`, no two columns sharing more than
/// one row (Tanner-graph girth at least 6) and full row rank. Deterministic
/// in `seed`.
pub fn random_regular_seed(
    checks: usize,
    bits: usize,
    col_weight: usize,
    row_weight: usize,
    seed: u64,
) -> Result<SparseBinaryMatrix, CodeError> {
    const ATTEMPTS: usize = 10_000;
    let fail = CodeError::SeedSearch {
        checks,
        bits,
        attempts: ATTEMPTS,
    };
    if checks * row_weight != bits * col_weight || col_weight > checks {
        return Err(fail);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..ATTEMPTS {
        let mut capacity = vec![row_weight; checks];
        let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); checks];
        let mut cols = Vec::with_capacity(bits);
        for c in 0..bits {
            let mut open: Vec<usize> = (0..checks).filter(|&r| capacity[r] > 0).collect();
            open.shuffle(&mut rng);
            // Prefer the rows with the most remaining capacity.
            open.sort_by_key(|&r| std::cmp::Reverse(capacity[r]));
            let mut col: Vec<usize> = Vec::with_capacity(col_weight);
            for &r in &open {
                if col.len() == col_weight {
                    break;
                }
                let clash = col.iter().any(|&q| rows_of[q].iter().any(|x| rows_of[r].contains(x)));
                if !clash {
                    col.push(r);
                }
            }
            if col.len() < col_weight {
                continue 'attempt;
            }
            for &r in &col {
                capacity[r] -= 1;
                rows_of[r].push(c);
            }
            cols.push(col);
        }
        let h = SparseBinaryMatrix::from_columns(checks, cols).expect("distinct rows per column");
        if h.rank() == checks {
            return Ok(h);
        }
    }
    Err(fail)
}

/// Parses a dense 0/1 matrix, one row per line. Digits may be separated by
/// whitespace; `#` starts a comment.
pub fn parse_dense_matrix(text: &str) -> Result<SparseBinaryMatrix, CodeError> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(CodeError::Parse {
                    line: i + 1,
                    message: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CodeError::Parse {
                    line: i + 1,
                    message: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(SparseBinaryMatrix::from_dense(&rows))
}

pub fn to_dense_text(m: &SparseBinaryMatrix) -> String {
    let mut out = String::new();
    for row in m.to_dense() {
        out.extend(row.iter().map(|&b| if b == 1 { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

fn check_probability(p: f64) -> Result<(), CodeError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(CodeError::Probability(p))
    }
}

/// Independent flips with probability `p` on every qubit, decoded with the
/// checks of `side`.
pub fn code_capacity_model<T: Real>(code: &CssCode, side: Side, p: f64) -> Result<DetectorModel<T>, CodeError> {
    check_probability(p)?;
    Ok(DetectorModel::uniform(
        code.checks(side).clone(),
        T::of(p),
        code.logicals(side).clone(),
    )?)
}

/// Round index of every detector and fault of a multi-round model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowLayout {
    pub rounds: usize,
    pub detector_round: Vec<usize>,
    pub fault_round: Vec<usize>,
}

/// Phenomenological noise over `rounds` syndrome-extraction rounds, the
/// last of which is noiseless.
///
/// Round `r` contributes `n` data-fault columns followed, except in the last
/// round, by one measurement-fault column per check. Detector `(r, c)` at
/// index `r·m + c` compares the round-`r` and round-`r-1` outcomes of check
/// `c`: a data fault in round `r` flips the detectors of its checks in round
/// `r`, and a measurement fault flips `(r, c)` and `(r + 1, c)`. Data faults
/// of every round act on the logical observables.
pub fn phenomenological_model<T: Real>(
    code: &CssCode,
    side: Side,
    p: f64,
    rounds: usize,
) -> Result<(DetectorModel<T>, WindowLayout), CodeError> {
    check_probability(p)?;
    if rounds == 0 {
        return Err(CodeError::NoRounds);
    }
    let checks = code.checks(side);
    let logicals = code.logicals(side);
    let (m, n) = (checks.num_rows(), checks.num_cols());
    let mut columns = Vec::new();
    let mut obs_entries = Vec::new();
    let mut fault_round = Vec::new();
    for r in 0..rounds {
        for q in 0..n {
            for &l in logicals.col(q) {
                obs_entries.push((l, columns.len()));
            }
            columns.push(checks.col(q).iter().map(|&c| r * m + c).collect::<Vec<_>>());
            fault_round.push(r);
        }
        if r + 1 < rounds {
            for c in 0..m {
                columns.push(vec![r * m + c, (r + 1) * m + c]);
                fault_round.push(r);
            }
        }
    }
    let num_faults = columns.len();
    let h = SparseBinaryMatrix::from_columns(rounds * m, columns).expect("columns are in range");
    let observables = SparseBinaryMatrix::from_entries(logicals.num_rows(), num_faults, obs_entries)
        .expect("observable entries are in range");
    let model = DetectorModel::uniform(h, T::of(p), observables)?;
    let layout = WindowLayout {
        rounds,
        detector_round: (0..rounds * m).map(|d| d / m.max(1)).collect(),
        fault_round,
    };
    Ok((model, layout))
}
