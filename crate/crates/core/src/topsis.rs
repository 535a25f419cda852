//! Crisp and fuzzy TOPSIS over decision matrices with benefit and cost criteria.
//!
//! Both pipelines share [`DecisionMatrix`] as input and [`RankingResult`] as output. The crisp
//! pipeline uses vector normalization and branches on direction when picking ideals; the fuzzy
//! pipeline folds direction into max/min normalization and then takes component-wise envelopes.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{
    crisp_from_linguistic, tfn_from_crisp, tfn_from_linguistic, tfn_multiply, vertex_distance, FuzzyError,
    LinguisticRank, TriangularFuzzyNumber,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopsisError {
    #[error("decision matrix needs at least one alternative and one criterion")]
    Empty,
    #[error("row {row} has {got} cells, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("criterion `{0}` declared more than once")]
    DuplicateCriterion(String),
    #[error("alternative `{0}` declared more than once")]
    DuplicateAlternative(String),
    #[error("cell ({alternative}, {criterion}) does not match the criterion's data kind {expected:?}")]
    CellKind { alternative: String, criterion: String, expected: DataKind },
    #[error("cell ({alternative}, {criterion}) must be finite and nonnegative")]
    InvalidCell { alternative: String, criterion: String },
    #[error("criterion `{0}` has an all-zero column and cannot be normalized")]
    DegenerateColumn(String),
    #[error("criterion `{0}` has a zero denominator in fuzzy normalization")]
    ZeroDenominator(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("separation distances must be nonnegative")]
    NegativeDistance,
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Benefit,
    Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataKind {
    Crisp,
    Linguistic,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub direction: Direction,
    pub weight: LinguisticRank,
    pub data_kind: DataKind,
}

impl Criterion {
    pub fn new(
        name: impl Into<String>,
        direction: Direction,
        weight: LinguisticRank,
        data_kind: DataKind,
    ) -> Self {
        Self { name: name.into(), direction, weight, data_kind }
    }

    pub fn benefit(name: impl Into<String>, weight: LinguisticRank, data_kind: DataKind) -> Self {
        Self::new(name, Direction::Benefit, weight, data_kind)
    }

    pub fn cost(name: impl Into<String>, weight: LinguisticRank, data_kind: DataKind) -> Self {
        Self::new(name, Direction::Cost, weight, data_kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<T> {
    Crisp(T),
    Linguistic(LinguisticRank),
    Fuzzy(TriangularFuzzyNumber<T>),
}

impl<T: Scalar> Cell<T> {
    pub fn kind(&self) -> DataKind {
        match self {
            Cell::Crisp(_) => DataKind::Crisp,
            Cell::Linguistic(_) => DataKind::Linguistic,
            Cell::Fuzzy(_) => DataKind::Fuzzy,
        }
    }

    /// Crisp value: linguistic levels through the 1–9 number scale, fuzzy numbers by their modal
    /// value.
    pub fn to_crisp(&self) -> T {
        match self {
            Cell::Crisp(x) => *x,
            Cell::Linguistic(r) => crisp_from_linguistic(*r),
            Cell::Fuzzy(t) => t.modal(),
        }
    }

    /// Fuzzy value: crisp cells become degenerate numbers, linguistic levels use the membership
    /// scale.
    pub fn to_fuzzy(&self) -> TriangularFuzzyNumber<T> {
        match self {
            Cell::Crisp(x) => tfn_from_crisp(*x).expect("validated finite"),
            Cell::Linguistic(r) => tfn_from_linguistic(*r),
            Cell::Fuzzy(t) => *t,
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            Cell::Crisp(x) => x.is_finite() && *x >= T::zero(),
            Cell::Linguistic(_) => true,
            Cell::Fuzzy(t) => t.is_nonnegative(),
        }
    }
}

/// Dense row-major grid of alternatives × criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Copy> Grid<E> {
    pub fn from_rows(rows: Vec<Vec<E>>) -> Result<Self, TopsisError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(TopsisError::Ragged { row: i, got: row.len(), expected: n_cols });
            }
            data.extend(row);
        }
        Ok(Self { rows: n_rows, cols: n_cols, data })
    }

    fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> E {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = E> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    pub fn map<F: Copy>(&self, f: impl Fn(E) -> F) -> Grid<F> {
        Grid { rows: self.rows, cols: self.cols, data: self.data.iter().map(|e| f(*e)).collect() }
    }

    fn select_columns(&self, keep: &[usize]) -> Self {
        Self::from_fn(self.rows, keep.len(), |i, j| self.get(i, keep[j]))
    }
}

/// Alternatives × criteria matrix with crisp, linguistic or fuzzy cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix<T> {
    alternatives: Vec<String>,
    criteria: Vec<Criterion>,
    cells: Grid<Cell<T>>,
}

impl<T: Scalar> DecisionMatrix<T> {
    pub fn new(
        alternatives: Vec<String>,
        criteria: Vec<Criterion>,
        rows: Vec<Vec<Cell<T>>>,
    ) -> Result<Self, TopsisError> {
        if alternatives.is_empty() || criteria.is_empty() {
            return Err(TopsisError::Empty);
        }
        if rows.len() != alternatives.len() {
            return Err(TopsisError::DimensionMismatch { expected: alternatives.len(), got: rows.len() });
        }
        let mut seen = HashSet::new();
        for c in &criteria {
            if !seen.insert(c.name.as_str()) {
                return Err(TopsisError::DuplicateCriterion(c.name.clone()));
            }
        }
        let mut seen = HashSet::new();
        for a in &alternatives {
            if !seen.insert(a.as_str()) {
                return Err(TopsisError::DuplicateAlternative(a.clone()));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != criteria.len() {
                return Err(TopsisError::Ragged { row: i, got: row.len(), expected: criteria.len() });
            }
            for (cell, crit) in row.iter().zip(&criteria) {
                if cell.kind() != crit.data_kind {
                    return Err(TopsisError::CellKind {
                        alternative: alternatives[i].clone(),
                        criterion: crit.name.clone(),
                        expected: crit.data_kind,
                    });
                }
                if !cell.is_valid() {
                    return Err(TopsisError::InvalidCell {
                        alternative: alternatives[i].clone(),
                        criterion: crit.name.clone(),
                    });
                }
            }
        }
        let cells = Grid::from_rows(rows)?;
        Ok(Self { alternatives, criteria, cells })
    }

    pub fn alternatives(&self) -> &[String] {
        &self.alternatives
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn cells(&self) -> &Grid<Cell<T>> {
        &self.cells
    }

    pub fn cell(&self, alternative: usize, criterion: usize) -> Cell<T> {
        self.cells.get(alternative, criterion)
    }

    pub fn len(&self) -> usize {
        self.alternatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alternatives.is_empty()
    }

    /// Every cell resolved to a crisp number.
    pub fn resolve_crisp(&self) -> Grid<T> {
        self.cells.map(|c| c.to_crisp())
    }

    /// Every cell resolved to a triangular fuzzy number.
    pub fn resolve_fuzzy(&self) -> Grid<TriangularFuzzyNumber<T>> {
        self.cells.map(|c| c.to_fuzzy())
    }

    /// Returns a copy with the rows reordered: row `k` of the result is row `perm[k]` here.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let alternatives = perm.iter().map(|&k| self.alternatives[k].clone()).collect();
        let cells = Grid::from_fn(self.cells.rows, self.cells.cols, |i, j| self.cells.get(perm[i], j));
        Self { alternatives, criteria: self.criteria.clone(), cells }
    }
}

/// Relative closeness of one alternative with its degenerate marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closeness<T> {
    pub value: T,
    /// Both separations were zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult<T> {
    /// Alternative identifiers in declaration order.
    pub alternatives: Vec<String>,
    /// Relative closeness per alternative, in declaration order.
    pub scores: Vec<T>,
    /// Alternative indices sorted by descending closeness; ties keep declaration order.
    pub order: Vec<usize>,
    /// Set when every alternative coincides with both ideals.
    pub degenerate: bool,
}

impl<T: Scalar> RankingResult<T> {
    pub fn from_scores(alternatives: Vec<String>, scores: Vec<T>, degenerate: bool) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        // stable sort keeps declaration order among equal scores
        order.sort_by(|&x, &y| scores[y].partial_cmp(&scores[x]).expect("finite closeness"));
        Self { alternatives, scores, order, degenerate }
    }

    /// Identifiers from best to worst.
    pub fn ranked_ids(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.alternatives[i].as_str()).collect()
    }

    /// `(identifier, score)` from best to worst.
    pub fn ranked(&self) -> impl Iterator<Item = (&str, T)> + '_ {
        self.order.iter().map(|&i| (self.alternatives[i].as_str(), self.scores[i]))
    }

    pub fn score_of(&self, id: &str) -> Option<T> {
        self.alternatives.iter().position(|a| a == id).map(|i| self.scores[i])
    }

    pub fn top(&self) -> Option<&str> {
        self.order.first().map(|&i| self.alternatives[i].as_str())
    }

    pub fn bottom(&self) -> Option<&str> {
        self.order.last().map(|&i| self.alternatives[i].as_str())
    }
}

impl<T: Scalar> fmt::Display for RankingResult<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (rank, (id, score)) in self.ranked().enumerate() {
            writeln!(f, "{:>3}  {:<12} {:.6}", rank + 1, id, score)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------------------------
// crisp pipeline

/// Vector normalization: each column divided by its Euclidean norm.
pub fn normalize_crisp<T: Scalar>(matrix: &DecisionMatrix<T>) -> Result<Grid<T>, TopsisError> {
    normalize_crisp_grid(&matrix.resolve_crisp(), matrix.criteria())
}

fn normalize_crisp_grid<T: Scalar>(grid: &Grid<T>, criteria: &[Criterion]) -> Result<Grid<T>, TopsisError> {
    let norms: Vec<T> =
        (0..grid.cols()).map(|j| grid.column(j).fold(T::zero(), |acc, x| acc + x * x).sqrt()).collect();
    if let Some(j) = norms.iter().position(|n| *n == T::zero()) {
        return Err(TopsisError::DegenerateColumn(criteria[j].name.clone()));
    }
    Ok(Grid::from_fn(grid.rows(), grid.cols(), |i, j| grid.get(i, j) / norms[j]))
}

/// Crisp weights from the linguistic number scale, normalized to sum to one.
pub fn resolve_weights_crisp<T: Scalar>(criteria: &[Criterion]) -> Vec<T> {
    let raw: Vec<T> = criteria.iter().map(|c| crisp_from_linguistic(c.weight)).collect();
    let total = raw.iter().fold(T::zero(), |acc, w| acc + *w);
    raw.into_iter().map(|w| w / total).collect()
}

pub fn weighted_matrix_crisp<T: Scalar>(normalized: &Grid<T>, weights: &[T]) -> Result<Grid<T>, TopsisError> {
    if weights.len() != normalized.cols() {
        return Err(TopsisError::DimensionMismatch { expected: normalized.cols(), got: weights.len() });
    }
    Ok(Grid::from_fn(normalized.rows(), normalized.cols(), |i, j| weights[j] * normalized.get(i, j)))
}

/// Positive and negative ideal rows; benefit columns take max/min, cost columns min/max.
pub fn ideal_solutions_crisp<T: Scalar>(weighted: &Grid<T>, criteria: &[Criterion]) -> (Vec<T>, Vec<T>) {
    let mut plus = Vec::with_capacity(weighted.cols());
    let mut minus = Vec::with_capacity(weighted.cols());
    for (j, crit) in criteria.iter().enumerate().take(weighted.cols()) {
        let hi = weighted.column(j).fold(T::neg_infinity(), T::max);
        let lo = weighted.column(j).fold(T::infinity(), T::min);
        match crit.direction {
            Direction::Benefit => {
                plus.push(hi);
                minus.push(lo);
            }
            Direction::Cost => {
                plus.push(lo);
                minus.push(hi);
            }
        }
    }
    (plus, minus)
}

/// Euclidean distance of every row to the positive and negative ideal.
pub fn separations_crisp<T: Scalar>(weighted: &Grid<T>, plus: &[T], minus: &[T]) -> (Vec<T>, Vec<T>) {
    let dist = |row: &[T], ideal: &[T]| {
        row.iter().zip(ideal).fold(T::zero(), |acc, (v, a)| acc + (*v - *a) * (*v - *a)).sqrt()
    };
    (0..weighted.rows()).map(|i| (dist(weighted.row(i), plus), dist(weighted.row(i), minus))).unzip()
}

/// `d- / (d+ + d-)`; both zero yields 0.5 with the degenerate marker.
pub fn relative_closeness<T: Scalar>(d_plus: T, d_minus: T) -> Result<Closeness<T>, TopsisError> {
    if d_plus < T::zero() || d_minus < T::zero() || d_plus.is_nan() || d_minus.is_nan() {
        return Err(TopsisError::NegativeDistance);
    }
    let total = d_plus + d_minus;
    if total == T::zero() {
        return Ok(Closeness { value: T::lit(0.5), degenerate: true });
    }
    Ok(Closeness { value: d_minus / total, degenerate: false })
}

fn closeness_ranking<T: Scalar>(
    alternatives: &[String],
    d_plus: &[T],
    d_minus: &[T],
) -> Result<RankingResult<T>, TopsisError> {
    let mut degenerate = false;
    let mut scores = Vec::with_capacity(d_plus.len());
    for (p, m) in d_plus.iter().zip(d_minus) {
        let rc = relative_closeness(*p, *m)?;
        degenerate |= rc.degenerate;
        scores.push(rc.value);
    }
    Ok(RankingResult::from_scores(alternatives.to_vec(), scores, degenerate))
}

/// Columns whose entries are not all equal. A constant column sits on both ideals for every
/// alternative and adds exactly zero to every separation, so dropping it leaves closeness intact.
fn varying_columns<E: PartialEq + Copy>(grid: &Grid<E>) -> Vec<usize> {
    (0..grid.cols())
        .filter(|&j| {
            let first = grid.get(0, j);
            grid.column(j).any(|e| e != first)
        })
        .collect()
}

/// Full crisp TOPSIS ranking.
pub fn rank_crisp<T: Scalar>(matrix: &DecisionMatrix<T>) -> Result<RankingResult<T>, TopsisError> {
    let resolved = matrix.resolve_crisp();
    let weights_all = resolve_weights_crisp::<T>(matrix.criteria());
    let keep = varying_columns(&resolved);
    let resolved = resolved.select_columns(&keep);
    let criteria: Vec<Criterion> = keep.iter().map(|&j| matrix.criteria()[j].clone()).collect();
    let weights: Vec<T> = keep.iter().map(|&j| weights_all[j]).collect();

    let normalized = normalize_crisp_grid(&resolved, &criteria)?;
    let weighted = weighted_matrix_crisp(&normalized, &weights)?;
    let (plus, minus) = ideal_solutions_crisp(&weighted, &criteria);
    let (d_plus, d_minus) = separations_crisp(&weighted, &plus, &minus);
    closeness_ranking(matrix.alternatives(), &d_plus, &d_minus)
}

// ---------------------------------------------------------------------------------------------
// fuzzy pipeline

/// Max/min normalization: benefit columns divide by the largest upper bound, cost columns invert
/// against the smallest lower bound.
pub fn normalize_fuzzy<T: Scalar>(
    matrix: &DecisionMatrix<T>,
) -> Result<Grid<TriangularFuzzyNumber<T>>, TopsisError> {
    normalize_fuzzy_grid(&matrix.resolve_fuzzy(), matrix.criteria())
}

fn normalize_fuzzy_grid<T: Scalar>(
    grid: &Grid<TriangularFuzzyNumber<T>>,
    criteria: &[Criterion],
) -> Result<Grid<TriangularFuzzyNumber<T>>, TopsisError> {
    let mut columns: Vec<Vec<TriangularFuzzyNumber<T>>> = Vec::with_capacity(grid.cols());
    for (j, crit) in criteria.iter().enumerate() {
        let col: Vec<TriangularFuzzyNumber<T>> = match crit.direction {
            Direction::Benefit => {
                let c_max = grid.column(j).map(|t| t.upper()).fold(T::neg_infinity(), T::max);
                if c_max <= T::zero() {
                    return Err(TopsisError::ZeroDenominator(crit.name.clone()));
                }
                grid.column(j)
                    .map(|t| {
                        TriangularFuzzyNumber::new_unchecked(
                            t.lower() / c_max,
                            t.modal() / c_max,
                            t.upper() / c_max,
                        )
                    })
                    .collect()
            }
            Direction::Cost => {
                let a_min = grid.column(j).map(|t| t.lower()).fold(T::infinity(), T::min);
                if a_min <= T::zero() {
                    return Err(TopsisError::ZeroDenominator(crit.name.clone()));
                }
                grid.column(j)
                    .map(|t| {
                        TriangularFuzzyNumber::new_unchecked(
                            a_min / t.upper(),
                            a_min / t.modal(),
                            a_min / t.lower(),
                        )
                    })
                    .collect()
            }
        };
        columns.push(col);
    }
    Ok(Grid::from_fn(grid.rows(), grid.cols(), |i, j| columns[j][i]))
}

/// Fuzzy weight of each criterion: its membership number scaled from 0–100 into 0–1.
pub fn fuzzy_weights<T: Scalar>(criteria: &[Criterion]) -> Vec<TriangularFuzzyNumber<T>> {
    let hundredth = T::lit(0.01);
    criteria.iter().map(|c| tfn_from_linguistic::<T>(c.weight).scale(hundredth)).collect()
}

pub fn weighted_matrix_fuzzy<T: Scalar>(
    normalized: &Grid<TriangularFuzzyNumber<T>>,
    weights: &[TriangularFuzzyNumber<T>],
) -> Result<Grid<TriangularFuzzyNumber<T>>, TopsisError> {
    if weights.len() != normalized.cols() {
        return Err(TopsisError::DimensionMismatch { expected: normalized.cols(), got: weights.len() });
    }
    let mut data = Vec::with_capacity(normalized.rows() * normalized.cols());
    for i in 0..normalized.rows() {
        for (j, w) in weights.iter().enumerate() {
            data.push(tfn_multiply(w, &normalized.get(i, j))?);
        }
    }
    Ok(Grid { rows: normalized.rows(), cols: normalized.cols(), data })
}

/// Component-wise envelopes over the alternatives of each column.
pub fn ideal_solutions_fuzzy<T: Scalar>(
    weighted: &Grid<TriangularFuzzyNumber<T>>,
) -> (Vec<TriangularFuzzyNumber<T>>, Vec<TriangularFuzzyNumber<T>>) {
    (0..weighted.cols())
        .map(|j| {
            let first = weighted.get(0, j);
            weighted
                .column(j)
                .fold((first, first), |(hi, lo), t| (hi.max_components(&t), lo.min_components(&t)))
        })
        .unzip()
}

/// Sum over criteria of `distance(v_ij, ideal_j)` for both ideals.
pub fn separations_fuzzy<T: Scalar>(
    weighted: &Grid<TriangularFuzzyNumber<T>>,
    plus: &[TriangularFuzzyNumber<T>],
    minus: &[TriangularFuzzyNumber<T>],
    distance: impl Fn(&TriangularFuzzyNumber<T>, &TriangularFuzzyNumber<T>) -> T,
) -> (Vec<T>, Vec<T>) {
    (0..weighted.rows())
        .map(|i| {
            let row = weighted.row(i);
            let dp = row.iter().zip(plus).fold(T::zero(), |acc, (v, a)| acc + distance(v, a));
            let dm = row.iter().zip(minus).fold(T::zero(), |acc, (v, a)| acc + distance(v, a));
            (dp, dm)
        })
        .unzip()
}

/// Full fuzzy TOPSIS ranking with the vertex distance.
pub fn rank_fuzzy<T: Scalar>(matrix: &DecisionMatrix<T>) -> Result<RankingResult<T>, TopsisError> {
    rank_fuzzy_with_distance(matrix, vertex_distance)
}

/// Fuzzy TOPSIS with a caller-supplied distance between fuzzy numbers.
pub fn rank_fuzzy_with_distance<T: Scalar>(
    matrix: &DecisionMatrix<T>,
    distance: impl Fn(&TriangularFuzzyNumber<T>, &TriangularFuzzyNumber<T>) -> T,
) -> Result<RankingResult<T>, TopsisError> {
    let resolved = matrix.resolve_fuzzy();
    let keep = varying_columns(&resolved);
    let resolved = resolved.select_columns(&keep);
    let criteria: Vec<Criterion> = keep.iter().map(|&j| matrix.criteria()[j].clone()).collect();

    let normalized = normalize_fuzzy_grid(&resolved, &criteria)?;
    let weighted = weighted_matrix_fuzzy(&normalized, &fuzzy_weights::<T>(&criteria))?;
    let (plus, minus) = ideal_solutions_fuzzy(&weighted);
    let (d_plus, d_minus) = separations_fuzzy(&weighted, &plus, &minus, distance);
    closeness_ranking(matrix.alternatives(), &d_plus, &d_minus)
}
