//! Independent reference evaluators and seeded case generators shared by the integration and
//! acceptance tests. Nothing here calls into the ranking code under test.

#![allow(dead_code, clippy::needless_range_loop)]

#[path = "properties.rs"]
pub mod properties;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmtopsis::fuzzy::LinguisticRank;
use vmtopsis::topsis::{Cell, Criterion, DataKind, DecisionMatrix, Direction};
use vmtopsis::TriangularFuzzyNumber;

/// Printed (m, l, r) rows of the membership table, VL through VH, decoded as (m - l, m, m + r).
pub const MEMBERSHIP_ROWS: [(f64, f64, f64); 7] = [
    (30.0, 0.0, 10.0),
    (40.0, 10.0, 10.0),
    (50.0, 10.0, 10.0),
    (60.0, 10.0, 10.0),
    (70.0, 10.0, 10.0),
    (80.0, 10.0, 10.0),
    (90.0, 10.0, 0.0),
];

pub const NUMBERS: [f64; 7] = [1.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0];

pub fn decoded(level: usize) -> [f64; 3] {
    let (m, l, r) = MEMBERSHIP_ROWS[level];
    [m - l, m, m + r]
}

/// One randomly generated case in a representation the reference evaluators consume directly.
#[derive(Debug, Clone)]
pub struct RawCase {
    pub directions: Vec<Direction>,
    pub weights: Vec<usize>,
    /// Every cell as a triple; crisp cells repeat their value.
    pub cells: Vec<Vec<[f64; 3]>>,
    pub matrix: DecisionMatrix<f64>,
}

fn criteria_for(
    rng: &mut ChaCha8Rng,
    n: usize,
    kinds: &[DataKind],
) -> (Vec<Criterion>, Vec<Direction>, Vec<usize>) {
    let mut criteria = Vec::with_capacity(n);
    let mut dirs = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let dir = if rng.gen_bool(0.5) { Direction::Benefit } else { Direction::Cost };
        let w = rng.gen_range(0..7);
        let kind = kinds[rng.gen_range(0..kinds.len())];
        criteria.push(Criterion::new(format!("c{j}"), dir, LinguisticRank::from_index(w).unwrap(), kind));
        dirs.push(dir);
        weights.push(w);
    }
    (criteria, dirs, weights)
}

/// Crisp case: `m` alternatives, `n` criteria mixing numeric and linguistic columns.
pub fn crisp_case(seed: u64, m: usize, n: usize) -> RawCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (criteria, directions, weights) =
        criteria_for(&mut rng, n, &[DataKind::Crisp, DataKind::Crisp, DataKind::Linguistic]);
    let mut rows = Vec::with_capacity(m);
    let mut cells = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = Vec::with_capacity(n);
        let mut raw = Vec::with_capacity(n);
        for c in &criteria {
            match c.data_kind {
                DataKind::Linguistic => {
                    let k = rng.gen_range(0..7);
                    row.push(Cell::Linguistic(LinguisticRank::from_index(k).unwrap()));
                    raw.push([NUMBERS[k]; 3]);
                }
                _ => {
                    let x = rng.gen_range(0.1..100.0);
                    row.push(Cell::Crisp(x));
                    raw.push([x; 3]);
                }
            }
        }
        rows.push(row);
        cells.push(raw);
    }
    let names = (0..m).map(|i| format!("a{i}")).collect();
    RawCase { directions, weights, cells, matrix: DecisionMatrix::new(names, criteria, rows).unwrap() }
}

/// Fuzzy case mixing triangular, linguistic and crisp columns; all lower bounds positive.
pub fn fuzzy_case(seed: u64, m: usize, n: usize) -> RawCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (criteria, directions, weights) =
        criteria_for(&mut rng, n, &[DataKind::Fuzzy, DataKind::Fuzzy, DataKind::Linguistic, DataKind::Crisp]);
    let mut rows = Vec::with_capacity(m);
    let mut cells = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = Vec::with_capacity(n);
        let mut raw = Vec::with_capacity(n);
        for c in &criteria {
            match c.data_kind {
                DataKind::Fuzzy => {
                    let a = rng.gen_range(0.1..50.0);
                    let b = a + rng.gen_range(0.0..20.0);
                    let cc = b + rng.gen_range(0.0..20.0);
                    row.push(Cell::Fuzzy(TriangularFuzzyNumber::new(a, b, cc).unwrap()));
                    raw.push([a, b, cc]);
                }
                DataKind::Linguistic => {
                    let k = rng.gen_range(0..7);
                    row.push(Cell::Linguistic(LinguisticRank::from_index(k).unwrap()));
                    raw.push(decoded(k));
                }
                DataKind::Crisp => {
                    let x = rng.gen_range(0.1..100.0);
                    row.push(Cell::Crisp(x));
                    raw.push([x; 3]);
                }
            }
        }
        rows.push(row);
        cells.push(raw);
    }
    let names = (0..m).map(|i| format!("a{i}")).collect();
    RawCase { directions, weights, cells, matrix: DecisionMatrix::new(names, criteria, rows).unwrap() }
}

/// Crisp TOPSIS written out step by step: vector normalization, weights from the 1-9 scale
/// divided by their sum, ideals by direction, Euclidean separations, closeness.
pub fn naive_crisp(case: &RawCase) -> Vec<f64> {
    let m = case.cells.len();
    let n = case.directions.len();
    let x: Vec<Vec<f64>> = case.cells.iter().map(|r| r.iter().map(|c| c[1]).collect()).collect();

    let mut norms = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..m {
            s += x[i][j] * x[i][j];
        }
        norms[j] = s.sqrt();
    }
    let total: f64 = case.weights.iter().map(|&w| NUMBERS[w]).sum();
    let w: Vec<f64> = case.weights.iter().map(|&k| NUMBERS[k] / total).collect();

    let mut v = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..n {
            v[i][j] = w[j] * x[i][j] / norms[j];
        }
    }
    let mut best = vec![0.0; n];
    let mut worst = vec![0.0; n];
    for j in 0..n {
        let col: Vec<f64> = (0..m).map(|i| v[i][j]).collect();
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        match case.directions[j] {
            Direction::Benefit => {
                best[j] = hi;
                worst[j] = lo;
            }
            Direction::Cost => {
                best[j] = lo;
                worst[j] = hi;
            }
        }
    }
    (0..m)
        .map(|i| {
            let mut sp = 0.0;
            let mut sm = 0.0;
            for j in 0..n {
                sp += (v[i][j] - best[j]).powi(2);
                sm += (v[i][j] - worst[j]).powi(2);
            }
            let (sp, sm) = (sp.sqrt(), sm.sqrt());
            if sp + sm == 0.0 {
                0.5
            } else {
                sm / (sp + sm)
            }
        })
        .collect()
}

/// Fuzzy TOPSIS written out step by step. `distance_factor` multiplies the squared sum inside the
/// vertex distance root; 1 is the implemented metric, 1/3 the conventional variant.
pub fn naive_fuzzy(case: &RawCase, distance_factor: f64) -> Vec<f64> {
    let m = case.cells.len();
    let n = case.directions.len();
    let mut r = vec![vec![[0.0; 3]; n]; m];
    for j in 0..n {
        match case.directions[j] {
            Direction::Benefit => {
                let c_max = (0..m).map(|i| case.cells[i][j][2]).fold(f64::NEG_INFINITY, f64::max);
                for i in 0..m {
                    let [a, b, c] = case.cells[i][j];
                    r[i][j] = [a / c_max, b / c_max, c / c_max];
                }
            }
            Direction::Cost => {
                let a_min = (0..m).map(|i| case.cells[i][j][0]).fold(f64::INFINITY, f64::min);
                for i in 0..m {
                    let [a, b, c] = case.cells[i][j];
                    r[i][j] = [a_min / c, a_min / b, a_min / a];
                }
            }
        }
    }
    let w: Vec<[f64; 3]> = case
        .weights
        .iter()
        .map(|&k| {
            let t = decoded(k);
            [t[0] / 100.0, t[1] / 100.0, t[2] / 100.0]
        })
        .collect();
    let mut v = vec![vec![[0.0; 3]; n]; m];
    for i in 0..m {
        for j in 0..n {
            for k in 0..3 {
                v[i][j][k] = r[i][j][k] * w[j][k];
            }
        }
    }
    let mut plus = vec![[f64::NEG_INFINITY; 3]; n];
    let mut minus = vec![[f64::INFINITY; 3]; n];
    for j in 0..n {
        for i in 0..m {
            for k in 0..3 {
                plus[j][k] = plus[j][k].max(v[i][j][k]);
                minus[j][k] = minus[j][k].min(v[i][j][k]);
            }
        }
    }
    let dist = |x: [f64; 3], y: [f64; 3]| {
        let s: f64 = (0..3).map(|k| (x[k] - y[k]).powi(2)).sum();
        (distance_factor * s).sqrt()
    };
    (0..m)
        .map(|i| {
            let dp: f64 = (0..n).map(|j| dist(v[i][j], plus[j])).sum();
            let dm: f64 = (0..n).map(|j| dist(v[i][j], minus[j])).sum();
            if dp + dm == 0.0 {
                0.5
            } else {
                dm / (dp + dm)
            }
        })
        .collect()
}

/// Indices sorted by descending score; equal scores keep input order.
pub fn stable_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    idx
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sandpiper volume written directly from its definition.
pub fn naive_volume(cpu: f64, net: f64, mem: f64) -> f64 {
    1.0 / ((1.0 - cpu) * (1.0 - net) * (1.0 - mem))
}
