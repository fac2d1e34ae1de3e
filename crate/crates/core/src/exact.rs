//! Exact rank and integer kernel of sparse integer matrices by fraction-free
//! Gauss-Jordan elimination.
//!
//! Rows are kept primitive (divided by the gcd of their entries) after every
//! update, so all arithmetic stays in the integers without the coefficient
//! growth of plain Bareiss elimination on sparse input.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

type Row = Vec<(u32, BigInt)>;

/// Row-sparse integer matrix.
#[derive(Clone, Debug, Default)]
pub struct IntegerMatrix {
    cols: usize,
    rows: Vec<Vec<(u32, i64)>>,
}

impl IntegerMatrix {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    /// Append a row given as `(column, value)` pairs; zero values are dropped
    /// and duplicate columns summed.
    pub fn push_row(&mut self, mut entries: Vec<(u32, i64)>) {
        entries.sort_unstable_by_key(|e| e.0);
        let mut row: Vec<(u32, i64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            assert!((c as usize) < self.cols, "column {c} out of range");
            match row.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => row.push((c, v)),
            }
        }
        row.retain(|e| e.1 != 0);
        self.rows.push(row);
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[(u32, i64)] {
        &self.rows[r]
    }

    /// `M v` in exact arithmetic.
    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.cols);
        self.rows
            .iter()
            .map(|row| row.iter().fold(BigInt::zero(), |acc, &(c, x)| acc + &v[c as usize] * x))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactKernel {
    pub rank: usize,
    pub nullity: usize,
    /// Primitive integer vectors spanning the kernel over the rationals.
    pub basis: Option<Vec<Vec<BigInt>>>,
}

fn make_primitive(row: &mut Row) {
    let mut g = BigInt::zero();
    for (_, v) in row.iter() {
        g = g.gcd(v);
        if g.is_one() {
            return;
        }
    }
    if !g.is_zero() && !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v /= &g;
        }
    }
}

fn entry(row: &Row, col: u32) -> Option<&BigInt> {
    row.binary_search_by_key(&col, |e| e.0).ok().map(|i| &row[i].1)
}

/// `p * target - a * pivot`, where `a` is the entry of `target` at the pivot
/// column and `p` the pivot value. Both factors are first divided by their gcd.
fn eliminate(target: &Row, pivot: &Row, col: u32) -> Row {
    let p = entry(pivot, col).expect("pivot entry present");
    let a = entry(target, col).expect("target has entry in pivot column");
    let g = p.gcd(a);
    let (p, a) = (p / &g, a / &g);
    let mut out = Vec::with_capacity(target.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < pivot.len() {
        let ci = target.get(i).map(|e| e.0).unwrap_or(u32::MAX);
        let cj = pivot.get(j).map(|e| e.0).unwrap_or(u32::MAX);
        let (c, v) = if ci < cj {
            i += 1;
            (ci, &target[i - 1].1 * &p)
        } else if cj < ci {
            j += 1;
            (cj, -(&pivot[j - 1].1 * &a))
        } else {
            i += 1;
            j += 1;
            (ci, &target[i - 1].1 * &p - &pivot[j - 1].1 * &a)
        };
        if !v.is_zero() {
            out.push((c, v));
        }
    }
    let mut out = out;
    make_primitive(&mut out);
    out
}

/// Rank and (optionally) a primitive integer kernel basis of `m`.
pub fn kernel(m: &IntegerMatrix, with_basis: bool) -> ExactKernel {
    let n = m.cols();
    let mut rows: Vec<Row> = m
        .rows
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| {
            let mut row: Row = r.iter().map(|&(c, v)| (c, BigInt::from(v))).collect();
            make_primitive(&mut row);
            row
        })
        .collect();

    // Column -> rows currently holding a nonzero in that column.
    let mut occupancy: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, row) in rows.iter().enumerate() {
        for &(c, _) in row {
            occupancy[c as usize].push(r);
        }
    }
    let mut is_pivot_row = vec![false; rows.len()];
    let mut pivots: Vec<(u32, usize)> = Vec::new();

    for col in 0..n as u32 {
        let occ = &mut occupancy[col as usize];
        occ.sort_unstable();
        occ.dedup();
        occ.retain(|&r| entry(&rows[r], col).is_some());
        // Among unused rows touching this column take the sparsest one with
        // the smallest pivot magnitude.
        let candidate = occupancy[col as usize]
            .iter()
            .copied()
            .filter(|&r| !is_pivot_row[r])
            .min_by(|&a, &b| {
                rows[a].len().cmp(&rows[b].len()).then_with(|| {
                    let pa = entry(&rows[a], col).unwrap().abs();
                    let pb = entry(&rows[b], col).unwrap().abs();
                    pa.cmp(&pb)
                })
            });
        let Some(p) = candidate else { continue };
        is_pivot_row[p] = true;
        pivots.push((col, p));
        let targets: Vec<usize> = occupancy[col as usize].iter().copied().filter(|&r| r != p).collect();
        let pivot_row = rows[p].clone();
        for t in targets {
            let old_cols: Vec<u32> = rows[t].iter().map(|e| e.0).collect();
            rows[t] = eliminate(&rows[t], &pivot_row, col);
            // Record fill-in; stale entries are pruned lazily above.
            for &(c, _) in &rows[t] {
                if old_cols.binary_search(&c).is_err() {
                    occupancy[c as usize].push(t);
                }
            }
        }
        occupancy[col as usize] = vec![p];
    }

    let rank = pivots.len();
    let nullity = n - rank;
    let basis = with_basis.then(|| {
        let pivot_cols: Vec<bool> = {
            let mut v = vec![false; n];
            for &(c, _) in &pivots {
                v[c as usize] = true;
            }
            v
        };
        (0..n as u32)
            .filter(|&f| !pivot_cols[f as usize])
            .map(|f| {
                // Every pivot row reads d * x_p + sum_free a_f x_f = 0.
                let involved: Vec<(u32, &BigInt, &BigInt)> = pivots
                    .iter()
                    .filter_map(|&(c, r)| entry(&rows[r], f).map(|a| (c, entry(&rows[r], c).unwrap(), a)))
                    .collect();
                let scale = involved.iter().fold(BigInt::one(), |acc, &(_, d, _)| acc.lcm(d));
                let mut v = vec![BigInt::zero(); n];
                v[f as usize] = scale.clone();
                for (c, d, a) in involved {
                    v[c as usize] = -(a * (&scale / d));
                }
                let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
                if !g.is_one() {
                    for x in &mut v {
                        *x /= &g;
                    }
                }
                v
            })
            .collect()
    });
    ExactKernel { rank, nullity, basis }
}

/// Mersenne prime used for modular rank computations.
pub const MODULUS: u64 = (1 << 61) - 1;

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn reduce(v: i64, p: u64) -> u64 {
    v.rem_euclid(p as i64) as u64
}

/// Rank of `m` over the integers modulo the prime `p`. This never exceeds
/// the rank over the rationals.
pub fn rank_mod_p(m: &IntegerMatrix, p: u64) -> usize {
    let n = m.cols();
    let mut rows: Vec<Vec<(u32, u64)>> = m
        .rows
        .iter()
        .map(|r| r.iter().map(|&(c, v)| (c, reduce(v, p))).filter(|e| e.1 != 0).collect())
        .filter(|r: &Vec<(u32, u64)>| !r.is_empty())
        .collect();
    // Bucket rows by leading column; eliminate column by column.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in rows.iter().enumerate() {
        buckets[r[0].0 as usize].push(i);
    }
    let mut rank = 0;
    for col in 0..n {
        let members = std::mem::take(&mut buckets[col]);
        let Some(&pivot) = members.iter().min_by_key(|&&r| rows[r].len()) else { continue };
        rank += 1;
        let inv = pow_mod(rows[pivot][0].1, p - 2, p);
        let pivot_row: Vec<(u32, u64)> = rows[pivot].iter().map(|&(c, v)| (c, mul_mod(v, inv, p))).collect();
        for r in members.into_iter().filter(|&r| r != pivot) {
            let factor = rows[r][0].1;
            let target = std::mem::take(&mut rows[r]);
            let mut out = Vec::with_capacity(target.len() + pivot_row.len());
            let (mut i, mut j) = (0, 0);
            while i < target.len() || j < pivot_row.len() {
                let ci = target.get(i).map(|e| e.0).unwrap_or(u32::MAX);
                let cj = pivot_row.get(j).map(|e| e.0).unwrap_or(u32::MAX);
                let (c, v) = if ci < cj {
                    i += 1;
                    (ci, target[i - 1].1)
                } else if cj < ci {
                    j += 1;
                    (cj, p - mul_mod(pivot_row[j - 1].1, factor, p))
                } else {
                    i += 1;
                    j += 1;
                    let sub = mul_mod(pivot_row[j - 1].1, factor, p);
                    (ci, (target[i - 1].1 + p - sub) % p)
                };
                if v != 0 && v != p {
                    out.push((c, v));
                }
            }
            if let Some(&(lead, _)) = out.first() {
                buckets[lead as usize].push(r);
            }
            rows[r] = out;
        }
    }
    rank
}
