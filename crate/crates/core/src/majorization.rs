//! The probability majorization lattice.
//!
//! A [`ProbVector`] is kept in canonical (nonincreasing) order from the moment
//! it is built, so equality of vectors is equality of the lattice elements.
//! Vectors of different lengths are compared by zero-padding the shorter one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on partial-sum comparisons.
pub const PARTIAL_SUM_TOL: f64 = 1e-12;
/// Tolerance on declared totals.
pub const TOTAL_TOL: f64 = 1e-9;
const NEGATIVE_CLAMP: f64 = -1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    components: Vec<f64>,
    total: f64,
}

impl ProbVector {
    /// A probability vector summing to one.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_total(values, 1.0)
    }

    /// A nonnegative vector with the given declared sum.
    pub fn with_total(mut values: Vec<f64>, total: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("empty probability vector"));
        }
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(Error::validation("non-finite component"));
            }
            if *v < NEGATIVE_CLAMP {
                return Err(Error::validation(format!("negative component {v}")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - total).abs() > TOTAL_TOL {
            return Err(Error::validation(format!(
                "components sum to {sum}, declared total {total}"
            )));
        }
        // Stable sort keeps equal components in input order.
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(ProbVector {
            components: values,
            total,
        })
    }

    /// Takes the total from the data itself.
    pub fn from_weights(values: Vec<f64>) -> Result<Self> {
        let sum = values.iter().sum();
        Self::with_total(values, sum)
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Sum of the `k` largest components.
    pub fn top_k_sum(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.len() {
            return Err(Error::out_of_range("k", k, 1, self.len()));
        }
        Ok(self.components[..k].iter().sum())
    }

    /// Prefix sums padded with the total up to `len` entries.
    fn partial_sums(&self, len: usize) -> Vec<f64> {
        let mut acc = 0.0;
        (0..len)
            .map(|i| {
                acc += self.components.get(i).copied().unwrap_or(0.0);
                acc
            })
            .collect()
    }
}

fn check_totals<'a>(vs: impl IntoIterator<Item = &'a ProbVector>) -> Result<f64> {
    let mut it = vs.into_iter();
    let first = it.next().ok_or_else(|| Error::validation("empty set of vectors"))?;
    for v in it {
        if (v.total - first.total).abs() > TOTAL_TOL {
            return Err(Error::validation(format!(
                "unequal totals {} and {}",
                first.total, v.total
            )));
        }
    }
    Ok(first.total)
}

/// True iff `q ≺ p`, i.e. every top-k partial sum of `q` is at most that of `p`.
pub fn majorizes(p: &ProbVector, q: &ProbVector) -> Result<bool> {
    check_totals([p, q])?;
    let n = p.len().max(q.len());
    let sp = p.partial_sums(n);
    let sq = q.partial_sums(n);
    Ok(sp.iter().zip(&sq).all(|(a, b)| *b <= *a + PARTIAL_SUM_TOL))
}

pub fn top_k_sum(p: &ProbVector, k: usize) -> Result<f64> {
    p.top_k_sum(k)
}

/// Disjoint blocks covering `0..size`. Product grids `d_a x d_b` are
/// flattened row-major: cell `(i, j)` has flat index `i * d_b + j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    size: usize,
    grid: Option<(usize, usize)>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, size: usize) -> Result<Self> {
        let mut seen = vec![false; size];
        for block in &blocks {
            for &i in block {
                if i >= size {
                    return Err(Error::validation(format!("partition index {i} outside 0..{size}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::validation(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!("partition does not cover index {missing}")));
        }
        Ok(Partition {
            blocks,
            size,
            grid: None,
        })
    }

    /// Builds a partition of the `rows x cols` grid from blocks of cells.
    pub fn on_grid(blocks: Vec<Vec<(usize, usize)>>, rows: usize, cols: usize) -> Result<Self> {
        if blocks.iter().flatten().any(|&(i, j)| i >= rows || j >= cols) {
            return Err(Error::validation("cell outside the grid"));
        }
        let flat = blocks
            .into_iter()
            .map(|b| b.into_iter().map(|(i, j)| i * cols + j).collect())
            .collect();
        let mut part = Partition::new(flat, rows * cols)?;
        part.grid = Some((rows, cols));
        Ok(part)
    }

    /// One singleton block per index.
    pub fn identity(size: usize) -> Self {
        Partition {
            blocks: (0..size).map(|i| vec![i]).collect(),
            size,
            grid: None,
        }
    }

    /// A single block holding everything.
    pub fn full(size: usize) -> Self {
        Partition {
            blocks: vec![(0..size).collect()],
            size,
            grid: None,
        }
    }

    /// The shifted-diagonal partition of the `d x d` outcome grid: block `k`
    /// (zero-based) holds the cells `(i, (i + k) mod d)`, so block 0 is the
    /// diagonal.
    pub fn cyclic_diagonal(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::out_of_range("d", d, 2, usize::MAX));
        }
        let blocks = (0..d).map(|k| (0..d).map(|i| (i, (i + k) % d)).collect()).collect();
        Partition::on_grid(blocks, d, d)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Cells of block `k` as grid coordinates, for grid partitions.
    pub fn cells(&self, k: usize) -> Option<Vec<(usize, usize)>> {
        let (_, cols) = self.grid?;
        let block = self.blocks.get(k)?;
        Some(block.iter().map(|&f| (f / cols, f % cols)).collect())
    }
}

/// Block sums of an indexed (unsorted) distribution.
pub fn aggregate_raw(weights: &[f64], part: &Partition) -> Result<Vec<f64>> {
    if weights.len() != part.size {
        return Err(Error::DimensionMismatch {
            expected: part.size,
            found: weights.len(),
        });
    }
    Ok(part
        .blocks
        .iter()
        .map(|b| b.iter().map(|&i| weights[i]).sum())
        .collect())
}

/// Aggregation of an indexed distribution under a partition, in canonical order.
pub fn aggregate(weights: &[f64], part: &Partition) -> Result<ProbVector> {
    ProbVector::from_weights(aggregate_raw(weights, part)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    Tensor,
    DirectSum,
    VectorSum,
}

pub fn combine(p: &ProbVector, q: &ProbVector, op: CombineOp) -> Result<ProbVector> {
    match op {
        CombineOp::Tensor => {
            let values = p
                .components
                .iter()
                .flat_map(|a| q.components.iter().map(move |b| a * b))
                .collect();
            ProbVector::with_total(values, p.total * q.total)
        }
        CombineOp::DirectSum => {
            let values = p.components.iter().chain(&q.components).copied().collect();
            ProbVector::with_total(values, p.total + q.total)
        }
        CombineOp::VectorSum => {
            if p.len() != q.len() {
                return Err(Error::DimensionMismatch {
                    expected: p.len(),
                    found: q.len(),
                });
            }
            let values = p.components.iter().zip(&q.components).map(|(a, b)| a + b).collect();
            ProbVector::with_total(values, p.total + q.total)
        }
    }
}

/// Pool-adjacent-violators on increments: the result is nonincreasing and
/// its prefix sums form the least concave majorant of the input's.
pub(crate) fn flatten_increments(increments: &[f64]) -> Vec<f64> {
    // Each pool is (sum, count).
    let mut pools: Vec<(f64, usize)> = Vec::with_capacity(increments.len());
    for &x in increments {
        pools.push((x, 1));
        while pools.len() >= 2 {
            let (s2, c2) = pools[pools.len() - 1];
            let (s1, c1) = pools[pools.len() - 2];
            if s1 / c1 as f64 >= s2 / c2 as f64 {
                break;
            }
            pools.pop();
            *pools.last_mut().unwrap() = (s1 + s2, c1 + c2);
        }
    }
    pools
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c))
        .collect()
}

fn from_partial_sums(sums: &[f64], total: f64) -> Result<ProbVector> {
    let mut prev = 0.0;
    let increments: Vec<f64> = sums
        .iter()
        .map(|&s| {
            let inc = s - prev;
            prev = s;
            inc
        })
        .collect();
    ProbVector::with_total(flatten_increments(&increments), total)
}

/// Least upper bound under majorization.
pub fn join(vs: &[ProbVector]) -> Result<ProbVector> {
    let total = check_totals(vs)?;
    let n = vs.iter().map(ProbVector::len).max().unwrap_or(0);
    let mut envelope = vec![f64::NEG_INFINITY; n];
    for v in vs {
        for (e, s) in envelope.iter_mut().zip(v.partial_sums(n)) {
            *e = e.max(s);
        }
    }
    from_partial_sums(&envelope, total)
}

/// Greatest lower bound under majorization.
pub fn meet(vs: &[ProbVector]) -> Result<ProbVector> {
    let total = check_totals(vs)?;
    let n = vs.iter().map(ProbVector::len).max().unwrap_or(0);
    let mut envelope = vec![f64::INFINITY; n];
    for v in vs {
        for (e, s) in envelope.iter_mut().zip(v.partial_sums(n)) {
            *e = e.min(s);
        }
    }
    // A pointwise minimum of concave sequences is concave; flattening is a no-op
    // up to rounding.
    from_partial_sums(&envelope, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn close(a: &ProbVector, b: &[f64]) -> bool {
        a.components().len() == b.len() && a.components().iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn comparison_examples() {
        assert!(majorizes(&pv(&[1.0, 0.0]), &pv(&[0.5, 0.5])).unwrap());
        let p = pv(&[0.6, 0.3, 0.1]);
        assert!(majorizes(&p, &p).unwrap());
        let a = pv(&[0.45, 0.45, 0.1]);
        let b = pv(&[0.5, 0.3, 0.2]);
        assert!(!majorizes(&a, &b).unwrap());
        assert!(!majorizes(&b, &a).unwrap());
    }

    #[test]
    fn unequal_totals_rejected() {
        let p = pv(&[0.5, 0.5]);
        let q = ProbVector::with_total(vec![1.0, 1.0], 2.0).unwrap();
        assert!(majorizes(&p, &q).is_err());
        assert!(join(&[p, q]).is_err());
    }

    #[test]
    fn construction_sorts_and_clamps() {
        let p = ProbVector::new(vec![0.2, -1e-13, 0.8]).unwrap();
        assert_eq!(p.components(), &[0.8, 0.2, 0.0]);
        assert!(ProbVector::new(vec![0.5, 0.6, -0.1]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn top_k() {
        let p = pv(&[0.6, 0.3, 0.1]);
        assert!((p.top_k_sum(2).unwrap() - 0.9).abs() < 1e-15);
        assert!((p.top_k_sum(3).unwrap() - 1.0).abs() < 1e-15);
        assert!(p.top_k_sum(0).is_err());
        assert!(p.top_k_sum(4).is_err());
        let u = pv(&[1.0 / 3.0; 3]);
        assert!((u.top_k_sum(1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn aggregation_examples() {
        let raw = [0.1, 0.4, 0.2, 0.3];
        let id = aggregate(&raw, &Partition::identity(4)).unwrap();
        assert_eq!(id, ProbVector::new(raw.to_vec()).unwrap());

        let product = [0.5625, 0.1875, 0.1875, 0.0625];
        let part = Partition::cyclic_diagonal(2).unwrap();
        let agg = aggregate(&product, &part).unwrap();
        assert!(close(&agg, &[0.625, 0.375]));

        let merged = aggregate(&raw, &Partition::full(4)).unwrap();
        assert!(close(&merged, &[1.0]));
        assert!(aggregate(&raw, &Partition::identity(3)).is_err());
    }

    #[test]
    fn cyclic_partition_shape() {
        let p2 = Partition::cyclic_diagonal(2).unwrap();
        assert_eq!(p2.cells(0).unwrap(), vec![(0, 0), (1, 1)]);
        assert_eq!(p2.cells(1).unwrap(), vec![(0, 1), (1, 0)]);
        let p3 = Partition::cyclic_diagonal(3).unwrap();
        assert_eq!(p3.cells(1).unwrap(), vec![(0, 1), (1, 2), (2, 0)]);
        for d in 2..9 {
            let p = Partition::cyclic_diagonal(d).unwrap();
            assert_eq!(p.blocks().len(), d);
            assert!(p.blocks().iter().all(|b| b.len() == d));
            assert_eq!(p.size(), d * d);
        }
        assert!(Partition::cyclic_diagonal(1).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0, 1], vec![1]], 2).is_err());
        assert!(Partition::new(vec![vec![0]], 2).is_err());
        assert!(Partition::new(vec![vec![0, 2]], 2).is_err());
    }

    #[test]
    fn combine_examples() {
        let q = pv(&[0.7, 0.2, 0.1]);
        let t = combine(&pv(&[1.0, 0.0]), &q, CombineOp::Tensor).unwrap();
        assert!(close(&t, &[0.7, 0.2, 0.1, 0.0, 0.0, 0.0]));

        let s = combine(&pv(&[0.6, 0.4]), &pv(&[0.7, 0.3]), CombineOp::DirectSum).unwrap();
        assert!(close(&s, &[0.7, 0.6, 0.4, 0.3]));
        assert!((s.total() - 2.0).abs() < 1e-15);

        let p = pv(&[0.75, 0.25]);
        let tt = combine(&p, &p, CombineOp::Tensor).unwrap();
        assert!(close(&tt, &[0.5625, 0.1875, 0.1875, 0.0625]));

        assert!(combine(&p, &q, CombineOp::VectorSum).is_err());
        let v = combine(&p, &pv(&[0.5, 0.5]), CombineOp::VectorSum).unwrap();
        assert!(close(&v, &[1.25, 0.75]));
    }

    #[test]
    fn join_meet_examples() {
        let a = pv(&[0.6, 0.4]);
        let b = pv(&[0.5, 0.5]);
        assert!(close(&join(&[a.clone(), b.clone()]).unwrap(), &[0.6, 0.4]));
        assert!(close(&meet(&[a, b]).unwrap(), &[0.5, 0.5]));

        let x = pv(&[0.55, 0.25, 0.2]);
        let y = pv(&[0.5, 0.4, 0.1]);
        assert!(close(&join(&[x.clone(), y.clone()]).unwrap(), &[0.55, 0.35, 0.1]));
        assert!(close(&meet(&[x, y]).unwrap(), &[0.5, 0.3, 0.2]));
        assert!(join(&[]).is_err());
    }

    #[test]
    fn join_flattens_nonconcave_envelope() {
        // Envelope of partial sums (0.6, 0.7, 1.0) has a convex kink.
        let x = pv(&[0.6, 0.1, 0.1, 0.1, 0.1]);
        let y = pv(&[0.35, 0.35, 0.3, 0.0, 0.0]);
        let j = join(&[x.clone(), y.clone()]).unwrap();
        assert!(majorizes(&j, &x).unwrap());
        assert!(majorizes(&j, &y).unwrap());
        let w = j.components();
        assert!(w.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn flatten_pools_runs() {
        let f = flatten_increments(&[1.0, 0.2, 0.6, 0.2, 0.0]);
        let expected = [1.0, 0.4, 0.4, 0.2, 0.0];
        assert!(f.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    fn prob_strategy(len: usize) -> impl Strategy<Value = ProbVector> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| ProbVector::new(v.iter().map(|x| x / s).collect()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn majorization_is_a_partial_order(a in prob_strategy(4), b in prob_strategy(4), c in prob_strategy(4)) {
            prop_assert!(majorizes(&a, &a).unwrap());
            if majorizes(&a, &b).unwrap() && majorizes(&b, &a).unwrap() {
                for (x, y) in a.components().iter().zip(b.components()) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
            let (lo, mid, hi) = (meet(&[a.clone(), b.clone(), c.clone()]).unwrap(), a.clone(), join(&[a.clone(), b, c]).unwrap());
            prop_assert!(majorizes(&mid, &lo).unwrap());
            prop_assert!(majorizes(&hi, &mid).unwrap());
            prop_assert!(majorizes(&hi, &lo).unwrap());
        }

        #[test]
        fn join_meet_absorb(a in prob_strategy(5), b in prob_strategy(5)) {
            let j = join(&[a.clone(), b.clone()]).unwrap();
            let back = meet(&[a.clone(), j]).unwrap();
            for (x, y) in back.components().iter().zip(a.components()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
