//! Analytic cost of incremental re-evaluation on extreme tree shapes.
//!
//! All costs are per instance (`n` factored out). A tree of depth `k` has
//! levels `0..=k`. Every closed form or bound has a direct-summation twin so
//! that the algebra can be checked instead of trusted.
//!
//! The `*_instrumented` functions give what an actual run measures on a
//! constructed tree with the stated instance distribution. They differ from
//! the printed formulas where those keep `n` instead of the instances that
//! actually pass through the stale node.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::inherit::Accounting;
use crate::scalar::Scalar;

/// Largest depth accepted by the table builders.
pub const MAX_DEPTH: u32 = 64;

#[derive(Debug, Error)]
pub enum CostModelError {
    #[error("depth range {k_min}..={k_max} is invalid (need {min} <= k_min <= k_max <= {MAX_DEPTH})")]
    BadRange { k_min: u32, k_max: u32, min: u32 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Shape {
    Complete,
    Linear,
    WeightedLinear,
}

impl Shape {
    pub fn min_depth(self) -> u32 {
        match self {
            Shape::Complete => 0,
            Shape::Linear | Shape::WeightedLinear => 1,
        }
    }
}

/// Which columns a cost table carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    Exact,
    Bound,
    Refined,
    All,
}

fn n<T: Scalar>(v: u32) -> T {
    T::from_count(v as u64)
}

fn frac<T: Scalar>(num: u32, den: u32) -> T {
    T::ratio(num as u64, den as u64)
}

fn need_linear(k: u32) {
    assert!(k >= 1, "linear trees need k >= 1, got {k}");
}

fn need_level(i: u32, k: u32) {
    assert!(1 <= i && i <= k, "level {i} outside 1..={k}");
}

// ---------------------------------------------------------------- complete

/// `(k+1)/(2^(k+1)−1)`.
pub fn r_complete<T: Scalar>(k: u32) -> T {
    n::<T>(k + 1) / (T::pow2(k + 1) - T::one())
}

/// Average over all nodes of `Cost_i/Cost_0 = 1/2^i`, level `i` being chosen
/// with probability `2^i/(2^(k+1)−1)`.
pub fn r_complete_sum<T: Scalar>(k: u32) -> T {
    let nodes = T::pow2(k + 1) - T::one();
    (0..=k).fold(T::zero(), |acc, i| acc + T::pow2(i) / nodes.clone() * (T::one() / T::pow2(i)))
}

/// Re-evaluation cost of a stale node at level `i` of a complete tree,
/// relative to `n`: `(k+1)/2^i` routing from the root, `(k−i+1)/2^i` when
/// routing starts at the stale node.
pub fn cost_complete<T: Scalar>(i: u32, k: u32, accounting: Accounting) -> T {
    assert!(i <= k, "level {i} outside 0..={k}");
    let per_instance = match accounting {
        Accounting::Pessimistic => k + 1,
        Accounting::Refined => k - i + 1,
    };
    n::<T>(per_instance) / T::pow2(i)
}

/// Closed form of the refined complete-tree ratio, `(k+2)/(2(2^(k+1)−1))`.
pub fn r_complete_refined<T: Scalar>(k: u32) -> T {
    n::<T>(k + 2) / (n::<T>(2) * (T::pow2(k + 1) - T::one()))
}

/// `Σ_i [2^i/(2^(k+1)−1)]·[(k−i+1)/(2^i(k+1))]`, summed term by term.
pub fn r_complete_refined_sum<T: Scalar>(k: u32) -> T {
    let nodes = T::pow2(k + 1) - T::one();
    (0..=k).fold(T::zero(), |acc, i| {
        let p = T::pow2(i) / nodes.clone();
        let c = n::<T>(k - i + 1) / (T::pow2(i) * n::<T>(k + 1));
        acc + p * c
    })
}

// ------------------------------------------------------------------ linear

/// `1 + k/(k+1) + k/2`.
pub fn cost0_linear<T: Scalar>(k: u32) -> T {
    need_linear(k);
    T::one() + frac::<T>(k, k + 1) + frac::<T>(k, 2)
}

/// Path-length enumeration over the `k+1` leaves, `1/(k+1)` of the
/// instances each: leaves at levels `1..=k` plus the second bottom leaf.
pub fn cost0_linear_sum<T: Scalar>(k: u32) -> T {
    need_linear(k);
    let share = frac::<T>(1, k + 1);
    let upper = (1..=k).fold(T::zero(), |acc, i| acc + n::<T>(i + 1) * share.clone());
    upper + n::<T>(k + 1) * share
}

/// `(i+1)/(k+1)`.
pub fn cost_leaf_linear<T: Scalar>(i: u32, k: u32) -> T {
    need_level(i, k);
    frac(i + 1, k + 1)
}

/// As printed: `[1 + (k−i)/(k−i+1) + (k−i)/2] + i(i+1)/(k+1)`.
pub fn cost_node_linear<T: Scalar>(i: u32, k: u32) -> T {
    cost_node_linear_refined::<T>(i, k) + frac::<T>(i * (i + 1), k + 1)
}

/// As printed for the refined accounting: `1 + (k−i)/(k−i+1) + (k−i)/2`.
pub fn cost_node_linear_refined<T: Scalar>(i: u32, k: u32) -> T {
    need_level(i, k);
    let d = k - i;
    T::one() + frac::<T>(d, d + 1) + frac::<T>(d, 2)
}

/// Fraction of instances below the non-leaf node at level `i`.
fn linear_coverage<T: Scalar>(i: u32, k: u32) -> T {
    frac(k - i + 1, k + 1)
}

/// Measured cost of re-evaluating the level-`i` leaf of a linear tree.
pub fn cost_leaf_linear_instrumented<T: Scalar>(i: u32, k: u32, accounting: Accounting) -> T {
    need_level(i, k);
    match accounting {
        Accounting::Pessimistic => frac(i + 1, k + 1),
        Accounting::Refined => frac(1, k + 1),
    }
}

/// Measured cost of re-evaluating the other node at level `i` (internal for
/// `i < k`, the second bottom leaf for `i = k`). The covered instances run
/// the subtree of depth `k−i`, plus `i` checks each when routed from the
/// root.
pub fn cost_node_linear_instrumented<T: Scalar>(i: u32, k: u32, accounting: Accounting) -> T {
    need_level(i, k);
    let below = if i == k { T::one() } else { cost0_linear::<T>(k - i) };
    let path = match accounting {
        Accounting::Pessimistic => n::<T>(i),
        Accounting::Refined => T::zero(),
    };
    linear_coverage::<T>(i, k) * (below + path)
}

/// Uniform average over the `2k+1` nodes given per-level leaf and node costs.
fn average_linear<T: Scalar>(k: u32, leaf: impl Fn(u32) -> T, node: impl Fn(u32) -> T, cost0: T) -> T {
    let leaves = (1..=k).fold(T::zero(), |acc, i| acc + leaf(i) / cost0.clone());
    let nodes = (1..=k).fold(T::zero(), |acc, i| acc + node(i) / cost0.clone());
    (T::one() + leaves + nodes) / n::<T>(2 * k + 1)
}

/// Direct summation over all nodes, printed leaf and node costs.
pub fn r_linear_exact<T: Scalar>(k: u32) -> T {
    average_linear(k, |i| cost_leaf_linear(i, k), |i| cost_node_linear(i, k), cost0_linear(k))
}

/// The printed refined node cost substituted into the same summation.
pub fn r_linear_refined_exact<T: Scalar>(k: u32) -> T {
    average_linear(k, |i| cost_leaf_linear(i, k), |i| cost_node_linear_refined(i, k), cost0_linear(k))
}

/// Ratio an instrumented run measures, averaged over all nodes.
pub fn r_linear_instrumented<T: Scalar>(k: u32, accounting: Accounting) -> T {
    average_linear(
        k,
        |i| cost_leaf_linear_instrumented(i, k, accounting),
        |i| cost_node_linear_instrumented(i, k, accounting),
        cost0_linear(k),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearEstimate<T> {
    /// Endpoint-average (trapezoid) estimate of the sum.
    pub trapezoid: T,
    /// The intermediate expression exactly as printed before the relaxation.
    pub middle: T,
    /// `(3k+1)/(4k+2)`.
    pub bound: T,
}

fn trapezoid<T: Scalar>(k: u32, leaf: impl Fn(u32) -> T, node: impl Fn(u32) -> T) -> T {
    let c0 = cost0_linear::<T>(k);
    let half_k = frac::<T>(k, 2);
    let w = frac::<T>(1, 2 * k + 1);
    w.clone()
        + w.clone() * ((leaf(1) + leaf(k)) / c0.clone() * half_k.clone())
        + w * ((node(1) + node(k)) / c0 * half_k)
}

pub fn r_linear_est<T: Scalar>(k: u32) -> LinearEstimate<T> {
    need_linear(k);
    let kk = |v: i64| T::from_i64(v).expect("small integer");
    let k_ = k as i64;
    let q = kk(k_ * k_ + 5 * k_ + 2);
    let w = frac::<T>(1, 2 * k + 1);
    let middle = w.clone()
        + w.clone() * kk(k_ * k_ + 3 * k_) / q.clone()
        + w * kk(3 * k_ * k_ * k_ + 8 * k_ * k_ - k_ - 2) / (kk(2) * q);
    LinearEstimate {
        trapezoid: trapezoid(k, |i| cost_leaf_linear(i, k), |i| cost_node_linear(i, k)),
        middle,
        bound: frac(3 * k + 1, 4 * k + 2),
    }
}

/// Trapezoid estimate with the refined node cost.
pub fn r_linear_refined_est<T: Scalar>(k: u32) -> T {
    trapezoid(k, |i| cost_leaf_linear(i, k), |i| cost_node_linear_refined(i, k))
}

/// `(k+5)/(4k+2)`.
pub fn r_linear_refined_bound<T: Scalar>(k: u32) -> T {
    need_linear(k);
    frac(k + 5, 4 * k + 2)
}

// --------------------------------------------------------- weighted linear

/// `(k+1)/2^k + Σ_{i=1..k} (i+1)/2^i`; the level-`i` leaf holds `1/2^i` of
/// the instances and the two bottom leaves `1/2^k` each.
pub fn cost0_weighted<T: Scalar>(k: u32) -> T {
    cost0_weighted_upto::<T>(k).pop().expect("non-empty")
}

/// `cost0_weighted(d)` for every `d` in `0..=k`, in one pass.
fn cost0_weighted_upto<T: Scalar>(k: u32) -> Vec<T> {
    let mut out = Vec::with_capacity(k as usize + 1);
    let mut partial = T::zero();
    let mut half_pow = T::one();
    out.push(T::one());
    for d in 1..=k {
        half_pow = half_pow / n::<T>(2);
        partial = partial + n::<T>(d + 1) * half_pow.clone();
        out.push(partial.clone() + n::<T>(d + 1) * half_pow.clone());
    }
    out
}

/// `(k+1)/2^k + k + 2`.
pub fn cost0_weighted_bound<T: Scalar>(k: u32) -> T {
    n::<T>(k + 1) / T::pow2(k) + n::<T>(k + 2)
}

/// As printed: `(k−i+1)/2^i`.
pub fn cost_leaf_weighted<T: Scalar>(i: u32, k: u32) -> T {
    need_level(i, k);
    n::<T>(k - i + 1) / T::pow2(i)
}

/// Exact left side of the printed node inequality: the full cost of a
/// weighted tree of depth `k−i`.
pub fn cost_node_weighted<T: Scalar>(i: u32, k: u32) -> T {
    need_level(i, k);
    cost0_weighted(k - i)
}

/// `(k−i+1)/2^(k−i) + k−i+2`.
pub fn cost_node_weighted_bound<T: Scalar>(i: u32, k: u32) -> T {
    need_level(i, k);
    cost0_weighted_bound(k - i)
}

/// Per-term bound for leaves, `(k−i+1)/(2^i(k+2))`.
pub fn leaf_ratio_weighted_bound<T: Scalar>(i: u32, k: u32) -> T {
    need_level(i, k);
    n::<T>(k - i + 1) / (T::pow2(i) * n::<T>(k + 2))
}

/// Per-term bound for nodes, `2(k−i+2)/(k+1)`.
pub fn node_ratio_weighted_bound<T: Scalar>(i: u32, k: u32) -> T {
    need_level(i, k);
    n::<T>(2 * (k - i + 2)) / n::<T>(k + 1)
}

/// Measured refined cost at level `i` of a weighted tree: the leaf costs one
/// class check per instance; the other node re-routes its `1/2^i` share
/// through a weighted subtree of depth `k−i`.
pub fn cost_weighted_instrumented<T: Scalar>(i: u32, k: u32, leaf: bool) -> T {
    need_level(i, k);
    let share = T::one() / T::pow2(i);
    if leaf || i == k {
        share
    } else {
        share * cost0_weighted(k - i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedLinear<T> {
    pub cost0_exact: T,
    pub cost0_bound: T,
    pub r_exact: T,
    pub r_bound: T,
}

pub fn weighted_linear<T: Scalar>(k: u32) -> WeightedLinear<T> {
    need_linear(k);
    let c0s = cost0_weighted_upto::<T>(k);
    let c0 = c0s[k as usize].clone();
    WeightedLinear {
        cost0_exact: c0.clone(),
        cost0_bound: cost0_weighted_bound(k),
        r_exact: average_linear(k, |i| cost_leaf_weighted(i, k), |i| c0s[(k - i) as usize].clone(), c0),
        r_bound: r_weighted_bound(k),
    }
}

/// `(k+5)/(2k+1)`.
pub fn r_weighted_bound<T: Scalar>(k: u32) -> T {
    need_linear(k);
    frac(k + 5, 2 * k + 1)
}

/// The bound chain before its last relaxation:
/// `(1 + k/(k+2) + k(k+3)/(k+1))/(2k+1)`.
pub fn r_weighted_chain<T: Scalar>(k: u32) -> T {
    need_linear(k);
    (T::one() + frac::<T>(k, k + 2) + frac::<T>(k * (k + 3), k + 1)) / n::<T>(2 * k + 1)
}

/// Sum of the per-term bounds, averaged over all nodes.
pub fn r_weighted_termwise<T: Scalar>(k: u32) -> T {
    need_linear(k);
    let leaves = (1..=k).fold(T::zero(), |a, i| a + leaf_ratio_weighted_bound::<T>(i, k));
    let nodes = (1..=k).fold(T::zero(), |a, i| a + node_ratio_weighted_bound::<T>(i, k));
    (T::one() + leaves + nodes) / n::<T>(2 * k + 1)
}

pub fn r_weighted_instrumented<T: Scalar>(k: u32) -> T {
    need_linear(k);
    let c0s = cost0_weighted_upto::<T>(k);
    average_linear(
        k,
        |i| T::one() / T::pow2(i),
        |i| if i == k { T::one() / T::pow2(i) } else { c0s[(k - i) as usize].clone() / T::pow2(i) },
        c0s[k as usize].clone(),
    )
}

// ------------------------------------------------------------------ tables

/// One row per depth, columns chosen by shape and variant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostTable<T> {
    pub columns: Vec<&'static str>,
    pub rows: Vec<(u32, Vec<T>)>,
}

impl<T: Scalar> CostTable<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CostModelError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k"];
        header.extend(&self.columns);
        w.write_record(&header)?;
        for (k, vals) in &self.rows {
            let mut rec = vec![k.to_string()];
            rec.extend(vals.iter().map(|v| format!("{:.12}", v.to_real())));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_range(k_min: u32, k_max: u32, min: u32) -> Result<(), CostModelError> {
    if k_min < min || k_min > k_max || k_max > MAX_DEPTH {
        return Err(CostModelError::BadRange { k_min, k_max, min });
    }
    Ok(())
}

type Column<T> = (&'static str, fn(u32) -> T);

fn columns<T: Scalar>(shape: Shape, variant: Variant) -> Vec<Column<T>> {
    let exact: Vec<Column<T>>;
    let bound: Vec<Column<T>>;
    let refined: Vec<Column<T>>;
    match shape {
        Shape::Complete => {
            exact = vec![("r_exact", r_complete_sum::<T>)];
            bound = vec![("r_closed", r_complete::<T>)];
            refined = vec![
                ("r_refined_exact", r_complete_refined_sum::<T>),
                ("r_refined_closed", r_complete_refined::<T>),
            ];
        }
        Shape::Linear => {
            exact = vec![
                ("r_exact", r_linear_exact::<T>),
                ("r_instrumented_pessimistic", |k| r_linear_instrumented::<T>(k, Accounting::Pessimistic)),
            ];
            bound = vec![
                ("r_trapezoid", |k| r_linear_est::<T>(k).trapezoid),
                ("r_middle", |k| r_linear_est::<T>(k).middle),
                ("r_bound", |k| r_linear_est::<T>(k).bound),
            ];
            refined = vec![
                ("r_refined_exact", r_linear_refined_exact::<T>),
                ("r_instrumented_refined", |k| r_linear_instrumented::<T>(k, Accounting::Refined)),
                ("r_refined_trapezoid", r_linear_refined_est::<T>),
                ("r_refined_bound", r_linear_refined_bound::<T>),
            ];
        }
        Shape::WeightedLinear => {
            exact = vec![
                ("cost0_exact", |k| weighted_linear::<T>(k).cost0_exact),
                ("r_exact", |k| weighted_linear::<T>(k).r_exact),
            ];
            bound = vec![
                ("cost0_bound", cost0_weighted_bound::<T>),
                ("r_termwise", r_weighted_termwise::<T>),
                ("r_chain", r_weighted_chain::<T>),
                ("r_bound", r_weighted_bound::<T>),
            ];
            refined = vec![("r_instrumented_refined", r_weighted_instrumented::<T>)];
        }
    }
    match variant {
        Variant::Exact => exact,
        Variant::Bound => bound,
        Variant::Refined => refined,
        Variant::All => exact.into_iter().chain(bound).chain(refined).collect(),
    }
}

pub fn cost_table<T: Scalar>(shape: Shape, variant: Variant, k_min: u32, k_max: u32) -> Result<CostTable<T>, CostModelError> {
    check_range(k_min, k_max, shape.min_depth())?;
    let cols = columns::<T>(shape, variant);
    Ok(CostTable {
        columns: cols.iter().map(|(name, _)| *name).collect(),
        rows: (k_min..=k_max).map(|k| (k, cols.iter().map(|(_, f)| f(k)).collect())).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig5Row<T> {
    pub k: u32,
    pub complete_savings: T,
    pub linear_savings: T,
}

/// Saved fraction of checks under the refined accounting, per depth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCurve<T> {
    pub rows: Vec<Fig5Row<T>>,
}

impl<T: Scalar> RatioCurve<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CostModelError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "complete_refined_savings", "linear_refined_savings"])?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                format!("{:.12}", r.complete_savings.to_real()),
                format!("{:.12}", r.linear_savings.to_real()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn fig5_table<T: Scalar>(k_min: u32, k_max: u32) -> Result<RatioCurve<T>, CostModelError> {
    check_range(k_min, k_max, 1)?;
    Ok(RatioCurve {
        rows: (k_min..=k_max)
            .map(|k| Fig5Row {
                k,
                complete_savings: T::one() - r_complete_refined::<T>(k),
                linear_savings: T::one() - r_linear_refined_bound::<T>(k),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    fn q(a: u64, b: u64) -> Exact {
        Exact::ratio(a, b)
    }

    #[test]
    fn complete_values() {
        assert_eq!(r_complete::<Exact>(0), q(1, 1));
        assert_eq!(r_complete::<Exact>(3), q(4, 15));
        assert_eq!(r_complete::<Exact>(9), q(10, 1023));
        assert!(r_complete::<f64>(3) < 0.27);
        assert!(r_complete::<f64>(9) < 0.01);
        assert_eq!(r_complete_refined::<Exact>(0), q(1, 1));
    }

    #[test]
    fn complete_closed_forms_match_sums() {
        for k in 0..=64 {
            assert_eq!(r_complete::<Exact>(k), r_complete_sum::<Exact>(k), "k={k}");
            assert_eq!(r_complete_refined::<Exact>(k), r_complete_refined_sum::<Exact>(k), "k={k}");
        }
        for k in 1..=20 {
            assert!((r_complete_refined::<f64>(k) - r_complete_refined_sum::<f64>(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn refined_speedup_at_nine() {
        let r = r_complete::<f64>(9) / r_complete_refined::<f64>(9);
        assert!((1.7..=2.0).contains(&r), "{r}");
    }

    #[test]
    fn linear_cost0() {
        assert_eq!(cost0_linear::<Exact>(1), q(2, 1));
        assert_eq!(cost0_linear::<Exact>(2), q(8, 3));
        for k in 1..=64 {
            assert_eq!(cost0_linear::<Exact>(k), cost0_linear_sum::<Exact>(k));
        }
    }

    #[test]
    fn linear_point_costs() {
        assert_eq!(cost_leaf_linear::<Exact>(9, 9), q(1, 1));
        assert_eq!(cost_leaf_linear::<Exact>(1, 9), q(1, 5));
        // printed node cost is the subtree cost plus i(i+1)/(k+1)
        assert_eq!(cost_node_linear::<Exact>(1, 3), cost0_linear::<Exact>(2) + q(2, 4));
    }

    #[test]
    fn linear_exact_k1_by_hand() {
        // root 1, leaf (i=1) 2/2, node (i=1) 1+0+0+2/2 = 2, cost0 = 2
        let expect = (q(1, 1) + q(1, 2) + q(1, 1)) / q(3, 1);
        assert_eq!(r_linear_exact::<Exact>(1), expect);
        assert_eq!(r_linear_est::<Exact>(1).bound, q(2, 3));
        assert_eq!(r_linear_refined_bound::<Exact>(1), q(1, 1));
    }

    #[test]
    fn linear_exact_decreasing() {
        let v: Vec<f64> = (1..=64).map(r_linear_exact::<f64>).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(v[63] > 0.5);
    }

    #[test]
    fn trapezoid_vs_printed_middle() {
        // the printed middle expression is not the trapezoid value; the node
        // part differs by 4/(k+1) inside the bracket
        for k in 1..=64u32 {
            let e = r_linear_est::<Exact>(k);
            let c0 = cost0_linear::<Exact>(k);
            let slip = q(4, (k + 1) as u64) / c0 * q(k as u64, 2) / q((2 * k + 1) as u64, 1);
            assert_eq!(e.trapezoid.clone() - e.middle.clone(), slip, "k={k}");
        }
    }

    #[test]
    fn instrumented_complete_levels() {
        assert_eq!(cost_complete::<Exact>(0, 4, Accounting::Refined), q(5, 1));
        assert_eq!(cost_complete::<Exact>(2, 4, Accounting::Pessimistic), q(5, 4));
        assert_eq!(cost_complete::<Exact>(2, 4, Accounting::Refined), q(3, 4));
    }

    #[test]
    fn instrumented_linear_pessimistic_leaf_matches_printed() {
        for k in 1..=10 {
            for i in 1..=k {
                assert_eq!(cost_leaf_linear_instrumented::<Exact>(i, k, Accounting::Pessimistic), cost_leaf_linear::<Exact>(i, k));
            }
        }
    }

    #[test]
    fn instrumented_refined_node_is_printed_times_coverage() {
        for k in 2..=10u32 {
            for i in 1..k {
                let cov = q((k - i + 1) as u64, (k + 1) as u64);
                assert_eq!(
                    cost_node_linear_instrumented::<Exact>(i, k, Accounting::Refined),
                    cov * cost_node_linear_refined::<Exact>(i, k)
                );
            }
        }
    }

    #[test]
    fn weighted_values() {
        let w1 = weighted_linear::<Exact>(1);
        assert_eq!(w1.cost0_exact, q(2, 1));
        assert_eq!(w1.cost0_bound, q(4, 1));
        // root 1, leaf (1/2)/2, node cost0(0)=1 over 2
        assert_eq!(w1.r_exact, (q(1, 1) + q(1, 4) + q(1, 2)) / q(3, 1));
        assert_eq!(w1.r_bound, q(2, 1));
        for k in 1..=64 {
            let direct = (1..=k).fold(q(k as u64 + 1, 1) / Exact::pow2(k), |a, i| a + q(i as u64 + 1, 1) / Exact::pow2(i));
            assert_eq!(cost0_weighted::<Exact>(k), direct);
            for i in 1..k {
                let share = Exact::pow2(i).recip();
                assert_eq!(cost_weighted_instrumented::<Exact>(i, k, false), share * cost_node_weighted::<Exact>(i, k));
            }
            assert!(cost0_weighted::<Exact>(k) <= cost0_weighted_bound::<Exact>(k));
            assert!(r_weighted_termwise::<Exact>(k) <= r_weighted_chain::<Exact>(k));
            assert!(r_weighted_chain::<Exact>(k) <= weighted_linear::<Exact>(k).r_bound);
        }
    }

    #[test]
    fn weighted_bound_limit() {
        let b = r_weighted_bound::<f64>(10_000);
        assert!((b - 0.5).abs() < 1e-3);
    }

    #[test]
    fn tables() {
        let t = cost_table::<f64>(Shape::Complete, Variant::All, 1, 10).unwrap();
        assert_eq!(t.rows.len(), 10);
        assert_eq!(t.columns.len(), 4);
        assert!(cost_table::<f64>(Shape::Linear, Variant::Exact, 0, 3).is_err());
        assert!(cost_table::<f64>(Shape::Complete, Variant::Exact, 0, 3).is_ok());
        assert!(cost_table::<f64>(Shape::Complete, Variant::Exact, 5, 3).is_err());
        assert!(cost_table::<f64>(Shape::WeightedLinear, Variant::Bound, 1, 65).is_err());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("k,r_exact,r_closed,"));
    }

    #[test]
    fn fig5() {
        let c = fig5_table::<f64>(1, 64).unwrap();
        for w in c.rows.windows(2) {
            assert!(w[1].complete_savings >= w[0].complete_savings);
            assert!(w[1].linear_savings >= w[0].linear_savings);
        }
        for r in &c.rows {
            assert!((0.0..=1.0).contains(&r.complete_savings));
            assert!((0.0..=1.0).contains(&r.linear_savings));
        }
        assert!((c.rows[63].linear_savings - 0.75).abs() < 0.02);
        assert_eq!(fig5_table::<f64>(7, 7).unwrap().rows.len(), 1);
        assert!(fig5_table::<f64>(0, 7).is_err());
    }
}
