/// Least-squares nondecreasing fit (pool adjacent violators).
pub fn pava(y: &[f64]) -> Vec<f64> {
    // Blocks of (mean, size).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        let mut cur = (v, 1usize);
        while let Some(&(m, s)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let size = s + cur.1;
            cur = ((m * s as f64 + cur.0 * cur.1 as f64) / size as f64, size);
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, s) in blocks {
        out.extend(std::iter::repeat_n(m, s));
    }
    out
}

/// Euclidean projection of `d` onto `{γ : γ_{N−1} = 1, γ_i ≤ γ_{i+η}}`.
///
/// The constraints split into `η` independent chains `r, r+η, r+2η, …`,
/// each an isotonic regression; the chain holding the last index is fitted
/// without it and clipped at 1.
pub fn project_lagged_order(d: &[f64], eta: usize) -> Vec<f64> {
    let n = d.len();
    assert!(eta >= 1, "lag must be positive");
    let mut out = d.to_vec();
    if n == 0 {
        return out;
    }
    let last = n - 1;
    for r in 0..eta.min(n) {
        let mut idx: Vec<usize> = (r..n).step_by(eta).collect();
        let holds_last = idx.last() == Some(&last);
        if holds_last {
            idx.pop();
        }
        let vals: Vec<f64> = idx.iter().map(|&k| d[k]).collect();
        let fit = pava(&vals);
        for (&k, v) in idx.iter().zip(fit) {
            out[k] = if holds_last { v.min(1.0) } else { v };
        }
    }
    out[last] = 1.0;
    out
}

/// Projection when only `γ_{N−1} = 1` is imposed.
pub fn project_leading_only(d: &[f64]) -> Vec<f64> {
    let mut out = d.to_vec();
    if let Some(v) = out.last_mut() {
        *v = 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    #[test]
    fn pava_examples() {
        assert_eq!(pava(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(pava(&[3.0, 1.0]), vec![2.0, 2.0]);
        assert_eq!(pava(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(pava(&[]), Vec::<f64>::new());
    }

    #[test]
    fn lagged_projection_examples() {
        assert_eq!(project_lagged_order(&[0.0, 0.5, 0.7], 1), vec![0.0, 0.5, 1.0]);
        assert_eq!(project_lagged_order(&[0.9, 0.2, 3.0], 1), vec![0.55, 0.55, 1.0]);
        let p = project_lagged_order(&[0.4, 2.0, 0.1, 0.3], 2);
        // Chains {0, 2} and {1, 3}; the second holds the last index.
        assert_eq!(p, vec![0.25, 1.0, 0.25, 1.0]);
        assert_eq!(project_leading_only(&[3.0, -1.0, 0.2]), vec![3.0, -1.0, 1.0]);
    }

    /// Oracle: every active set of ordering constraints, each solved as an
    /// equality-constrained least-squares problem; the closest feasible
    /// candidate is the projection.
    fn qp_projection(d: &[f64], eta: usize) -> Vec<f64> {
        let n = d.len();
        let pairs: Vec<(usize, usize)> = (0..n - eta).map(|i| (i, i + eta)).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0..1u32 << pairs.len() {
            let active: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect();
            let m = active.len() + 1;
            let mut kkt = DMatrix::zeros(n + m, n + m);
            let mut rhs = DVector::zeros(n + m);
            for i in 0..n {
                kkt[(i, i)] = 2.0;
                rhs[i] = 2.0 * d[i];
            }
            for (r, &(i, j)) in active.iter().enumerate() {
                kkt[(n + r, i)] = 1.0;
                kkt[(n + r, j)] = -1.0;
                kkt[(i, n + r)] = 1.0;
                kkt[(j, n + r)] = -1.0;
            }
            kkt[(n + m - 1, n - 1)] = 1.0;
            kkt[(n - 1, n + m - 1)] = 1.0;
            rhs[n + m - 1] = 1.0;
            let Some(sol) = kkt.lu().solve(&rhs) else { continue };
            let g: Vec<f64> = sol.iter().take(n).copied().collect();
            if !sol.iter().all(|v| v.is_finite()) || pairs.iter().any(|&(i, j)| g[i] > g[j] + 1e-10) {
                continue;
            }
            let dist: f64 = g.iter().zip(d).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                best = Some((dist, g));
            }
        }
        best.expect("the constant vector is feasible").1
    }

    proptest! {
        #[test]
        fn projection_matches_qp(d in prop::collection::vec(-2.0f64..2.0, 3..9), eta in 1usize..3) {
            prop_assume!(eta < d.len());
            let p = project_lagged_order(&d, eta);
            let q = qp_projection(&d, eta);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", p, q);
            }
            for i in 0..d.len() - eta {
                prop_assert!(p[i] <= p[i + eta] + 1e-12);
            }
        }
    }
}
