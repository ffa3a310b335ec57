//! Fixed-effects OLS, cluster-robust variance, and joint Wald tests.
//!
//! Coefficients come from the within estimator: group demeaning (exact for
//! one fixed-effect dimension, alternating projections to 1e-10 for two),
//! then dense least squares via Householder QR with column pivoting. Rank
//! deficiency is an error naming the collinear columns, never a silent
//! drop.
//!
//! Clustered variances use the CR1 sandwich with small-sample factor
//! `G/(G-1) * (N-1)/(N-K)`; two-way clustering composes one-way pieces as
//! `V_A + V_B - V_{A intersect B}`, with any negative eigenvalues of the
//! composed matrix floored at zero.

pub mod dist;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Tolerance for the alternating-projection demeaning residual group means.
pub const DEMEAN_TOL: f64 = 1e-10;
/// Hard cap on demeaning sweeps.
pub const DEMEAN_MAX_SWEEPS: usize = 10_000;

/// One named regressor column.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            values,
        }
    }
}

/// Map arbitrary group ids to dense 0..G ids, preserving first-seen order.
fn densify(ids: &[u32]) -> (Vec<u32>, usize) {
    let mut map: HashMap<u32, u32> = HashMap::new();
    let mut dense = Vec::with_capacity(ids.len());
    for &id in ids {
        let next = map.len() as u32;
        let d = *map.entry(id).or_insert(next);
        dense.push(d);
    }
    (dense, map.len())
}

fn subtract_group_means(col: &mut [f64], groups: &[u32], n_groups: usize) {
    let mut sums = vec![0.0f64; n_groups];
    let mut counts = vec![0u32; n_groups];
    for (v, &g) in col.iter().zip(groups) {
        sums[g as usize] += *v;
        counts[g as usize] += 1;
    }
    for g in 0..n_groups {
        sums[g] /= counts[g].max(1) as f64;
    }
    for (v, &g) in col.iter_mut().zip(groups) {
        *v -= sums[g as usize];
    }
}

fn max_abs_group_mean(col: &[f64], groups: &[u32], n_groups: usize) -> f64 {
    let mut sums = vec![0.0f64; n_groups];
    let mut counts = vec![0u32; n_groups];
    for (v, &g) in col.iter().zip(groups) {
        sums[g as usize] += *v;
        counts[g as usize] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| (s / c.max(1) as f64).abs())
        .fold(0.0, f64::max)
}

/// Demean columns within fixed-effect groups. One dimension is a single
/// exact pass; two dimensions alternate projections until every residual
/// group mean is below [`DEMEAN_TOL`].
fn demean(cols: &mut [Vec<f64>], fe: &[(Vec<u32>, usize)]) -> Result<()> {
    match fe {
        [] => Ok(()),
        [(groups, g)] => {
            for col in cols.iter_mut() {
                subtract_group_means(col, groups, *g);
            }
            Ok(())
        }
        [(ga, na), (gb, nb)] => {
            for col in cols.iter_mut() {
                let mut converged = false;
                for _ in 0..DEMEAN_MAX_SWEEPS {
                    subtract_group_means(col, ga, *na);
                    subtract_group_means(col, gb, *nb);
                    let drift = max_abs_group_mean(col, ga, *na).max(max_abs_group_mean(col, gb, *nb));
                    if drift < DEMEAN_TOL {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::DemeanDiverged(DEMEAN_MAX_SWEEPS));
                }
            }
            Ok(())
        }
        _ => Err(Error::InvalidInput("at most two fixed-effect dimensions".into())),
    }
}

/// Householder QR with column pivoting (largest remaining column norm).
/// Returns the solution of the least-squares problem, erroring with the
/// names of the pivoted-out columns when the design is rank deficient.
fn solve_least_squares(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
) -> Result<DVector<f64>> {
    let n = x.nrows();
    let k = x.ncols();
    let mut a = x.clone();
    let mut qty = y.clone();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut diag = vec![0.0f64; k];

    for step in 0..k {
        // fresh column norms over remaining rows
        let mut best = step;
        let mut best_norm = -1.0f64;
        for j in step..k {
            let norm: f64 = (step..n).map(|i| a[(i, j)] * a[(i, j)]).sum();
            if norm > best_norm {
                best_norm = norm;
                best = j;
            }
        }
        if best != step {
            a.swap_columns(step, best);
            perm.swap(step, best);
        }

        // Householder reflector for column `step`
        let mut alpha: f64 = (step..n).map(|i| a[(i, step)] * a[(i, step)]).sum::<f64>().sqrt();
        if a[(step, step)] > 0.0 {
            alpha = -alpha;
        }
        diag[step] = alpha;
        if alpha == 0.0 {
            continue; // zero column: trailing diag stays 0, caught by rank check
        }
        let v0 = a[(step, step)] - alpha;
        a[(step, step)] = v0;
        let vnorm2: f64 = (step..n).map(|i| a[(i, step)] * a[(i, step)]).sum();
        if vnorm2 > 0.0 {
            for j in (step + 1)..k {
                let dot: f64 = (step..n).map(|i| a[(i, step)] * a[(i, j)]).sum();
                let scale = 2.0 * dot / vnorm2;
                for i in step..n {
                    a[(i, j)] -= scale * a[(i, step)];
                }
            }
            let dot: f64 = (step..n).map(|i| a[(i, step)] * qty[i]).sum();
            let scale = 2.0 * dot / vnorm2;
            for i in step..n {
                qty[i] -= scale * a[(i, step)];
            }
        }
    }

    let scale = diag[0].abs().max(1.0);
    let deficient: Vec<String> = (0..k)
        .filter(|&i| diag[i].abs() <= 1e-10 * scale)
        .map(|i| names[perm[i]].clone())
        .collect();
    if !deficient.is_empty() {
        return Err(Error::RankDeficient(deficient));
    }

    // back substitution: R (upper triangle above the reflectors) has the
    // pivot values in `diag` and the off-diagonals in `a`
    let mut beta = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut acc = qty[i];
        for j in (i + 1)..k {
            acc -= a[(i, j)] * beta[j];
        }
        beta[i] = acc / diag[i];
    }
    let mut out = DVector::zeros(k);
    for i in 0..k {
        out[perm[i]] = beta[i];
    }
    Ok(out)
}

/// Fitted within-estimator regression.
#[derive(Debug, Clone)]
pub struct FeFit {
    pub names: Vec<String>,
    pub coef: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Demeaned design matrix.
    pub x: DMatrix<f64>,
    /// Inverse of the demeaned Gram matrix.
    pub xtx_inv: DMatrix<f64>,
    pub n: usize,
    pub k: usize,
    /// Dense cluster ids of the fixed-effect dimensions, reusable as
    /// clustering dimensions.
    pub fe_groups: Vec<(Vec<u32>, usize)>,
}

/// Fixed-effects OLS via within-demeaning.
///
/// `fe` carries one or two grouping columns absorbed as fixed effects.
/// Coefficients equal those of the explicit dummy-variable regression.
pub fn ols_fe(y: &[f64], x: &[Column], fe: &[&[u32]]) -> Result<FeFit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptySample("regression has no rows".into()));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("regression needs at least one column".into()));
    }
    for c in x {
        if c.values.len() != n {
            return Err(Error::InvalidInput(format!(
                "column {} has {} rows, expected {n}",
                c.name,
                c.values.len()
            )));
        }
    }
    for dim in fe {
        if dim.len() != n {
            return Err(Error::InvalidInput("fixed-effect column length mismatch".into()));
        }
    }

    let fe_groups: Vec<(Vec<u32>, usize)> = fe.iter().map(|ids| densify(ids)).collect();

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(x.len() + 1);
    cols.push(y.to_vec());
    for c in x {
        cols.push(c.values.clone());
    }
    demean(&mut cols, &fe_groups)?;

    let y_dm = DVector::from_vec(cols[0].clone());
    let k = x.len();
    let mut xmat = DMatrix::zeros(n, k);
    for (j, col) in cols[1..].iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            xmat[(i, j)] = v;
        }
    }

    let names: Vec<String> = x.iter().map(|c| c.name.clone()).collect();
    let coef = solve_least_squares(&xmat, &y_dm, &names)?;
    let residuals = &y_dm - &xmat * &coef;

    let xtx = xmat.transpose() * &xmat;
    let xtx_inv = xtx
        .cholesky()
        .ok_or_else(|| Error::RankDeficient(names.clone()))?
        .inverse();

    Ok(FeFit {
        names,
        coef,
        residuals,
        x: xmat,
        xtx_inv,
        n,
        k,
        fe_groups,
    })
}

/// Cluster-robust covariance matrix.
#[derive(Debug, Clone)]
pub struct ClusterVcov {
    pub v: DMatrix<f64>,
    /// The one-way pieces this matrix was composed from: `[V_A]` for
    /// one-way, `[V_A, V_B, V_AB]` for two-way.
    pub pieces: Vec<DMatrix<f64>>,
    /// The raw composition before any eigenvalue repair.
    pub composed: DMatrix<f64>,
    pub n_clusters: Vec<usize>,
    pub g_min: usize,
    /// True when negative eigenvalues of the two-way composition were
    /// floored at zero.
    pub repaired: bool,
}

fn one_way_meat(fit: &FeFit, groups: &[u32], n_groups: usize) -> DMatrix<f64> {
    let k = fit.k;
    // cluster score vectors s_g = sum_{i in g} x_i e_i, deterministic order
    let mut scores = vec![DVector::<f64>::zeros(k); n_groups];
    for i in 0..fit.n {
        let g = groups[i] as usize;
        let e = fit.residuals[i];
        for j in 0..k {
            scores[g][j] += fit.x[(i, j)] * e;
        }
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in &scores {
        meat += s * s.transpose();
    }
    meat
}

fn cr1_factor(n: usize, k: usize, g: usize) -> f64 {
    (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64))
}

fn one_way_vcov(fit: &FeFit, groups: &[u32], n_groups: usize) -> DMatrix<f64> {
    let meat = one_way_meat(fit, groups, n_groups);
    let sandwich = &fit.xtx_inv * meat * &fit.xtx_inv;
    sandwich * cr1_factor(fit.n, fit.k, n_groups)
}

/// One- or two-way cluster-robust covariance (CR1).
///
/// Two-way composes `V_A + V_B - V_{A intersect B}`; each piece carries its
/// own CR1 factor. Negative eigenvalues of the composition are floored at
/// zero with a warning.
pub fn cluster_vcov(fit: &FeFit, clusters: &[&[u32]]) -> Result<ClusterVcov> {
    if clusters.is_empty() || clusters.len() > 2 {
        return Err(Error::InvalidInput("one or two cluster dimensions required".into()));
    }
    let dense: Vec<(Vec<u32>, usize)> = clusters.iter().map(|ids| densify(ids)).collect();
    for (dim, (_, g)) in dense.iter().enumerate() {
        if *g < 2 {
            return Err(Error::SingleCluster(dim));
        }
    }

    if dense.len() == 1 {
        let (groups, g) = &dense[0];
        let v = one_way_vcov(fit, groups, *g);
        return Ok(ClusterVcov {
            v: v.clone(),
            pieces: vec![v.clone()],
            composed: v,
            n_clusters: vec![*g],
            g_min: *g,
            repaired: false,
        });
    }

    let (ga, na) = &dense[0];
    let (gb, nb) = &dense[1];
    // intersection ids
    let mut inter_map: HashMap<(u32, u32), u32> = HashMap::new();
    let mut inter = Vec::with_capacity(fit.n);
    for i in 0..fit.n {
        let key = (ga[i], gb[i]);
        let next = inter_map.len() as u32;
        inter.push(*inter_map.entry(key).or_insert(next));
    }
    let n_inter = inter_map.len();

    let va = one_way_vcov(fit, ga, *na);
    let vb = one_way_vcov(fit, gb, *nb);
    let vab = one_way_vcov(fit, &inter, n_inter);
    let composed = &va + &vb - &vab;

    // repair: floor negative eigenvalues of the symmetric composition
    let sym = (composed.clone() + composed.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut repaired = false;
    let mut values = eig.eigenvalues.clone();
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            repaired = true;
        }
    }
    let v = if repaired {
        log::warn!("two-way cluster vcov had negative eigenvalues; floored at zero");
        &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose()
    } else {
        composed.clone()
    };

    Ok(ClusterVcov {
        v,
        pieces: vec![va, vb, vab],
        composed,
        n_clusters: vec![*na, *nb],
        g_min: (*na).min(*nb),
        repaired,
    })
}

/// Per-coefficient standard error, t statistic, and two-sided p-value with
/// `g_min - 1` degrees of freedom.
pub fn coef_inference(coef: &DVector<f64>, vcov: &ClusterVcov) -> Vec<(f64, f64, f64)> {
    let nu = (vcov.g_min - 1) as f64;
    coef.iter()
        .enumerate()
        .map(|(i, &b)| {
            let se = vcov.v[(i, i)].max(0.0).sqrt();
            if se == 0.0 {
                return (se, f64::NAN, f64::NAN);
            }
            let t = b / se;
            (se, t, dist::t_sf_two_sided(t, nu))
        })
        .collect()
}

/// Result of a joint Wald test.
#[derive(Debug, Clone, Copy)]
pub struct Wald {
    pub f: f64,
    pub p: f64,
    pub q: usize,
}

/// Joint Wald test of `coef[subset] = 0` with `F = b' V^-1 b / q` referred
/// to `F(q, g_min - 1)`.
pub fn joint_wald(coef: &DVector<f64>, vcov: &DMatrix<f64>, subset: &[usize], g_min: usize) -> Result<Wald> {
    if subset.is_empty() {
        return Err(Error::InvalidInput("empty subset in joint Wald test".into()));
    }
    let q = subset.len();
    let mut b = DVector::zeros(q);
    let mut v = DMatrix::zeros(q, q);
    for (i, &si) in subset.iter().enumerate() {
        b[i] = coef[si];
        for (j, &sj) in subset.iter().enumerate() {
            v[(i, j)] = vcov[(si, sj)];
        }
    }
    let lu = v.lu();
    let solved = lu.solve(&b).ok_or(Error::SingularVcov)?;
    let w = b.dot(&solved);
    if !w.is_finite() || w < 0.0 {
        return Err(Error::SingularVcov);
    }
    let f = w / q as f64;
    let p = dist::f_sf(f, q as f64, (g_min - 1) as f64);
    Ok(Wald { f, p, q })
}

/// One effect estimate row: coefficient, clustered inference, and sample
/// descriptors.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EffectEstimate {
    pub label: String,
    pub term: String,
    pub coef: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub n_obs: usize,
    pub n_clusters: Vec<usize>,
    pub mean_control_outcome: f64,
}

impl EffectEstimate {
    /// Significance stars: *** p<0.01, ** p<0.05, * p<0.10.
    pub fn stars(&self) -> &'static str {
        if self.p < 0.01 {
            "***"
        } else if self.p < 0.05 {
            "**"
        } else if self.p < 0.10 {
            "*"
        } else {
            ""
        }
    }
}

/// Per-covariate balance estimate.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BalanceCoef {
    pub name: String,
    pub coef: f64,
    pub se: f64,
    pub p: f64,
}

/// Balance-test result: per-covariate coefficients plus the joint Wald test
/// over all covariates.
#[derive(Debug, Clone)]
pub struct BalanceResult {
    pub coefs: Vec<BalanceCoef>,
    pub joint_f: f64,
    pub joint_p: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
}

/// Regress the treatment indicator on all covariates jointly with facility
/// fixed effects and facility-clustered errors.
///
/// `cluster_robust_wald` selects the variance behind the joint test:
/// cluster-robust (default) or the classical iid covariance.
pub fn balance_test(
    treated: &[f64],
    covariates: &[Column],
    facility: &[u32],
    cluster_robust_wald: bool,
) -> Result<BalanceResult> {
    let fit = ols_fe(treated, covariates, &[facility])?;
    let vcov = cluster_vcov(&fit, &[facility])?;
    let inference = coef_inference(&fit.coef, &vcov);

    let subset: Vec<usize> = (0..fit.k).collect();
    let wald = if cluster_robust_wald {
        joint_wald(&fit.coef, &vcov.v, &subset, vcov.g_min)?
    } else {
        let sigma2 = fit.residuals.dot(&fit.residuals) / (fit.n - fit.k) as f64;
        let classical = &fit.xtx_inv * sigma2;
        joint_wald(&fit.coef, &classical, &subset, vcov.g_min)?
    };

    Ok(BalanceResult {
        coefs: fit
            .names
            .iter()
            .zip(fit.coef.iter())
            .zip(&inference)
            .map(|((name, &coef), &(se, _, p))| BalanceCoef {
                name: name.clone(),
                coef,
                se,
                p,
            })
            .collect(),
        joint_f: wald.f,
        joint_p: wald.p,
        n_obs: fit.n,
        n_clusters: vcov.g_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Test-side oracle: explicit dummy-variable OLS solved by Gaussian
    /// elimination on the normal equations, independent of the QR path.
    fn dummy_ols(y: &[f64], x: &[Vec<f64>], fe: &[&[u32]]) -> Vec<f64> {
        let n = y.len();
        let mut design: Vec<Vec<f64>> = x.to_vec();
        // first FE dimension: full dummy set (absorbs the intercept);
        // further dimensions drop their first group
        for (d, dim) in fe.iter().enumerate() {
            let mut ids: Vec<u32> = dim.to_vec();
            ids.sort_unstable();
            ids.dedup();
            let skip = usize::from(d > 0);
            for &g in ids.iter().skip(skip) {
                design.push(dim.iter().map(|&v| f64::from(v == g)).collect());
            }
        }
        let k = design.len();
        let mut ata = vec![vec![0.0; k + 1]; k];
        for i in 0..k {
            for j in 0..k {
                ata[i][j] = (0..n).map(|r| design[i][r] * design[j][r]).sum();
            }
            ata[i][k] = (0..n).map(|r| design[i][r] * y[r]).sum();
        }
        // Gaussian elimination with partial pivoting
        for col in 0..k {
            let piv = (col..k).max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs())).unwrap();
            ata.swap(col, piv);
            let d = ata[col][col];
            for j in col..=k {
                ata[col][j] /= d;
            }
            for row in 0..k {
                if row != col {
                    let factor = ata[row][col];
                    for j in col..=k {
                        ata[row][j] -= factor * ata[col][j];
                    }
                }
            }
        }
        (0..x.len()).map(|i| ata[i][k]).collect()
    }

    #[test]
    fn exact_fit_single_group() {
        let x = vec![Column::new("x", vec![1.0, 2.0, 3.0, 4.0])];
        let y = vec![2.0, 4.0, 6.0, 8.0];
        let fe = vec![0u32, 0, 0, 0];
        let fit = ols_fe(&y, &x, &[&fe]).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dummy_regression_two_fe() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..5 {
            let n = 40;
            let fe1: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let fe2: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
            let y: Vec<f64> = (0..n)
                .map(|i| {
                    1.5 * x1[i] - 0.7 * x2[i]
                        + fe1[i] as f64 * 0.9
                        + fe2[i] as f64 * -1.3
                        + rng.gen_range(-0.5..0.5)
                })
                .collect();
            let cols = vec![Column::new("x1", x1.clone()), Column::new("x2", x2.clone())];
            let fit = ols_fe(&y, &cols, &[&fe1, &fe2]).unwrap();
            let oracle = dummy_ols(&y, &[x1, x2], &[&fe1, &fe2]);
            assert!((fit.coef[0] - oracle[0]).abs() < 1e-8, "{} vs {}", fit.coef[0], oracle[0]);
            assert!((fit.coef[1] - oracle[1]).abs() < 1e-8, "{} vs {}", fit.coef[1], oracle[1]);
        }
    }

    #[test]
    fn absorbed_regressor_is_rank_deficiency_error() {
        let fe = vec![0u32, 0, 1, 1];
        // constant within every FE group
        let x = vec![
            Column::new("absorbed", vec![1.0, 1.0, 3.0, 3.0]),
            Column::new("fine", vec![0.3, -0.4, 0.9, 0.1]),
        ];
        let y = vec![1.0, 2.0, 3.0, 4.0];
        match ols_fe(&y, &x, &[&fe]) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols, vec!["absorbed".to_string()]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn singleton_clusters_equal_hc1() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 30;
        let fe = vec![0u32; n];
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| 0.5 * v + rng.gen_range(-1.0..1.0)).collect();
        let fit = ols_fe(&y, &[Column::new("x", x)], &[&fe]).unwrap();

        let singletons: Vec<u32> = (0..n as u32).collect();
        let v = cluster_vcov(&fit, &[&singletons]).unwrap();

        // HC1: N/(N-K) * B (sum x_i^2 e_i^2) B
        let mut meat = 0.0;
        for i in 0..n {
            meat += fit.x[(i, 0)].powi(2) * fit.residuals[i].powi(2);
        }
        let hc1 = fit.xtx_inv[(0, 0)].powi(2) * meat * (n as f64) / ((n - 1) as f64);
        assert!((v.v[(0, 0)] - hc1).abs() < 1e-14, "{} vs {hc1}", v.v[(0, 0)]);
    }

    #[test]
    fn identical_dims_collapse_to_one_way() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let n = 24;
        let fe = vec![0u32; n];
        let clusters: Vec<u32> = (0..n as u32).map(|i| i % 4).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| v + rng.gen_range(-1.0..1.0)).collect();
        let fit = ols_fe(&y, &[Column::new("x", x)], &[&fe]).unwrap();

        let two = cluster_vcov(&fit, &[&clusters, &clusters]).unwrap();
        let one = cluster_vcov(&fit, &[&clusters]).unwrap();
        // V_A + V_A - V_A = V_A
        assert!((two.v[(0, 0)] - one.v[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn cgm_identity_holds_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 240;
        let fe = vec![0u32; n];
        let ca: Vec<u32> = (0..n as u32).map(|i| i % 12).collect();
        let cb: Vec<u32> = (0..n as u32).map(|i| i / 24).collect();
        let x: Vec<f64> = (0..n)
            .map(|i| 0.4 * (ca[i] % 3) as f64 + rng.gen_range(-1.0..1.0))
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| x[i] + 0.5 * (ca[i] as f64 % 2.0) + rng.gen_range(-1.0..1.0))
            .collect();
        let fit = ols_fe(&y, &[Column::new("x", x)], &[&fe]).unwrap();
        let v = cluster_vcov(&fit, &[&ca, &cb]).unwrap();
        // the composition is always built from its independent pieces
        let recomposed = &v.pieces[0] + &v.pieces[1] - &v.pieces[2];
        assert_eq!(v.composed, recomposed);
        // and on this design no eigenvalue repair is needed
        assert!(!v.repaired);
        assert_eq!(v.v, v.composed);
    }

    #[test]
    fn three_cluster_hand_sandwich() {
        // 9 rows, 3 clusters of 3, single regressor; sandwich computed
        // longhand below.
        let x = vec![1.0, 2.0, -1.0, 0.5, 1.5, -0.5, 2.0, -2.0, 1.0];
        let y = vec![1.1, 2.3, -0.8, 0.2, 1.9, -0.9, 2.5, -1.5, 0.7];
        let clusters = vec![0u32, 0, 0, 1, 1, 1, 2, 2, 2];
        let fe = vec![0u32; 9];
        let fit = ols_fe(&y, &[Column::new("x", x.clone())], &[&fe]).unwrap();
        let got = cluster_vcov(&fit, &[&clusters]).unwrap().v[(0, 0)];

        // longhand: demean x and y, beta, residuals, cluster scores
        let n = 9.0;
        let xm: f64 = x.iter().sum::<f64>() / n;
        let ym: f64 = y.iter().sum::<f64>() / n;
        let xd: Vec<f64> = x.iter().map(|v| v - xm).collect();
        let yd: Vec<f64> = y.iter().map(|v| v - ym).collect();
        let sxx: f64 = xd.iter().map(|v| v * v).sum();
        let beta: f64 = xd.iter().zip(&yd).map(|(a, b)| a * b).sum::<f64>() / sxx;
        let e: Vec<f64> = xd.iter().zip(&yd).map(|(a, b)| b - beta * a).collect();
        let mut meat = 0.0;
        for g in 0..3 {
            let s: f64 = (0..3).map(|i| xd[3 * g + i] * e[3 * g + i]).sum();
            meat += s * s;
        }
        let want = meat / (sxx * sxx) * (3.0 / 2.0) * (8.0 / 8.0);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn wald_zero_vector_and_t_equivalence() {
        let coef = DVector::from_vec(vec![0.0, 0.0]);
        let vcov = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25]));
        let w = joint_wald(&coef, &vcov, &[0, 1], 11).unwrap();
        assert_eq!(w.f, 0.0);
        assert_eq!(w.p, 1.0);

        // q = 1 reduces to the squared-t test
        let coef = DVector::from_vec(vec![1.0]);
        let vcov = DMatrix::from_element(1, 1, 0.25);
        let w = joint_wald(&coef, &vcov, &[0], 11).unwrap();
        assert!((w.f - 4.0).abs() < 1e-12);
        let p_t = dist::t_sf_two_sided(2.0, 10.0);
        assert!((w.p - p_t).abs() < 1e-10);
        assert!((w.p - 0.0734).abs() < 5e-5);
    }

    #[test]
    fn wald_singular_vcov_errors() {
        let coef = DVector::from_vec(vec![1.0, 1.0]);
        let vcov = DMatrix::from_element(2, 2, 1.0); // rank 1
        assert!(matches!(joint_wald(&coef, &vcov, &[0, 1], 11), Err(Error::SingularVcov)));
    }

    #[test]
    fn single_cluster_dimension_errors() {
        let fe = vec![0u32, 0, 0, 0];
        let fit = ols_fe(
            &[1.0, 2.0, 3.0, 4.0],
            &[Column::new("x", vec![0.1, 0.9, 0.2, 0.8])],
            &[&fe],
        )
        .unwrap();
        let same = vec![7u32; 4];
        assert!(matches!(cluster_vcov(&fit, &[&same]), Err(Error::SingleCluster(0))));
    }

    #[test]
    fn balance_test_null_large_p() {
        // covariate independent of treatment: expect no signal
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 4000;
        let facility: Vec<u32> = (0..n).map(|_| rng.gen_range(0..20)).collect();
        let treated: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.5))).collect();
        let cov: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let res = balance_test(&treated, &[Column::new("c", cov)], &facility, true).unwrap();
        assert!(res.joint_p > 0.001, "joint p = {}", res.joint_p);
        assert_eq!(res.n_clusters, 20);
    }
}
