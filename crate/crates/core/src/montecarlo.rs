//! Brute-force sampling of `X(t) = ∫_0^t K(t,s) dW(s)` and statistical checks of
//! chaos predictions.
//!
//! The Wiener integral is discretized on the time cells with the cell average of
//! the kernel. For kernels singular at the origin the first cell is split into
//! dyadic pieces, each cut in four, so the variance lost to averaging stays well
//! below the sampling error at the usual path counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::chaos::ChaosVector;
use crate::error::{Error, Result};
use crate::field::quad::{cell_rule_into, GaussLegendre};
use crate::field::{covariance, FieldModel, KernelSpec};
use crate::spde::{solve_heat_closed, HeatInput, HeatProblem};

/// Paths per random stream.
pub const BLOCK: usize = 1024;

/// Samples of `X` at selected nodes, stored `[path][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub nodes: Vec<usize>,
    pub n_paths: usize,
    pub seed: u64,
    values: Vec<f64>,
}

impl PathEnsemble {
    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.nodes.len();
        &self.values[i * w..(i + 1) * w]
    }

    /// All samples at the `c`-th stored node.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.path(i)[c]).collect()
    }
}

/// Discretized Wiener integral for one field and a set of nodes.
#[derive(Debug, Clone)]
pub struct PathSampler {
    nodes: Vec<usize>,
    /// Length of every noise piece.
    pieces: Vec<f64>,
    /// Per node, `√|piece|·K̄` for the pieces below that node.
    rows: Vec<Vec<f64>>,
}

fn piece_edges(kernel: &KernelSpec, h: f64, n: usize) -> Vec<f64> {
    let mut edges = vec![0.0];
    if kernel.origin_exponent() != 0.0 {
        for m in (1..=40).rev() {
            let (lo, hi) = (h * 0.5f64.powi(m), h * 0.5f64.powi(m - 1));
            for q in 1..=4 {
                let e = lo + (hi - lo) * q as f64 / 4.0;
                if e > *edges.last().unwrap() {
                    edges.push(e);
                }
            }
        }
        edges.pop();
    }
    edges.extend((1..=n).map(|i| i as f64 * h));
    edges
}

impl PathSampler {
    pub fn new(model: &FieldModel, nodes: &[usize]) -> Result<Self> {
        let grid = model.grid();
        if let Some(&j) = nodes.iter().find(|&&j| j >= grid.n_nodes()) {
            return Err(Error::InvalidParameter(format!("node {j} is outside the time grid")));
        }
        let kernel = *model.kernel();
        let mut edges = piece_edges(&kernel, grid.step(), grid.n());
        *edges.last_mut().unwrap() = grid.t_end();
        let pieces: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        let gl = GaussLegendre::gl8();
        let (e0, ed) = (kernel.origin_exponent(), kernel.diagonal_exponent());
        let rows = nodes
            .par_iter()
            .map(|&j| {
                let t = grid.node(j);
                let mut buf = Vec::new();
                let mut row = Vec::new();
                for w in edges.windows(2) {
                    if w[1] > t * (1.0 + 1e-12) {
                        break;
                    }
                    buf.clear();
                    let ea = if w[0] == 0.0 { e0 } else { 0.0 };
                    let eb = if w[1] >= t * (1.0 - 1e-12) { ed } else { 0.0 };
                    cell_rule_into(w[0], w[1], ea, eb, gl, &mut buf);
                    let integral: f64 = buf.iter().map(|&(s, wt)| wt * kernel.eval(t, s)).sum();
                    row.push(integral / (w[1] - w[0]).sqrt());
                }
                row
            })
            .collect();
        Ok(Self { nodes: nodes.to_vec(), pieces, rows })
    }

    /// Variance of the sampled `X(t_j)` for each stored node.
    pub fn discrete_variance(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|c| c * c).sum()).collect()
    }

    /// Reproducible for a seed; path block `b` uses stream `b` of the seed.
    pub fn sample(&self, n_paths: usize, seed: u64) -> PathEnsemble {
        let w = self.nodes.len();
        let np = self.pieces.len();
        let mut values = vec![0.0; n_paths * w];
        values.par_chunks_mut(BLOCK * w.max(1)).enumerate().for_each(|(b, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut z = vec![0.0; np];
            for out in chunk.chunks_mut(w.max(1)) {
                for v in z.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                for (o, row) in out.iter_mut().zip(&self.rows) {
                    *o = row.iter().zip(&z).map(|(c, x)| c * x).sum();
                }
            }
        });
        PathEnsemble { nodes: self.nodes.clone(), n_paths, seed, values }
    }
}

/// `X` on every grid node.
pub fn sample_paths(model: &FieldModel, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    let nodes: Vec<usize> = (0..model.grid().n_nodes()).collect();
    Ok(PathSampler::new(model, &nodes)?.sample(n_paths, seed))
}

/// Sample mean with its standard error, and the value it is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
    pub reference: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64], reference: f64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self { estimate: mean, se: (var / n).sqrt(), reference }
    }

    /// `|estimate − reference| / se`.
    pub fn z(&self) -> f64 {
        let d = (self.estimate - self.reference).abs();
        if self.se > 0.0 {
            d / self.se
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn passes(&self, k: f64) -> bool {
        self.z() <= k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityReport {
    pub skewness: Estimate,
    pub excess_kurtosis: Estimate,
    pub pass: bool,
}

/// Sample skewness and excess kurtosis of standardized samples against 0,
/// with the normal-theory errors `√(6/n)` and `√(24/n)`.
pub fn normality(samples: &[f64]) -> NormalityReport {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let skewness = Estimate { estimate: m3 / m2.powf(1.5), se: (6.0 / n).sqrt(), reference: 0.0 };
    let excess_kurtosis = Estimate { estimate: m4 / (m2 * m2) - 3.0, se: (24.0 / n).sqrt(), reference: 0.0 };
    NormalityReport { skewness, excess_kurtosis, pass: skewness.passes(3.0) && excess_kurtosis.passes(3.0) }
}

#[derive(Debug, Clone, Serialize)]
pub struct WickIdentityReport {
    pub n_samples: usize,
    /// `√(mean (chaos − exact)²) / √(mean exact²)`.
    pub relative_rms: f64,
}

/// Evaluates the truncated chaos expansion of `e^{⋄η}` on sampled `ξ` and
/// compares with `e^{η − ½Eη²}`, for first-order `η`.
pub fn validate_wick_identity(eta: &ChaosVector, n_samples: usize, seed: u64) -> Result<WickIdentityReport> {
    let chaos = eta.wick_exp()?;
    let dim = eta.truncation().max_dim;
    let shift = eta.mean();
    let var = eta.variance();
    let blocks = n_samples.div_ceil(BLOCK);
    let parts: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BLOCK.min(n_samples - b * BLOCK);
            let mut xi = vec![0.0; dim];
            let (mut num, mut den) = (0.0, 0.0);
            for _ in 0..count {
                for x in xi.iter_mut() {
                    *x = StandardNormal.sample(&mut rng);
                }
                let e = eta.evaluate(&xi).expect("dimension matches");
                let exact = (e - shift + shift - 0.5 * var).exp();
                let approx = chaos.evaluate(&xi).expect("dimension matches");
                num += (approx - exact).powi(2);
                den += exact * exact;
            }
            (num, den)
        })
        .collect();
    let (num, den) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(WickIdentityReport { n_samples, relative_rms: (num / den).sqrt() })
}

#[derive(Debug, Clone, Serialize)]
pub struct WickExpReport {
    pub n_paths: usize,
    pub t: f64,
    /// Against the chaos mean `1`.
    pub mean: Estimate,
    /// Against the chaos second moment `Σ_{n≤N} S^n/n!`, `S = Σ_k M̃_k(t)²`.
    pub second_moment: Estimate,
    /// `e^{R(t,t)}` by covariance quadrature.
    pub exact_second_moment: f64,
    pub pass: bool,
}

/// Pathwise `e^{X(t) − ½R̂(t,t)}`, with `R̂` the variance of the sampler, against
/// the statistics of the truncated Wick exponential.
pub fn validate_wick_exponential(
    model: &FieldModel,
    node: usize,
    max_order: usize,
    n_paths: usize,
    seed: u64,
) -> Result<WickExpReport> {
    let sampler = PathSampler::new(model, &[node])?;
    let rhat = sampler.discrete_variance()[0];
    let xs = sampler.sample(n_paths, seed).column(0);
    let u: Vec<f64> = xs.iter().map(|x| (x - 0.5 * rhat).exp()).collect();
    let u2: Vec<f64> = u.iter().map(|v| v * v).collect();
    let s: f64 = (1..=model.basis_dim()).map(|k| model.mtilde(k)[node].powi(2)).sum();
    let mut term = 1.0;
    let mut chaos_second = 1.0;
    for n in 1..=max_order {
        term *= s / n as f64;
        chaos_second += term;
    }
    let t = model.grid().node(node);
    let mean = Estimate::from_samples(&u, 1.0);
    let second_moment = Estimate::from_samples(&u2, chaos_second);
    Ok(WickExpReport {
        n_paths,
        t,
        pass: mean.passes(3.0) && second_moment.passes(3.0),
        mean,
        second_moment,
        exact_second_moment: covariance(model.kernel(), t, t).exp(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatReport {
    pub n_paths: usize,
    pub t: f64,
    /// `max_x |mean_paths u(t,x) − heat flow at diffusivity a|`.
    pub max_discrepancy: f64,
    pub se_at_max: f64,
    /// `max_x` of the pointwise standard error.
    pub max_se: f64,
    pub pass: bool,
}

/// Averages the closed-form solution over sampled shifts and compares with the
/// deterministic heat flow. Passes when the sup-norm discrepancy is within three
/// times the largest pointwise standard error.
pub fn validate_heat_solution(p: &HeatProblem, node: usize, n_paths: usize, seed: u64) -> Result<HeatReport> {
    let model = p.model();
    let reference = solve_heat_closed(p, HeatInput::Moment, &[node])?.remove(0);
    let n1 = model.grid().n_nodes();
    let shifts: Vec<Vec<f64>> = if p.constants().is_some() {
        let xs = PathSampler::new(model, &[node])?.sample(n_paths, seed).column(0);
        xs.iter()
            .map(|x| {
                let mut z = vec![0.0; n1];
                z[node] = p.shift_path(&[*x])[0];
                z
            })
            .collect()
    } else {
        let ens = sample_paths(model, n_paths, seed)?;
        (0..n_paths).map(|i| p.shift_path(ens.path(i))).collect()
    };
    let nx = p.space().n;
    let (sum, sum2) = shifts
        .par_iter()
        .map(|z| solve_heat_closed(p, HeatInput::Shift(z), &[node]).map(|mut u| u.remove(0)))
        .try_fold(
            || (vec![0.0; nx], vec![0.0; nx]),
            |(mut s, mut s2), u| {
                let u = u?;
                for i in 0..nx {
                    s[i] += u[i];
                    s2[i] += u[i] * u[i];
                }
                Ok::<_, Error>((s, s2))
            },
        )
        .try_reduce(
            || (vec![0.0; nx], vec![0.0; nx]),
            |(mut a, mut a2), (b, b2)| {
                for i in 0..nx {
                    a[i] += b[i];
                    a2[i] += b2[i];
                }
                Ok((a, a2))
            },
        )?;
    let n = n_paths as f64;
    let (mut max_d, mut se_at, mut max_se) = (0.0, 0.0, 0.0f64);
    for i in 0..nx {
        let mean = sum[i] / n;
        let var = ((sum2[i] / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
        let se = (var / n).sqrt();
        max_se = max_se.max(se);
        let d = (mean - reference[i]).abs();
        if d > max_d {
            max_d = d;
            se_at = se;
        }
    }
    Ok(HeatReport {
        n_paths,
        t: model.grid().node(node),
        max_discrepancy: max_d,
        se_at_max: se_at,
        max_se,
        pass: max_d <= 3.0 * max_se,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceRow {
    pub t: f64,
    pub s: f64,
    pub value: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub n_paths: usize,
    pub rows: Vec<CovarianceRow>,
    /// Of `X(t)/√R(t,t)` at the last node of the first pair.
    pub normality: NormalityReport,
    pub pass: bool,
}

/// Sample `E X(t)X(s)` for node pairs against `R(t,s)` by quadrature.
pub fn validate_covariance(
    model: &FieldModel,
    pairs: &[(usize, usize)],
    n_paths: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no node pairs requested".into()));
    }
    let mut nodes: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let ens = PathSampler::new(model, &nodes)?.sample(n_paths, seed);
    let col = |j: usize| ens.column(nodes.binary_search(&j).unwrap());
    let grid = model.grid();
    let rows: Vec<CovarianceRow> = pairs
        .iter()
        .map(|&(a, b)| {
            let (xa, xb) = (col(a), col(b));
            let prod: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| x * y).collect();
            let (t, s) = (grid.node(a), grid.node(b));
            CovarianceRow { t, s, value: Estimate::from_samples(&prod, covariance(model.kernel(), t, s)) }
        })
        .collect();
    let j = pairs[0].0;
    let r = covariance(model.kernel(), grid.node(j), grid.node(j));
    let std: Vec<f64> = col(j).iter().map(|x| x / r.sqrt()).collect();
    let normality = normality(&std);
    Ok(CovarianceReport {
        n_paths,
        pass: rows.iter().all(|r| r.value.passes(3.0)) && normality.pass,
        rows,
        normality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TimeGrid;
    use crate::multiindex::{MultiIndex, TruncationSpec};
    use crate::spde::SpatialGrid;

    fn model(kernel: KernelSpec, n: usize, k: usize) -> FieldModel {
        FieldModel::build(kernel, TimeGrid::new(1.0, n).unwrap(), k).unwrap()
    }

    #[test]
    fn seeds_reproduce_and_blocks_are_independent_of_threads() {
        let m = model(KernelSpec::OuStable { b: 1.0 }, 32, 1);
        let a = sample_paths(&m, 2500, 7).unwrap();
        let b = sample_paths(&m, 2500, 7).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| sample_paths(&m, 2500, 7).unwrap());
        assert_eq!(a, c);
        assert_ne!(a, sample_paths(&m, 2500, 8).unwrap());
        // a subset of nodes sees the same noise
        let s = PathSampler::new(&m, &[16, 32]).unwrap().sample(2500, 7);
        assert_eq!(s.path(100), &[a.path(100)[16], a.path(100)[32]]);
    }

    #[test]
    fn wiener_paths_are_brownian() {
        let m = model(KernelSpec::Wiener, 64, 1);
        let s = PathSampler::new(&m, &[64]).unwrap();
        assert!((s.discrete_variance()[0] - 1.0).abs() < 1e-13);
        let r = validate_covariance(&m, &[(64, 64), (64, 32)], 100_000, 1).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn fbm_variance_loss_is_small() {
        for h in [0.6, 0.75, 0.9] {
            let m = model(KernelSpec::Fbm { hurst: h }, 512, 1);
            let v = PathSampler::new(&m, &[256, 512]).unwrap().discrete_variance();
            for (j, t) in [(0, 0.5f64), (1, 1.0)] {
                let exact = t.powf(2.0 * h);
                assert!((v[j] / exact - 1.0).abs() < 2e-3, "H={h}: {} vs {exact}", v[j]);
            }
        }
    }

    #[test]
    fn normality_of_gaussian_samples() {
        let m = model(KernelSpec::Fbm { hurst: 0.75 }, 64, 1);
        let r = validate_covariance(&m, &[(64, 64)], 50_000, 3).unwrap();
        assert!(r.normality.pass);
        // squared Gaussians are far from normal
        let sq: Vec<f64> = PathSampler::new(&m, &[64]).unwrap().sample(50_000, 3).column(0).iter().map(|x| x * x).collect();
        assert!(!normality(&sq).pass);
    }

    #[test]
    fn wick_identity_is_accurate() {
        let t = TruncationSpec::new(10, 2).unwrap();
        let eta = ChaosVector::from_coeffs(t, [(MultiIndex::unit(1), 0.5), (MultiIndex::unit(2), 0.3)]).unwrap();
        let r = validate_wick_identity(&eta, 20_000, 11).unwrap();
        assert!(r.relative_rms < 1e-3, "{}", r.relative_rms);
        let t2 = TruncationSpec::new(2, 2).unwrap();
        let coarse = ChaosVector::from_coeffs(t2, [(MultiIndex::unit(1), 0.5), (MultiIndex::unit(2), 0.3)]).unwrap();
        assert!(validate_wick_identity(&coarse, 20_000, 11).unwrap().relative_rms > 1e-3);
    }

    #[test]
    fn wick_exponential_statistics() {
        let m = model(KernelSpec::Wiener, 128, 32);
        let r = validate_wick_exponential(&m, 128, 8, 50_000, 5).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.exact_second_moment - 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn heat_average_is_the_heat_flow() {
        let m = model(KernelSpec::Wiener, 32, 1);
        let space = SpatialGrid::new(40.0, 128).unwrap();
        let p = HeatProblem::constant(m.clone(), space, 1.0, 1.0, space.gaussian(20.0, 1.0)).unwrap();
        let r = validate_heat_solution(&p, 32, 5_000, 2).unwrap();
        assert!(r.pass, "{r:?}");
        let q = HeatProblem::constant(m, space, 1.0, 0.0, space.gaussian(20.0, 1.0)).unwrap();
        let r = validate_heat_solution(&q, 32, 100, 2).unwrap();
        assert!(r.max_discrepancy < 1e-14);
    }
}
