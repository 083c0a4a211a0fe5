//! Qudit state tomography: projector sets, count simulation, reconstruction.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::metrics::StateVector;
use crate::{C64, Error, Result};

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGENVALUE_FLOOR: f64 = -1e-10;

/// `d x d` Hermitian, unit-trace state.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    entries: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let rho = DensityMatrix { entries };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.dim();
        let a = psi.amplitudes();
        let entries = Array2::from_shape_fn((d, d), |(i, j)| a[i] * a[j].conj());
        DensityMatrix { entries }
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidConfig("dimension must be >= 2".into()));
        }
        let entries = Array2::from_shape_fn((d, d), |(i, j)| {
            if i == j {
                C64::new(1.0 / d as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(DensityMatrix { entries })
    }

    /// Isotropic mixture `p |psi><psi| + (1 - p) I / d`.
    pub fn isotropic(target: &StateVector, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig("purity must lie in [0, 1]".into()));
        }
        let d = target.dim();
        let pure = DensityMatrix::from_pure(target);
        let mixed = DensityMatrix::maximally_mixed(d)?;
        let entries = Array2::from_shape_fn((d, d), |(i, j)| {
            pure.entries[[i, j]] * p + mixed.entries[[i, j]] * (1.0 - p)
        });
        Ok(DensityMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.dim().0
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entries[[i, i]]).sum()
    }

    /// Hermiticity within 1e-12, unit trace within 1e-12, smallest
    /// eigenvalue above `-1e-10`.
    pub fn validate(&self) -> Result<()> {
        let (r, c) = self.entries.dim();
        if r != c || r < 2 {
            return Err(Error::InvalidConfig("density matrix must be square, d >= 2".into()));
        }
        for i in 0..r {
            for j in 0..r {
                if (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm() > HERMITICITY_TOL {
                    return Err(Error::InvalidConfig("matrix is not Hermitian".into()));
                }
            }
        }
        if (self.trace() - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidConfig("trace differs from one".into()));
        }
        if self.min_eigenvalue() < EIGENVALUE_FLOOR {
            return Err(Error::InvalidConfig("matrix has a negative eigenvalue".into()));
        }
        Ok(())
    }

    fn to_na(&self) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.entries[[i, j]])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_na()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// `<i| rho |j>` expectation of a projector state.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::InvalidConfig("dimension mismatch".into()));
        }
        let a = psi.amplitudes();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += a[i].conj() * self.entries[[i, j]] * a[j];
            }
        }
        Ok(acc.re.max(0.0))
    }

    /// Half the trace norm of `self - other`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidConfig("dimension mismatch".into()));
        }
        let diff = self.to_na() - other.to_na();
        let sum: f64 = diff.symmetric_eigen().eigenvalues.iter().map(|v| v.abs()).sum();
        Ok(0.5 * sum)
    }

    /// Fidelity of the subspace-truncated, trace-renormalized state against
    /// the uniform superposition over the kept indices (the maximally
    /// correlated dual restricted to the subspace).
    pub fn subspace_fidelity(&self, keep: &[usize]) -> Result<f64> {
        if keep.len() < 2 {
            return Err(Error::InvalidConfig("subspace needs at least two indices".into()));
        }
        if keep.iter().any(|&i| i >= self.dim()) {
            return Err(Error::InvalidConfig("subspace index out of range".into()));
        }
        let k = keep.len();
        let mut sub = Array2::from_elem((k, k), C64::new(0.0, 0.0));
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                sub[[a, b]] = self.entries[[i, j]];
            }
        }
        let tr: f64 = (0..k).map(|i| sub[[i, i]].re).sum();
        if tr <= 0.0 {
            return Err(Error::Degenerate("no population in the subspace".into()));
        }
        let uniform = 1.0 / k as f64;
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..k {
            for b in 0..k {
                acc += sub[[a, b]] * uniform;
            }
        }
        Ok((acc.re / tr).clamp(0.0, 1.0))
    }

    /// Row-major CSV pair `(Re[rho], Im[rho])`.
    pub fn to_csv_pair(&self) -> (String, String) {
        let d = self.dim();
        let mut re = String::new();
        let mut im = String::new();
        for i in 0..d {
            for j in 0..d {
                if j > 0 {
                    re.push(',');
                    im.push(',');
                }
                re.push_str(&self.entries[[i, j]].re.to_string());
                im.push_str(&self.entries[[i, j]].im.to_string());
            }
            re.push('\n');
            im.push('\n');
        }
        (re, im)
    }
}

/// Tomographic projector families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorScheme {
    /// All `d (d + 1)` vectors of a complete set of mutually unbiased bases;
    /// available for `d` in {2, 3, 4}.
    MubComplete,
    /// `d^2` vectors: the computational basis plus `(|j> + |k>)/sqrt(2)` and
    /// `(|j> + i |k>)/sqrt(2)` for every pair; any dimension.
    PairwiseOvercomplete,
}

fn vec_c(components: &[C64]) -> StateVector {
    StateVector::new(components.to_vec()).expect("non-zero")
}

fn mub_d2() -> Vec<StateVector> {
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    vec![
        vec_c(&[o, z]),
        vec_c(&[z, o]),
        vec_c(&[o, o]),
        vec_c(&[o, -o]),
        vec_c(&[o, i]),
        vec_c(&[o, -i]),
    ]
}

fn mub_d3() -> Vec<StateVector> {
    // Heisenberg-Weyl construction for the odd prime 3:
    // |m; j>_t = w^(j t + m t^2) / sqrt(3).
    let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut out: Vec<StateVector> = (0..3)
        .map(|j| {
            let mut v = vec![C64::new(0.0, 0.0); 3];
            v[j] = C64::new(1.0, 0.0);
            vec_c(&v)
        })
        .collect();
    for m in 0..3u32 {
        for j in 0..3u32 {
            let comps: Vec<C64> = (0..3u32)
                .map(|t| w.powu(j * t + m * t * t))
                .collect();
            out.push(vec_c(&comps));
        }
    }
    out
}

fn mub_d4() -> Vec<StateVector> {
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let rows: [[C64; 4]; 16] = [
        [o, o, o, o],
        [o, o, -o, -o],
        [o, -o, -o, o],
        [o, -o, o, -o],
        [o, -o, -i, -i],
        [o, -o, i, i],
        [o, o, i, -i],
        [o, o, -i, i],
        [o, -i, -i, -o],
        [o, -i, i, o],
        [o, i, i, -o],
        [o, i, -i, o],
        [o, -i, -o, -i],
        [o, -i, o, i],
        [o, i, o, -i],
        [o, i, -o, i],
    ];
    let mut out: Vec<StateVector> = (0..4)
        .map(|j| {
            let mut v = vec![C64::new(0.0, 0.0); 4];
            v[j] = o;
            vec_c(&v)
        })
        .collect();
    out.extend(rows.iter().map(|r| vec_c(r)));
    out
}

/// Informationally complete projector list for the scheme.
pub fn projector_set(d: usize, scheme: ProjectorScheme) -> Result<Vec<StateVector>> {
    match scheme {
        ProjectorScheme::MubComplete => match d {
            2 => Ok(mub_d2()),
            3 => Ok(mub_d3()),
            4 => Ok(mub_d4()),
            other => Err(Error::InvalidConfig(format!(
                "MUB-complete scheme implemented for d in {{2, 3, 4}}, got {other}"
            ))),
        },
        ProjectorScheme::PairwiseOvercomplete => {
            if d < 2 {
                return Err(Error::InvalidConfig("dimension must be >= 2".into()));
            }
            let o = C64::new(1.0, 0.0);
            let im = C64::new(0.0, 1.0);
            let mut out = Vec::with_capacity(d * d);
            for j in 0..d {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[j] = o;
                out.push(vec_c(&v));
            }
            for j in 0..d {
                for k in (j + 1)..d {
                    let mut v = vec![C64::new(0.0, 0.0); d];
                    v[j] = o;
                    v[k] = o;
                    out.push(vec_c(&v));
                    let mut w = vec![C64::new(0.0, 0.0); d];
                    w[j] = o;
                    w[k] = im;
                    out.push(vec_c(&w));
                }
            }
            Ok(out)
        }
    }
}

/// One tomographic projection: projector, measured counts, duration.
#[derive(Debug, Clone)]
pub struct ProjectionRecord {
    pub projector: StateVector,
    pub label: String,
    pub counts: f64,
    pub duration: f64,
}

/// Expected (or Poisson-sampled, when `seed` is set) counts for each
/// projector: `total_counts <m|rho|m> + accidental_rate * duration`.
pub fn simulate_counts(
    rho: &DensityMatrix,
    projectors: &[StateVector],
    total_counts: f64,
    accidental_rate: f64,
    seed: Option<u64>,
) -> Result<Vec<ProjectionRecord>> {
    if !(total_counts > 0.0) {
        return Err(Error::InvalidConfig("total_counts must be positive".into()));
    }
    if accidental_rate < 0.0 {
        return Err(Error::InvalidConfig("accidental rate must be non-negative".into()));
    }
    rho.validate()?;
    let duration = 1.0;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    projectors
        .iter()
        .enumerate()
        .map(|(idx, m)| {
            let expected = total_counts * rho.expectation(m)? + accidental_rate * duration;
            let counts = match rng.as_mut() {
                Some(r) if expected > 0.0 => {
                    Poisson::new(expected)
                        .map_err(|_| Error::InvalidConfig("bad Poisson rate".into()))?
                        .sample(r)
                }
                _ => expected,
            };
            Ok(ProjectionRecord {
                projector: m.clone(),
                label: format!("proj{idx}"),
                counts,
                duration,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionMethod {
    /// Least-squares inversion followed by projection onto the PSD cone
    /// (eigenvalue clipping and trace renormalisation).
    LinearInversion,
    /// Fixed-point likelihood maximisation (R rho R), tolerance 1e-10,
    /// at most 10^4 iterations. Positive by construction.
    MaxLikelihood,
}

const MLE_TOL: f64 = 1e-10;
const MLE_MAX_ITER: usize = 10_000;

/// Reconstruct a density matrix from projection counts.
pub fn reconstruct(
    records: &[ProjectionRecord],
    d: usize,
    method: ReconstructionMethod,
) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidConfig("dimension must be >= 2".into()));
    }
    if records.len() < d * d {
        return Err(Error::Degenerate(format!(
            "need at least d^2 = {} projections, got {}",
            d * d,
            records.len()
        )));
    }
    if records.iter().any(|r| r.projector.dim() != d) {
        return Err(Error::InvalidConfig("projector dimension mismatch".into()));
    }
    match method {
        ReconstructionMethod::LinearInversion => linear_inversion(records, d),
        ReconstructionMethod::MaxLikelihood => max_likelihood(records, d),
    }
}

/// Hermitian parameterisation: d diagonal projectors, then the real and
/// imaginary pair combinations for each off-diagonal slot.
fn hermitian_from_params(params: &[f64], d: usize) -> Array2<C64> {
    let mut m = Array2::from_elem((d, d), C64::new(0.0, 0.0));
    for i in 0..d {
        m[[i, i]] = C64::new(params[i], 0.0);
    }
    let mut idx = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let re = params[idx];
            let im = params[idx + 1];
            idx += 2;
            m[[i, j]] = C64::new(re, -im);
            m[[j, i]] = C64::new(re, im);
        }
    }
    m
}

fn linear_inversion(records: &[ProjectionRecord], d: usize) -> Result<DensityMatrix> {
    let n_params = d * d;
    let n_rec = records.len();
    // <m|B_k|m> for each basis element: assemble the design matrix.
    let mut design = DMatrix::<f64>::zeros(n_rec, n_params);
    let mut rhs = nalgebra::DVector::<f64>::zeros(n_rec);
    for (r, rec) in records.iter().enumerate() {
        rhs[r] = rec.counts;
        let a = rec.projector.amplitudes();
        for i in 0..d {
            design[(r, i)] = a[i].norm_sqr();
        }
        let mut idx = d;
        for i in 0..d {
            for j in (i + 1)..d {
                let cross = a[i].conj() * a[j];
                // d/d(re) of <m|rho|m> with rho_ij = re - i*im, rho_ji = re + i*im
                design[(r, idx)] = 2.0 * cross.re;
                design[(r, idx + 1)] = 2.0 * cross.im;
                idx += 2;
            }
        }
    }
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * max_sv.max(1e-300))
        .count();
    if rank < n_params {
        return Err(Error::Degenerate(format!(
            "rank-deficient projector set: rank {rank} < {n_params}"
        )));
    }
    let sol = svd
        .solve(&rhs, 1e-12 * max_sv)
        .map_err(|e| Error::Degenerate(format!("least-squares solve failed: {e}")))?;
    let raw = hermitian_from_params(sol.as_slice(), d);
    project_to_state(&raw, d)
}

/// Clip negative eigenvalues and renormalise the trace.
fn project_to_state(raw: &Array2<C64>, d: usize) -> Result<DensityMatrix> {
    let na = DMatrix::from_fn(d, d, |i, j| raw[[i, j]]);
    let eig = na.symmetric_eigen();
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("reconstruction collapsed to zero".into()));
    }
    let mut out = Array2::from_elem((d, d), C64::new(0.0, 0.0));
    for (k, &lam) in clipped.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let col = eig.eigenvectors.column(k);
        for i in 0..d {
            for j in 0..d {
                out[[i, j]] += col[i] * col[j].conj() * (lam / total);
            }
        }
    }
    // Symmetrise away rounding and re-pin the trace.
    let mut herm = Array2::from_shape_fn((d, d), |(i, j)| {
        (out[[i, j]] + out[[j, i]].conj()) * 0.5
    });
    let tr: f64 = (0..d).map(|i| herm[[i, i]].re).sum();
    herm.mapv_inplace(|v| v / tr);
    DensityMatrix::new(herm)
}

fn max_likelihood(records: &[ProjectionRecord], d: usize) -> Result<DensityMatrix> {
    let total: f64 = records.iter().map(|r| r.counts).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("no counts to fit".into()));
    }
    let freqs: Vec<f64> = records.iter().map(|r| r.counts / total).collect();
    let mut rho = DensityMatrix::maximally_mixed(d)?.entries.clone();
    let mut residual = f64::INFINITY;
    for iter in 0..MLE_MAX_ITER {
        // p_i normalized over the projector set
        let probs: Vec<f64> = records
            .iter()
            .map(|r| {
                let a = r.projector.amplitudes();
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        acc += a[i].conj() * rho[[i, j]] * a[j];
                    }
                }
                acc.re.max(1e-300)
            })
            .collect();
        let p_sum: f64 = probs.iter().sum();

        let mut r_op = Array2::from_elem((d, d), C64::new(0.0, 0.0));
        for (rec, (&f, &p)) in records.iter().zip(freqs.iter().zip(&probs)) {
            let a = rec.projector.amplitudes();
            let w = f / (p / p_sum);
            for i in 0..d {
                for j in 0..d {
                    r_op[[i, j]] += a[i] * a[j].conj() * w;
                }
            }
        }
        // rho' = R rho R / tr
        let rr = mat_mul(&mat_mul(&r_op, &rho), &r_op);
        let tr: f64 = (0..d).map(|i| rr[[i, i]].re).sum();
        if !(tr > 0.0) {
            return Err(Error::Degenerate("likelihood iteration collapsed".into()));
        }
        let next = rr.mapv(|v| v / tr);
        residual = next
            .iter()
            .zip(rho.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        rho = next;
        if residual <= MLE_TOL {
            // Hermitise rounding drift before validation.
            let herm = Array2::from_shape_fn((d, d), |(i, j)| {
                (rho[[i, j]] + rho[[j, i]].conj()) * 0.5
            });
            return project_to_state(&herm, d).map_err(|_| Error::NonConvergence {
                iterations: iter + 1,
                residual,
            });
        }
    }
    Err(Error::NonConvergence { iterations: MLE_MAX_ITER, residual })
}

fn mat_mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let d = a.dim().0;
    Array2::from_shape_fn((d, d), |(i, j)| {
        (0..d).map(|k| a[[i, k]] * b[[k, j]]).sum()
    })
}
