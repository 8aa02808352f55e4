//! Symmetric eigen-decomposition by cyclic Jacobi rotations.
//!
//! Eigenvalues are returned in descending order. Ties keep the order in which
//! they come off the Jacobi diagonal (a stable sort), and each eigenvector is
//! oriented so its largest-magnitude component is positive, the first such
//! component winning ties. Both rules exist so that eigenvectors of different
//! windows can be compared component by component.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Maximum number of full sweeps over the upper triangle.
pub const MAX_SWEEPS: usize = 100;

/// Tag recorded with every decomposition.
pub const CONVENTION: &str = "descending-stable; largest-magnitude component positive, lowest index on ties";

/// Convergence threshold on the off-diagonal Frobenius norm, per unit of N.
const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix and the matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpectralJson", try_from = "SpectralJson")]
pub struct SpectralDecomposition {
    tickers: Vec<String>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
    convention: String,
}

impl SpectralDecomposition {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// Sorted descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `eigenvectors()[k]` pairs with `eigenvalues()[k]`; components follow
    /// ticker order.
    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    pub fn convention(&self) -> &str {
        &self.convention
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector at 1-based `rank` (1 = largest eigenvalue).
    pub fn eigenvector(&self, rank: usize) -> Option<&[f64]> {
        rank.checked_sub(1)
            .and_then(|k| self.eigenvectors.get(k))
            .map(Vec::as_slice)
    }

    /// Matrix whose column `k` is eigenvector `k`.
    pub fn vectors_matrix(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.n(), |i, k| self.eigenvectors[k][i])
    }

    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> SquareMatrix {
        let n = self.n();
        SquareMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.eigenvectors[k][i] * self.eigenvalues[k] * self.eigenvectors[k][j])
                .sum()
        })
    }
}

/// Decomposes a correlation matrix.
pub fn eigendecompose(c: &CorrelationMatrix) -> Result<SpectralDecomposition> {
    let (eigenvalues, eigenvectors) = symmetric_eigen(c.matrix())?;
    Ok(SpectralDecomposition {
        tickers: c.tickers().to_vec(),
        eigenvalues,
        eigenvectors,
        convention: CONVENTION.to_string(),
    })
}

/// Eigenvalues (descending) and eigenvectors of any real symmetric matrix,
/// with the sign convention applied.
pub fn symmetric_eigen(m: &SquareMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Spectral("empty matrix".into()));
    }
    if !m.is_symmetric() {
        return Err(Error::Spectral("matrix is not symmetric".into()));
    }
    if (0..n).any(|i| m.row(i).iter().any(|x| !x.is_finite())) {
        return Err(Error::Spectral("matrix has non-finite entries".into()));
    }

    let (diag, v) = jacobi(m)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| {
            let mut u: Vec<f64> = (0..n).map(|i| v[(i, k)]).collect();
            orient(&mut u);
            u
        })
        .collect();
    Ok((eigenvalues, eigenvectors))
}

/// Flips `u` so that its largest-magnitude component (first on ties) is positive.
pub fn orient(u: &mut [f64]) {
    let mut best = 0;
    for (i, x) in u.iter().enumerate() {
        if x.abs() > u[best].abs() {
            best = i;
        }
    }
    if u.get(best).is_some_and(|x| *x < 0.0) {
        u.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Cyclic Jacobi: returns the unsorted diagonal and the accumulated rotations.
fn jacobi(m: &SquareMatrix) -> Result<(Vec<f64>, SquareMatrix)> {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = SquareMatrix::identity(n);
    let tol = OFF_DIAGONAL_TOL * n as f64;

    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_norm() < tol {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    let residual = a.off_diagonal_norm();
    if residual < tol {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

/// Applies the plane rotation that zeroes `a[p][q]`.
fn rotate(a: &mut SquareMatrix, v: &mut SquareMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    // Smaller root of t^2 + 2 theta t - 1 = 0, i.e. rotation angle <= pi/4.
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = a.dim();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp;
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq;
    }
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Largest eigenvalue with its eigenvector, labeled by ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketMode {
    pub eigenvalue: f64,
    pub components: Vec<TickerComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerComponent {
    pub ticker: String,
    pub value: f64,
}

pub fn market_mode(sd: &SpectralDecomposition) -> MarketMode {
    MarketMode {
        eigenvalue: sd.eigenvalues[0],
        components: sd
            .tickers
            .iter()
            .zip(&sd.eigenvectors[0])
            .map(|(t, &value)| TickerComponent {
                ticker: t.clone(),
                value,
            })
            .collect(),
    }
}

#[derive(Serialize, Deserialize)]
struct SpectralJson {
    convention: String,
    tickers: Vec<String>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<RankedVector>,
}

#[derive(Serialize, Deserialize)]
struct RankedVector {
    rank: usize,
    eigenvalue: f64,
    components: IndexMap<String, f64>,
}

impl From<SpectralDecomposition> for SpectralJson {
    fn from(sd: SpectralDecomposition) -> Self {
        let eigenvectors = sd
            .eigenvectors
            .iter()
            .enumerate()
            .map(|(k, u)| RankedVector {
                rank: k + 1,
                eigenvalue: sd.eigenvalues[k],
                components: sd.tickers.iter().cloned().zip(u.iter().copied()).collect(),
            })
            .collect();
        SpectralJson {
            convention: sd.convention,
            tickers: sd.tickers,
            eigenvalues: sd.eigenvalues,
            eigenvectors,
        }
    }
}

impl TryFrom<SpectralJson> for SpectralDecomposition {
    type Error = String;

    fn try_from(j: SpectralJson) -> std::result::Result<Self, String> {
        let n = j.tickers.len();
        if j.eigenvalues.len() != n || j.eigenvectors.len() != n {
            return Err(format!("decomposition of {n} tickers has mismatched lengths"));
        }
        let mut eigenvectors = Vec::with_capacity(n);
        for (k, rv) in j.eigenvectors.iter().enumerate() {
            if rv.rank != k + 1 {
                return Err(format!("eigenvector ranks out of order at rank {}", rv.rank));
            }
            let u = j
                .tickers
                .iter()
                .map(|t| {
                    rv.components
                        .get(t)
                        .copied()
                        .ok_or_else(|| format!("rank {} lacks ticker '{t}'", rv.rank))
                })
                .collect::<std::result::Result<Vec<f64>, String>>()?;
            eigenvectors.push(u);
        }
        Ok(SpectralDecomposition {
            tickers: j.tickers,
            eigenvalues: j.eigenvalues,
            eigenvectors,
            convention: j.convention,
        })
    }
}
