//! `exp(+iHt)` by Hermitian eigendecomposition.
//!
//! The matrix is split into the connected components of its sparsity graph
//! (H₊ separates into its two spin sectors, a bare `J_y` into fixed total
//! phonon number). Each component is then gauged: if some diagonal phase
//! `G` makes `G†HG` real, the cheaper real symmetric solver is used. H₊ is
//! real under `|n_a, n_b⟩ → i^{n_b}|n_a, n_b⟩`.
//!
//! A gauged block equal to `s·D M D` for an earlier block `M`, with `D`
//! diagonal ±1 and `s = ±1`, reuses that block's eigenvectors (`D v`, `sλ`).
//! The relation is checked entry by entry before reuse. For H₊ the spin-down
//! sector is `−P_b H_↑ P_b`.

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;

use super::sparse::SparseMatrix;
use super::{FockConfig, FockState};
use crate::error::{Error, Result};

enum Decomposition {
    Real { gauge: Vec<Complex64>, vals: Vec<f64>, vecs: Mat<f64> },
    /// Eigenvectors of block `source` with eigenvalues times `sign`; the
    /// ±1 signs are folded into `gauge`.
    Mirror { gauge: Vec<Complex64>, source: usize, sign: f64 },
    Complex { vals: Vec<f64>, vecs: Vec<Complex64> },
}

/// Gauged real entries `(row, col, value)` in local indices, row-major.
type RealEntries = Vec<(usize, usize, f64)>;

/// Finds `d ∈ {±1}^m` with `b = sign · d a d`, if it exists.
fn mirror_signs(a: &RealEntries, b: &RealEntries, m: usize, sign: f64) -> Option<Vec<f64>> {
    if a.len() != b.len() {
        return None;
    }
    let tol = 1e-14 * a.iter().fold(1.0_f64, |acc, e| acc.max(e.2.abs()));
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (&(ra, ca, va), &(rb, cb, vb)) in a.iter().zip(b) {
        if ra != rb || ca != cb {
            return None;
        }
        if ra == ca {
            if (vb - sign * va).abs() > tol {
                return None;
            }
        } else {
            // b = sign·d_r·d_c·a  ⇒  d_r·d_c = b/(sign·a)
            let q = vb / (sign * va);
            if (q.abs() - 1.0).abs() > 1e-13 {
                return None;
            }
            adj[ra].push((ca, q.signum()));
        }
    }
    let mut d = vec![0.0; m];
    for start in 0..m {
        if d[start] != 0.0 {
            continue;
        }
        d[start] = 1.0;
        let mut stack = vec![start];
        while let Some(r) = stack.pop() {
            for &(c, q) in &adj[r] {
                let want = d[r] * q;
                if d[c] == 0.0 {
                    d[c] = want;
                    stack.push(c);
                } else if d[c] != want {
                    return None;
                }
            }
        }
    }
    Some(d)
}

struct Block {
    indices: Vec<usize>,
    decomposition: Decomposition,
}

/// Cached eigendecomposition of a Hermitian matrix, reusable for any duration.
pub struct StaticPropagator {
    dim: usize,
    blocks: Vec<Block>,
}

impl std::fmt::Debug for StaticPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StaticPropagator")
            .field("dim", &self.dim)
            .field("blocks", &self.blocks.len())
            .finish()
    }
}

fn components(h: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = h.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (r, c, _) in h.triplets() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Finds a diagonal phase making the block real, if one exists.
fn real_gauge(h: &SparseMatrix, indices: &[usize], local: &[usize]) -> Option<Vec<Complex64>> {
    let m = indices.len();
    let mut gauge: Vec<Option<Complex64>> = vec![None; m];
    let mut queue = std::collections::VecDeque::new();
    gauge[0] = Some(Complex64::new(1.0, 0.0));
    queue.push_back(0usize);
    while let Some(li) = queue.pop_front() {
        let gi = gauge[li].expect("queued nodes carry a gauge");
        for (c, v) in h.row(indices[li]) {
            let lj = local[c];
            if lj == li || gauge[lj].is_some() {
                continue;
            }
            gauge[lj] = Some(gi * v.conj() / v.norm());
            queue.push_back(lj);
        }
    }
    let gauge: Vec<Complex64> = gauge.into_iter().collect::<Option<_>>()?;
    for (li, &gi) in indices.iter().enumerate() {
        for (c, v) in h.row(gi) {
            let w = gauge[li].conj() * v * gauge[local[c]];
            if w.im.abs() > 1e-13 * v.norm() {
                return None;
            }
        }
    }
    Some(gauge)
}

impl StaticPropagator {
    pub fn new(h: &SparseMatrix) -> Result<Self> {
        let scale = h.max_abs().max(1.0);
        if !h.is_hermitian(1e-12 * scale) {
            return Err(Error::Invalid("propagator needs a Hermitian matrix".into()));
        }
        let n = h.dim();
        let mut local = vec![0usize; n];
        let mut blocks: Vec<Block> = Vec::new();
        let mut entries: Vec<Option<RealEntries>> = Vec::new();
        for indices in components(h) {
            for (li, &gi) in indices.iter().enumerate() {
                local[gi] = li;
            }
            let m = indices.len();
            let (decomposition, real) = if let Some(gauge) = real_gauge(h, &indices, &local) {
                let mut real: RealEntries = Vec::new();
                for (li, &gi) in indices.iter().enumerate() {
                    let mut row: Vec<(usize, usize, f64)> = h
                        .row(gi)
                        .map(|(c, v)| (li, local[c], (gauge[li].conj() * v * gauge[local[c]]).re))
                        .collect();
                    row.sort_by_key(|e| e.1);
                    real.extend(row);
                }
                let mirror = entries.iter().enumerate().find_map(|(src, e)| {
                    let e = e.as_ref()?;
                    if blocks[src].indices.len() != m || !matches!(blocks[src].decomposition, Decomposition::Real { .. }) {
                        return None;
                    }
                    [1.0, -1.0].into_iter().find_map(|sign| mirror_signs(e, &real, m, sign).map(|d| (src, sign, d)))
                });
                let dec = match mirror {
                    Some((source, sign, d)) => Decomposition::Mirror {
                        gauge: gauge.iter().zip(&d).map(|(g, s)| g * s).collect(),
                        source,
                        sign,
                    },
                    None => {
                        let mut dense = Mat::<f64>::zeros(m, m);
                        for &(r, c, v) in &real {
                            dense.write(r, c, v);
                        }
                        let eig = dense.selfadjoint_eigendecomposition(Side::Lower);
                        let vals = (0..m).map(|k| eig.s().column_vector().read(k)).collect();
                        Decomposition::Real { gauge, vals, vecs: eig.u().to_owned() }
                    }
                };
                (dec, Some(real))
            } else {
                let mut dense = Mat::<c64>::zeros(m, m);
                for (li, &gi) in indices.iter().enumerate() {
                    for (c, v) in h.row(gi) {
                        dense.write(li, local[c], c64::new(v.re, v.im));
                    }
                }
                let eig = dense.selfadjoint_eigendecomposition(Side::Lower);
                let vals = (0..m).map(|k| eig.s().column_vector().read(k).re).collect();
                let u = eig.u();
                let mut vecs = Vec::with_capacity(m * m);
                for col in 0..m {
                    for row in 0..m {
                        let z = u.read(row, col);
                        vecs.push(Complex64::new(z.re, z.im));
                    }
                }
                (Decomposition::Complex { vals, vecs }, None)
            };
            blocks.push(Block { indices, decomposition });
            entries.push(real);
        }
        Ok(Self { dim: n, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// All eigenvalues, unsorted across blocks.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| match &b.decomposition {
                Decomposition::Real { vals, .. } | Decomposition::Complex { vals, .. } => vals.clone(),
                Decomposition::Mirror { source, sign, .. } => match &self.blocks[*source].decomposition {
                    Decomposition::Real { vals, .. } => vals.iter().map(|v| sign * v).collect(),
                    _ => unreachable!("mirrors point at real blocks"),
                },
            })
            .collect()
    }

    /// `exp(+iHt) ψ`.
    pub fn apply(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        assert_eq!(psi.len(), self.dim);
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for block in &self.blocks {
            let x: Vec<Complex64> = block.indices.iter().map(|&i| psi[i]).collect();
            if x.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            let y = match &block.decomposition {
                Decomposition::Real { gauge, vals, vecs } => apply_real(gauge, vals, vecs, &x, t),
                Decomposition::Mirror { gauge, source, sign } => match &self.blocks[*source].decomposition {
                    // exp(i·s·DMD·t) = D exp(iM·st) D, with D folded into the gauge.
                    Decomposition::Real { vals, vecs, .. } => apply_real(gauge, vals, vecs, &x, sign * t),
                    _ => unreachable!("mirrors point at real blocks"),
                },
                Decomposition::Complex { vals, vecs } => apply_complex(vals, vecs, &x, t),
            };
            for (&i, v) in block.indices.iter().zip(y) {
                out[i] = v;
            }
        }
        out
    }

    pub fn apply_state(&self, state: &FockState, t: f64) -> FockState {
        let (na, nb) = state.cutoffs();
        FockState::from_vec(na, nb, self.apply(state.as_slice(), t)).expect("dimension preserved")
    }
}

fn apply_real(gauge: &[Complex64], vals: &[f64], vecs: &Mat<f64>, x: &[Complex64], t: f64) -> Vec<Complex64> {
    let m = x.len();
    let xg = Mat::<f64>::from_fn(m, 2, |i, k| {
        let z = gauge[i].conj() * x[i];
        if k == 0 {
            z.re
        } else {
            z.im
        }
    });
    let coeff = vecs.transpose() * &xg;
    let rotated = Mat::<f64>::from_fn(m, 2, |i, k| {
        let (s, c) = (vals[i] * t).sin_cos();
        let (re, im) = (coeff.read(i, 0), coeff.read(i, 1));
        if k == 0 {
            re * c - im * s
        } else {
            re * s + im * c
        }
    });
    let back = vecs * &rotated;
    (0..m).map(|i| gauge[i] * Complex64::new(back.read(i, 0), back.read(i, 1))).collect()
}

fn apply_complex(vals: &[f64], vecs: &[Complex64], x: &[Complex64], t: f64) -> Vec<Complex64> {
    let m = x.len();
    let mut coeff = vec![Complex64::new(0.0, 0.0); m];
    for (k, ck) in coeff.iter_mut().enumerate() {
        let col = &vecs[k * m..(k + 1) * m];
        let proj: Complex64 = col.iter().zip(x).map(|(v, xi)| v.conj() * xi).sum();
        *ck = proj * Complex64::from_polar(1.0, vals[k] * t);
    }
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for (k, ck) in coeff.iter().enumerate() {
        let col = &vecs[k * m..(k + 1) * m];
        for (yi, v) in y.iter_mut().zip(col) {
            *yi += v * ck;
        }
    }
    y
}

/// `exp(+iHt)·state`, failing if the result leaks into the top Fock shells.
pub fn propagate_static(state: &FockState, h: &SparseMatrix, t: f64, config: &FockConfig) -> Result<FockState> {
    let out = StaticPropagator::new(h)?.apply_state(state, t);
    let leak = out.leakage();
    if leak > config.leakage_tol {
        return Err(Error::Truncation { leakage: leak, tolerance: config.leakage_tol });
    }
    Ok(out)
}
