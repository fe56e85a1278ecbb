#![allow(dead_code)]

use gscr_core::{AcNetwork, Branch, BusSpec, Converter, ConverterSet};
use rand::Rng;

pub fn triple_infeed() -> AcNetwork {
    AcNetwork::new(
        vec![
            BusSpec::converter("1", Some(1.0 / 1.5)),
            BusSpec::converter("2", Some(1.0 / 3.0)),
            BusSpec::converter("3", Some(1.0 / 3.0)),
        ],
        vec![
            Branch::new("1", "2", 1.0 / 1.5),
            Branch::new("1", "3", 1.0 / 1.5),
            Branch::new("2", "3", 1.0 / 1.5),
        ],
    )
}

pub fn converters(p: &[f64], t: &[f64]) -> ConverterSet {
    ConverterSet::new(
        p.iter()
            .zip(t)
            .enumerate()
            .map(|(i, (&p, &t))| Converter::new((i + 1).to_string().as_str(), p, t))
            .collect(),
    )
}

/// Random network over buses "1".."n": a spanning tree plus extra branches,
/// with at least one grounded bus.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> AcNetwork {
    let buses = (0..n)
        .map(|i| {
            let grounded = i == 0 || rng.random_bool(0.5);
            BusSpec::converter((i + 1).to_string().as_str(), grounded.then(|| rng.random_range(0.1..2.0)))
        })
        .collect();
    let mut branches = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        branches.push(Branch::new((j + 1).to_string().as_str(), (i + 1).to_string().as_str(), rng.random_range(0.1..2.0)));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(0.3) {
                branches.push(Branch::new((i + 1).to_string().as_str(), (j + 1).to_string().as_str(), rng.random_range(0.1..2.0)));
            }
        }
    }
    AcNetwork::new(buses, branches)
}

/// Cyclic Jacobi eigensolver for small dense symmetric matrices.
/// Returns ascending eigenvalues and the matching unit eigenvectors as columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| m[a][a].total_cmp(&m[b][b]));
    let vals = idx.iter().map(|&i| m[i][i]).collect();
    let vecs = (0..n).map(|r| idx.iter().map(|&i| v[r][i]).collect()).collect();
    (vals, vecs)
}

/// Schur complement `A_kk - A_ke A_ee⁻¹ A_ek` by Gaussian elimination of the
/// `elim` indices one at a time.
pub fn schur_complement(a: &[Vec<f64>], keep: &[usize]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m = a.to_vec();
    let mut alive: Vec<bool> = vec![true; n];
    for e in (0..n).filter(|i| !keep.contains(i)) {
        let pivot = m[e][e];
        for i in 0..n {
            for j in 0..n {
                if alive[i] && alive[j] && i != e && j != e {
                    m[i][j] -= m[i][e] * m[e][j] / pivot;
                }
            }
        }
        alive[e] = false;
    }
    keep.iter().map(|&i| keep.iter().map(|&j| m[i][j]).collect()).collect()
}

pub fn to_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}
