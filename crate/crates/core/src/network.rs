//! Reduced AC network seen from the converter buses and its nodal
//! susceptance matrix.
//!
//! Susceptances use the positive-definite sign convention: `B_ii` is the sum
//! of all susceptances incident to bus `i` (grounding included) and
//! `B_ij = -1/x_ij`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BusId(pub String);

impl BusId {
    pub fn new(id: impl Into<String>) -> Self {
        BusId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BusId {
    fn from(s: &str) -> Self {
        BusId(s.to_owned())
    }
}

/// Purely reactive branch between two buses, reactance in p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    pub x: f64,
}

impl Branch {
    pub fn new(from: impl Into<BusId>, to: impl Into<BusId>, x: f64) -> Self {
        Branch { from: from.into(), to: to.into(), x }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusSpec {
    pub id: BusId,
    /// Thevenin grounding reactance in p.u.; `None` for an ungrounded bus.
    pub thevenin_x: Option<f64>,
    pub is_converter: bool,
}

impl BusSpec {
    pub fn converter(id: impl Into<BusId>, thevenin_x: Option<f64>) -> Self {
        BusSpec { id: id.into(), thevenin_x, is_converter: true }
    }

    pub fn passive(id: impl Into<BusId>, thevenin_x: Option<f64>) -> Self {
        BusSpec { id: id.into(), thevenin_x, is_converter: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AcNetwork {
    pub buses: Vec<BusSpec>,
    pub branches: Vec<Branch>,
}

impl AcNetwork {
    pub fn new(buses: Vec<BusSpec>, branches: Vec<Branch>) -> Self {
        AcNetwork { buses, branches }
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.buses.iter().map(|b| b.id.clone()).collect()
    }

    pub fn index_of(&self, id: &BusId) -> Option<usize> {
        self.buses.iter().position(|b| &b.id == id)
    }

    /// Combines parallel branches into one by summing their susceptances.
    /// The first occurrence of each unordered pair keeps its orientation
    /// and position.
    pub fn merge_parallel(&self) -> AcNetwork {
        let mut order: Vec<(BusId, BusId)> = Vec::new();
        let mut susceptance: HashMap<(BusId, BusId), f64> = HashMap::new();
        for br in &self.branches {
            let key = unordered(&br.from, &br.to);
            match susceptance.get_mut(&key) {
                Some(b) => *b += 1.0 / br.x,
                None => {
                    order.push((br.from.clone(), br.to.clone()));
                    susceptance.insert(key, 1.0 / br.x);
                }
            }
        }
        let branches = order
            .into_iter()
            .map(|(from, to)| {
                let b = susceptance[&unordered(&from, &to)];
                Branch { from, to, x: 1.0 / b }
            })
            .collect();
        AcNetwork { buses: self.buses.clone(), branches }
    }
}

fn unordered(a: &BusId, b: &BusId) -> (BusId, BusId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Nodal susceptance matrix over the buses of an [`AcNetwork`], in bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptanceMatrix {
    pub bus_ids: Vec<BusId>,
    pub entries: DMatrix<f64>,
}

impl SusceptanceMatrix {
    pub fn n(&self) -> usize {
        self.bus_ids.len()
    }
}

/// Lists every violation of the network invariants. An empty list means the
/// network can be turned into a positive-definite susceptance matrix.
pub fn validate(net: &AcNetwork) -> Vec<Error> {
    let mut out = Vec::new();
    if net.buses.is_empty() {
        out.push(Error::EmptyNetwork);
        return out;
    }

    let mut index: HashMap<&BusId, usize> = HashMap::new();
    for (i, bus) in net.buses.iter().enumerate() {
        if index.insert(&bus.id, i).is_some() {
            out.push(Error::DuplicateBus(bus.id.0.clone()));
        }
        if let Some(x) = bus.thevenin_x {
            if !(x > 0.0) || !x.is_finite() {
                out.push(Error::NonPositiveTheveninReactance { bus: bus.id.0.clone(), x });
            }
        }
    }

    let n = net.buses.len();
    let mut adjacency = vec![Vec::new(); n];
    for br in &net.branches {
        let (Some(&i), Some(&j)) = (index.get(&br.from), index.get(&br.to)) else {
            for end in [&br.from, &br.to] {
                if !index.contains_key(end) {
                    out.push(Error::UnknownBus(end.0.clone()));
                }
            }
            continue;
        };
        if i == j {
            out.push(Error::SelfLoop(br.from.0.clone()));
            continue;
        }
        if !(br.x > 0.0) || !br.x.is_finite() {
            out.push(Error::NonPositiveReactance {
                from: br.from.0.clone(),
                to: br.to.0.clone(),
                x: br.x,
            });
        }
        adjacency[i].push(j);
        adjacency[j].push(i);
    }

    // BFS from the ground node: every grounded bus is a neighbour of ground.
    let mut reached = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, bus) in net.buses.iter().enumerate() {
        if bus.thevenin_x.is_some() {
            reached[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adjacency[i] {
            if !reached[j] {
                reached[j] = true;
                queue.push_back(j);
            }
        }
    }
    let floating: Vec<String> = net
        .buses
        .iter()
        .zip(&reached)
        .filter(|(_, &r)| !r)
        .map(|(b, _)| b.id.0.clone())
        .collect();
    if !floating.is_empty() {
        out.push(Error::DisconnectedFromGround { buses: floating });
    }
    out
}

/// Builds `B` with `B_ii = 1/x_th,i + sum_j 1/x_ij` and `B_ij = -1/x_ij`.
/// Parallel branches add their susceptances.
pub fn build_susceptance(net: &AcNetwork) -> Result<SusceptanceMatrix> {
    if let Some(err) = validate(net).into_iter().next() {
        return Err(err);
    }
    let n = net.len();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for (i, bus) in net.buses.iter().enumerate() {
        if let Some(x) = bus.thevenin_x {
            b[(i, i)] += 1.0 / x;
        }
    }
    for br in &net.branches {
        let i = net.index_of(&br.from).expect("validated");
        let j = net.index_of(&br.to).expect("validated");
        let y = 1.0 / br.x;
        b[(i, i)] += y;
        b[(j, j)] += y;
        let off = b[(i, j)] - y;
        b[(i, j)] = off;
        b[(j, i)] = off;
    }
    Ok(SusceptanceMatrix { bus_ids: net.bus_ids(), entries: b })
}

/// Eliminates every bus not in `keep` by Schur complement and returns the
/// equivalent network over the kept buses (in their original order).
pub fn kron_reduce(net: &AcNetwork, keep: &[BusId]) -> Result<AcNetwork> {
    let keep_set: HashSet<&BusId> = keep.iter().collect();
    for id in keep {
        if net.index_of(id).is_none() {
            return Err(Error::UnknownBus(id.0.clone()));
        }
    }
    if keep_set.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    if let Some(bus) = net.buses.iter().find(|b| b.is_converter && !keep_set.contains(&b.id)) {
        return Err(Error::EliminatingConverterBus(bus.id.0.clone()));
    }

    let full = build_susceptance(net)?;
    let kept: Vec<usize> = (0..net.len()).filter(|&i| keep_set.contains(&net.buses[i].id)).collect();
    let elim: Vec<usize> = (0..net.len()).filter(|&i| !keep_set.contains(&net.buses[i].id)).collect();
    if elim.is_empty() {
        return Ok(net.clone());
    }

    let b = &full.entries;
    let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |r, c| b[(rows[r], cols[c])]);
    let b_kk = sub(&kept, &kept);
    let b_ke = sub(&kept, &elim);
    let b_ee = sub(&elim, &elim);

    let chol = b_ee.cholesky().ok_or(Error::SingularInteriorBlock)?;
    let reduced = b_kk - &b_ke * chol.solve(&b_ke.transpose());
    if reduced.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInteriorBlock);
    }

    let scale = reduced.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tiny = 1e-12 * scale;
    let m = kept.len();
    let mut buses = Vec::with_capacity(m);
    for (r, &i) in kept.iter().enumerate() {
        let row_sum: f64 = reduced.row(r).iter().sum();
        let src = &net.buses[i];
        buses.push(BusSpec {
            id: src.id.clone(),
            thevenin_x: (row_sum > tiny).then(|| 1.0 / row_sum),
            is_converter: src.is_converter,
        });
    }
    let mut branches = Vec::new();
    for r in 0..m {
        for c in (r + 1)..m {
            let v = 0.5 * (reduced[(r, c)] + reduced[(c, r)]);
            if v < -tiny {
                branches.push(Branch {
                    from: buses[r].id.clone(),
                    to: buses[c].id.clone(),
                    x: -1.0 / v,
                });
            }
        }
    }
    Ok(AcNetwork { buses, branches })
}
