//! Simulated locality-aware Skip Graph overlay.
//!
//! Nodes and landmarks live in the unit square; RTT is the Euclidean distance
//! scaled to milliseconds. Name IDs come from recursive median bisection of the
//! node set, so two nodes sharing a longer name-ID prefix sit in a smaller
//! common cell and are expected to be closer.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Fixed-length binary name ID, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NameId {
    bits: u64,
    len: u32,
}

impl NameId {
    pub const MAX_BITS: u32 = 63;

    pub fn new(bits: u64, len: u32) -> Self {
        assert!(
            len <= Self::MAX_BITS,
            "name id longer than {} bits",
            Self::MAX_BITS
        );
        let mask = if len == 0 { 0 } else { (1u64 << len) - 1 };
        NameId {
            bits: bits & mask,
            len,
        }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Option<Self> {
        if s.len() as u32 > Self::MAX_BITS {
            return None;
        }
        let mut bits = 0u64;
        for ch in s.chars() {
            bits = (bits << 1)
                | match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return None,
                };
        }
        Some(NameId::new(bits, s.len() as u32))
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Integer value of the leading `k` bits.
    pub fn prefix(&self, k: u32) -> u64 {
        assert!(
            k <= self.len,
            "prefix of {k} bits from a {}-bit name id",
            self.len
        );
        if k == 0 {
            0
        } else {
            self.bits >> (self.len - k)
        }
    }
}

impl fmt::Display for NameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.len).rev() {
            f.write_str(if (self.bits >> i) & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Number of leading bits on which `a` and `b` agree.
///
/// Panics when the lengths differ.
pub fn common_prefix_length(a: NameId, b: NameId) -> u32 {
    assert_eq!(a.len, b.len, "name ids of different lengths");
    if a.len == 0 {
        return 0;
    }
    let diff = a.bits ^ b.bits;
    if diff == 0 {
        a.len
    } else {
        // Bits live in the low `len` positions.
        diff.leading_zeros() - (64 - a.len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyParams {
    pub n: usize,
    pub num_landmarks: usize,
    pub name_id_bits: u32,
    /// Milliseconds per unit of distance.
    pub rtt_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePlacement {
    pub pos: Point,
    pub numerical_id: u64,
    pub name_id: NameId,
    pub region: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<NodePlacement>,
    pub landmarks: Vec<Point>,
    pub name_id_bits: u32,
    pub rtt_scale: f64,
}

impl Topology {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_regions(&self) -> usize {
        self.landmarks.len()
    }

    /// Round-trip time between two nodes in milliseconds.
    pub fn rtt(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.nodes[i].pos.distance(&self.nodes[j].pos) * self.rtt_scale
    }

    pub fn rtt_to_landmark(&self, node: usize, landmark: usize) -> f64 {
        self.nodes[node].pos.distance(&self.landmarks[landmark]) * self.rtt_scale
    }

    /// Index of the minimum-RTT landmark, ties to the lowest index.
    pub fn closest_landmark(&self, pos: &Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, lm) in self.landmarks.iter().enumerate() {
            let d = pos.distance(lm);
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        best
    }

    pub fn region_populations(&self) -> Vec<usize> {
        let mut pops = vec![0; self.num_regions()];
        for node in &self.nodes {
            pops[node.region] += 1;
        }
        pops
    }

    /// Writes one CSV row per node: `id,x,y,numerical_id,name_id,region`.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let write = |out: &mut std::io::BufWriter<std::fs::File>| -> std::io::Result<()> {
            writeln!(out, "id,x,y,numerical_id,name_id,region")?;
            for (i, node) in self.nodes.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    i, node.pos.x, node.pos.y, node.numerical_id, node.name_id, node.region
                )?;
            }
            out.flush()
        };
        write(&mut out).map_err(|e| Error::io(path, e))
    }
}

/// Places nodes and landmarks uniformly in the unit square, draws distinct
/// numerical IDs, resolves regions and assigns name IDs.
pub fn generate_topology(params: &TopologyParams, seed: u64) -> Result<Topology> {
    if params.n < 2 {
        return Err(Error::Config(format!(
            "need at least 2 nodes, got {}",
            params.n
        )));
    }
    if params.num_landmarks == 0 {
        return Err(Error::Config("need at least one landmark".into()));
    }
    if params.name_id_bits == 0 || params.name_id_bits > NameId::MAX_BITS {
        return Err(Error::Config(format!(
            "name id length must be in 1..={}, got {}",
            NameId::MAX_BITS,
            params.name_id_bits
        )));
    }
    if !(params.rtt_scale > 0.0) {
        return Err(Error::Config("rtt_scale must be positive".into()));
    }

    let mut rng = stream_rng(seed, Stream::Topology, 0);
    let landmarks: Vec<Point> = (0..params.num_landmarks)
        .map(|_| Point::new(rng.gen(), rng.gen()))
        .collect();

    let mut seen = HashSet::with_capacity(params.n);
    let mut nodes = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let pos = Point::new(rng.gen(), rng.gen());
        let numerical_id = loop {
            let id: u64 = rng.gen();
            if seen.insert(id) {
                break id;
            }
        };
        nodes.push(NodePlacement {
            pos,
            numerical_id,
            name_id: NameId::new(0, params.name_id_bits),
            region: 0,
        });
    }

    let mut topology = Topology {
        nodes,
        landmarks,
        name_id_bits: params.name_id_bits,
        rtt_scale: params.rtt_scale,
    };
    for i in 0..topology.n() {
        topology.nodes[i].region = topology.closest_landmark(&topology.nodes[i].pos);
    }
    assign_name_ids(&mut topology);
    Ok(topology)
}

/// Assigns `name_id_bits`-bit name IDs by recursive median bisection,
/// splitting on x at even depths and y at odd depths. The lower half of each
/// split gets bit 0.
pub fn assign_name_ids(topology: &mut Topology) {
    let m = topology.name_id_bits;
    let mut codes = vec![0u64; topology.n()];
    let mut members: Vec<usize> = (0..topology.n()).collect();
    bisect(topology, &mut members, 0, m, &mut codes);
    for (node, code) in topology.nodes.iter_mut().zip(codes) {
        node.name_id = NameId::new(code, m);
    }
}

fn bisect(topology: &Topology, members: &mut [usize], depth: u32, m: u32, codes: &mut [u64]) {
    if depth == m {
        return;
    }
    let axis = |i: usize| {
        let p = topology.nodes[i].pos;
        if depth.is_multiple_of(2) {
            p.x
        } else {
            p.y
        }
    };
    members.sort_by(|&a, &b| axis(a).total_cmp(&axis(b)).then(a.cmp(&b)));
    let half = members.len().div_ceil(2);
    let shift = m - depth - 1;
    let (lower, upper) = members.split_at_mut(half);
    for &i in upper.iter() {
        codes[i] |= 1 << shift;
    }
    if lower.len() > 1 {
        bisect(topology, lower, depth + 1, m, codes);
    }
    if upper.len() > 1 {
        bisect(topology, upper, depth + 1, m, codes);
    }
}

/// Number of bits identifying a virtual node: `ceil(log2 vs_size)`.
pub fn virtual_id_bits(vs_size: usize) -> u32 {
    assert!(vs_size >= 1, "virtual system needs at least one node");
    usize::BITS - (vs_size - 1).leading_zeros()
}

/// Original nodes grouped by (region, virtual node), each group sorted by
/// numerical ID so a walk over it follows ring order.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualIndex {
    pub id_bits: u32,
    buckets: Vec<Vec<Vec<usize>>>,
    by_region: Vec<Vec<usize>>,
}

impl VirtualIndex {
    pub fn new(topology: &Topology, vs_size: usize) -> Self {
        let id_bits = virtual_id_bits(vs_size);
        let ids = 1usize << id_bits;
        let mut buckets = vec![vec![Vec::new(); ids]; topology.num_regions()];
        let mut by_region = vec![Vec::new(); topology.num_regions()];
        for (i, node) in topology.nodes.iter().enumerate() {
            let v = node.name_id.prefix(id_bits) as usize;
            buckets[node.region][v].push(i);
            by_region[node.region].push(i);
        }
        let key = |i: &usize| topology.nodes[*i].numerical_id;
        for region in buckets.iter_mut() {
            for bucket in region.iter_mut() {
                bucket.sort_by_key(key);
            }
        }
        for region in by_region.iter_mut() {
            region.sort_by_key(key);
        }
        VirtualIndex {
            id_bits,
            buckets,
            by_region,
        }
    }

    pub fn virtual_ids(&self) -> usize {
        1 << self.id_bits
    }

    pub fn bucket(&self, region: usize, vnode: usize) -> &[usize] {
        &self.buckets[region][vnode]
    }

    pub fn region_nodes(&self, region: usize) -> &[usize] {
        &self.by_region[region]
    }
}

/// What a search needs to know about the live state of a node.
pub trait CandidateView {
    /// Online, with free storage, and not excluded by the caller.
    fn is_eligible(&self, node: usize) -> bool;
    fn utility_score(&self, node: usize) -> f64;
    fn numerical_id(&self, node: usize) -> u64;
}

/// Walks at most `alpha` eligible nodes of `(region, vrep)` in ring order from
/// a random entry and returns the one with the highest utility score (ties to
/// the lowest numerical ID).
pub fn search_for_utility<V: CandidateView, R: Rng + ?Sized>(
    index: &VirtualIndex,
    vrep: usize,
    region: usize,
    alpha: usize,
    view: &V,
    rng: &mut R,
) -> Option<usize> {
    assert!(alpha >= 1, "alpha must be at least 1");
    let eligible: Vec<usize> = index
        .bucket(region, vrep)
        .iter()
        .copied()
        .filter(|&i| view.is_eligible(i))
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let entry = rng.gen_range(0..eligible.len());
    best_of(
        (0..alpha.min(eligible.len())).map(|k| eligible[(entry + k) % eligible.len()]),
        view,
    )
}

/// Highest-score node of `candidates`, ties to the lowest numerical ID.
pub(crate) fn best_of<V: CandidateView>(
    candidates: impl IntoIterator<Item = usize>,
    view: &V,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let score = view.utility_score(i);
        best = match best {
            None => Some((i, score)),
            Some((b, bs)) => {
                if score > bs || (score == bs && view.numerical_id(i) < view.numerical_id(b)) {
                    Some((i, score))
                } else {
                    Some((b, bs))
                }
            }
        };
    }
    best.map(|(i, _)| i)
}
