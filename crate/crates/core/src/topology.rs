//! Node geometry, radio-range overlaps and receive-point placement.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point at `t` meters from `self` towards `towards`.
    fn along(&self, towards: &Point, t: f64) -> Point {
        let d = self.distance(towards);
        Point {
            x: self.x + t * (towards.x - self.x) / d,
            y: self.y + t * (towards.y - self.y) / d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub position: Point,
    pub range_radius: f64,
    pub tx_power: f64,
}

impl Node {
    pub fn new(id: u32, position: Point, range_radius: f64, tx_power: f64) -> Result<Self> {
        let node = Self {
            id: NodeId(id),
            position,
            range_radius,
            tx_power,
        };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range_radius > 0.0) || !self.range_radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "node {}: range radius must be > 0",
                self.id
            )));
        }
        if !(self.tx_power > 0.0) || !self.tx_power.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "node {}: transmit power must be > 0",
                self.id
            )));
        }
        if !self.position.x.is_finite() || !self.position.y.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "node {}: position must be finite",
                self.id
            )));
        }
        Ok(())
    }

    /// Strictly inside the radio range.
    pub fn covers(&self, p: &Point) -> bool {
        self.position.distance(p) < self.range_radius
    }
}

/// Receive points of one overlapping pair, `first.id < second.id`.
///
/// `point_in_first` is where the first node transmits under interference
/// from the second; `point_in_second` is the mirror place.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRegion {
    pub node_pair: (NodeId, NodeId),
    pub point_in_first: Point,
    pub point_in_second: Point,
}

/// Offsets (meters, positive towards the second node) applied to the two
/// receive points of a pair after lens-centre placement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PointOffsets {
    #[serde(default)]
    pub first: f64,
    #[serde(default)]
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    nodes: Vec<Node>,
    overlaps: Vec<OverlapRegion>,
    pub path_loss_exponent: f64,
    pub reference_distance: f64,
}

impl NetworkScenario {
    /// Builds the scenario, detecting every overlap and placing its receive
    /// points. `offsets` is looked up by ordered id pair.
    pub fn new(
        mut nodes: Vec<Node>,
        path_loss_exponent: f64,
        reference_distance: f64,
        offsets: &[((NodeId, NodeId), PointOffsets)],
    ) -> Result<Self> {
        if !(path_loss_exponent >= 0.0) || !path_loss_exponent.is_finite() {
            return Err(Error::InvalidParameter(
                "path-loss exponent must be >= 0".into(),
            ));
        }
        if !(reference_distance > 0.0) || !reference_distance.is_finite() {
            return Err(Error::InvalidParameter(
                "reference distance must be > 0".into(),
            ));
        }
        nodes.sort_by_key(|n| n.id);
        let pairs = detect_overlaps(&nodes)?;
        for ((a, c), _) in offsets {
            if !pairs.contains(&(*a.min(c), *a.max(c))) {
                return Err(Error::InvalidParameter(format!(
                    "offsets given for non-overlapping pair ({a}, {c})"
                )));
            }
        }
        let overlaps = pairs
            .iter()
            .map(|&(a, c)| {
                let na = &nodes[nodes.binary_search_by_key(&a, |n| n.id).unwrap()];
                let nc = &nodes[nodes.binary_search_by_key(&c, |n| n.id).unwrap()];
                let off = offsets
                    .iter()
                    .find(|((x, y), _)| (x.min(y), x.max(y)) == (&a, &c))
                    .map(|(_, o)| *o)
                    .unwrap_or_default();
                let (p1, p2) = interference_points_with_offsets(na, nc, off)?;
                Ok(OverlapRegion {
                    node_pair: (a, c),
                    point_in_first: p1,
                    point_in_second: p2,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nodes,
            overlaps,
            path_loss_exponent,
            reference_distance,
        })
    }

    /// Sorted by id.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn overlaps(&self) -> &[OverlapRegion] {
        &self.overlaps
    }

    pub fn path_gain(&self, distance: f64) -> f64 {
        path_gain(distance, self.path_loss_exponent, self.reference_distance)
    }

    /// Overlapping neighbours of `id`, ascending.
    pub fn neighbours(&self, id: NodeId) -> Vec<NodeId> {
        self.overlaps
            .iter()
            .filter_map(|o| match o.node_pair {
                (a, c) if a == id => Some(c),
                (a, c) if c == id => Some(a),
                _ => None,
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Ordered pairs `(i, j)`, `i < j`, whose disks intersect with positive area.
///
/// Containment counts as overlap; tangency does not.
pub fn detect_overlaps(nodes: &[Node]) -> Result<Vec<(NodeId, NodeId)>> {
    if nodes.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one node is required".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for n in nodes {
        n.validate()?;
        if !seen.insert(n.id) {
            return Err(Error::InvalidParameter(format!(
                "duplicate node id {}",
                n.id
            )));
        }
    }
    let mut pairs = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            let d = a.position.distance(&b.position);
            if d == 0.0 {
                let (x, y) = (a.id.min(b.id), a.id.max(b.id));
                return Err(Error::CoincidentNodes(x.0, y.0));
            }
            if d < a.range_radius + b.range_radius {
                pairs.push((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    pairs.sort();
    Ok(pairs)
}

/// Default receive points of an overlapping pair: both at the lens centre.
pub fn interference_points(a: &Node, c: &Node) -> Result<(Point, Point)> {
    interference_points_with_offsets(a, c, PointOffsets::default())
}

/// Lens-centre placement followed by per-point offsets along the segment
/// `a -> c`, clamped into the open interval where the segment lies inside
/// both disks.
///
/// The lens centre sits at `x = (d^2 + r_a^2 - r_c^2) / (2d)` from `a`. When
/// one disk contains the other the formula leaves the lens, and the centre
/// of the smaller disk is used instead.
pub fn interference_points_with_offsets(
    a: &Node,
    c: &Node,
    offsets: PointOffsets,
) -> Result<(Point, Point)> {
    let d = a.position.distance(&c.position);
    if d == 0.0 {
        return Err(Error::CoincidentNodes(a.id.0, c.id.0));
    }
    let (ra, rc) = (a.range_radius, c.range_radius);
    if d >= ra + rc {
        return Err(Error::NoOverlap(a.id.0, c.id.0));
    }
    // segment coordinates (from a) that lie inside both disks
    let lo = (-ra).max(d - rc);
    let hi = ra.min(d + rc);
    let x = if d + ra.min(rc) <= ra.max(rc) {
        if ra <= rc {
            0.0
        } else {
            d
        }
    } else {
        (d * d + ra * ra - rc * rc) / (2.0 * d)
    };
    let margin = 1e-3 * (hi - lo);
    let clamp = |t: f64| t.clamp(lo + margin, hi - margin);
    let t1 = clamp(x + offsets.first);
    let t2 = clamp(x + offsets.second);
    Ok((
        a.position.along(&c.position, t1),
        a.position.along(&c.position, t2),
    ))
}

/// Log-distance power gain `(max(d, d0) / d0)^(-eta)`.
pub fn path_gain(distance: f64, exponent: f64, reference_distance: f64) -> f64 {
    (distance.max(reference_distance) / reference_distance).powf(-exponent)
}

/// `count` collinear nodes on the x axis, `spacing` meters apart.
pub fn collinear_nodes(
    count: usize,
    spacing: f64,
    radius: f64,
    tx_power: f64,
) -> Result<Vec<Node>> {
    (0..count)
        .map(|i| {
            Node::new(
                i as u32,
                Point::new(i as f64 * spacing, 0.0),
                radius,
                tx_power,
            )
        })
        .collect()
}
