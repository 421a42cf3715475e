//! Corridor topology and demand configuration.
//!
//! A corridor is a row of `n` junctions `J1..Jn` spaced `l` metres apart,
//! crossed by a main road (WE/EW) and one side road (NS/SN) per junction.
//! Every link carries one lane and every movement is straight-on.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Free-flow speed of 50 km/h.
pub const DEFAULT_SPEED_LIMIT_MPS: f64 = 13.89;

/// Space one standing vehicle occupies: vehicle length plus minimum gap.
pub const STORAGE_SLOT_M: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorridorSpec {
    pub n: usize,
    pub link_length_m: f64,
    #[serde(default = "default_speed_limit")]
    pub speed_limit_mps: f64,
}

fn default_speed_limit() -> f64 {
    DEFAULT_SPEED_LIMIT_MPS
}

impl CorridorSpec {
    pub fn new(n: usize, link_length_m: f64) -> Self {
        Self {
            n,
            link_length_m,
            speed_limit_mps: DEFAULT_SPEED_LIMIT_MPS,
        }
    }

    /// Always one lane per direction.
    pub fn lanes_per_direction(&self) -> usize {
        1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidCorridor("n must be at least 1".into()));
        }
        if !(self.link_length_m > 0.0) || !self.link_length_m.is_finite() {
            return Err(Error::InvalidCorridor(format!(
                "link length must be positive, got {}",
                self.link_length_m
            )));
        }
        if self.link_length_m < STORAGE_SLOT_M {
            return Err(Error::InvalidCorridor(format!(
                "link length {} m cannot store a single vehicle ({STORAGE_SLOT_M} m)",
                self.link_length_m
            )));
        }
        if !(self.speed_limit_mps > 0.0) || !self.speed_limit_mps.is_finite() {
            return Err(Error::InvalidCorridor(format!(
                "speed limit must be positive, got {}",
                self.speed_limit_mps
            )));
        }
        Ok(())
    }
}

/// Travel direction of a link. `NS` is southbound traffic entering from the north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    WE,
    EW,
    NS,
    SN,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::WE, Direction::EW, Direction::NS, Direction::SN];

    pub fn is_main_road(self) -> bool {
        matches!(self, Direction::WE | Direction::EW)
    }

    /// The approach side a vehicle travelling in this direction comes from.
    pub fn approach(self) -> Approach {
        match self {
            Direction::WE => Approach::W,
            Direction::EW => Approach::E,
            Direction::NS => Approach::N,
            Direction::SN => Approach::S,
        }
    }

    pub fn mirrored(self) -> Direction {
        match self {
            Direction::WE => Direction::EW,
            Direction::EW => Direction::WE,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::WE => "WE",
            Direction::EW => "EW",
            Direction::NS => "NS",
            Direction::SN => "SN",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Incoming side of a junction. The order W, E, N, S is used everywhere a
/// per-approach array appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    W,
    E,
    N,
    S,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::W, Approach::E, Approach::N, Approach::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn direction(self) -> Direction {
        match self {
            Approach::W => Direction::WE,
            Approach::E => Direction::EW,
            Approach::N => Direction::NS,
            Approach::S => Direction::SN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Entry,
    Internal,
    Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RouteId(pub usize);

/// Zero-based junction index; `JunctionId(0)` is `J1`, the westernmost junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JunctionId(pub usize);

impl std::fmt::Display for JunctionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "J{}", self.0 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Junction(JunctionId),
    West,
    East,
    North(JunctionId),
    South(JunctionId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub from_node: Node,
    pub to_node: Node,
    pub length_m: f64,
    pub direction: Direction,
    pub kind: LinkKind,
    pub route: RouteId,
    /// Next link through the junction at the downstream end, `None` for exit links.
    pub next: Option<LinkId>,
}

impl Link {
    /// Junction controlling the downstream end of this link.
    pub fn junction_ahead(&self) -> Option<JunctionId> {
        match self.to_node {
            Node::Junction(j) => Some(j),
            _ => None,
        }
    }

    /// Number of standing vehicles the link can hold, `floor(length / 7 m)`.
    pub fn storage_capacity(&self) -> usize {
        (self.length_m / STORAGE_SLOT_M).floor() as usize
    }

    pub fn name(&self) -> String {
        let end = |node: Node| match node {
            Node::Junction(j) => j.to_string(),
            Node::West => "W".into(),
            Node::East => "E".into(),
            Node::North(j) => format!("N{}", j.0 + 1),
            Node::South(j) => format!("S{}", j.0 + 1),
        };
        format!("{}:{}-{}", self.direction, end(self.from_node), end(self.to_node))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: RouteId,
    pub direction: Direction,
    pub links: Vec<LinkId>,
    /// The single junction a side-road route crosses; `None` for main-road routes.
    pub side_road_of: Option<JunctionId>,
}

impl Route {
    pub fn entry(&self) -> LinkId {
        self.links[0]
    }

    pub fn name(&self) -> String {
        match self.side_road_of {
            Some(j) => format!("{}@{}", self.direction, j),
            None => self.direction.to_string(),
        }
    }
}

/// Arrival rates in vehicles per hour. Side-road rates apply at every junction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DemandConfig {
    pub lambda_we: f64,
    pub lambda_ew: f64,
    pub lambda_ns: f64,
    pub lambda_sn: f64,
}

impl DemandConfig {
    pub fn new(lambda_we: f64, lambda_ew: f64, lambda_ns: f64, lambda_sn: f64) -> Self {
        Self {
            lambda_we,
            lambda_ew,
            lambda_ns,
            lambda_sn,
        }
    }

    /// Two-dimensional demand point with `λ_NS = λ_SN` and `λ_WE = λ_EW`.
    pub fn symmetric(lambda_ns: f64, lambda_we: f64) -> Self {
        Self::new(lambda_we, lambda_we, lambda_ns, lambda_ns)
    }

    pub fn rate(&self, direction: Direction) -> f64 {
        match direction {
            Direction::WE => self.lambda_we,
            Direction::EW => self.lambda_ew,
            Direction::NS => self.lambda_ns,
            Direction::SN => self.lambda_sn,
        }
    }

    pub fn mirrored(&self) -> Self {
        Self::new(self.lambda_ew, self.lambda_we, self.lambda_ns, self.lambda_sn)
    }

    pub fn validate(&self) -> Result<()> {
        for d in Direction::ALL {
            let r = self.rate(d);
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::InvalidDemand(format!("lambda_{d} = {r}")));
            }
        }
        Ok(())
    }
}

/// Immutable corridor topology.
///
/// Links are laid out as: the `n + 1` WE links from west to east, the `n + 1`
/// EW links from east to west, then for each junction its NS entry, NS exit,
/// SN entry and SN exit. Entry links are listed WE, EW, then NS/SN per junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorNetwork {
    spec: CorridorSpec,
    links: Vec<Link>,
    routes: Vec<Route>,
    entries: Vec<LinkId>,
    /// Incoming link per junction, ordered W, E, N, S.
    approaches: Vec<[LinkId; 4]>,
}

pub fn build_corridor(spec: CorridorSpec) -> Result<CorridorNetwork> {
    spec.validate()?;
    let n = spec.n;
    let l = spec.link_length_m;
    let mut links: Vec<Link> = Vec::with_capacity(2 * (n + 1) + 4 * n);
    let mut routes: Vec<Route> = Vec::with_capacity(2 + 2 * n);

    let kind_at = |k: usize, last: usize| {
        if k == 0 {
            LinkKind::Entry
        } else if k == last {
            LinkKind::Exit
        } else {
            LinkKind::Internal
        }
    };

    // Main road: nodes W, J1..Jn, E.
    for direction in [Direction::WE, Direction::EW] {
        let route = RouteId(routes.len());
        let mut nodes = Vec::with_capacity(n + 2);
        nodes.push(Node::West);
        nodes.extend((0..n).map(|j| Node::Junction(JunctionId(j))));
        nodes.push(Node::East);
        if direction == Direction::EW {
            nodes.reverse();
        }
        let mut ids = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let id = LinkId(links.len());
            links.push(Link {
                id,
                from_node: nodes[k],
                to_node: nodes[k + 1],
                length_m: l,
                direction,
                kind: kind_at(k, n),
                route,
                next: (k < n).then(|| LinkId(id.0 + 1)),
            });
            ids.push(id);
        }
        routes.push(Route {
            id: route,
            direction,
            links: ids,
            side_road_of: None,
        });
    }

    for j in (0..n).map(JunctionId) {
        for (direction, from, to) in [
            (Direction::NS, Node::North(j), Node::South(j)),
            (Direction::SN, Node::South(j), Node::North(j)),
        ] {
            let route = RouteId(routes.len());
            let entry = LinkId(links.len());
            let exit = LinkId(entry.0 + 1);
            links.push(Link {
                id: entry,
                from_node: from,
                to_node: Node::Junction(j),
                length_m: l,
                direction,
                kind: LinkKind::Entry,
                route,
                next: Some(exit),
            });
            links.push(Link {
                id: exit,
                from_node: Node::Junction(j),
                to_node: to,
                length_m: l,
                direction,
                kind: LinkKind::Exit,
                route,
                next: None,
            });
            routes.push(Route {
                id: route,
                direction,
                links: vec![entry, exit],
                side_road_of: Some(j),
            });
        }
    }

    let entries = routes.iter().map(Route::entry).collect();
    let mut approaches = vec![[LinkId(0); 4]; n];
    for link in &links {
        if let Some(j) = link.junction_ahead() {
            approaches[j.0][link.direction.approach().index()] = link.id;
        }
    }

    Ok(CorridorNetwork {
        spec,
        links,
        routes,
        entries,
        approaches,
    })
}

impl CorridorNetwork {
    pub fn spec(&self) -> &CorridorSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn link_length_m(&self) -> f64 {
        self.spec.link_length_m
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, id: RouteId) -> &Route {
        &self.routes[id.0]
    }

    pub fn entries(&self) -> &[LinkId] {
        &self.entries
    }

    pub fn junctions(&self) -> impl Iterator<Item = JunctionId> {
        (0..self.spec.n).map(JunctionId)
    }

    /// Incoming links of a junction, ordered W, E, N, S.
    pub fn approaches(&self, junction: JunctionId) -> Result<&[LinkId; 4]> {
        self.approaches
            .get(junction.0)
            .ok_or(Error::UnknownJunction(junction.0))
    }

    /// The four (route, approach link) pairs feeding a junction, ordered W, E, N, S.
    pub fn routes_through(&self, junction: JunctionId) -> Result<Vec<(RouteId, LinkId)>> {
        let approaches = self.approaches(junction)?;
        Ok(approaches
            .iter()
            .map(|&id| (self.link(id).route, id))
            .collect())
    }

    /// Link mapped onto this one by the west/east reflection of the corridor.
    pub fn mirror_link(&self, id: LinkId) -> LinkId {
        let n = self.spec.n;
        let main = n + 1;
        if id.0 < 2 * main {
            // WE link k pairs with EW link k: both count from their own entry.
            if id.0 < main {
                LinkId(id.0 + main)
            } else {
                LinkId(id.0 - main)
            }
        } else {
            let side = id.0 - 2 * main;
            let (junction, offset) = (side / 4, side % 4);
            LinkId(2 * main + 4 * (n - 1 - junction) + offset)
        }
    }

    pub fn mirror_junction(&self, junction: JunctionId) -> JunctionId {
        JunctionId(self.spec.n - 1 - junction.0)
    }

    /// Position of an entry link in [`entries`](Self::entries).
    pub fn entry_index(&self, link: LinkId) -> Option<usize> {
        self.entries.iter().position(|&e| e == link)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor(n: usize, l: f64) -> CorridorNetwork {
        build_corridor(CorridorSpec::new(n, l)).unwrap()
    }

    #[test]
    fn counts_for_reference_sizes() {
        let net = corridor(3, 700.0);
        assert_eq!(net.links().len(), 20);
        assert_eq!(net.entries().len(), 8);
        assert_eq!(net.routes().len(), 8);

        let net = corridor(1, 700.0);
        assert_eq!(net.links().len(), 8);
        assert_eq!(net.entries().len(), 4);
        assert_eq!(net.routes().len(), 4);

        let net = corridor(13, 2000.0);
        assert_eq!(net.links().len(), 80);
        assert_eq!(net.entries().len(), 28);
    }

    #[test]
    fn counts_match_closed_form() {
        for n in 1..=20 {
            let net = corridor(n, 300.0);
            assert_eq!(net.links().len(), 2 * (n + 1) + 4 * n);
            assert_eq!(net.entries().len(), 2 + 2 * n);
            assert_eq!(net.routes().len(), 2 + 2 * n);
            let entry_kinds = net.links().iter().filter(|l| l.kind == LinkKind::Entry).count();
            assert_eq!(entry_kinds, 2 + 2 * n);
        }
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(matches!(
            build_corridor(CorridorSpec::new(0, 700.0)),
            Err(Error::InvalidCorridor(_))
        ));
        assert!(build_corridor(CorridorSpec::new(3, 0.0)).is_err());
        assert!(build_corridor(CorridorSpec::new(3, -5.0)).is_err());
        assert!(build_corridor(CorridorSpec::new(3, f64::NAN)).is_err());
    }

    #[test]
    fn routes_are_connected_and_straight() {
        for n in 1..=6 {
            let net = corridor(n, 250.0);
            for route in net.routes() {
                let links: Vec<_> = route.links.iter().map(|&id| net.link(id)).collect();
                assert_eq!(links[0].kind, LinkKind::Entry);
                assert_eq!(links.last().unwrap().kind, LinkKind::Exit);
                for pair in links.windows(2) {
                    assert_eq!(pair[0].to_node, pair[1].from_node);
                    assert_eq!(pair[0].direction, pair[1].direction);
                    assert_eq!(pair[0].next, Some(pair[1].id));
                }
                let junctions = links.iter().filter(|l| l.junction_ahead().is_some()).count();
                if route.direction.is_main_road() {
                    assert_eq!(junctions, n);
                } else {
                    assert_eq!(junctions, 1);
                }
                assert!(links.iter().all(|l| l.length_m == 250.0 && l.route == route.id));
            }
        }
    }

    #[test]
    fn four_approaches_per_junction() {
        let net = corridor(3, 700.0);
        for j in net.junctions() {
            let through = net.routes_through(j).unwrap();
            assert_eq!(through.len(), 4);
            for (approach, (_, link)) in Approach::ALL.iter().zip(&through) {
                let link = net.link(*link);
                assert_eq!(link.junction_ahead(), Some(j));
                assert_eq!(link.direction.approach(), *approach);
            }
        }
        let w_of = |j| net.link(net.routes_through(JunctionId(j)).unwrap()[0].1).kind;
        assert_eq!(w_of(0), LinkKind::Entry);
        assert_eq!(w_of(1), LinkKind::Internal);
        assert!(matches!(
            net.routes_through(JunctionId(3)),
            Err(Error::UnknownJunction(3))
        ));
    }

    #[test]
    fn mirror_is_an_involution_preserving_structure() {
        for n in 1..=7 {
            let net = corridor(n, 400.0);
            for link in net.links() {
                let m = net.link(net.mirror_link(link.id));
                assert_eq!(net.mirror_link(m.id), link.id);
                assert_eq!(m.direction, link.direction.mirrored());
                assert_eq!(m.kind, link.kind);
                assert_eq!(
                    m.junction_ahead(),
                    link.junction_ahead().map(|j| net.mirror_junction(j))
                );
            }
        }
    }

    #[test]
    fn storage_capacity_floor() {
        let net = corridor(1, 700.0);
        assert_eq!(net.link(LinkId(0)).storage_capacity(), 100);
        let net = corridor(1, 20.0);
        assert_eq!(net.link(LinkId(0)).storage_capacity(), 2);
    }

    #[test]
    fn demand_validation() {
        assert!(DemandConfig::symmetric(700.0, 700.0).validate().is_ok());
        assert!(DemandConfig::new(-1.0, 0.0, 0.0, 0.0).validate().is_err());
        assert!(DemandConfig::new(0.0, f64::INFINITY, 0.0, 0.0).validate().is_err());
        let d = DemandConfig::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(d.mirrored(), DemandConfig::new(2.0, 1.0, 3.0, 4.0));
    }
}
