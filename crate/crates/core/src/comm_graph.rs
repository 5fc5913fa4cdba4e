//! Directed communication graph over hubs.
//!
//! An edge `(h1, h2)` means agents at `h1` observe the actions of agents at
//! `h2`. Agents at the same hub always observe each other, so self-loops are
//! never stored.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{AgentId, HubId};

/// Directed edges removed, in order, to walk from the complete graph towards
/// isolation on five hubs (zero-based hub indices).
pub const DIRECTED_REMOVAL_SEQUENCE: [(usize, usize); 3] = [(0, 1), (2, 0), (2, 3)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    /// `observes[h]` is the set of hubs `h` observes.
    observes: Vec<BTreeSet<HubId>>,
}

impl CommGraph {
    pub fn empty(n_hubs: usize) -> Self {
        Self { observes: vec![BTreeSet::new(); n_hubs] }
    }

    pub fn complete(n_hubs: usize) -> Self {
        let observes = (0..n_hubs)
            .map(|h| (0..n_hubs).filter(|&o| o != h).map(HubId).collect())
            .collect();
        Self { observes }
    }

    pub fn star(n_hubs: usize, center: HubId) -> Result<Self> {
        if center.0 >= n_hubs {
            return Err(Error::InvalidTopology(format!(
                "star center {center} out of range for {n_hubs} hubs"
            )));
        }
        let mut g = Self::empty(n_hubs);
        for h in (0..n_hubs).map(HubId).filter(|&h| h != center) {
            g.observes[h.0].insert(center);
            g.observes[center.0].insert(h);
        }
        Ok(g)
    }

    /// Bidirectional cycle in index order.
    pub fn ring(n_hubs: usize) -> Self {
        let mut g = Self::empty(n_hubs);
        if n_hubs < 2 {
            return g;
        }
        for h in 0..n_hubs {
            let next = (h + 1) % n_hubs;
            g.observes[h].insert(HubId(next));
            g.observes[next].insert(HubId(h));
        }
        g
    }

    pub fn from_edges(n_hubs: usize, edges: &[(HubId, HubId)]) -> Result<Self> {
        let mut g = Self::empty(n_hubs);
        for &(from, to) in edges {
            g.check_edge(from, to)?;
            g.observes[from.0].insert(to);
        }
        Ok(g)
    }

    /// Complete graph with the given directed edges deleted in order.
    pub fn with_removed(n_hubs: usize, removed: &[(HubId, HubId)]) -> Result<Self> {
        let mut g = Self::complete(n_hubs);
        for &(from, to) in removed {
            g.check_edge(from, to)?;
            if !g.observes[from.0].remove(&to) {
                return Err(Error::InvalidTopology(format!("edge {from}->{to} already removed")));
            }
        }
        Ok(g)
    }

    fn check_edge(&self, from: HubId, to: HubId) -> Result<()> {
        let n = self.n_hubs();
        if from.0 >= n || to.0 >= n {
            return Err(Error::InvalidTopology(format!("edge {from}->{to} out of range for {n} hubs")));
        }
        if from == to {
            return Err(Error::InvalidTopology(format!("self-loop on {from}")));
        }
        Ok(())
    }

    pub fn n_hubs(&self) -> usize {
        self.observes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.observes.iter().map(BTreeSet::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (HubId, HubId)> + '_ {
        self.observes.iter().enumerate().flat_map(|(h, set)| set.iter().map(move |&o| (HubId(h), o)))
    }

    pub fn has_edge(&self, from: HubId, to: HubId) -> bool {
        self.observes[from.0].contains(&to)
    }

    /// True when agents at `observer` see the actions of agents at `observed`.
    pub fn sees(&self, observer: HubId, observed: HubId) -> bool {
        observer == observed || self.has_edge(observer, observed)
    }

    pub fn observed_hubs(&self, hub: HubId) -> &BTreeSet<HubId> {
        &self.observes[hub.0]
    }

    /// Agents whose actions are visible from `hub`: those at hubs it
    /// observes plus every agent stationed at `hub` itself.
    pub fn neighborhood(&self, hub: HubId, hub_of: &[HubId]) -> Vec<AgentId> {
        hub_of
            .iter()
            .enumerate()
            .filter(|&(_, &h)| self.sees(hub, h))
            .map(|(j, _)| AgentId(j))
            .collect()
    }

    /// Hub partition into information groups: hubs are grouped when they
    /// observe each other and observe the same hubs outside the pair, i.e.
    /// when their closed observation sets coincide. Groups are ordered by
    /// their smallest hub.
    pub fn information_groups(&self) -> Vec<Vec<HubId>> {
        let closed: Vec<BTreeSet<HubId>> = self
            .observes
            .iter()
            .enumerate()
            .map(|(h, set)| {
                let mut s = set.clone();
                s.insert(HubId(h));
                s
            })
            .collect();
        let mut groups: Vec<Vec<HubId>> = Vec::new();
        let mut keys: Vec<&BTreeSet<HubId>> = Vec::new();
        for (h, key) in closed.iter().enumerate() {
            match keys.iter().position(|k| *k == key) {
                Some(i) => groups[i].push(HubId(h)),
                None => {
                    keys.push(key);
                    groups.push(vec![HubId(h)]);
                }
            }
        }
        groups
    }

    /// Number of information groups.
    pub fn information_group_number(&self) -> usize {
        self.information_groups().len()
    }

    /// Group index of each hub, matching `information_groups` order.
    pub fn group_of_hubs(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_hubs()];
        for (g, members) in self.information_groups().iter().enumerate() {
            for h in members {
                out[h.0] = g;
            }
        }
        out
    }
}

/// Parses `"0>1, 1>0 2->3"` style edge lists. Separators are commas,
/// semicolons, `+` or whitespace; arrows are `>` or `->`.
pub fn parse_edge_list(s: &str) -> Result<Vec<(HubId, HubId)>> {
    s.split(|c: char| c == ',' || c == ';' || c == '+' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            let tok = tok.replace("->", ">");
            let (a, b) = tok
                .split_once('>')
                .ok_or_else(|| Error::InvalidTopology(format!("bad edge `{tok}`, expected a>b")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map(HubId)
                    .map_err(|_| Error::InvalidTopology(format!("bad hub index `{v}` in `{tok}`")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn format_edges(edges: &[(usize, usize)]) -> String {
    edges.iter().map(|(a, b)| format!("{a}>{b}")).collect::<Vec<_>>().join("+")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TopologySpec {
    #[default]
    Complete,
    Star {
        #[serde(default)]
        center: usize,
    },
    Ring,
    Empty,
    EdgeRemoval {
        removed: Vec<(usize, usize)>,
    },
    Explicit {
        edges: Vec<(usize, usize)>,
    },
}

impl TopologySpec {
    pub fn build(&self, n_hubs: usize) -> Result<CommGraph> {
        let pairs = |v: &[(usize, usize)]| v.iter().map(|&(a, b)| (HubId(a), HubId(b))).collect::<Vec<_>>();
        match self {
            TopologySpec::Complete => Ok(CommGraph::complete(n_hubs)),
            TopologySpec::Star { center } => CommGraph::star(n_hubs, HubId(*center)),
            TopologySpec::Ring => Ok(CommGraph::ring(n_hubs)),
            TopologySpec::Empty => Ok(CommGraph::empty(n_hubs)),
            TopologySpec::EdgeRemoval { removed } => CommGraph::with_removed(n_hubs, &pairs(removed)),
            TopologySpec::Explicit { edges } => CommGraph::from_edges(n_hubs, &pairs(edges)),
        }
    }

    /// Stages of the directed study: complete, then each prefix of
    /// [`DIRECTED_REMOVAL_SEQUENCE`], then the empty graph.
    pub fn directed_sequence() -> Vec<TopologySpec> {
        let mut out = vec![TopologySpec::Complete];
        for i in 1..=DIRECTED_REMOVAL_SEQUENCE.len() {
            out.push(TopologySpec::EdgeRemoval { removed: DIRECTED_REMOVAL_SEQUENCE[..i].to_vec() });
        }
        out.push(TopologySpec::Empty);
        out
    }

    pub fn undirected_set() -> Vec<TopologySpec> {
        vec![TopologySpec::Complete, TopologySpec::Star { center: 0 }, TopologySpec::Ring, TopologySpec::Empty]
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Complete => f.write_str("complete"),
            TopologySpec::Star { center: 0 } => f.write_str("star"),
            TopologySpec::Star { center } => write!(f, "star:{center}"),
            TopologySpec::Ring => f.write_str("ring"),
            TopologySpec::Empty => f.write_str("empty"),
            TopologySpec::EdgeRemoval { removed } => write!(f, "remove:{}", format_edges(removed)),
            TopologySpec::Explicit { edges } => write!(f, "edges:{}", format_edges(edges)),
        }
    }
}

impl FromStr for TopologySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let edges = |t: Option<&str>| -> Result<Vec<(usize, usize)>> {
            Ok(parse_edge_list(t.unwrap_or(""))?.into_iter().map(|(a, b)| (a.0, b.0)).collect())
        };
        match head {
            "complete" | "centralized" => Ok(TopologySpec::Complete),
            "empty" | "decentralized" => Ok(TopologySpec::Empty),
            "ring" => Ok(TopologySpec::Ring),
            "star" => {
                let center = match tail {
                    Some(t) => t
                        .parse()
                        .map_err(|_| Error::InvalidTopology(format!("bad star center `{t}`")))?,
                    None => 0,
                };
                Ok(TopologySpec::Star { center })
            }
            "remove" | "edge-removal" => Ok(TopologySpec::EdgeRemoval { removed: edges(tail)? }),
            "edges" | "explicit" => Ok(TopologySpec::Explicit { edges: edges(tail)? }),
            other => Err(Error::InvalidTopology(format!("unknown topology `{other}`"))),
        }
    }
}

/// Topology entry of a scenario config, with an optional display name
/// used in result files.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TopologyConfig {
    #[serde(flatten)]
    pub spec: TopologySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl TopologyConfig {
    pub fn new(spec: TopologySpec) -> Self {
        Self { spec, name: None }
    }

    pub fn named(spec: TopologySpec, name: impl Into<String>) -> Self {
        Self { spec, name: Some(name.into()) }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.spec.to_string())
    }
}
