//! Naval disaster-response scenario generator.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::pddl::{parse_domain, Atom, Condition, DomainModel, ProblemModel, Specification};

pub const NAVAL_DOMAIN: &str = include_str!("../../packs/naval/domain.pddl");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DebrisKind {
    Normal,
    Underwater,
}

/// Debris lying at `from` and blocking the route to `to` (both directions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebrisPlacement {
    pub from: String,
    pub to: String,
    pub kind: DebrisKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRoster {
    /// Start waypoint of each debris asset, scout asset and salvage asset.
    pub debris: Vec<String>,
    pub scout: Vec<String>,
    pub salvage: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavalScenarioConfig {
    pub name: String,
    pub waypoints: Vec<String>,
    /// Undirected routes.
    pub edges: Vec<(String, String)>,
    pub debris: Vec<DebrisPlacement>,
    pub stations: Vec<String>,
    pub assets: AssetRoster,
    /// Where the derelict ship starts.
    pub dock: String,
    /// Where it has to go.
    pub target: String,
    pub seed: u64,
}

fn short(w: &str) -> &str {
    w.strip_prefix("wpt_").unwrap_or(w)
}

fn edge(a: &str, b: &str) -> (String, String) {
    (a.to_string(), b.to_string())
}

fn roster(at: &str) -> AssetRoster {
    AssetRoster {
        debris: vec![at.into()],
        scout: vec![at.into()],
        salvage: vec![at.into()],
    }
}

impl NavalScenarioConfig {
    /// Three waypoints in a line, one floating debris on the far route.
    pub fn mini() -> Self {
        NavalScenarioConfig {
            name: "naval-mini".into(),
            waypoints: vec!["wpt_ini".into(), "wpt_b_0".into(), "wpt_end".into()],
            edges: vec![edge("wpt_ini", "wpt_b_0"), edge("wpt_b_0", "wpt_end")],
            debris: vec![DebrisPlacement {
                from: "wpt_b_0".into(),
                to: "wpt_end".into(),
                kind: DebrisKind::Normal,
            }],
            stations: vec![],
            assets: roster("wpt_ini"),
            dock: "wpt_end".into(),
            target: "wpt_ini".into(),
            seed: 0,
        }
    }

    /// Two waterways between the assets and the ship: route `a` is blocked
    /// by floating debris, route `b` by underwater debris.
    pub fn desk() -> Self {
        NavalScenarioConfig {
            name: "naval-desk".into(),
            waypoints: vec![
                "wpt_ini".into(),
                "wpt_a_0".into(),
                "wpt_b_0".into(),
                "wpt_end".into(),
            ],
            edges: vec![
                edge("wpt_ini", "wpt_a_0"),
                edge("wpt_a_0", "wpt_end"),
                edge("wpt_ini", "wpt_b_0"),
                edge("wpt_b_0", "wpt_end"),
            ],
            debris: vec![
                DebrisPlacement {
                    from: "wpt_a_0".into(),
                    to: "wpt_end".into(),
                    kind: DebrisKind::Normal,
                },
                DebrisPlacement {
                    from: "wpt_b_0".into(),
                    to: "wpt_end".into(),
                    kind: DebrisKind::Underwater,
                },
            ],
            stations: vec![],
            assets: roster("wpt_ini"),
            dock: "wpt_end".into(),
            target: "wpt_ini".into(),
            seed: 0,
        }
    }

    /// Full two-waterway layout with a debris station; the seed decides
    /// which waterway routes carry which kind of debris.
    pub fn variation(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let routes_a = [edge("wpt_ini", "wpt_a_0"), edge("wpt_a_0", "wpt_end")];
        let routes_b = [edge("wpt_ini", "wpt_b_0"), edge("wpt_b_0", "wpt_end")];
        let mut debris = Vec::new();
        for routes in [&routes_a, &routes_b] {
            // every waterway is blocked on at least one route
            let first = rng.random_range(0..2usize);
            for i in [first, 1 - first] {
                if i != first && !rng.random_bool(1.0 / 3.0) {
                    continue;
                }
                let kind = if rng.random_bool(0.5) {
                    DebrisKind::Underwater
                } else {
                    DebrisKind::Normal
                };
                let (from, to) = routes[i].clone();
                debris.push(DebrisPlacement { from, to, kind });
            }
        }
        debris.push(DebrisPlacement {
            from: "deb_stn_0".into(),
            to: "wpt_end".into(),
            kind: DebrisKind::Normal,
        });
        NavalScenarioConfig {
            name: format!("naval-p{seed}"),
            waypoints: vec![
                "wpt_ini".into(),
                "wpt_a_0".into(),
                "wpt_b_0".into(),
                "wpt_end".into(),
                "deb_stn_0".into(),
            ],
            edges: vec![
                routes_a[0].clone(),
                routes_a[1].clone(),
                routes_b[0].clone(),
                routes_b[1].clone(),
                edge("deb_stn_0", "wpt_end"),
                edge("deb_stn_0", "wpt_ini"),
            ],
            debris,
            stations: vec!["deb_stn_0".into()],
            assets: roster("wpt_ini"),
            dock: "wpt_end".into(),
            target: "wpt_ini".into(),
            seed,
        }
    }

    pub fn check(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidConfig(m));
        let wps: BTreeSet<&str> = self.waypoints.iter().map(String::as_str).collect();
        if wps.len() != self.waypoints.len() {
            return bad("duplicate waypoint".into());
        }
        if self.dock == self.target {
            return bad(format!("dock and target are both {}", self.dock));
        }
        if self.assets.debris.is_empty() || self.assets.salvage.is_empty() {
            return bad("at least one debris asset and one salvage asset are required".into());
        }
        let all_named = std::iter::once(&self.dock)
            .chain([&self.target])
            .chain(&self.stations)
            .chain(&self.assets.debris)
            .chain(&self.assets.scout)
            .chain(&self.assets.salvage)
            .chain(self.edges.iter().flat_map(|(a, b)| [a, b]))
            .chain(self.debris.iter().flat_map(|d| [&d.from, &d.to]));
        for w in all_named {
            if !wps.contains(w.as_str()) {
                return bad(format!("unknown waypoint {w}"));
            }
        }
        let has_edge = |a: &str, b: &str| {
            self.edges
                .iter()
                .any(|(x, y)| (x == a && y == b) || (x == b && y == a))
        };
        for d in &self.debris {
            if !has_edge(&d.from, &d.to) {
                return bad(format!("debris on missing route {}-{}", d.from, d.to));
            }
        }
        // connected ignoring blockage
        let mut seen = BTreeSet::from([self.waypoints[0].as_str()]);
        let mut frontier = vec![self.waypoints[0].as_str()];
        while let Some(w) = frontier.pop() {
            for (a, b) in &self.edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == w && seen.insert(y.as_str()) {
                        frontier.push(y.as_str());
                    }
                }
            }
        }
        if seen.len() != wps.len() {
            return bad("waypoint graph is not connected".into());
        }
        Ok(())
    }
}

pub fn naval_domain() -> DomainModel {
    parse_domain(NAVAL_DOMAIN).expect("bundled naval domain parses")
}

pub fn debris_name(d: &DebrisPlacement) -> String {
    let prefix = match d.kind {
        DebrisKind::Normal => "n_deb",
        DebrisKind::Underwater => "u_deb",
    };
    format!("{prefix}_{}_{}", short(&d.from), short(&d.to))
}

pub fn generate_naval(
    cfg: &NavalScenarioConfig,
) -> Result<(DomainModel, ProblemModel), CorpusError> {
    cfg.check()?;
    let domain = naval_domain();
    let mut objects: Vec<(String, String)> = cfg
        .waypoints
        .iter()
        .map(|w| (w.clone(), "waypoint".into()))
        .collect();
    let mut init = BTreeSet::new();
    let mut add_assets =
        |prefix: &str, ty: &str, starts: &[String], objects: &mut Vec<(String, String)>| {
            for (i, w) in starts.iter().enumerate() {
                let name = format!("{prefix}_{i}");
                init.insert(Atom::new("at", [name.as_str(), w.as_str()]));
                if ty == "scout-asset" {
                    init.insert(Atom::new("unhindered", [name.as_str()]));
                }
                objects.push((name, ty.into()));
            }
        };
    add_assets("deb_ast", "debris-asset", &cfg.assets.debris, &mut objects);
    add_assets("sct_ast", "scout-asset", &cfg.assets.scout, &mut objects);
    add_assets(
        "slv_ast",
        "salvage-asset",
        &cfg.assets.salvage,
        &mut objects,
    );
    objects.push(("shp_0".into(), "ship".into()));
    init.insert(Atom::new("at", ["shp_0", cfg.dock.as_str()]));
    let mut names = BTreeMap::new();
    for d in &cfg.debris {
        let name = debris_name(d);
        let ty = match d.kind {
            DebrisKind::Normal => "normal-debris",
            DebrisKind::Underwater => "underwater-debris",
        };
        if names.insert(name.clone(), ()).is_some() {
            return Err(CorpusError::InvalidConfig(format!(
                "two debris named {name}"
            )));
        }
        objects.push((name.clone(), ty.into()));
        init.insert(Atom::new("at", [name.as_str(), d.from.as_str()]));
        init.insert(Atom::new(
            "blocks",
            [name.as_str(), d.from.as_str(), d.to.as_str()],
        ));
        init.insert(Atom::new("blocked", [d.from.as_str(), d.to.as_str()]));
        init.insert(Atom::new("blocked", [d.to.as_str(), d.from.as_str()]));
    }
    for (a, b) in &cfg.edges {
        init.insert(Atom::new("connected", [a.as_str(), b.as_str()]));
        init.insert(Atom::new("connected", [b.as_str(), a.as_str()]));
    }
    for s in &cfg.stations {
        init.insert(Atom::new("station", [s.as_str()]));
    }
    let problem = ProblemModel {
        name: cfg.name.clone(),
        domain_name: domain.name.clone(),
        objects,
        init,
        goal: Condition::atom("at", ["shp_0", cfg.target.as_str()]),
        base_constraints: Specification::default(),
    };
    Ok((domain, problem))
}
