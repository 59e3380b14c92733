//! Static network geometry: HAPs, data centers, users and the directed
//! backhaul link table.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Number of HAPs `K`.
    pub haps: usize,
    /// Number of data centers `D`.
    pub dcs: usize,
    /// Number of ground users `U`.
    pub users: usize,
    pub altitude_m: f64,
    pub coverage_radius_m: f64,
    /// Bounds on the horizontal spacing between adjacent HAPs.
    pub spacing_min_m: f64,
    pub spacing_max_m: f64,
    /// Ground distance of the DC sites from the central HAP.
    pub dc_site_radius_m: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            haps: 7,
            dcs: 2,
            users: 105,
            altitude_m: 20e3,
            coverage_radius_m: 15e3,
            spacing_min_m: 40e3,
            spacing_max_m: 60e3,
            dc_site_radius_m: 70e3,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.haps == 0 {
            return bad("at least one HAP is required".into());
        }
        if self.dcs > self.haps {
            return bad(format!(
                "{} data centers but only {} HAPs to feed",
                self.dcs, self.haps
            ));
        }
        for (name, v) in [
            ("altitude_m", self.altitude_m),
            ("coverage_radius_m", self.coverage_radius_m),
            ("spacing_min_m", self.spacing_min_m),
            ("spacing_max_m", self.spacing_max_m),
            ("dc_site_radius_m", self.dc_site_radius_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.spacing_min_m > self.spacing_max_m {
            return bad("spacing_min_m exceeds spacing_max_m".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    Hap(usize),
    Dc(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hap {
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCenter {
    pub position: [f64; 3],
    /// The HAP this DC feeds.
    pub hap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub position: [f64; 3],
    pub hap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub src: Node,
    pub dst: Node,
    /// Length in meters.
    pub distance: f64,
    /// Transmission distance in meters; equal to `distance`.
    pub upsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub haps: Vec<Hap>,
    pub dcs: Vec<DataCenter>,
    pub users: Vec<User>,
    /// DC feeders first, then every ordered HAP pair in row-major order.
    pub links: Vec<Link>,
    /// Incoming link indices per node id (see [`NetworkTopology::node_id`]).
    pub in_links: Vec<Vec<usize>>,
    pub out_links: Vec<Vec<usize>>,
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Horizontal offsets of the first `n` hexagonal-lattice sites outside the
/// central hexagon, ordered by ring and then by angle.
fn outer_lattice(n: usize, spacing: f64) -> Vec<[f64; 2]> {
    let dirs: Vec<[f64; 2]> = (0..6)
        .map(|i| {
            let a = PI / 3.0 * i as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut ring = 2;
    while out.len() < n {
        for side in 0..6 {
            let corner = dirs[side];
            let step = dirs[(side + 2) % 6];
            for j in 0..ring {
                if out.len() == n {
                    return out;
                }
                let r = ring as f64;
                let jj = j as f64;
                out.push([
                    spacing * (r * corner[0] + jj * step[0]),
                    spacing * (r * corner[1] + jj * step[1]),
                ]);
            }
        }
        ring += 1;
    }
    out
}

/// Builds the geometry. HAP 0 sits above the origin, up to six HAPs form the
/// first ring at 60° steps with per-HAP radius drawn from the spacing bounds,
/// and any further HAPs fill outer hexagonal rings at the maximum spacing.
pub fn build_topology<R: Rng + ?Sized>(cfg: &GeometryConfig, rng: &mut R) -> Result<NetworkTopology> {
    cfg.validate()?;
    let k = cfg.haps;
    let h = cfg.altitude_m;

    let mut haps = vec![Hap {
        position: [0.0, 0.0, h],
    }];
    for i in 1..k.min(7) {
        let r = rng.random_range(cfg.spacing_min_m..=cfg.spacing_max_m);
        let a = PI / 3.0 * (i - 1) as f64;
        haps.push(Hap {
            position: [r * a.cos(), r * a.sin(), h],
        });
    }
    if k > 7 {
        for [x, y] in outer_lattice(k - 7, cfg.spacing_max_m) {
            haps.push(Hap { position: [x, y, h] });
        }
    }

    let mut bound = vec![false; k];
    let mut dcs = Vec::with_capacity(cfg.dcs);
    for d in 0..cfg.dcs {
        let a = PI + 2.0 * PI / 3.0 * d as f64;
        let site = [cfg.dc_site_radius_m * a.cos(), cfg.dc_site_radius_m * a.sin(), 0.0];
        let ground = |p: [f64; 3]| ((p[0] - site[0]).powi(2) + (p[1] - site[1]).powi(2)).sqrt();
        let hap = (0..k)
            .filter(|&j| !bound[j])
            .min_by(|&a, &b| ground(haps[a].position).total_cmp(&ground(haps[b].position)))
            .expect("dcs <= haps was validated");
        bound[hap] = true;
        dcs.push(DataCenter { position: site, hap });
    }

    let users = (0..cfg.users)
        .map(|u| {
            let hap = u % k;
            let r = cfg.coverage_radius_m * rng.random::<f64>().sqrt();
            let a = 2.0 * PI * rng.random::<f64>();
            let c = haps[hap].position;
            User {
                position: [c[0] + r * a.cos(), c[1] + r * a.sin(), 0.0],
                hap,
            }
        })
        .collect();

    let mut links = Vec::with_capacity(cfg.dcs + k * (k - 1));
    for (d, dc) in dcs.iter().enumerate() {
        let distance = dist(dc.position, haps[dc.hap].position);
        links.push(Link {
            src: Node::Dc(d),
            dst: Node::Hap(dc.hap),
            distance,
            upsilon: distance,
        });
    }
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let distance = dist(haps[i].position, haps[j].position);
                links.push(Link {
                    src: Node::Hap(i),
                    dst: Node::Hap(j),
                    distance,
                    upsilon: distance,
                });
            }
        }
    }

    Ok(NetworkTopology::from_parts(haps, dcs, users, links))
}

impl NetworkTopology {
    /// Assembles a topology from explicit parts, deriving the incidence maps.
    pub fn from_parts(haps: Vec<Hap>, dcs: Vec<DataCenter>, users: Vec<User>, links: Vec<Link>) -> Self {
        let nodes = haps.len() + dcs.len();
        let mut in_links = vec![Vec::new(); nodes];
        let mut out_links = vec![Vec::new(); nodes];
        let mut topo = Self {
            haps,
            dcs,
            users,
            links: Vec::new(),
            in_links: Vec::new(),
            out_links: Vec::new(),
        };
        for (l, link) in links.iter().enumerate() {
            out_links[topo.node_id(link.src)].push(l);
            in_links[topo.node_id(link.dst)].push(l);
        }
        topo.links = links;
        topo.in_links = in_links;
        topo.out_links = out_links;
        topo
    }

    pub fn num_haps(&self) -> usize {
        self.haps.len()
    }

    pub fn num_dcs(&self) -> usize {
        self.dcs.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// HAPs occupy ids `0..K`, DCs `K..K+D`.
    pub fn node_id(&self, n: Node) -> usize {
        match n {
            Node::Hap(k) => k,
            Node::Dc(d) => self.haps.len() + d,
        }
    }

    pub fn node(&self, id: usize) -> Node {
        if id < self.haps.len() {
            Node::Hap(id)
        } else {
            Node::Dc(id - self.haps.len())
        }
    }

    pub fn in_links(&self, n: Node) -> &[usize] {
        &self.in_links[self.node_id(n)]
    }

    pub fn out_links(&self, n: Node) -> &[usize] {
        &self.out_links[self.node_id(n)]
    }

    /// Users served by HAP `k`.
    pub fn users_of(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.users.iter().enumerate().filter(move |(_, u)| u.hap == k).map(|(i, _)| i)
    }

    /// Whether link `l` leaves a data center.
    pub fn is_feeder(&self, l: usize) -> bool {
        matches!(self.links[l].src, Node::Dc(_))
    }

    /// Node and link tables as plain text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# nodes");
        let _ = writeln!(s, "{:<8} {:>12} {:>12} {:>10} {:>6}", "node", "x_m", "y_m", "z_m", "feeds");
        for (k, hp) in self.haps.iter().enumerate() {
            let p = hp.position;
            let _ = writeln!(s, "{:<8} {:>12.1} {:>12.1} {:>10.1} {:>6}", format!("hap{k}"), p[0], p[1], p[2], "-");
        }
        for (d, dc) in self.dcs.iter().enumerate() {
            let p = dc.position;
            let _ = writeln!(
                s,
                "{:<8} {:>12.1} {:>12.1} {:>10.1} {:>6}",
                format!("dc{d}"),
                p[0],
                p[1],
                p[2],
                format!("hap{}", dc.hap)
            );
        }
        let _ = writeln!(s, "\n# links");
        let _ = writeln!(s, "{:<5} {:<6} {:<6} {:>12}", "link", "src", "dst", "distance_m");
        let name = |n: Node| match n {
            Node::Hap(k) => format!("hap{k}"),
            Node::Dc(d) => format!("dc{d}"),
        };
        for (l, link) in self.links.iter().enumerate() {
            let _ = writeln!(s, "{:<5} {:<6} {:<6} {:>12.1}", l, name(link.src), name(link.dst), link.distance);
        }
        s
    }
}
