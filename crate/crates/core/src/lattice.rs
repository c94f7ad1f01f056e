//! Spatial lattices and arbitrary graphs: sites, oriented links, plaquettes.
//!
//! Graph file format:
//!
//! ```text
//! sites 3
//! link 0 0 1
//! link 1 1 2
//! link 2 2 0
//! loop 0:+ 1:+ 2:+
//! ```
//!
//! A loop step `l:+` traverses link `l` from source to target, `l:-` the
//! other way (contributing `g_l^-1` to the holonomy).

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub source: usize,
    pub target: usize,
}

/// One traversed link of a loop; `forward == false` means the link is
/// walked against its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoopStep {
    pub link: usize,
    pub forward: bool,
}

impl LoopStep {
    pub fn orientation(self) -> i8 {
        if self.forward {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plaquette {
    pub steps: Vec<LoopStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeGraph {
    num_sites: usize,
    links: Vec<Link>,
    plaquettes: Vec<Plaquette>,
    extents: Option<Vec<usize>>,
    periodic: Option<Vec<bool>>,
}

impl LatticeGraph {
    /// Validates ids, self-loops, loop closure and connectivity.
    pub fn new(num_sites: usize, links: Vec<Link>, plaquettes: Vec<Plaquette>) -> Result<Self> {
        let graph = LatticeGraph {
            num_sites,
            links,
            plaquettes,
            extents: None,
            periodic: None,
        };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<()> {
        if self.num_sites == 0 {
            return Err(Error::load("graph", "graph has no sites"));
        }
        for (id, l) in self.links.iter().enumerate() {
            if l.source >= self.num_sites || l.target >= self.num_sites {
                return Err(Error::load("graph", format!("link {id} references a missing site")));
            }
            if l.source == l.target {
                return Err(Error::load("graph", format!("link {id} is a self-loop")));
            }
        }
        for (p, plaq) in self.plaquettes.iter().enumerate() {
            if plaq.steps.is_empty() {
                return Err(Error::load("graph", format!("loop {p} is empty")));
            }
            if let Some(s) = plaq.steps.iter().find(|s| s.link >= self.links.len()) {
                return Err(Error::load("graph", format!("loop {p} uses missing link {}", s.link)));
            }
            let n = plaq.steps.len();
            for i in 0..n {
                let end = self.step_end(plaq.steps[i]);
                let next_start = self.step_start(plaq.steps[(i + 1) % n]);
                if end != next_start {
                    return Err(Error::load(
                        "graph",
                        format!("loop {p} is not closed: step {i} ends at site {end}, next starts at {next_start}"),
                    ));
                }
            }
        }
        if !self.is_connected() {
            return Err(Error::load("graph", "graph is not connected"));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: usize) -> Link {
        self.links[id]
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    pub fn extents(&self) -> Option<&[usize]> {
        self.extents.as_deref()
    }

    pub fn periodic(&self) -> Option<&[bool]> {
        self.periodic.as_deref()
    }

    pub fn step_start(&self, step: LoopStep) -> usize {
        let l = self.links[step.link];
        if step.forward {
            l.source
        } else {
            l.target
        }
    }

    pub fn step_end(&self, step: LoopStep) -> usize {
        let l = self.links[step.link];
        if step.forward {
            l.target
        } else {
            l.source
        }
    }

    /// Sites visited by a loop, starting with the start of its first step.
    pub fn loop_sites(&self, plaq: &Plaquette) -> Vec<usize> {
        plaq.steps.iter().map(|&s| self.step_start(s)).collect()
    }

    fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.num_sites];
        for l in &self.links {
            adj[l.source].push(l.target);
            adj[l.target].push(l.source);
        }
        let mut seen = vec![false; self.num_sites];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// `L - V`; at least -1 for connected graphs, -1 exactly for trees.
    pub fn euler_excess(&self) -> i64 {
        self.links.len() as i64 - self.num_sites as i64
    }

    /// Links attached to `site` in ascending id; `dual` is set when the site
    /// is the link's source.
    pub fn site_links(&self, site: usize) -> Vec<(usize, bool)> {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.source == site || l.target == site)
            .map(|(id, l)| (id, l.source == site))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "sites {}", self.num_sites).unwrap();
        for (id, l) in self.links.iter().enumerate() {
            writeln!(out, "link {id} {} {}", l.source, l.target).unwrap();
        }
        for p in &self.plaquettes {
            let steps: Vec<String> = p
                .steps
                .iter()
                .map(|s| format!("{}:{}", s.link, if s.forward { '+' } else { '-' }))
                .collect();
            writeln!(out, "loop {}", steps.join(" ")).unwrap();
        }
        out
    }
}

/// Hypercubic lattice with links along the positive axis directions.
///
/// Sites are numbered with axis 0 varying fastest. Links are ordered by
/// site, then axis. Each plaquette for axes `mu < nu` at site `x` is
/// `(x, mu)+ (x+mu, nu)+ (x+nu, mu)- (x, nu)-`.
pub fn hypercubic(extents: &[usize], periodic: &[bool]) -> Result<LatticeGraph> {
    if extents.is_empty() {
        return Err(Error::InvalidParameter("need at least one dimension".into()));
    }
    if periodic.len() != extents.len() {
        return Err(Error::InvalidParameter(
            "one periodicity flag per axis is required".into(),
        ));
    }
    for (axis, (&e, &p)) in extents.iter().zip(periodic).enumerate() {
        if e == 0 {
            return Err(Error::InvalidParameter(format!("axis {axis} has extent 0")));
        }
        if p && e < 2 {
            return Err(Error::InvalidParameter(format!(
                "periodic axis {axis} needs extent >= 2 (extent 1 would create self-loops)"
            )));
        }
    }
    let d = extents.len();
    let num_sites: usize = extents.iter().product();
    let coords = |mut x: usize| -> Vec<usize> {
        extents
            .iter()
            .map(|&e| {
                let c = x % e;
                x /= e;
                c
            })
            .collect()
    };
    let index = |c: &[usize]| -> usize {
        c.iter()
            .zip(extents)
            .rev()
            .fold(0, |acc, (&ci, &e)| acc * e + ci)
    };
    let shift = |x: usize, axis: usize| -> Option<usize> {
        let mut c = coords(x);
        if c[axis] + 1 < extents[axis] {
            c[axis] += 1;
        } else if periodic[axis] {
            c[axis] = 0;
        } else {
            return None;
        }
        Some(index(&c))
    };

    let mut links = Vec::new();
    let mut link_id = vec![vec![None; d]; num_sites];
    for x in 0..num_sites {
        for axis in 0..d {
            if let Some(y) = shift(x, axis) {
                link_id[x][axis] = Some(links.len());
                links.push(Link { source: x, target: y });
            }
        }
    }
    let mut plaquettes = Vec::new();
    for x in 0..num_sites {
        for mu in 0..d {
            for nu in mu + 1..d {
                let (Some(x_mu), Some(x_nu)) = (shift(x, mu), shift(x, nu)) else {
                    continue;
                };
                let steps = [
                    link_id[x][mu].map(|l| (l, true)),
                    link_id[x_mu][nu].map(|l| (l, true)),
                    link_id[x_nu][mu].map(|l| (l, false)),
                    link_id[x][nu].map(|l| (l, false)),
                ];
                if steps.iter().all(Option::is_some) {
                    plaquettes.push(Plaquette {
                        steps: steps
                            .iter()
                            .map(|s| {
                                let (link, forward) = s.unwrap();
                                LoopStep { link, forward }
                            })
                            .collect(),
                    });
                }
            }
        }
    }
    let mut graph = LatticeGraph::new(num_sites, links, plaquettes)?;
    graph.extents = Some(extents.to_vec());
    graph.periodic = Some(periodic.to_vec());
    Ok(graph)
}

pub fn load_graph(source: &str) -> Result<LatticeGraph> {
    let mut num_sites = None;
    let mut links = Vec::new();
    let mut plaquettes = Vec::new();
    for (lineno, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::load("graph", format!("line {}: {what}: '{line}'", lineno + 1));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad("bad integer"));
        match toks[0] {
            "sites" if toks.len() == 2 => {
                if num_sites.is_some() {
                    return Err(bad("duplicate 'sites'"));
                }
                num_sites = Some(num(toks[1])?);
            }
            "link" if toks.len() == 4 => {
                let id = num(toks[1])?;
                if id != links.len() {
                    return Err(bad("link ids must be dense and in order"));
                }
                links.push(Link {
                    source: num(toks[2])?,
                    target: num(toks[3])?,
                });
            }
            "loop" if toks.len() >= 2 => {
                let steps = toks[1..]
                    .iter()
                    .map(|t| {
                        let (l, o) = t.split_once(':').ok_or_else(|| bad("expected link:±"))?;
                        let forward = match o {
                            "+" | "+1" => true,
                            "-" | "-1" => false,
                            _ => return Err(bad("orientation must be + or -")),
                        };
                        Ok(LoopStep {
                            link: num(l)?,
                            forward,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                plaquettes.push(Plaquette { steps });
            }
            _ => return Err(bad("unrecognized line")),
        }
    }
    let num_sites = num_sites.ok_or_else(|| Error::load("graph", "missing 'sites V' line"))?;
    LatticeGraph::new(num_sites, links, plaquettes)
}
