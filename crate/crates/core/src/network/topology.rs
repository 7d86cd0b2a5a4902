use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::fingerprint::BitString;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Path,
    Tree,
}

/// A terminal node and its input string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terminal {
    pub node: String,
    pub input: BitString,
}

/// A path or rooted tree with terminals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub kind: TopologyKind,
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub terminals: Vec<Terminal>,
    pub root: String,
    /// Parent of every non-root node.
    pub parent: BTreeMap<String, String>,
}

impl Topology {
    /// Path `v0 … v_r` with terminals at both ends.
    pub fn path(r: usize, x: BitString, y: BitString) -> Result<Self> {
        if r == 0 {
            return Err(Error::param("path length must be at least 1"));
        }
        let nodes: Vec<String> = (0..=r).map(|j| format!("v{j}")).collect();
        let edges = nodes.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        let parent = (1..=r).map(|j| (nodes[j].clone(), nodes[j - 1].clone())).collect();
        Ok(Topology {
            kind: TopologyKind::Path,
            terminals: vec![
                Terminal { node: nodes[0].clone(), input: x },
                Terminal { node: nodes[r].clone(), input: y },
            ],
            root: nodes[0].clone(),
            nodes,
            edges,
            parent,
        })
    }

    /// Star with centre `c` and one leaf `u{i}` per input; the first leaf is the root.
    pub fn star(inputs: &[BitString]) -> Result<Self> {
        Self::spider(inputs, 1)
    }

    /// Centre with one path of `arm_length` edges per input; terminals at the arm ends.
    pub fn spider(inputs: &[BitString], arm_length: usize) -> Result<Self> {
        if inputs.len() < 2 || arm_length == 0 {
            return Err(Error::param("spider needs at least two arms of positive length"));
        }
        let mut nodes = vec!["c".to_string()];
        let mut edges = Vec::new();
        let mut terminals = Vec::new();
        for (t, x) in inputs.iter().enumerate() {
            let mut prev = "c".to_string();
            for step in 1..=arm_length {
                let id = if step == arm_length { format!("u{}", t + 1) } else { format!("a{}.{step}", t + 1) };
                nodes.push(id.clone());
                edges.push((prev.clone(), id.clone()));
                prev = id;
            }
            terminals.push(Terminal { node: prev, input: x.clone() });
        }
        let root = terminals[0].node.clone();
        Self::from_graph(&nodes, &edges, terminals, &root)
    }

    /// Breadth-first spanning tree rooted at `root`, pruned so that every leaf is a terminal.
    pub fn from_graph(
        nodes: &[String],
        edges: &[(String, String)],
        terminals: Vec<Terminal>,
        root: &str,
    ) -> Result<Self> {
        let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, b) in edges {
            let (&ia, &ib) = index
                .get(a.as_str())
                .zip(index.get(b.as_str()))
                .ok_or_else(|| Error::param(format!("edge ({a}, {b}) names an unknown node")))?;
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        let &start = index.get(root).ok_or_else(|| Error::param(format!("unknown root `{root}`")))?;
        for t in &terminals {
            if !index.contains_key(t.node.as_str()) {
                return Err(Error::param(format!("unknown terminal `{}`", t.node)));
            }
        }
        let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
        let mut seen = vec![false; nodes.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in &adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
        if order.len() != nodes.len() {
            return Err(Error::param("graph is not connected"));
        }
        // Keep only nodes on a root-terminal path.
        let mut keep = vec![false; nodes.len()];
        keep[start] = true;
        for t in &terminals {
            let mut u = index[t.node.as_str()];
            while !keep[u] {
                keep[u] = true;
                u = parent[u].expect("non-root node has a parent");
            }
        }
        let kept: Vec<usize> = order.into_iter().filter(|&u| keep[u]).collect();
        let tree_nodes: Vec<String> = kept.iter().map(|&u| nodes[u].clone()).collect();
        let mut tree_edges = Vec::new();
        let mut parent_map = BTreeMap::new();
        for &u in &kept {
            if let Some(p) = parent[u] {
                tree_edges.push((nodes[p].clone(), nodes[u].clone()));
                parent_map.insert(nodes[u].clone(), nodes[p].clone());
            }
        }
        let topo = Topology {
            kind: TopologyKind::Tree,
            nodes: tree_nodes,
            edges: tree_edges,
            terminals,
            root: root.to_string(),
            parent: parent_map,
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terminals {
            if t.node != self.root && !self.children(&t.node).is_empty() {
                return Err(Error::param(format!("terminal `{}` is not a leaf", t.node)));
            }
        }
        for n in &self.nodes {
            if n != &self.root && self.children(n).is_empty() && self.input(n).is_none() {
                return Err(Error::param(format!("leaf `{n}` is not a terminal")));
            }
        }
        Ok(())
    }

    pub fn children(&self, node: &str) -> Vec<String> {
        self.nodes.iter().filter(|n| self.parent.get(*n).map(String::as_str) == Some(node)).cloned().collect()
    }

    pub fn input(&self, node: &str) -> Option<&BitString> {
        self.terminals.iter().find(|t| t.node == node).map(|t| &t.input)
    }

    pub fn depth(&self, node: &str) -> usize {
        let mut d = 0;
        let mut u = node;
        while let Some(p) = self.parent.get(u) {
            d += 1;
            u = p;
        }
        d
    }

    /// Nodes from the root down to `node`.
    pub fn root_path(&self, node: &str) -> Vec<String> {
        let mut out = vec![node.to_string()];
        let mut u = node;
        while let Some(p) = self.parent.get(u) {
            out.push(p.clone());
            u = p;
        }
        out.reverse();
        out
    }

    /// Largest root-to-node distance.
    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| self.depth(n)).max().unwrap_or(0)
    }

    /// Minimum eccentricity over nodes.
    pub fn radius(&self) -> usize {
        let index: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for (a, b) in &self.edges {
            adjacency[index[a.as_str()]].push(index[b.as_str()]);
            adjacency[index[b.as_str()]].push(index[a.as_str()]);
        }
        (0..self.nodes.len())
            .map(|s| {
                let mut dist = vec![usize::MAX; self.nodes.len()];
                dist[s] = 0;
                let mut queue = VecDeque::from([s]);
                while let Some(u) = queue.pop_front() {
                    for &w in &adjacency[u] {
                        if dist[w] == usize::MAX {
                            dist[w] = dist[u] + 1;
                            queue.push_back(w);
                        }
                    }
                }
                dist.into_iter().max().unwrap_or(0)
            })
            .min()
            .unwrap_or(0)
    }

    /// The same tree rooted at another node.
    pub fn reroot(&self, root: &str) -> Result<Self> {
        Self::from_graph(&self.nodes, &self.edges, self.terminals.clone(), root)
    }

    /// Maximum number of children over nodes.
    pub fn max_children(&self) -> usize {
        self.nodes.iter().map(|n| self.children(n).len()).max().unwrap_or(0)
    }
}
