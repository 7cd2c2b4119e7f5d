use crate::error::{Error, Result};
use crate::relational::instance::{AttrId, Database};

/// Shared attributes between a relation and its parent, as column positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub attrs: Vec<AttrId>,
    pub child_cols: Vec<usize>,
    pub parent_cols: Vec<usize>,
}

/// A rooted join tree over the relations of a database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    preorder: Vec<usize>,
    links: Vec<Option<Link>>,
}

impl JoinTree {
    /// Validates `edges` (pairs of relation names) as a join tree of `db`, rooted
    /// at the first relation.
    pub fn build(db: &Database, edges: &[(String, String)]) -> Result<Self> {
        Self::build_rooted(db, edges, 0)
    }

    pub fn build_rooted(db: &Database, edges: &[(String, String)], root: usize) -> Result<Self> {
        let m = db.relations.len();
        if m == 0 {
            return Err(Error::NotATree("no relations".into()));
        }
        if root >= m {
            return Err(Error::NotATree(format!("root index {root} out of range")));
        }
        let mut adj = vec![Vec::new(); m];
        for (a, b) in edges {
            let ia = db
                .relation_index(a)
                .ok_or_else(|| Error::NotATree(format!("unknown relation {a}")))?;
            let ib = db
                .relation_index(b)
                .ok_or_else(|| Error::NotATree(format!("unknown relation {b}")))?;
            if ia == ib {
                return Err(Error::NotATree(format!("self loop on {a}")));
            }
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        if edges.len() != m - 1 {
            return Err(Error::NotATree(format!("{} edges for {m} relations", edges.len())));
        }

        let mut parent = vec![None; m];
        let mut seen = vec![false; m];
        let mut preorder = Vec::with_capacity(m);
        // Iterative DFS keeps the preorder stable: children in edge order.
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            preorder.push(u);
            for &v in adj[u].iter().rev() {
                if seen[v] {
                    if parent[u] != Some(v) {
                        return Err(Error::NotATree("edge set contains a cycle".into()));
                    }
                    continue;
                }
                seen[v] = true;
                parent[v] = Some(u);
                stack.push(v);
            }
        }
        if preorder.len() != m {
            return Err(Error::NotATree("edge set is disconnected".into()));
        }
        let mut children = vec![Vec::new(); m];
        for &u in &preorder {
            if let Some(p) = parent[u] {
                children[p].push(u);
            }
        }

        check_connectivity(db, &parent)?;

        let links = (0..m)
            .map(|c| {
                parent[c].map(|p| {
                    let (rc, rp) = (&db.relations[c], &db.relations[p]);
                    let attrs: Vec<AttrId> = rc.attrs().iter().copied().filter(|a| rp.column(*a).is_some()).collect();
                    Link {
                        child_cols: attrs.iter().map(|a| rc.column(*a).unwrap()).collect(),
                        parent_cols: attrs.iter().map(|a| rp.column(*a).unwrap()).collect(),
                        attrs,
                    }
                })
            })
            .collect();
        Ok(Self {
            root,
            parent,
            children,
            preorder,
            links,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parent[j]
    }

    pub fn children(&self, j: usize) -> &[usize] {
        &self.children[j]
    }

    /// Relations in root-first order; every relation appears after its parent.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// Shared attributes of `j` with its parent; `None` at the root.
    pub fn link(&self, j: usize) -> Option<&Link> {
        self.links[j].as_ref()
    }

    pub fn shared_attrs(&self, a: usize, b: usize) -> Option<&[AttrId]> {
        if self.parent[a] == Some(b) {
            self.link(a).map(|l| l.attrs.as_slice())
        } else if self.parent[b] == Some(a) {
            self.link(b).map(|l| l.attrs.as_slice())
        } else {
            None
        }
    }
}

/// Every attribute's relations must induce a connected subtree.
fn check_connectivity(db: &Database, parent: &[Option<usize>]) -> Result<()> {
    let m = db.relations.len();
    for a in 0..db.schema.len() {
        let holders: Vec<bool> = db.relations.iter().map(|r| r.column(AttrId(a)).is_some()).collect();
        let total = holders.iter().filter(|h| **h).count();
        if total <= 1 {
            continue;
        }
        // Connected iff exactly one holder has a parent that is not a holder.
        let tops = (0..m)
            .filter(|&j| holders[j] && parent[j].is_none_or(|p| !holders[p]))
            .count();
        if tops != 1 {
            return Err(Error::CyclicQuery {
                attribute: db.schema.name(AttrId(a)).to_string(),
            });
        }
    }
    Ok(())
}
