use std::collections::{HashMap, HashSet};

use log::warn;

use crate::error::{Error, Result};
use crate::relational::tree::JoinTree;

/// Index of an attribute in the global attribute list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrId(pub usize);

/// The global attribute list. Indices are contiguous and names unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    names: Vec<String>,
}

impl Schema {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute name {n}")));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: AttrId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<AttrId> {
        self.names.iter().position(|n| n == name).map(AttrId)
    }

    /// Returns the id for `name`, appending it if unseen.
    pub fn intern(&mut self, name: &str) -> AttrId {
        match self.lookup(name) {
            Some(id) => id,
            None => {
                self.names.push(name.to_string());
                AttrId(self.names.len() - 1)
            }
        }
    }
}

/// A relation of fixed-width numeric rows, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    name: String,
    attrs: Vec<AttrId>,
    values: Vec<f64>,
}

impl Relation {
    /// Builds a relation, rejecting non-finite values and deduplicating rows.
    pub fn new(name: impl Into<String>, attrs: Vec<AttrId>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let mut seen_attrs = HashSet::new();
        for a in &attrs {
            if !seen_attrs.insert(*a) {
                return Err(Error::Schema(format!("relation {name} lists attribute #{} twice", a.0)));
            }
        }
        let width = attrs.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        let mut seen_rows: HashSet<Vec<u64>> = HashSet::with_capacity(rows.len());
        let mut dups = 0usize;
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::Schema(format!(
                    "relation {name} row {} has {} values, expected {width}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Schema(format!(
                    "relation {name} row {} holds non-finite value {v}",
                    i + 1
                )));
            }
            if seen_rows.insert(row.iter().map(|v| key_bits(*v)).collect()) {
                values.extend_from_slice(&row);
            } else {
                dups += 1;
            }
        }
        if dups > 0 {
            warn!("relation {name}: dropped {dups} duplicate rows");
        }
        Ok(Self { name, attrs, values })
    }

    pub(crate) fn from_parts(name: String, attrs: Vec<AttrId>, values: Vec<f64>) -> Self {
        Self { name, attrs, values }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attrs(&self) -> &[AttrId] {
        &self.attrs
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn len(&self) -> usize {
        if self.attrs.is_empty() {
            0
        } else {
            self.values.len() / self.attrs.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.attrs.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.attrs.len().max(1))
    }

    /// Column position of `attr` in this relation.
    pub fn column(&self, attr: AttrId) -> Option<usize> {
        self.attrs.iter().position(|a| *a == attr)
    }
}

/// Hash-key bits for a coordinate; `-0.0` and `0.0` share a key.
pub(crate) fn key_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Named relations plus an optional projection onto clustering attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub schema: Schema,
    pub relations: Vec<Relation>,
    pub projection: Option<Vec<AttrId>>,
}

impl Database {
    pub fn new(schema: Schema, relations: Vec<Relation>, projection: Option<Vec<AttrId>>) -> Result<Self> {
        let mut names = HashSet::new();
        for r in &relations {
            if !names.insert(r.name()) {
                return Err(Error::Schema(format!("duplicate relation name {}", r.name())));
            }
            if let Some(a) = r.attrs().iter().find(|a| a.0 >= schema.len()) {
                return Err(Error::Schema(format!(
                    "relation {} references unknown attribute #{}",
                    r.name(),
                    a.0
                )));
            }
        }
        if let Some(p) = &projection {
            if p.is_empty() {
                return Err(Error::Schema("projection must not be empty".into()));
            }
            let mut seen = HashSet::new();
            for a in p {
                if a.0 >= schema.len() || !seen.insert(*a) {
                    return Err(Error::Schema(format!("bad projection attribute #{}", a.0)));
                }
            }
        }
        Ok(Self {
            schema,
            relations,
            projection,
        })
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name() == name)
    }

    /// Total number of rows over all relations.
    pub fn size(&self) -> usize {
        self.relations.iter().map(Relation::len).sum()
    }

    /// Largest relation size.
    pub fn max_relation_size(&self) -> usize {
        self.relations.iter().map(Relation::len).max().unwrap_or(0)
    }
}

/// A database with a validated join tree. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    db: Database,
    tree: JoinTree,
    reduced: bool,
    dims: Vec<AttrId>,
    /// For each clustering dimension, the (relation, column) it is read from.
    coord_src: Vec<(usize, usize)>,
    /// For each relation, the clustering dimension of each column.
    col_dims: Vec<Vec<Option<usize>>>,
}

impl Instance {
    pub fn new(db: Database, tree: JoinTree) -> Result<Self> {
        if tree.len() != db.relations.len() {
            return Err(Error::Schema("join tree does not match the relation list".into()));
        }
        let dims: Vec<AttrId> = match &db.projection {
            Some(p) => p.clone(),
            None => (0..db.schema.len()).map(AttrId).collect(),
        };
        let mut coord_src = Vec::with_capacity(dims.len());
        for a in &dims {
            let src = tree
                .preorder()
                .iter()
                .find_map(|&j| db.relations[j].column(*a).map(|c| (j, c)))
                .ok_or_else(|| Error::Schema(format!("attribute {} is not in any relation", db.schema.name(*a))))?;
            coord_src.push(src);
        }
        let dim_of: HashMap<AttrId, usize> = dims.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let col_dims = db
            .relations
            .iter()
            .map(|r| r.attrs().iter().map(|a| dim_of.get(a).copied()).collect())
            .collect();
        Ok(Self {
            db,
            tree,
            reduced: false,
            dims,
            coord_src,
            col_dims,
        })
    }

    pub(crate) fn with_relations(&self, relations: Vec<Relation>, reduced: bool) -> Self {
        Self {
            db: Database {
                schema: self.db.schema.clone(),
                relations,
                projection: self.db.projection.clone(),
            },
            tree: self.tree.clone(),
            reduced,
            dims: self.dims.clone(),
            coord_src: self.coord_src.clone(),
            col_dims: self.col_dims.clone(),
        }
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn schema(&self) -> &Schema {
        &self.db.schema
    }

    pub fn relations(&self) -> &[Relation] {
        &self.db.relations
    }

    pub fn relation(&self, j: usize) -> &Relation {
        &self.db.relations[j]
    }

    pub fn tree(&self) -> &JoinTree {
        &self.tree
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// Clustering attributes, in coordinate order.
    pub fn dims(&self) -> &[AttrId] {
        &self.dims
    }

    /// Number of clustering dimensions `d`.
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn projection(&self) -> Option<&[AttrId]> {
        self.db.projection.as_deref()
    }

    pub(crate) fn coord_src(&self) -> &[(usize, usize)] {
        &self.coord_src
    }

    pub(crate) fn col_dims(&self, j: usize) -> &[Option<usize>] {
        &self.col_dims[j]
    }

    /// Number of relations `m`.
    pub fn relation_count(&self) -> usize {
        self.db.relations.len()
    }

    /// `N`: the largest relation size, used in complexity-driven parameters.
    pub fn max_relation_size(&self) -> usize {
        self.db.max_relation_size()
    }

    pub fn dim_names(&self) -> Vec<String> {
        self.dims.iter().map(|a| self.db.schema.name(*a).to_string()).collect()
    }
}
