use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relational::instance::{Database, Instance, Relation, Schema};
use crate::relational::tree::JoinTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationConfig {
    pub name: String,
    pub file: PathBuf,
    pub attrs: Vec<String>,
}

/// The JSON instance description: relations, join tree edges, projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub relations: Vec<RelationConfig>,
    #[serde(default)]
    pub join_tree_edges: Vec<(String, String)>,
    #[serde(default)]
    pub projection: Option<Vec<String>>,
    /// Root relation of the join tree; the first relation when absent.
    #[serde(default)]
    pub root: Option<String>,
}

impl InstanceConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn read_relation<R: Read>(schema: &mut Schema, cfg: &RelationConfig, source: R) -> Result<Relation> {
    let ids: Vec<_> = cfg.attrs.iter().map(|a| schema.intern(a)).collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("relation {}: {e}", cfg.name)))?
        .clone();
    if headers.is_empty() {
        return Relation::new(cfg.name.clone(), ids, Vec::new());
    }
    let mut slot = vec![usize::MAX; headers.len()];
    for (c, h) in headers.iter().enumerate() {
        let pos =
            cfg.attrs.iter().position(|a| a == h).ok_or_else(|| {
                Error::Schema(format!("relation {}: column {h} is not a declared attribute", cfg.name))
            })?;
        if slot.contains(&pos) {
            return Err(Error::Schema(format!(
                "relation {}: column {h} appears twice",
                cfg.name
            )));
        }
        slot[c] = pos;
    }
    if let Some(missing) = cfg.attrs.iter().enumerate().find(|(i, _)| !slot.contains(i)) {
        return Err(Error::Schema(format!(
            "relation {}: missing column for attribute {}",
            cfg.name, missing.1
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(format!("relation {} row {}: {e}", cfg.name, i + 1)))?;
        let mut row = vec![0.0; cfg.attrs.len()];
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    relation: cfg.name.clone(),
                    row: i + 1,
                    column: headers[c].to_string(),
                    value: cell.to_string(),
                })?;
            row[slot[c]] = v;
        }
        rows.push(row);
    }
    Relation::new(cfg.name.clone(), ids, rows)
}

/// Parses one CSV source per relation into a database, without a join tree.
pub fn load_database<R: Read>(cfg: &InstanceConfig, sources: Vec<R>) -> Result<Database> {
    if sources.len() != cfg.relations.len() {
        return Err(Error::Config(format!(
            "{} sources for {} relations",
            sources.len(),
            cfg.relations.len()
        )));
    }
    let mut schema = Schema::default();
    let mut relations = Vec::with_capacity(sources.len());
    for (rc, src) in cfg.relations.iter().zip(sources) {
        relations.push(read_relation(&mut schema, rc, src)?);
    }
    let projection = match &cfg.projection {
        None => None,
        Some(names) => Some(
            names
                .iter()
                .map(|n| {
                    schema
                        .lookup(n)
                        .ok_or_else(|| Error::Schema(format!("projection attribute {n} is not declared")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Database::new(schema, relations, projection)
}

/// Parses the CSV sources and validates the join tree.
pub fn load_instance<R: Read>(cfg: &InstanceConfig, sources: Vec<R>) -> Result<Instance> {
    let db = load_database(cfg, sources)?;
    let root = match &cfg.root {
        None => 0,
        Some(r) => db
            .relation_index(r)
            .ok_or_else(|| Error::Config(format!("root relation {r} is not declared")))?,
    };
    let tree = JoinTree::build_rooted(&db, &cfg.join_tree_edges, root)?;
    Instance::new(db, tree)
}

/// Loads a JSON config and the CSV files it names, relative to the config's directory.
pub fn load_instance_from_path(path: &Path) -> Result<Instance> {
    let cfg = InstanceConfig::from_path(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let files = cfg
        .relations
        .iter()
        .map(|r| {
            let p = base.join(&r.file);
            File::open(&p).map_err(|source| Error::Io { path: p, source })
        })
        .collect::<Result<Vec<_>>>()?;
    load_instance(&cfg, files)
}
