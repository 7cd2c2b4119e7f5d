//! Seeded synthetic instances.

use rand::Rng;

use crate::error::Result;
use crate::relational::{Database, Instance, JoinTree, Relation, Schema};

/// A relation given as `(name, attrs, rows)`.
pub type RelationSpec<'a> = (&'a str, &'a [&'a str], Vec<Vec<f64>>);

/// Builds an instance from relation specs joined along `edges`.
pub fn build(rels: &[RelationSpec<'_>], edges: &[(&str, &str)], projection: Option<&[&str]>) -> Result<Instance> {
    let mut schema = Schema::default();
    let mut relations = Vec::new();
    for (name, attrs, rows) in rels {
        let ids = attrs.iter().map(|a| schema.intern(a)).collect();
        relations.push(Relation::new(*name, ids, rows.clone())?);
    }
    let projection = match projection {
        Some(p) => Some(
            p.iter()
                .map(|a| {
                    schema
                        .lookup(a)
                        .ok_or_else(|| crate::Error::Schema(format!("unknown attribute {a}")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let db = Database::new(schema, relations, projection)?;
    let edges: Vec<(String, String)> = edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let tree = JoinTree::build(&db, &edges)?;
    Instance::new(db, tree)
}

/// One relation `P(X)` holding the given values.
pub fn line(values: &[f64]) -> Instance {
    build(&[("P", &["X"], values.iter().map(|v| vec![*v]).collect())], &[], None).expect("valid line instance")
}

/// One relation of `d`-dimensional points.
pub fn points(rows: &[Vec<f64>]) -> Instance {
    let d = rows.first().map_or(1, Vec::len);
    let names: Vec<String> = (0..d).map(|i| format!("X{i}")).collect();
    let attrs: Vec<&str> = names.iter().map(String::as_str).collect();
    build(&[("P", &attrs, rows.to_vec())], &[], None).expect("valid point instance")
}

/// `n` points drawn uniformly from `[0, side)^d`, rounded to multiples of `grain`.
pub fn uniform_points<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, side: f64, grain: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| (rng.random_range(0.0..side) / grain).floor() * grain)
                .collect()
        })
        .collect()
}

/// Shape of a random chain join `R1(J0, J1, Y1) ⋈ R2(J1, J2, Y2) ⋈ ...`.
#[derive(Debug, Clone, Copy)]
pub struct ChainShape {
    pub relations: usize,
    pub rows: usize,
    /// Number of distinct values of each join attribute.
    pub key_domain: u32,
    /// Whether each relation carries a private real-valued attribute.
    pub private: bool,
    /// Keep only the private attributes (or the join attributes when there are none).
    pub project_private: bool,
}

/// A random acyclic chain join. Returns the instance; the join may be empty.
pub fn chain<R: Rng + ?Sized>(rng: &mut R, shape: ChainShape) -> Instance {
    let m = shape.relations.max(1);
    let names: Vec<String> = (1..=m).map(|i| format!("R{i}")).collect();
    let mut attr_names: Vec<Vec<String>> = Vec::new();
    let mut rows_all = Vec::new();
    for i in 0..m {
        let mut attrs = vec![format!("J{i}")];
        if m > 1 && i + 1 < m {
            attrs.push(format!("J{}", i + 1));
        }
        if shape.private {
            attrs.push(format!("Y{}", i + 1));
        }
        let rows: Vec<Vec<f64>> = (0..shape.rows)
            .map(|_| {
                attrs
                    .iter()
                    .map(|a| {
                        if a.starts_with('J') {
                            rng.random_range(0..shape.key_domain) as f64
                        } else {
                            (rng.random_range(0.0..10.0f64) * 4.0).floor() / 4.0
                        }
                    })
                    .collect()
            })
            .collect();
        attr_names.push(attrs);
        rows_all.push(rows);
    }
    let attr_refs: Vec<Vec<&str>> = attr_names
        .iter()
        .map(|v| v.iter().map(String::as_str).collect())
        .collect();
    let rels: Vec<RelationSpec<'_>> = (0..m)
        .map(|i| (names[i].as_str(), attr_refs[i].as_slice(), rows_all[i].clone()))
        .collect();
    let edges: Vec<(&str, &str)> = (1..m).map(|i| (names[i - 1].as_str(), names[i].as_str())).collect();
    let private: Vec<String> = (1..=m).map(|i| format!("Y{i}")).collect();
    let private_refs: Vec<&str> = private.iter().map(String::as_str).collect();
    let projection = (shape.project_private && shape.private).then_some(private_refs.as_slice());
    build(&rels, &edges, projection).expect("chain instance is acyclic")
}

/// Two relations of `rows` rows joined on a key with `rows / 2` values,
/// projected on their private attributes; the join has about `2 * rows` results.
pub fn scaling_chain(rows: usize, seed: u64) -> Instance {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    chain(
        &mut rng,
        ChainShape {
            relations: 2,
            rows,
            key_domain: (rows / 2).max(1) as u32,
            private: true,
            project_private: true,
        },
    )
}
