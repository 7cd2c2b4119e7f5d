//! Relations, join trees and exact join processing.

mod instance;
pub(crate) mod join;
mod load;
mod tree;

pub use instance::{AttrId, Database, Instance, Relation, Schema};
pub use load::{load_database, load_instance, load_instance_from_path, InstanceConfig, RelationConfig};
pub use tree::{JoinTree, Link};

use crate::error::Result;
use crate::geometry::Point;
use join::{select_all, Counted, Selection};

/// Copies the selected rows into a standalone instance.
pub(crate) fn sub_instance(inst: &Instance, sel: &Selection, reduced: bool) -> Instance {
    let relations = inst
        .relations()
        .iter()
        .zip(sel)
        .map(|(r, rows)| {
            let mut values = Vec::with_capacity(rows.len() * r.arity());
            for &i in rows {
                values.extend_from_slice(r.row(i as usize));
            }
            Relation::from_parts(r.name().to_string(), r.attrs().to_vec(), values)
        })
        .collect();
    inst.with_relations(relations, reduced)
}

/// Removes every row that takes part in no join result.
pub fn semi_join_reduce(inst: &Instance) -> Result<Instance> {
    let counted = Counted::new(inst, select_all(inst))?;
    Ok(sub_instance(inst, &counted.reduced_selection(), true))
}

/// `|q(D)|`, the number of join results.
pub fn count_join(inst: &Instance) -> Result<u64> {
    Ok(Counted::new(inst, select_all(inst))?.total())
}

/// Join results projected on the clustering attributes, duplicates kept.
pub fn enumerate_join(inst: &Instance, limit: Option<usize>) -> Result<Vec<Point>> {
    Ok(Counted::new(inst, select_all(inst))?.report(limit))
}
