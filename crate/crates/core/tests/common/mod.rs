//! Random datasets and trees shared by the integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use treeinherit::data::{AttributeKind, AttributeSchema, Dataset, Instance, Value};
use treeinherit::evolve::random_predicate;
use treeinherit::tree::DecisionTree;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to `max_n` instances over a mix of nominal and continuous attributes.
pub fn random_dataset(rng: &mut ChaCha8Rng, max_n: usize) -> Dataset {
    let attributes: Vec<AttributeSchema> = (0..rng.gen_range(1..=4))
        .map(|a| {
            if rng.gen_bool(0.5) {
                let names: Vec<String> = (0..rng.gen_range(2..=4)).map(|i| format!("v{i}")).collect();
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                AttributeSchema::nominal(format!("n{a}"), &refs)
            } else {
                let lo = rng.gen_range(-3..=3);
                AttributeSchema::continuous(format!("c{a}"), lo, lo + rng.gen_range(0..=6))
            }
        })
        .collect();
    let classes = rng.gen_range(2..=3u32);
    let instances = (0..rng.gen_range(1..=max_n))
        .map(|id| Instance {
            id: id as u32,
            values: attributes
                .iter()
                .map(|a| match &a.kind {
                    AttributeKind::Nominal { values } => Value::Nominal(rng.gen_range(0..values.len() as u32)),
                    AttributeKind::Continuous { min, max } => Value::Integer(rng.gen_range(*min..=*max)),
                })
                .collect(),
            class: rng.gen_range(0..classes),
        })
        .collect();
    Dataset::new(attributes, (0..classes).map(|c| format!("k{c}")).collect(), instances).unwrap()
}

/// Grows a tree by splitting random leaves.
pub fn random_tree(ds: &Dataset, rng: &mut ChaCha8Rng, max_splits: usize) -> DecisionTree {
    let classes = ds.num_classes() as u32;
    let mut t = DecisionTree::leaf(rng.gen_range(0..classes));
    for _ in 0..rng.gen_range(0..=max_splits) {
        let leaves = t.leaves();
        let at = leaves[rng.gen_range(0..leaves.len())];
        let test = random_predicate(&ds.attributes, rng).unwrap();
        t.split(at, test, rng.gen_range(0..classes), rng.gen_range(0..classes));
    }
    t
}
