//! Binary decision-tree genome with leaf-resident instance indices.
//!
//! Nodes live in an arena addressed by [`NodeId`]. Only leaves store
//! instance ids; the instance set of any internal node is recovered by
//! concatenating the lists of the leaves below it.
//!
//! Branch convention: a `NominalEquals` test sends matching instances
//! right and the rest left; `NumericAtMost` sends `value <= threshold` left.

use std::fmt;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{AttributeKind, AttributeSchema, Dataset, Instance, InstanceId, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0} is not part of the tree")]
    NoSuchNode(NodeId),
    #[error("malformed tree: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    NominalEquals { value: u32 },
    NumericAtMost { threshold: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestPredicate {
    pub attribute: usize,
    pub kind: TestKind,
}

impl TestPredicate {
    pub fn nominal(attribute: usize, value: u32) -> Self {
        Self {
            attribute,
            kind: TestKind::NominalEquals { value },
        }
    }

    pub fn at_most(attribute: usize, threshold: i64) -> Self {
        Self {
            attribute,
            kind: TestKind::NumericAtMost { threshold },
        }
    }

    /// `true` sends the instance to the right child.
    #[inline]
    pub fn goes_right(&self, instance: &Instance) -> bool {
        match (self.kind, instance.values[self.attribute]) {
            (TestKind::NominalEquals { value }, Value::Nominal(v)) => v == value,
            (TestKind::NumericAtMost { threshold }, Value::Integer(v)) => v > threshold,
            // schema mismatch cannot happen for validated trees; treat as "not equal"
            (TestKind::NominalEquals { .. }, _) => false,
            (TestKind::NumericAtMost { .. }, _) => true,
        }
    }

    pub fn is_valid_for(&self, attributes: &[AttributeSchema]) -> bool {
        let Some(attr) = attributes.get(self.attribute) else {
            return false;
        };
        match (&attr.kind, self.kind) {
            (AttributeKind::Nominal { values }, TestKind::NominalEquals { value }) => (value as usize) < values.len(),
            (AttributeKind::Continuous { min, max }, TestKind::NumericAtMost { threshold }) => {
                *min <= threshold && threshold <= *max
            }
            _ => false,
        }
    }

    pub fn describe(&self, attributes: &[AttributeSchema]) -> String {
        let attr = &attributes[self.attribute];
        match (self.kind, &attr.kind) {
            (TestKind::NominalEquals { value }, AttributeKind::Nominal { values }) => {
                format!("{} = {}?", attr.name, values[value as usize])
            }
            (TestKind::NominalEquals { value }, _) => format!("{} = #{}?", attr.name, value),
            (TestKind::NumericAtMost { threshold }, _) => format!("{} <= {}?", attr.name, threshold),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub class: u32,
    pub instances: Vec<InstanceId>,
    pub correct: u32,
}

impl Leaf {
    pub fn new(class: u32) -> Self {
        Self {
            class,
            instances: Vec::new(),
            correct: 0,
        }
    }

    pub fn clear(&mut self) {
        self.instances.clear();
        self.correct = 0;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Internal {
        test: TestPredicate,
        left: NodeId,
        right: NodeId,
    },
    Leaf(Leaf),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub kind: NodeKind,
}

/// Tallies of evaluation work.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    /// One per instance processed at one node (a test or a class check).
    pub node_instance_checks: u64,
    /// One per instance whose classification was (re)computed.
    pub instances_reclassified: u64,
}

impl AddAssign for EvalCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.node_instance_checks += rhs.node_instance_checks;
        self.instances_reclassified += rhs.instances_reclassified;
    }
}

impl std::iter::Sum for EvalCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |mut a, b| {
            a += b;
            a
        })
    }
}

/// Leaf count and summed correct counters of a subtree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Aggregate {
    pub leaf_count: usize,
    pub correct_total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    root: NodeId,
}

impl DecisionTree {
    pub fn leaf(class: u32) -> Self {
        Self {
            nodes: vec![Node {
                parent: None,
                kind: NodeKind::Leaf(Leaf::new(class)),
            }],
            root: NodeId(0),
        }
    }

    /// One internal node over two leaves.
    pub fn stump(test: TestPredicate, left_class: u32, right_class: u32) -> Self {
        let mut t = Self::leaf(0);
        let root = t.root;
        t.split(root, test, left_class, right_class);
        t
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.index()]
    }

    /// Arena length, including abandoned nodes.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len() && self.is_reachable(id)
    }

    fn is_reachable(&self, mut id: NodeId) -> bool {
        // walk parent links up to the root, checking each link is mirrored by a child link
        loop {
            if id == self.root {
                return true;
            }
            let Some(p) = self.nodes[id.index()].parent else {
                return false;
            };
            match &self.nodes[p.index()].kind {
                NodeKind::Internal { left, right, .. } if *left == id || *right == id => id = p,
                _ => return false,
            }
        }
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        match &self.node(id).kind {
            NodeKind::Internal { left, right, .. } => Some((*left, *right)),
            NodeKind::Leaf(_) => None,
        }
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.node(id).kind, NodeKind::Leaf(_))
    }

    pub fn leaf_data(&self, id: NodeId) -> Option<&Leaf> {
        match &self.node(id).kind {
            NodeKind::Leaf(l) => Some(l),
            NodeKind::Internal { .. } => None,
        }
    }

    pub fn leaf_data_mut(&mut self, id: NodeId) -> Option<&mut Leaf> {
        match &mut self.node_mut(id).kind {
            NodeKind::Leaf(l) => Some(l),
            NodeKind::Internal { .. } => None,
        }
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    /// Number of edges from the root to `id`.
    pub fn depth(&self, mut id: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent(id) {
            d += 1;
            id = p;
        }
        d
    }

    /// `ancestor` is `node` or lies on its root path.
    pub fn is_ancestor_or_self(&self, ancestor: NodeId, node: NodeId) -> bool {
        let mut cur = Some(node);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.parent(c);
        }
        false
    }

    fn push(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node);
        id
    }

    /// Turns leaf `id` into an internal node with two fresh empty leaves.
    /// Returns the new `(left, right)` ids.
    pub fn split(&mut self, id: NodeId, test: TestPredicate, left_class: u32, right_class: u32) -> (NodeId, NodeId) {
        assert!(self.is_leaf(id), "split target must be a leaf");
        let left = self.push(Node {
            parent: Some(id),
            kind: NodeKind::Leaf(Leaf::new(left_class)),
        });
        let right = self.push(Node {
            parent: Some(id),
            kind: NodeKind::Leaf(Leaf::new(right_class)),
        });
        self.node_mut(id).kind = NodeKind::Internal { test, left, right };
        (left, right)
    }

    pub fn set_test(&mut self, id: NodeId, new_test: TestPredicate) {
        match &mut self.node_mut(id).kind {
            NodeKind::Internal { test, .. } => *test = new_test,
            NodeKind::Leaf(_) => panic!("set_test on a leaf"),
        }
    }

    /// Puts `new` where `old` hangs (or at the root). `old` and its subtree
    /// are abandoned in the arena but keep their contents.
    pub fn replace_subtree(&mut self, old: NodeId, new: NodeId) {
        let parent = self.parent(old);
        self.node_mut(new).parent = parent;
        match parent {
            None => self.root = new,
            Some(p) => match &mut self.node_mut(p).kind {
                NodeKind::Internal { left, right, .. } => {
                    if *left == old {
                        *left = new;
                    } else {
                        debug_assert_eq!(*right, old);
                        *right = new;
                    }
                }
                NodeKind::Leaf(_) => unreachable!("parent is always internal"),
            },
        }
    }

    /// Appends a detached leaf to the arena.
    pub fn add_leaf(&mut self, class: u32) -> NodeId {
        self.push(Node {
            parent: None,
            kind: NodeKind::Leaf(Leaf::new(class)),
        })
    }

    /// Reachable nodes below `from`, pre-order, left before right.
    pub fn preorder_from(&self, from: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some((l, r)) = self.children(id) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        self.preorder_from(self.root)
    }

    /// Number of reachable nodes.
    pub fn node_count(&self) -> usize {
        self.preorder().len()
    }

    /// Leaves below `from`, left to right.
    pub fn leaves_from(&self, from: NodeId) -> Vec<NodeId> {
        self.preorder_from(from).into_iter().filter(|&id| self.is_leaf(id)).collect()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.leaves_from(self.root)
    }

    pub fn clear_leaves_from(&mut self, from: NodeId) {
        for id in self.leaves_from(from) {
            if let Some(l) = self.leaf_data_mut(id) {
                l.clear();
            }
        }
    }

    /// Walks from `from` down to a leaf, one check per node visited
    /// (the final leaf visit included).
    #[inline]
    pub fn route_from(&self, from: NodeId, instance: &Instance, counters: &mut EvalCounters) -> NodeId {
        let mut id = from;
        loop {
            counters.node_instance_checks += 1;
            match &self.nodes[id.index()].kind {
                NodeKind::Leaf(_) => return id,
                NodeKind::Internal { test, left, right } => {
                    id = if test.goes_right(instance) { *right } else { *left };
                }
            }
        }
    }

    pub fn route(&self, instance: &Instance, counters: &mut EvalCounters) -> NodeId {
        self.route_from(self.root, instance, counters)
    }

    /// Predicted class index for `instance`, without touching any counter.
    pub fn classify(&self, instance: &Instance) -> u32 {
        let leaf = self.route(instance, &mut EvalCounters::default());
        self.leaf_data(leaf).expect("route ends at a leaf").class
    }

    /// Routes `instance` from `from`, stores its id in the reached leaf and
    /// updates that leaf's correct counter.
    #[inline]
    pub fn place_from(&mut self, from: NodeId, instance: &Instance, counters: &mut EvalCounters) -> NodeId {
        let leaf_id = self.route_from(from, instance, counters);
        let leaf = self.leaf_data_mut(leaf_id).expect("route ends at a leaf");
        leaf.instances.push(instance.id);
        if leaf.class == instance.class {
            leaf.correct += 1;
        }
        leaf_id
    }

    /// Clears every leaf and classifies the whole dataset from the root.
    pub fn evaluate_full(&mut self, dataset: &Dataset, counters: &mut EvalCounters) {
        let root = self.root;
        self.clear_leaves_from(root);
        for inst in &dataset.instances {
            self.place_from(root, inst, counters);
        }
        counters.instances_reclassified += dataset.len() as u64;
    }

    /// Leaf count and correct total below `from`; no routing involved.
    pub fn aggregate(&self, from: NodeId) -> Aggregate {
        let mut agg = Aggregate::default();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            match &self.nodes[id.index()].kind {
                NodeKind::Leaf(l) => {
                    agg.leaf_count += 1;
                    agg.correct_total += l.correct as usize;
                }
                NodeKind::Internal { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        agg
    }

    pub fn aggregate_root(&self) -> Aggregate {
        self.aggregate(self.root)
    }

    /// Concatenation of the leaf instance lists below `from`, left to right.
    pub fn gather_instances(&self, from: NodeId) -> Vec<InstanceId> {
        let mut out = Vec::new();
        for id in self.leaves_from(from) {
            out.extend_from_slice(&self.leaf_data(id).expect("leaf").instances);
        }
        out
    }

    /// Total instance ids stored across reachable leaves.
    pub fn stored_instance_count(&self) -> usize {
        self.leaves()
            .into_iter()
            .map(|id| self.leaf_data(id).expect("leaf").instances.len())
            .sum()
    }

    /// Deep copy of `source`'s subtree at `from` into `self`, leaf data
    /// included. The copy is detached (no parent); returns its root id.
    pub fn copy_subtree_from(&mut self, source: &DecisionTree, from: NodeId) -> NodeId {
        let new_root = self.push(source.node(from).clone());
        self.node_mut(new_root).parent = None;
        // (source node, already-pushed destination node)
        let mut stack = vec![(from, new_root)];
        while let Some((src, dst)) = stack.pop() {
            if let NodeKind::Internal { left, right, test } = source.node(src).kind.clone() {
                let l = self.push(Node {
                    parent: Some(dst),
                    kind: source.node(left).kind.clone(),
                });
                let r = self.push(Node {
                    parent: Some(dst),
                    kind: source.node(right).kind.clone(),
                });
                self.node_mut(dst).kind = NodeKind::Internal { test, left: l, right: r };
                stack.push((right, r));
                stack.push((left, l));
            }
        }
        new_root
    }

    /// Standalone tree holding a copy of `source`'s subtree at `from`.
    pub fn from_subtree(source: &DecisionTree, from: NodeId) -> DecisionTree {
        let mut t = DecisionTree {
            nodes: Vec::new(),
            root: NodeId(0),
        };
        t.root = t.copy_subtree_from(source, from);
        t.compact();
        t
    }

    /// Drops abandoned nodes and renumbers so that node ids follow pre-order.
    pub fn compact(&mut self) {
        let order = self.preorder();
        if order.len() == self.nodes.len() && order.iter().enumerate().all(|(i, id)| id.index() == i) {
            return;
        }
        let mut remap = vec![u32::MAX; self.nodes.len()];
        for (new, old) in order.iter().enumerate() {
            remap[old.index()] = new as u32;
        }
        let map = |id: NodeId| NodeId(remap[id.index()]);
        let mut old_nodes: Vec<Option<Node>> = std::mem::take(&mut self.nodes).into_iter().map(Some).collect();
        self.nodes = order
            .iter()
            .map(|old| {
                let mut node = old_nodes[old.index()].take().expect("each node visited once");
                node.parent = node.parent.map(map);
                if let NodeKind::Internal { left, right, .. } = &mut node.kind {
                    *left = map(*left);
                    *right = map(*right);
                }
                node
            })
            .collect();
        self.root = NodeId(0);
    }

    /// Structural equality over reachable nodes: same shape, same tests,
    /// same leaf classes. Leaf data is ignored.
    pub fn same_structure(&self, other: &DecisionTree) -> bool {
        let a = self.preorder();
        let b = other.preorder();
        a.len() == b.len()
            && a.iter().zip(&b).all(|(&x, &y)| match (&self.node(x).kind, &other.node(y).kind) {
                (NodeKind::Leaf(l), NodeKind::Leaf(m)) => l.class == m.class,
                (NodeKind::Internal { test: s, .. }, NodeKind::Internal { test: t, .. }) => s == t,
                _ => false,
            })
    }

    /// Structural equality plus equal leaf evaluations (instance multisets
    /// and correct counters).
    pub fn same_evaluation(&self, other: &DecisionTree) -> bool {
        if !self.same_structure(other) {
            return false;
        }
        self.leaves().iter().zip(other.leaves()).all(|(&x, y)| {
            let (l, m) = (self.leaf_data(x).unwrap(), other.leaf_data(y).unwrap());
            if l.correct != m.correct || l.instances.len() != m.instances.len() {
                return false;
            }
            let mut a = l.instances.clone();
            let mut b = m.instances.clone();
            a.sort_unstable();
            b.sort_unstable();
            a == b
        })
    }

    /// Checks the rooted-binary-tree invariants and, when given, that every
    /// test and leaf class fits the schema.
    pub fn validate(&self, schema: Option<(&[AttributeSchema], usize)>) -> Result<(), TreeError> {
        let bad = |m: String| Err(TreeError::Malformed(m));
        if self.root.index() >= self.nodes.len() {
            return bad("root outside arena".into());
        }
        if self.node(self.root).parent.is_some() {
            return bad("root has a parent".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if id.index() >= self.nodes.len() {
                return bad(format!("dangling child {id}"));
            }
            if std::mem::replace(&mut seen[id.index()], true) {
                return bad(format!("node {id} reached twice"));
            }
            match &self.node(id).kind {
                NodeKind::Internal { test, left, right } => {
                    for c in [*left, *right] {
                        if c.index() >= self.nodes.len() || self.node(c).parent != Some(id) {
                            return bad(format!("child {c} of {id} has a wrong parent link"));
                        }
                        stack.push(c);
                    }
                    if let Some((attrs, _)) = schema {
                        if !test.is_valid_for(attrs) {
                            return bad(format!("test at {id} does not fit the schema"));
                        }
                    }
                }
                NodeKind::Leaf(l) => {
                    if l.correct as usize > l.instances.len() {
                        return bad(format!("leaf {id} counts more correct than stored"));
                    }
                    if let Some((_, classes)) = schema {
                        if l.class as usize >= classes {
                            return bad(format!("leaf {id} has class {}", l.class));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Indented text rendering: `attr = value?` / `attr <= t?` for tests,
    /// `class (correct/total)` for leaves; left child printed first.
    pub fn pretty(&self, attributes: &[AttributeSchema], class_values: &[String]) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            for _ in 0..depth {
                out.push_str("  ");
            }
            match &self.node(id).kind {
                NodeKind::Internal { test, left, right } => {
                    out.push_str(&test.describe(attributes));
                    stack.push((*right, depth + 1));
                    stack.push((*left, depth + 1));
                }
                NodeKind::Leaf(l) => {
                    let name = class_values.get(l.class as usize).map(String::as_str).unwrap_or("?");
                    out.push_str(&format!("{} ({}/{})", name, l.correct, l.instances.len()));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// On-disk form of a learned tree: JSON carrying the schema it was learned
/// against, so it can be printed without the training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub attributes: Vec<AttributeSchema>,
    pub class_values: Vec<String>,
    pub tree: DecisionTree,
}

#[derive(Debug, Error)]
pub enum TreeFileError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("tree file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

impl TreeFile {
    /// Compacts a copy of `tree` and bundles it with the dataset schema.
    pub fn new(tree: &DecisionTree, dataset: &Dataset) -> Self {
        let mut tree = tree.clone();
        tree.compact();
        Self {
            attributes: dataset.attributes.clone(),
            class_values: dataset.class_values.clone(),
            tree,
        }
    }

    pub fn save<P: AsRef<std::path::Path>>(&self, path: P) -> Result<(), TreeFileError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<Self, TreeFileError> {
        let text = std::fs::read_to_string(path)?;
        let file: TreeFile = serde_json::from_str(&text)?;
        file.tree
            .validate(Some((&file.attributes, file.class_values.len())))?;
        Ok(file)
    }

    pub fn pretty(&self) -> String {
        self.tree.pretty(&self.attributes, &self.class_values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_parity, parse_csv, ClassColumn};
    use std::collections::HashMap;

    /// Complete tree testing bit `d` at depth `d`.
    pub(crate) fn parity_tree(bits: usize) -> DecisionTree {
        let mut t = DecisionTree::leaf(0);
        let mut frontier = vec![(t.root(), 0u32)];
        for b in 0..bits {
            let mut next = Vec::new();
            for (id, parity) in frontier {
                let (l, r) = t.split(id, TestPredicate::nominal(b, 1), parity, 1 - parity);
                next.push((l, parity));
                next.push((r, 1 - parity));
            }
            frontier = next;
        }
        t
    }

    fn table2() -> Dataset {
        parse_csv(
            "A_1,A_2,A_3,Class\nN,N,Y,Y\nN,Y,N,N\nY,N,N,N\nY,Y,Y,Y\n",
            &ClassColumn::Last,
            &HashMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn single_leaf_routing_costs_one_check() {
        let t = DecisionTree::leaf(0);
        let ds = table2();
        let mut c = EvalCounters::default();
        assert_eq!(t.route(&ds.instances[0], &mut c), t.root());
        assert_eq!(c.node_instance_checks, 1);
    }

    #[test]
    fn parity_tree_routes_with_depth_plus_one_checks() {
        for bits in 1..=5 {
            let ds = generate_parity(bits).unwrap();
            let mut t = parity_tree(bits);
            for inst in &ds.instances {
                let mut c = EvalCounters::default();
                t.route(inst, &mut c);
                assert_eq!(c.node_instance_checks, bits as u64 + 1);
            }
            let mut c = EvalCounters::default();
            t.evaluate_full(&ds, &mut c);
            assert_eq!(c.node_instance_checks, (ds.len() * (bits + 1)) as u64);
            assert_eq!(c.instances_reclassified, ds.len() as u64);
            assert_eq!(t.aggregate_root().correct_total, ds.len());
            assert_eq!(t.aggregate_root().leaf_count, 1 << bits);
        }
    }

    #[test]
    fn majority_leaf_counts() {
        let ds = table2();
        // classes Y,N,N,Y: tie, either label gets 2
        let mut t = DecisionTree::leaf(0);
        t.evaluate_full(&ds, &mut EvalCounters::default());
        assert_eq!(t.aggregate_root(), Aggregate { leaf_count: 1, correct_total: 2 });
    }

    #[test]
    fn empty_dataset_leaves_everything_empty() {
        let ds = table2().subset(&[]);
        let mut t = parity_tree(2);
        let mut c = EvalCounters::default();
        t.evaluate_full(&ds, &mut c);
        assert_eq!(c, EvalCounters::default());
        assert_eq!(t.stored_instance_count(), 0);
    }

    #[test]
    fn gather_concatenates_children() {
        let ds = generate_parity(3).unwrap();
        let mut t = parity_tree(3);
        t.evaluate_full(&ds, &mut EvalCounters::default());
        let mut all = t.gather_instances(t.root());
        all.sort();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
        for id in t.preorder() {
            if let Some((l, r)) = t.children(id) {
                let mut lr = t.gather_instances(l);
                lr.extend(t.gather_instances(r));
                assert_eq!(t.gather_instances(id), lr);
            } else {
                assert_eq!(t.gather_instances(id), t.leaf_data(id).unwrap().instances);
            }
        }
    }

    #[test]
    fn copy_is_independent() {
        let ds = generate_parity(2).unwrap();
        let mut src = parity_tree(2);
        src.evaluate_full(&ds, &mut EvalCounters::default());
        let mut copy = DecisionTree::from_subtree(&src, src.root());
        assert_eq!(copy.node_count(), 7);
        assert!(copy.same_evaluation(&src));
        let leaf = copy.leaves()[0];
        copy.leaf_data_mut(leaf).unwrap().class = 1;
        assert!(!copy.same_structure(&src));
        assert_eq!(src.leaf_data(src.leaves()[0]).unwrap().class, 0);

        let l = src.leaves()[1];
        let leaf_copy = DecisionTree::from_subtree(&src, l);
        assert_eq!(leaf_copy.leaf_data(leaf_copy.root()), src.leaf_data(l));
    }

    #[test]
    fn compact_renumbers_in_preorder() {
        let mut t = parity_tree(2);
        let old = t.children(t.root()).unwrap().0;
        let new = t.add_leaf(1);
        t.replace_subtree(old, new);
        assert_eq!(t.arena_len(), 8);
        assert!(!t.contains(old));
        t.compact();
        assert_eq!(t.arena_len(), 5);
        assert_eq!(t.preorder(), (0..5).map(NodeId).collect::<Vec<_>>());
        t.validate(None).unwrap();
    }

    #[test]
    fn validate_catches_bad_counters() {
        let mut t = DecisionTree::leaf(0);
        t.leaf_data_mut(t.root()).unwrap().correct = 1;
        assert!(t.validate(None).is_err());
    }

    #[test]
    fn pretty_format() {
        let ds = table2();
        let mut t = DecisionTree::stump(TestPredicate::nominal(0, 1), 1, 0);
        t.evaluate_full(&ds, &mut EvalCounters::default());
        assert_eq!(t.pretty(&ds.attributes, &ds.class_values), "A_1 = Y?\n  N (1/2)\n  Y (1/2)\n");
        let num = DecisionTree::stump(TestPredicate::at_most(0, 3), 0, 1);
        let attrs = vec![AttributeSchema::continuous("x", 0, 9)];
        assert!(num.pretty(&attrs, &ds.class_values).starts_with("x <= 3?\n"));
    }

    #[test]
    fn numeric_tests_send_at_most_left() {
        let inst = Instance {
            id: 0,
            values: vec![Value::Integer(3)],
            class: 0,
        };
        assert!(!TestPredicate::at_most(0, 3).goes_right(&inst));
        assert!(TestPredicate::at_most(0, 2).goes_right(&inst));
    }

    #[test]
    fn tree_file_roundtrip() {
        let ds = generate_parity(3).unwrap();
        let mut t = parity_tree(3);
        t.evaluate_full(&ds, &mut EvalCounters::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("best.tree");
        let file = TreeFile::new(&t, &ds);
        file.save(&path).unwrap();
        let back = TreeFile::load(&path).unwrap();
        assert_eq!(back, file);
        assert!(back.tree.same_evaluation(&t));
        assert!(back.pretty().starts_with("B0 = 1?\n"));

        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(TreeFile::load(&path), Err(TreeFileError::Json(_))));
        let mut broken = file.clone();
        broken.class_values.truncate(1);
        broken.save(&path).unwrap();
        assert!(matches!(TreeFile::load(&path), Err(TreeFileError::Tree(_))));
    }
}
