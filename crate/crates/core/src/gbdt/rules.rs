use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Forest, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `x <= threshold`
    Le,
    /// `x > threshold`
    Gt,
}

/// One edge on a root-to-leaf path. `includes_missing` is set when the
/// split routes missing values down this edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub branch: Branch,
    pub threshold: f64,
    pub includes_missing: bool,
}

impl Condition {
    pub fn holds(&self, row: &[Option<f64>]) -> bool {
        match (row[self.feature], self.branch) {
            (None, _) => self.includes_missing,
            (Some(x), Branch::Le) => x <= self.threshold,
            (Some(x), Branch::Gt) => x > self.threshold,
        }
    }
}

/// A leaf of one tree written as the conjunction that reaches it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub class: usize,
    pub tree: usize,
    pub conditions: Vec<Condition>,
    pub value: f64,
}

impl Rule {
    pub fn holds(&self, row: &[Option<f64>]) -> bool {
        self.conditions.iter().all(|c| c.holds(row))
    }

    /// Human-readable form using the forest's feature and class names.
    pub fn describe(&self, forest: &Forest) -> String {
        let body = if self.conditions.is_empty() {
            "always".to_string()
        } else {
            self.conditions
                .iter()
                .map(|c| {
                    let name = &forest.feature_names()[c.feature];
                    let op = match c.branch {
                        Branch::Le => "<=",
                        Branch::Gt => ">",
                    };
                    let missing = if c.includes_missing { " or missing" } else { "" };
                    format!("({name} {op} {}{missing})", c.threshold)
                })
                .collect::<Vec<_>>()
                .join(" and ")
        };
        format!(
            "class {} tree {}: if {} then {:+}",
            forest.class_names()[self.class],
            self.tree,
            body,
            self.value
        )
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.branch {
            Branch::Le => "<=",
            Branch::Gt => ">",
        };
        write!(f, "f{} {} {}", self.feature, op, self.threshold)?;
        if self.includes_missing {
            write!(f, " or missing")?;
        }
        Ok(())
    }
}

/// One rule per leaf per tree, in class-major, tree, then left-to-right
/// leaf order.
pub fn extract_rules(forest: &Forest) -> Vec<Rule> {
    let mut rules = Vec::new();
    for (class, class_trees) in forest.trees().iter().enumerate() {
        for (tree, root) in class_trees.iter().enumerate() {
            let mut path = Vec::new();
            walk(root, class, tree, &mut path, &mut rules);
        }
    }
    rules
}

fn walk(node: &TreeNode, class: usize, tree: usize, path: &mut Vec<Condition>, out: &mut Vec<Rule>) {
    match node {
        TreeNode::Leaf { value } => {
            out.push(Rule { class, tree, conditions: path.clone(), value: *value })
        }
        TreeNode::Split { feature, threshold, missing_goes_left, left, right } => {
            for (branch, child, includes_missing) in [
                (Branch::Le, left, *missing_goes_left),
                (Branch::Gt, right, !*missing_goes_left),
            ] {
                path.push(Condition { feature: *feature, branch, threshold: *threshold, includes_missing });
                walk(child, class, tree, path, out);
                path.pop();
            }
        }
    }
}
