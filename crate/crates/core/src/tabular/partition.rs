use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, TabularError};
use crate::seed::seeded_rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PartitionMode {
    /// Every client gets the global class mix.
    Homogeneous,
    /// Every client gets a share of the benign class plus at most two
    /// attack classes.
    Heterogeneous { benign_class: String },
}

/// One client's private shard.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientPartition {
    client_id: usize,
    dataset: Dataset,
    class_counts: Vec<usize>,
    source_rows: Vec<usize>,
}

impl ClientPartition {
    pub fn new(client_id: usize, dataset: Dataset) -> Self {
        let source_rows = (0..dataset.n_samples()).collect();
        Self::with_source_rows(client_id, dataset, source_rows)
    }

    fn with_source_rows(client_id: usize, dataset: Dataset, source_rows: Vec<usize>) -> Self {
        let class_counts = dataset.class_counts();
        Self { client_id, dataset, class_counts, source_rows }
    }

    pub fn client_id(&self) -> usize {
        self.client_id
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Row indices of this shard in the dataset it was cut from.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }
}

/// Splits `d` into `n_clients` disjoint shards whose union is `d`.
///
/// Homogeneous: each class is shuffled and dealt round-robin, with the
/// dealing position carried across classes so every client is reached as
/// early as possible.
///
/// Heterogeneous: attack classes are assigned to clients round-robin (each
/// client holds at most two), an attack class shared by several clients is
/// dealt among them, and the benign class is dealt evenly over everyone.
pub fn partition_clients(
    d: &Dataset,
    n_clients: usize,
    mode: &PartitionMode,
    seed: u64,
) -> Result<Vec<ClientPartition>, TabularError> {
    if n_clients == 0 {
        return Err(TabularError::InvalidArgument("n_clients must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.n_classes()];
    for (i, &l) in d.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n_clients];

    match mode {
        PartitionMode::Homogeneous => {
            let mut offset = 0;
            for rows in &mut by_class {
                rows.shuffle(&mut rng);
                for (k, &row) in rows.iter().enumerate() {
                    assigned[(offset + k) % n_clients].push(row);
                }
                offset = (offset + rows.len()) % n_clients;
            }
        }
        PartitionMode::Heterogeneous { benign_class } => {
            let benign = d
                .class_id(benign_class)
                .ok_or_else(|| TabularError::NoBenignClass(benign_class.clone()))?;
            let attacks: Vec<usize> = (0..d.n_classes()).filter(|&c| c != benign).collect();
            if attacks.is_empty() {
                return Err(TabularError::NoAttackClasses);
            }
            if attacks.len() > 2 * n_clients {
                return Err(TabularError::TooManyAttackClasses {
                    attack_classes: attacks.len(),
                    n_clients,
                });
            }
            let owners: Vec<Vec<usize>> = if attacks.len() >= n_clients {
                (0..attacks.len()).map(|j| vec![j % n_clients]).collect()
            } else {
                (0..attacks.len())
                    .map(|j| (0..n_clients).filter(|i| i % attacks.len() == j).collect())
                    .collect()
            };
            for (class, rows) in by_class.iter_mut().enumerate() {
                rows.shuffle(&mut rng);
                let targets: Vec<usize> = if class == benign {
                    (0..n_clients).collect()
                } else {
                    let j = attacks.iter().position(|&a| a == class).expect("attack class");
                    owners[j].clone()
                };
                for (k, &row) in rows.iter().enumerate() {
                    assigned[targets[k % targets.len()]].push(row);
                }
            }
        }
    }

    if let Some(client) = assigned.iter().position(Vec::is_empty) {
        return Err(TabularError::TooManyClients { n_clients, client });
    }
    Ok(assigned
        .into_iter()
        .enumerate()
        .map(|(client_id, mut rows)| {
            rows.sort_unstable();
            ClientPartition::with_source_rows(client_id, d.subset(&rows), rows)
        })
        .collect())
}
