//! Edge-server side of SHFL: trust ranking, filtered random selection and
//! data-size-weighted aggregation.

use rand::seq::index;

use crate::aggregation::ClientUpdate;
use crate::error::{Error, Result};
use crate::param::{weighted_sum, ParamVector};
use crate::seed;

/// Distance of a client's model from the current global model; smaller
/// means more trusted.
pub fn trust_metric(update: &ParamVector, global: &ParamVector) -> Result<f64> {
    update.l2_distance(global)
}

/// Clients sorted by ascending trust metric, ties by ascending node id.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRanking {
    entries: Vec<(usize, f64)>,
}

impl TrustRanking {
    pub fn compute(updates: &[ClientUpdate], global: &ParamVector) -> Result<Self> {
        let mut entries = updates
            .iter()
            .map(|u| Ok((u.node_id, trust_metric(&u.model, global)?)))
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Node ids left after dropping the `a` least trusted.
    pub fn trusted(&self, a: usize) -> &[(usize, f64)] {
        &self.entries[..self.entries.len().saturating_sub(a)]
    }
}

/// Client selection at one edge.
///
/// Ranks clients by trust metric, discards the `a` most distant, then
/// draws `m` of the rest uniformly without replacement. The result is
/// sorted by node id.
pub fn select_clients_shfl(
    updates: &[ClientUpdate],
    global: &ParamVector,
    a: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if a + m > updates.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {m} clients after removing {a} of {}",
            updates.len()
        )));
    }
    let ranking = TrustRanking::compute(updates, global)?;
    let trusted = ranking.trusted(a);
    let mut rng = seed::rng(seed);
    let mut chosen: Vec<usize> = index::sample(&mut rng, trusted.len(), m)
        .into_iter()
        .map(|i| trusted[i].0)
        .collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// `c_i = d_i / Σ d`.
pub fn edge_weights(selected: &[ClientUpdate]) -> Result<Vec<f64>> {
    let refs: Vec<&ClientUpdate> = selected.iter().collect();
    data_weights(&refs)
}

fn data_weights(selected: &[&ClientUpdate]) -> Result<Vec<f64>> {
    let mut total = 0.0;
    let mut count = 0;
    for u in selected.iter() {
        if u.data_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "client {} reports zero training samples",
                u.node_id
            )));
        }
        total += u.data_size as f64;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("edge weights need at least one client"));
    }
    Ok(selected.iter().map(|u| u.data_size as f64 / total).collect())
}

/// Data-weighted edge model and the total sample count behind it.
///
/// Updates are combined in ascending node-id order, so the result does not
/// depend on the order of `selected`.
pub fn edge_aggregate(selected: &[ClientUpdate]) -> Result<(ParamVector, usize)> {
    let mut ordered: Vec<&ClientUpdate> = selected.iter().collect();
    ordered.sort_by_key(|u| u.node_id);
    let weights = data_weights(&ordered)?;
    let model = weighted_sum(&ordered, &weights)?;
    let total = ordered.iter().map(|u| u.data_size).sum();
    Ok((model, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(node_id: usize, model: Vec<f64>, data_size: usize) -> ClientUpdate {
        ClientUpdate {
            node_id,
            model: ParamVector::new(model).unwrap(),
            data_size,
        }
    }

    /// Node `i` sits at distance `dists[i]` from the origin along axis 0.
    fn at_distances(dists: &[f64]) -> Vec<ClientUpdate> {
        dists
            .iter()
            .enumerate()
            .map(|(i, &d)| update(i, vec![d, 0.0], 1))
            .collect()
    }

    #[test]
    fn trust_metric_examples() {
        let g = ParamVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(trust_metric(&g, &g).unwrap(), 0.0);
        let e1 = ParamVector::new(vec![2.0, 2.0, 3.0]).unwrap();
        assert_eq!(trust_metric(&e1, &g).unwrap(), 1.0);
        assert!(trust_metric(&ParamVector::zeros(2), &g).is_err());
    }

    #[test]
    fn ranking_breaks_ties_by_node_id() {
        let mut ups = at_distances(&[2.0, 1.0, 1.0, 0.5]);
        ups.reverse();
        let r = TrustRanking::compute(&ups, &ParamVector::zeros(2)).unwrap();
        let ids: Vec<usize> = r.entries().iter().map(|e| e.0).collect();
        assert_eq!(ids, vec![3, 1, 2, 0]);
    }

    #[test]
    fn selection_stays_within_trusted_set() {
        let dists: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ups = at_distances(&dists);
        for seed in 0..200 {
            let sel = select_clients_shfl(&ups, &ParamVector::zeros(2), 3, 3, seed).unwrap();
            assert_eq!(sel.len(), 3);
            assert!(sel.iter().all(|&id| id < 7), "{sel:?}");
        }
        let all = select_clients_shfl(&ups, &ParamVector::zeros(2), 0, 10, 1).unwrap();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(select_clients_shfl(&ups, &ParamVector::zeros(2), 3, 8, 1).is_err());
    }

    #[test]
    fn outlier_is_never_selected() {
        let mut dists: Vec<f64> = (0..9).map(|i| i as f64 / 9.0).collect();
        dists.insert(4, 100.0);
        let ups = at_distances(&dists);
        for seed in 0..1000 {
            let sel = select_clients_shfl(&ups, &ParamVector::zeros(2), 1, 3, seed).unwrap();
            assert!(!sel.contains(&4));
        }
    }

    #[test]
    fn edge_weight_examples() {
        let w = edge_weights(&[
            update(0, vec![0.0], 5),
            update(1, vec![0.0], 5),
            update(2, vec![0.0], 5),
        ])
        .unwrap();
        assert!(w.iter().all(|&c| (c - 1.0 / 3.0).abs() < 1e-15));
        let w = edge_weights(&[
            update(0, vec![0.0], 600),
            update(1, vec![0.0], 300),
            update(2, vec![0.0], 100),
        ])
        .unwrap();
        assert_eq!(w, vec![0.6, 0.3, 0.1]);
        assert_eq!(edge_weights(&[update(0, vec![0.0], 7)]).unwrap(), vec![1.0]);
        assert!(edge_weights(&[]).is_err());
        assert!(edge_weights(&[update(0, vec![0.0], 0)]).is_err());
    }

    #[test]
    fn edge_aggregate_examples() {
        let same = vec![update(0, vec![1.5, -2.0], 3), update(1, vec![1.5, -2.0], 9)];
        assert_eq!(edge_aggregate(&same).unwrap().0.as_slice(), &[1.5, -2.0]);
        let two = vec![update(0, vec![0.0, 0.0], 1), update(1, vec![2.0, 2.0], 1)];
        assert_eq!(edge_aggregate(&two).unwrap().0.as_slice(), &[1.0, 1.0]);
        let sizes = vec![
            update(0, vec![0.0], 600),
            update(1, vec![0.0], 300),
            update(2, vec![0.0], 100),
        ];
        assert_eq!(edge_aggregate(&sizes).unwrap().1, 1000);
        assert!(edge_aggregate(&[]).is_err());
    }
}
