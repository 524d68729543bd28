//! Single-level aggregation rules used as baselines.

use serde::{Deserialize, Serialize};

use crate::aggregation::{edge_aggregate, ClientUpdate};
use crate::error::{Error, Result};
use crate::param::ParamVector;

/// Data-size-weighted mean of client models.
pub fn fedavg(updates: &[ClientUpdate]) -> Result<ParamVector> {
    if updates.is_empty() {
        return Err(Error::Empty("fedavg needs at least one update"));
    }
    Ok(edge_aggregate(updates)?.0)
}

/// Distance used inside Multi-krum neighbour scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrumDistance {
    #[default]
    Squared,
    Euclidean,
}

fn check_dims(updates: &[impl AsRef<ParamVector>]) -> Result<usize> {
    let dim = updates
        .first()
        .ok_or(Error::Empty("aggregation needs at least one update"))?
        .as_ref()
        .len();
    for u in updates {
        if u.as_ref().len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: u.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// Krum score of every update: the sum of distances to its `n − f − 2`
/// nearest other updates.
pub fn multi_krum_scores(updates: &[impl AsRef<ParamVector>], f: usize, distance: KrumDistance) -> Result<Vec<f64>> {
    check_dims(updates)?;
    let n = updates.len();
    if n < f + 3 {
        return Err(Error::InvalidArgument(format!(
            "multi-krum with f = {f} needs at least {} updates, got {n}",
            f + 3
        )));
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let sq = updates[i].as_ref().squared_distance(updates[j].as_ref())?;
            let d = match distance {
                KrumDistance::Squared => sq,
                KrumDistance::Euclidean => sq.sqrt(),
            };
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let neighbours = n - f - 2;
    Ok((0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i * n + j]).collect();
            row.sort_by(f64::total_cmp);
            row[..neighbours].iter().sum()
        })
        .collect())
}

/// Indices of the `k` lowest-scoring updates, ascending; ties go to the
/// lower index.
pub fn multi_krum_select(
    updates: &[impl AsRef<ParamVector>],
    f: usize,
    k: usize,
    distance: KrumDistance,
) -> Result<Vec<usize>> {
    let scores = multi_krum_scores(updates, f, distance)?;
    let n = updates.len();
    if k == 0 || k > n - f {
        return Err(Error::InvalidArgument(format!(
            "multi-krum k = {k} must lie in 1..={}",
            n - f
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Unweighted mean of the `k` updates selected by Multi-krum.
pub fn multi_krum(
    updates: &[impl AsRef<ParamVector>],
    f: usize,
    k: usize,
    distance: KrumDistance,
) -> Result<ParamVector> {
    let chosen = multi_krum_select(updates, f, k, distance)?;
    mean_of(updates, &chosen)
}

pub(crate) fn mean_of(updates: &[impl AsRef<ParamVector>], chosen: &[usize]) -> Result<ParamVector> {
    let dim = check_dims(updates)?;
    if chosen.is_empty() {
        return Err(Error::Empty("mean needs at least one update"));
    }
    let mut acc = vec![0.0; dim];
    for &i in chosen {
        for (a, v) in acc.iter_mut().zip(updates[i].as_ref().iter()) {
            *a += v;
        }
    }
    let n = chosen.len() as f64;
    ParamVector::new(acc.into_iter().map(|a| a / n).collect())
}

/// Coordinate-wise trimmed mean: drop the `m` largest and `m` smallest
/// values of each coordinate and average the rest.
pub fn trimmed_mean(updates: &[impl AsRef<ParamVector>], m: usize) -> Result<ParamVector> {
    let dim = check_dims(updates)?;
    let n = updates.len();
    if n <= 2 * m {
        return Err(Error::InvalidArgument(format!(
            "trimmed mean with m = {m} needs more than {} updates, got {n}",
            2 * m
        )));
    }
    let kept = (n - 2 * m) as f64;
    let mut column = vec![0.0; n];
    let mut out = Vec::with_capacity(dim);
    for d in 0..dim {
        for (c, u) in column.iter_mut().zip(updates) {
            *c = u.as_ref()[d];
        }
        column.sort_by(f64::total_cmp);
        out.push(column[m..n - m].iter().sum::<f64>() / kept);
    }
    ParamVector::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn update(node_id: usize, model: &[f64], data_size: usize) -> ClientUpdate {
        ClientUpdate {
            node_id,
            model: pv(model),
            data_size,
        }
    }

    #[test]
    fn fedavg_examples() {
        let ups = vec![update(0, &[0.0, 0.0], 1), update(1, &[2.0, 2.0], 1)];
        assert_eq!(fedavg(&ups).unwrap().as_slice(), &[1.0, 1.0]);
        let ups = vec![update(0, &[1.0], 3), update(1, &[4.0], 3), update(2, &[7.0], 3)];
        assert!((fedavg(&ups).unwrap()[0] - 4.0).abs() < 1e-15);
        let ups = vec![update(0, &[1.0], 1), update(1, &[4.0], 3)];
        assert_eq!(fedavg(&ups).unwrap()[0], 0.25 + 3.0);
        assert!(fedavg(&[]).is_err());
    }

    #[test]
    fn trimmed_mean_examples() {
        let ups: Vec<ParamVector> = [1.0, 2.0, 3.0, 100.0].iter().map(|&v| pv(&[v])).collect();
        assert_eq!(trimmed_mean(&ups, 1).unwrap()[0], 2.5);
        let same = vec![pv(&[1.0, -3.0]); 5];
        assert_eq!(trimmed_mean(&same, 2).unwrap().as_slice(), &[1.0, -3.0]);
        let ups = vec![pv(&[1.0, 2.0]), pv(&[3.0, 6.0])];
        assert_eq!(trimmed_mean(&ups, 0).unwrap().as_slice(), &[2.0, 4.0]);
        assert!(trimmed_mean(&ups, 1).is_err());
    }

    #[test]
    fn multi_krum_examples() {
        let same = vec![pv(&[0.5, 0.5]); 6];
        assert_eq!(
            multi_krum(&same, 1, 3, KrumDistance::Squared).unwrap().as_slice(),
            &[0.5, 0.5]
        );

        let mut ups: Vec<ParamVector> = (0..9).map(|i| pv(&[i as f64 * 0.01, -(i as f64) * 0.02])).collect();
        ups.insert(6, pv(&[1000.0, 0.0]));
        for dist in [KrumDistance::Squared, KrumDistance::Euclidean] {
            let chosen = multi_krum_select(&ups, 1, 5, dist).unwrap();
            assert_eq!(chosen.len(), 5);
            assert!(!chosen.contains(&6));
        }
    }

    #[test]
    fn multi_krum_errors() {
        let ups = vec![pv(&[0.0]); 4];
        assert!(multi_krum(&ups, 2, 1, KrumDistance::Squared).is_err());
        assert!(multi_krum(&ups, 1, 4, KrumDistance::Squared).is_err());
        assert!(multi_krum(&ups, 1, 0, KrumDistance::Squared).is_err());
        assert!(multi_krum(&ups, 1, 3, KrumDistance::Squared).is_ok());
    }

    // Scores by hand for points 0, 1, 3, 10 on a line with f = 1
    // (one nearest neighbour, squared distance): 1, 1, 4, 49.
    #[test]
    fn krum_scores_by_hand() {
        let ups: Vec<ParamVector> = [0.0, 1.0, 3.0, 10.0].iter().map(|&v| pv(&[v])).collect();
        assert_eq!(
            multi_krum_scores(&ups, 1, KrumDistance::Squared).unwrap(),
            vec![1.0, 1.0, 4.0, 49.0]
        );
        assert_eq!(
            multi_krum_scores(&ups, 1, KrumDistance::Euclidean).unwrap(),
            vec![1.0, 1.0, 2.0, 7.0]
        );
    }
}
