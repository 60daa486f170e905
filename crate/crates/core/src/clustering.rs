//! DBSCAN over a radius-search index.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::spatial_index::RadiusSearch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringParams {
    /// Neighborhood radius in meters, boundary inclusive.
    pub eps: f64,
    /// Neighbors (the point itself included) needed for a core point.
    pub min_points: usize,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self {
            eps: 0.7,
            min_points: 10,
        }
    }
}

impl ClusteringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "clustering.eps must be > 0, got {}",
                self.eps
            )));
        }
        if self.min_points < 1 {
            return Err(Error::InvalidArgument(
                "clustering.min_points must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Noise,
    Cluster(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    pub labels: Vec<Label>,
    pub is_core: Vec<bool>,
    pub num_clusters: usize,
}

impl ClusterLabels {
    /// Member indices of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, l) in self.labels.iter().enumerate() {
            if let Label::Cluster(c) = *l {
                out[c].push(i);
            }
        }
        out
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Noise).count()
    }
}

/// Clusters `points` using `index`, which must be built over exactly these points.
///
/// Points are scanned in index order; a cluster is grown from each unassigned
/// core point, so cluster ids follow the order of their first core point and a
/// border point reachable from several clusters joins the one expanded first.
pub fn dbscan<I: RadiusSearch + ?Sized>(
    points: &[Vec3],
    params: &ClusteringParams,
    index: &I,
) -> Result<ClusterLabels> {
    params.validate()?;
    if index.len() != points.len() {
        return Err(Error::InvalidArgument(format!(
            "index holds {} points but {} were given",
            index.len(),
            points.len()
        )));
    }
    let n = points.len();
    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut is_core = vec![false; n];
    let mut num_clusters = 0;
    let mut neighbors = Vec::new();
    let mut queue = VecDeque::new();

    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        neighbors.clear();
        index.radius_into(points[i], params.eps, &mut neighbors);
        if neighbors.len() < params.min_points {
            labels[i] = Some(Label::Noise);
            continue;
        }
        let cluster = Label::Cluster(num_clusters);
        num_clusters += 1;
        labels[i] = Some(cluster);
        is_core[i] = true;
        queue.extend(neighbors.iter().copied());

        while let Some(j) = queue.pop_front() {
            match labels[j] {
                Some(Label::Noise) => labels[j] = Some(cluster),
                None => {
                    labels[j] = Some(cluster);
                    neighbors.clear();
                    index.radius_into(points[j], params.eps, &mut neighbors);
                    if neighbors.len() >= params.min_points {
                        is_core[j] = true;
                        queue.extend(
                            neighbors
                                .iter()
                                .copied()
                                .filter(|&k| !matches!(labels[k], Some(Label::Cluster(_)))),
                        );
                    }
                }
                Some(Label::Cluster(_)) => {}
            }
        }
    }

    Ok(ClusterLabels {
        labels: labels
            .into_iter()
            .map(|l| l.expect("every point visited"))
            .collect(),
        is_core,
        num_clusters,
    })
}
