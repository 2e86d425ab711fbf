//! Metric pairs, the 1-strengthened metric and the pointed quotient space.
//!
//! A [`MetricPair`] is a finite table of distances between points of `X`
//! together with each point's distance to the distinguished subset `A`.
//! [`strengthen`] replaces `d` by `d1(x, y) = min(d(x, y), d(x, A) + d(y, A))`,
//! which descends to a metric on `X/A` with basepoint `[A]`. The result is a
//! [`GroundSpace`]: the generators of the finite-rank group together with
//! their pairwise and basepoint distances.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for the metric-axiom checks.
pub const METRIC_TOL: f64 = 1e-12;

/// A finite metric pair `(X, d, A)`, stored as a distance table on the points
/// of `X` plus the distance of every point to `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricPair {
    labels: Vec<String>,
    dist: Vec<f64>,
    diagonal_dist: Vec<f64>,
}

impl MetricPair {
    /// Builds a metric pair, validating symmetry, zero diagonal, nonnegativity
    /// and the triangle inequality (up to [`METRIC_TOL`]).
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>, diagonal_dist: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n || diagonal_dist.len() != n {
            return Err(Error::InvalidMetric(format!(
                "{n} labels but {} distance rows and {} diagonal distances",
                dist.len(),
                diagonal_dist.len()
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!("row {i} has length {}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        let pair = Self {
            labels,
            dist: flat,
            diagonal_dist,
        };
        pair.validate()?;
        Ok(pair)
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            let di = self.diagonal_dist[i];
            if !di.is_finite() || di < 0.0 {
                return Err(Error::InvalidMetric(format!("diagonal distance of point {i} is {di}")));
            }
            if self.dist(i, i).abs() > METRIC_TOL {
                return Err(Error::InvalidMetric(format!("d({i},{i}) = {}", self.dist(i, i))));
            }
            for j in 0..n {
                let dij = self.dist(i, j);
                if !dij.is_finite() || dij < 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {dij}")));
                }
                if (dij - self.dist(j, i)).abs() > METRIC_TOL {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.dist(i, k) > self.dist(i, j) + self.dist(j, k) + METRIC_TOL {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails on ({i},{j},{k})"
                        )));
                    }
                }
                // d(., A) is 1-Lipschitz for any genuine metric pair.
                if self.diagonal_dist[i] > self.dist(i, j) + self.diagonal_dist[j] + METRIC_TOL {
                    return Err(Error::InvalidMetric(format!(
                        "diagonal distance of {i} exceeds d({i},{j}) + d({j},A)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn diagonal_dist(&self, i: usize) -> f64 {
        self.diagonal_dist[i]
    }
}

/// The pointed metric space `(X/A, d1, [A])` restricted to a finite set of
/// generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundSpace {
    labels: Vec<String>,
    d1: Vec<f64>,
    to_base: Vec<f64>,
}

impl GroundSpace {
    /// Number of generators (the rank of the group).
    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Strengthened distance between generators `i` and `j`.
    pub fn d1(&self, i: usize, j: usize) -> f64 {
        self.d1[i * self.rank() + j]
    }

    /// Strengthened distance from generator `i` to the basepoint `[A]`.
    pub fn to_base(&self, i: usize) -> f64 {
        self.to_base[i]
    }

    /// Distance on `F ∪ {[A]}`, where `None` denotes the basepoint.
    pub fn dist_pointed(&self, u: Option<usize>, v: Option<usize>) -> f64 {
        match (u, v) {
            (None, None) => 0.0,
            (Some(i), None) | (None, Some(i)) => self.to_base(i),
            (Some(i), Some(j)) => self.d1(i, j),
        }
    }

    /// Smallest nonzero distance among generators and basepoint.
    pub fn min_distance(&self) -> Option<f64> {
        let n = self.rank();
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        pairs
            .map(|(i, j)| self.d1(i, j))
            .chain(self.to_base.iter().copied())
            .filter(|d| *d > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Sub-space spanned by the given generator indices, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Result<GroundSpace> {
        for &i in indices {
            if i >= self.rank() {
                return Err(Error::UnknownGenerator {
                    index: i,
                    rank: self.rank(),
                });
            }
        }
        let k = indices.len();
        let mut d1 = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                d1.push(self.d1(i, j));
            }
        }
        Ok(GroundSpace {
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            d1,
            to_base: indices.iter().map(|&i| self.to_base[i]).collect(),
        })
    }

    /// Checks that `d1` is a metric on generators plus basepoint and that
    /// every generator sits at positive distance from the basepoint.
    pub fn check_metric(&self) -> Result<()> {
        let n = self.rank();
        let pts: Vec<Option<usize>> = (0..n).map(Some).chain(std::iter::once(None)).collect();
        for &u in &pts {
            for &v in &pts {
                let duv = self.dist_pointed(u, v);
                if (duv - self.dist_pointed(v, u)).abs() > METRIC_TOL {
                    return Err(Error::InvalidMetric("asymmetric strengthened metric".into()));
                }
                if u != v && duv <= 0.0 {
                    return Err(Error::InvalidMetric("two points at distance zero".into()));
                }
                for &w in &pts {
                    if self.dist_pointed(u, w) > duv + self.dist_pointed(v, w) + METRIC_TOL {
                        return Err(Error::InvalidMetric(
                            "triangle inequality fails for the strengthened metric".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Computes the 1-strengthened ground space of a metric pair. Every point is
/// taken as a generator; points at distance zero from `A` are rejected.
pub fn strengthen(pair: &MetricPair) -> Result<GroundSpace> {
    let n = pair.len();
    if let Some(i) = (0..n).find(|&i| pair.diagonal_dist(i) <= 0.0) {
        return Err(Error::DiagonalGenerator(i));
    }
    let mut d1 = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j {
                0.0
            } else {
                pair.dist(i, j).min(pair.diagonal_dist(i) + pair.diagonal_dist(j))
            };
            d1.push(v);
        }
    }
    Ok(GroundSpace {
        labels: pair.labels().to_vec(),
        d1,
        to_base: pair.diagonal_dist.clone(),
    })
}

/// A point of the open half-plane above the diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathPoint {
    pub birth: f64,
    pub death: f64,
}

impl BirthDeathPoint {
    pub fn new(birth: f64, death: f64) -> Result<Self> {
        let p = Self { birth, death };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.death == f64::INFINITY && self.birth.is_finite() {
            return Err(Error::EssentialBar);
        }
        if !self.birth.is_finite() || !self.death.is_finite() {
            return Err(Error::NonFiniteCoordinate {
                birth: self.birth,
                death: self.death,
            });
        }
        if self.birth >= self.death {
            return Err(Error::InvalidBirthDeath {
                birth: self.birth,
                death: self.death,
            });
        }
        Ok(())
    }

    /// Distance to the diagonal under the sup-norm: half the persistence.
    pub fn diagonal_dist(&self) -> f64 {
        (self.death - self.birth) / 2.0
    }

    pub fn sup_dist(&self, other: &BirthDeathPoint) -> f64 {
        (self.birth - other.birth).abs().max((self.death - other.death).abs())
    }

    pub fn total_cmp(&self, other: &BirthDeathPoint) -> Ordering {
        self.birth
            .total_cmp(&other.birth)
            .then(self.death.total_cmp(&other.death))
    }
}

/// Ground space over a finite set of birth-death points, remembering the
/// coordinates of each generator.
#[derive(Clone, Debug, PartialEq)]
pub struct BirthDeathSpace {
    points: Vec<BirthDeathPoint>,
    ground: GroundSpace,
}

impl BirthDeathSpace {
    pub fn points(&self) -> &[BirthDeathPoint] {
        &self.points
    }

    pub fn ground(&self) -> &GroundSpace {
        &self.ground
    }

    pub fn into_ground(self) -> GroundSpace {
        self.ground
    }

    /// Generator index of a point, if present.
    pub fn index_of(&self, p: &BirthDeathPoint) -> Option<usize> {
        self.points.binary_search_by(|q| q.total_cmp(p)).ok()
    }
}

/// Builds the strengthened ground space of birth-death points under the
/// sup-norm with diagonal distance `(death - birth) / 2`. Duplicate
/// coordinates collapse to a single generator; generators are sorted by
/// `(birth, death)`.
pub fn birth_death_space(points: &[BirthDeathPoint]) -> Result<BirthDeathSpace> {
    for p in points {
        p.validate()?;
    }
    let mut pts = points.to_vec();
    pts.sort_by(BirthDeathPoint::total_cmp);
    pts.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal);

    let labels = pts.iter().map(|p| format!("({}, {})", p.birth, p.death)).collect();
    let dist = pts
        .iter()
        .map(|p| pts.iter().map(|q| p.sup_dist(q)).collect())
        .collect();
    let diag = pts.iter().map(BirthDeathPoint::diagonal_dist).collect();
    let pair = MetricPair::new(labels, dist, diag)?;
    Ok(BirthDeathSpace {
        ground: strengthen(&pair)?,
        points: pts,
    })
}
