//! Jump profiles, the symmetric pair-jump measure `ν`, its metric
//! truncation, and the compound-Poisson sampler.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::diagram::VpdElement;
use crate::error::{Error, Result};
use crate::lattice::{Atom, LevyMeasure};
use crate::metric::GroundSpace;
use crate::transport::rho_norm;

/// Jump profile `ψ` applied to strengthened distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    /// `e^{-α r}`.
    Exp { alpha: f64 },
    /// `e^{-α r²}`.
    Gaussian { alpha: f64 },
    /// `c r^{-p}` for `r ≥ r0`, constant `c r0^{-p}` below. When `r0` is
    /// omitted the smallest distance of the ground space is used.
    Power {
        c: f64,
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r0: Option<f64>,
    },
    /// Piecewise-linear interpolation of `(r, ψ(r))` points, held constant
    /// outside the tabulated range.
    Table { points: Vec<(f64, f64)> },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Exp { alpha: 1.0 }
    }
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidProfile(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Profile::Exp { alpha } | Profile::Gaussian { alpha } => positive("alpha", *alpha),
            Profile::Power { c, p, r0 } => {
                positive("c", *c)?;
                positive("p", *p)?;
                if let Some(r0) = r0 {
                    positive("r0", *r0)?;
                }
                Ok(())
            }
            Profile::Table { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidProfile("table profile has no points".into()));
                }
                for w in points.windows(2) {
                    if w[0].0.partial_cmp(&w[1].0) != Some(std::cmp::Ordering::Less) {
                        return Err(Error::InvalidProfile(
                            "table distances must be strictly increasing".into(),
                        ));
                    }
                }
                for &(r, v) in points {
                    if !r.is_finite() || r < 0.0 || !v.is_finite() || v < 0.0 {
                        return Err(Error::InvalidProfile(format!("bad table point ({r}, {v})")));
                    }
                }
                Ok(())
            }
        }
    }

    /// `ψ(r)` for `r > 0`. `floor` is the default clamp radius of the power
    /// profile.
    pub fn eval(&self, r: f64, floor: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self {
            Profile::Exp { alpha } => (-alpha * r).exp(),
            Profile::Gaussian { alpha } => (-alpha * r * r).exp(),
            Profile::Power { c, p, r0 } => {
                let r0 = r0.unwrap_or(floor);
                c * r.max(r0).powf(-p)
            }
            Profile::Table { points } => {
                let i = points.partition_point(|&(x, _)| x <= r);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[i - 1].1
                } else {
                    let (x0, y0) = points[i - 1];
                    let (x1, y1) = points[i];
                    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Parses the JSON form, e.g. `{"kind": "exp", "alpha": 1.0}`.
    pub fn from_json(s: &str) -> Result<Self> {
        let p: Profile = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// One pair jump `e_plus - e_minus`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairJump {
    pub plus: usize,
    pub minus: usize,
    pub rate: f64,
    /// `ρ(κ, 0)`.
    pub size: f64,
    /// `𝓜(κ)`.
    pub mass: f64,
}

impl PairJump {
    pub fn element(&self) -> VpdElement {
        VpdElement::from_coeffs([(self.plus, 1), (self.minus, -1)])
    }
}

/// The symmetric pair-jump measure on a ground space.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpMeasure {
    space: GroundSpace,
    jumps: Vec<PairJump>,
    total_rate: f64,
}

/// Builds `ν(e_x - e_y) = ψ(d1(x, y)) / 2` for every ordered pair `x ≠ y`.
pub fn build_nu(space: &GroundSpace, psi: &Profile) -> Result<JumpMeasure> {
    psi.validate()?;
    let n = space.rank();
    let floor = space.min_distance().unwrap_or(1.0);
    let mut jumps = Vec::with_capacity(n * n.saturating_sub(1));
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            // Read the table in a fixed orientation so both directions get
            // bit-identical rates.
            let r = space.d1(x.min(y), x.max(y));
            let rate = psi.eval(r, floor) / 2.0;
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::NonFiniteRate(r));
            }
            let element = VpdElement::from_coeffs([(x, 1), (y, -1)]);
            jumps.push(PairJump {
                plus: x,
                minus: y,
                rate,
                size: rho_norm(&element, space),
                mass: element.mass(space),
            });
        }
    }
    JumpMeasure::from_jumps(space.clone(), jumps)
}

impl JumpMeasure {
    fn from_jumps(space: GroundSpace, jumps: Vec<PairJump>) -> Result<Self> {
        let mut total_rate = 0.0;
        for j in &jumps {
            total_rate += j.rate;
        }
        if !total_rate.is_finite() {
            return Err(Error::NonFiniteRate(total_rate));
        }
        Ok(Self {
            space,
            jumps,
            total_rate,
        })
    }

    pub fn space(&self) -> &GroundSpace {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.space.rank()
    }

    pub fn jumps(&self) -> &[PairJump] {
        &self.jumps
    }

    /// `q = Σ ν(κ)`.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn rate(&self, plus: usize, minus: usize) -> f64 {
        self.jumps
            .iter()
            .find(|j| j.plus == plus && j.minus == minus)
            .map_or(0.0, |j| j.rate)
    }

    /// Keeps jumps with `ρ(κ, 0) ≤ radius`.
    pub fn truncate(&self, radius: f64) -> JumpMeasure {
        let jumps = self.jumps.iter().copied().filter(|j| j.size <= radius).collect();
        JumpMeasure::from_jumps(self.space.clone(), jumps).expect("subset of a finite measure")
    }

    /// Multiplies every rate by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<JumpMeasure> {
        let jumps = self
            .jumps
            .iter()
            .map(|j| PairJump {
                rate: j.rate * factor,
                ..*j
            })
            .collect();
        JumpMeasure::from_jumps(self.space.clone(), jumps)
    }

    /// Largest jump size `max ρ(κ, 0)`, or 0 for the empty measure.
    pub fn max_size(&self) -> f64 {
        self.jumps.iter().map(|j| j.size).fold(0.0, f64::max)
    }

    /// The measure as a symmetric lattice measure on `Z^rank`.
    pub fn levy_measure(&self) -> LevyMeasure {
        let atoms = self
            .jumps
            .iter()
            .filter(|j| j.rate > 0.0)
            .map(|j| Atom {
                increment: vec![(j.plus, 1), (j.minus, -1)],
                rate: j.rate,
            })
            .collect();
        LevyMeasure::new(self.rank(), atoms).expect("pair-jump measure is symmetric")
    }
}

/// A sampled path of the compound-Poisson walk.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSample {
    pub path: Vec<(f64, Vec<(usize, i32)>)>,
    pub endpoint: Vec<i32>,
}

impl WalkSample {
    pub fn endpoint_element(&self) -> VpdElement {
        VpdElement::from_lattice(&self.endpoint)
    }
}

/// Draws increments from `ν / q` by inversion of the cumulative rates.
#[derive(Clone, Debug)]
pub struct JumpSampler {
    rank: usize,
    atoms: Vec<Atom>,
    cumulative: Vec<f64>,
    total_rate: f64,
}

impl JumpSampler {
    pub fn new(measure: &LevyMeasure) -> Self {
        let mut acc = 0.0;
        let cumulative = measure
            .atoms()
            .iter()
            .map(|a| {
                acc += a.rate;
                acc
            })
            .collect();
        Self {
            rank: measure.rank(),
            atoms: measure.atoms().to_vec(),
            cumulative,
            total_rate: acc,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The stream used for sample `index` under `seed`.
    pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    fn draw_atom<R: Rng>(&self, rng: &mut R) -> &Atom {
        let u = rng.random::<f64>() * self.total_rate;
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.atoms[i.min(self.atoms.len() - 1)]
    }

    fn jump_count<R: Rng>(&self, t: f64, rng: &mut R) -> u64 {
        let mean = self.total_rate * t;
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).map_or(0, |d| d.sample(rng) as u64)
    }

    /// Writes the endpoint `S_t` into `out` (length `rank`).
    pub fn endpoint_into<R: Rng>(&self, t: f64, rng: &mut R, out: &mut [i32]) {
        out.iter_mut().for_each(|c| *c = 0);
        for _ in 0..self.jump_count(t, rng) {
            for &(i, c) in &self.draw_atom(rng).increment {
                out[i] += c;
            }
        }
    }

    /// A full path: Poisson jump count, sorted uniform jump times, i.i.d.
    /// increments.
    pub fn path<R: Rng>(&self, t: f64, rng: &mut R) -> WalkSample {
        let n = self.jump_count(t, rng);
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
        times.sort_by(f64::total_cmp);
        let mut endpoint = vec![0; self.rank];
        let mut path = Vec::with_capacity(times.len());
        for time in times {
            let inc = self.draw_atom(rng).increment.clone();
            for &(i, c) in &inc {
                endpoint[i] += c;
            }
            path.push((time, inc));
        }
        WalkSample { path, endpoint }
    }
}

/// Samples one path of `S_t` with the stream for sample 0 of `seed`.
pub fn sample_walk(nu: &JumpMeasure, t: f64, seed: u64) -> Result<WalkSample> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let sampler = JumpSampler::new(&nu.levy_measure());
    Ok(sampler.path(t, &mut JumpSampler::stream(seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{strengthen, MetricPair};

    fn space(dist: Vec<Vec<f64>>, diag: Vec<f64>) -> GroundSpace {
        let labels = (0..diag.len()).map(|i| format!("p{i}")).collect();
        strengthen(&MetricPair::new(labels, dist, diag).unwrap()).unwrap()
    }

    fn two_point() -> GroundSpace {
        space(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0])
    }

    #[test]
    fn one_generator_has_no_jumps() {
        let nu = build_nu(&space(vec![vec![0.0]], vec![1.0]), &Profile::default()).unwrap();
        assert_eq!(nu.total_rate(), 0.0);
        assert!(nu.jumps().is_empty());
    }

    #[test]
    fn two_generator_rates() {
        let nu = build_nu(&two_point(), &Profile::Exp { alpha: 1.0 }).unwrap();
        let e = (-1.0f64).exp();
        assert_eq!(nu.rate(0, 1), e / 2.0);
        assert_eq!(nu.rate(1, 0), e / 2.0);
        assert!((nu.total_rate() - e).abs() < 1e-15);

        let table = Profile::Table {
            points: vec![(0.5, 2.0), (2.0, 2.0)],
        };
        let nu = build_nu(&two_point(), &table).unwrap();
        assert_eq!(nu.rate(0, 1), 1.0);
        assert_eq!(nu.total_rate(), 2.0);
    }

    #[test]
    fn truncation_by_jump_size() {
        // Jump sizes 1 (0-1) and 2.5 (0-2, 1-2).
        let s = space(
            vec![vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 4.0], vec![4.0, 4.0, 0.0]],
            vec![2.0, 2.0, 0.5],
        );
        let nu = build_nu(&s, &Profile::default()).unwrap();
        assert_eq!(nu.max_size(), 2.5);
        assert_eq!(nu.truncate(2.5), nu);
        assert!(nu.truncate(0.5).jumps().is_empty());
        let t = nu.truncate(2.0);
        assert_eq!(t.jumps().len(), 2);
        assert!(t.jumps().iter().all(|j| j.size == 1.0));
    }

    #[test]
    fn profiles_evaluate() {
        assert_eq!(Profile::Gaussian { alpha: 2.0 }.eval(1.0, 1.0), (-2.0f64).exp());
        let pw = Profile::Power {
            c: 2.0,
            p: 2.0,
            r0: None,
        };
        assert_eq!(pw.eval(0.5, 1.0), 2.0);
        assert_eq!(pw.eval(2.0, 1.0), 0.5);
        let tab = Profile::Table {
            points: vec![(1.0, 1.0), (3.0, 0.0)],
        };
        assert_eq!(tab.eval(2.0, 0.0), 0.5);
        assert_eq!(tab.eval(0.1, 0.0), 1.0);
        assert_eq!(tab.eval(9.0, 0.0), 0.0);
        assert!(Profile::Exp { alpha: -1.0 }.validate().is_err());
    }

    #[test]
    fn profile_json() {
        let p = Profile::from_json(r#"{"kind": "exp", "alpha": 1.0}"#).unwrap();
        assert_eq!(p, Profile::Exp { alpha: 1.0 });
        let p = Profile::from_json(r#"{"kind": "power", "c": 2, "p": 2}"#).unwrap();
        assert_eq!(
            p,
            Profile::Power {
                c: 2.0,
                p: 2.0,
                r0: None
            }
        );
        assert!(Profile::from_json(r#"{"kind": "table", "points": []}"#).is_err());
    }

    #[test]
    fn empty_and_instant_walks() {
        let nu = build_nu(&space(vec![vec![0.0]], vec![1.0]), &Profile::default()).unwrap();
        for seed in 0..5 {
            assert!(sample_walk(&nu, 3.0, seed).unwrap().endpoint_element().is_zero());
        }
        let nu = build_nu(&two_point(), &Profile::default()).unwrap();
        assert!(sample_walk(&nu, 0.0, 7).unwrap().path.is_empty());
    }

    #[test]
    fn walk_path_is_consistent() {
        let nu = build_nu(&two_point(), &Profile::Exp { alpha: 0.1 }).unwrap();
        let w = sample_walk(&nu, 10.0, 3).unwrap();
        assert!(w.path.windows(2).all(|p| p[0].0 <= p[1].0));
        let mut sum = [0i32; 2];
        for (_, inc) in &w.path {
            for &(i, c) in inc {
                sum[i] += c;
            }
        }
        assert_eq!(sum.to_vec(), w.endpoint);
        assert_eq!(w, sample_walk(&nu, 10.0, 3).unwrap());
    }
}
