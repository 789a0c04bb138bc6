//! Box domains, boundary faces, condition functions and seeded sampling.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::Expr;

/// Independent random streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Data = 0,
    Boundary = 1,
    Collocation = 2,
    Noise = 3,
    ValidationBoundary = 4,
    ValidationInterior = 5,
    Init = 6,
    Metric = 7,
}

/// Generator for `stream` of `seed`.
pub fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = BoxDomain { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn unit(dim: usize) -> Self {
        BoxDomain { lo: vec![0.0; dim], hi: vec![1.0; dim] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidSpec("box bounds must be non-empty and of equal length".into()));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidSpec(format!("degenerate box {:?} x {:?}", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn contains_box(&self, other: &BoxDomain) -> bool {
        other.dim() == self.dim() && self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Append `count` uniform points to the flat buffer `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, count: usize, out: &mut Vec<f64>) {
        for _ in 0..count {
            for (a, b) in self.lo.iter().zip(&self.hi) {
                out.push(a + (b - a) * rng.random::<f64>());
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count * self.dim());
        self.sample_into(rng, count, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Face `{x_coord = lo_coord}` or `{x_coord = hi_coord}` of the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub coord: usize,
    pub side: Side,
    /// Sampling weight; defaults to the face's `(d1−1)`-volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// Condition on this face; defaults to the problem-level `h`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Expr>>,
}

impl Face {
    pub fn new(coord: usize, side: Side) -> Self {
        Face { coord, side, weight: None, h: None }
    }

    fn area(&self, domain: &BoxDomain) -> f64 {
        (0..domain.dim()).filter(|&i| i != self.coord).map(|i| domain.hi[i] - domain.lo[i]).product()
    }

    fn sample_into<R: Rng + ?Sized>(&self, domain: &BoxDomain, rng: &mut R, out: &mut Vec<f64>) {
        for i in 0..domain.dim() {
            let v = if i == self.coord {
                match self.side {
                    Side::Lower => domain.lo[i],
                    Side::Upper => domain.hi[i],
                }
            } else {
                domain.lo[i] + (domain.hi[i] - domain.lo[i]) * rng.random::<f64>()
            };
            out.push(v);
        }
    }
}

/// Geometry and closed-form functions of a PINN problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub domain: BoxDomain,
    #[serde(default)]
    pub faces: Vec<Face>,
    /// Condition function `h`, one expression per output.
    #[serde(default)]
    pub h: Vec<Expr>,
    /// Ground truth `u*` used to synthesize observations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_star: Option<Vec<Expr>>,
    /// Standard deviation of the Gaussian observation noise.
    #[serde(default)]
    pub sigma: f64,
    /// Support of the observation design; defaults to the whole domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supp: Option<BoxDomain>,
    pub d2: usize,
}

impl Problem {
    pub fn d1(&self) -> usize {
        self.domain.dim()
    }

    pub fn supp(&self) -> &BoxDomain {
        self.supp.as_ref().unwrap_or(&self.domain)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let d1 = self.d1();
        if self.d2 == 0 {
            return Err(Error::InvalidSpec("output dimension must be positive".into()));
        }
        if let Some(s) = &self.supp {
            s.validate()?;
            if !self.domain.contains_box(s) {
                return Err(Error::InvalidSpec("observation support lies outside the domain".into()));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidSpec("noise level must be finite and nonnegative".into()));
        }
        let check_fn = |f: &[Expr], what: &str| -> Result<()> {
            if f.len() != self.d2 {
                return Err(Error::InvalidSpec(format!("{what} has {} components, expected {}", f.len(), self.d2)));
            }
            f.iter().try_for_each(|e| e.check_dim(d1))
        };
        if let Some(u) = &self.u_star {
            check_fn(u, "u_star")?;
        }
        for f in &self.faces {
            if f.coord >= d1 {
                return Err(Error::InvalidSpec(format!("face on coordinate {} in dimension {d1}", f.coord)));
            }
            if let Some(w) = f.weight {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::InvalidSpec("face weights must be finite and nonnegative".into()));
                }
            }
            match &f.h {
                Some(h) => check_fn(h, "face condition")?,
                None => check_fn(&self.h, "condition h")?,
            }
        }
        if !self.faces.is_empty() && self.face_weights().iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidSpec("face weights sum to zero".into()));
        }
        Ok(())
    }

    /// Normalized face sampling probabilities.
    pub fn face_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.faces.iter().map(|f| f.weight.unwrap_or_else(|| f.area(&self.domain))).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|w| w / s).collect()
    }

    /// Condition expression in force on `face`.
    pub fn condition(&self, face: usize) -> &[Expr] {
        self.faces[face].h.as_deref().unwrap_or(&self.h)
    }

    /// `count` boundary points from `μ_E` with their face labels.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<(Vec<f64>, Vec<usize>)> {
        if self.faces.is_empty() {
            if count == 0 {
                return Ok((Vec::new(), Vec::new()));
            }
            return Err(Error::InvalidSpec("boundary points requested but no faces defined".into()));
        }
        let dist = WeightedIndex::new(self.face_weights()).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let mut pts = Vec::with_capacity(count * self.d1());
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let f = dist.sample(rng);
            self.faces[f].sample_into(&self.domain, rng, &mut pts);
            labels.push(f);
        }
        Ok((pts, labels))
    }

    /// Condition values at labelled boundary points, flat `count × d2`.
    pub fn boundary_targets(&self, pts: &[f64], labels: &[usize]) -> Vec<f64> {
        let d1 = self.d1();
        labels
            .iter()
            .enumerate()
            .flat_map(|(k, &f)| {
                let x = &pts[k * d1..(k + 1) * d1];
                self.condition(f).iter().map(move |e| e.eval(x))
            })
            .collect()
    }

    /// Draw observations, boundary and collocation points.
    pub fn sample(&self, counts: Counts, seed: u64) -> Result<SampleSet> {
        self.validate()?;
        let d1 = self.d1();
        let mut data_x = Vec::new();
        let mut data_y = Vec::new();
        if counts.n > 0 {
            let u = self
                .u_star
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("observations requested without a ground truth u_star".into()))?;
            data_x = self.supp().sample(&mut rng_for(seed, Stream::Data), counts.n);
            let mut noise = rng_for(seed, Stream::Noise);
            for x in data_x.chunks(d1) {
                for e in u {
                    let eps: f64 = noise.sample(StandardNormal);
                    data_y.push(e.eval(x) + self.sigma * eps);
                }
            }
        }
        let (boundary_x, boundary_face) = self.sample_boundary(&mut rng_for(seed, Stream::Boundary), counts.n_e)?;
        let boundary_h = self.boundary_targets(&boundary_x, &boundary_face);
        let collocation_x = self.domain.sample(&mut rng_for(seed, Stream::Collocation), counts.n_r);
        Ok(SampleSet { d1, d2: self.d2, seed, data_x, data_y, boundary_x, boundary_face, boundary_h, collocation_x })
    }
}

/// Requested sample counts `(n, n_e, n_r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub n: usize,
    pub n_e: usize,
    pub n_r: usize,
}

/// Training points of one run; every buffer is flat, one row per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub d1: usize,
    pub d2: usize,
    pub seed: u64,
    pub data_x: Vec<f64>,
    pub data_y: Vec<f64>,
    pub boundary_x: Vec<f64>,
    pub boundary_face: Vec<usize>,
    pub boundary_h: Vec<f64>,
    pub collocation_x: Vec<f64>,
}

impl SampleSet {
    pub fn n(&self) -> usize {
        self.data_x.len() / self.d1
    }

    pub fn n_e(&self) -> usize {
        self.boundary_x.len() / self.d1
    }

    pub fn n_r(&self) -> usize {
        self.collocation_x.len() / self.d1
    }

    /// Write `data.csv`, `boundary.csv` and `collocation.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let xs: Vec<String> = (0..self.d1).map(|i| format!("x{i}")).collect();
        let ys: Vec<String> = (0..self.d2).map(|i| format!("y{i}")).collect();
        let write = |name: &str, header: Vec<String>, rows: Vec<Vec<String>>| -> Result<()> {
            let mut w = csv::Writer::from_path(dir.join(name)).map_err(|e| Error::Io(e.into()))?;
            w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
            for r in rows {
                w.write_record(&r).map_err(|e| Error::Io(e.into()))?;
            }
            w.flush()?;
            Ok(())
        };
        let fmt = |v: &f64| format!("{v:?}");
        let (d1, d2) = (self.d1, self.d2);
        write(
            "data.csv",
            [xs.clone(), ys.clone()].concat(),
            (0..self.n())
                .map(|k| {
                    let mut r: Vec<String> = self.data_x[k * d1..(k + 1) * d1].iter().map(fmt).collect();
                    r.extend(self.data_y[k * d2..(k + 1) * d2].iter().map(fmt));
                    r
                })
                .collect(),
        )?;
        let mut bh = xs.clone();
        bh.push("face".into());
        bh.extend((0..d2).map(|i| format!("h{i}")));
        write(
            "boundary.csv",
            bh,
            (0..self.n_e())
                .map(|k| {
                    let mut r: Vec<String> = self.boundary_x[k * d1..(k + 1) * d1].iter().map(fmt).collect();
                    r.push(self.boundary_face[k].to_string());
                    r.extend(self.boundary_h[k * d2..(k + 1) * d2].iter().map(fmt));
                    r
                })
                .collect(),
        )?;
        write(
            "collocation.csv",
            xs,
            self.collocation_x.chunks(d1).map(|x| x.iter().map(fmt).collect()).collect(),
        )
    }
}

/// `tanh^{∘H}` applied to the expression `arg`, as source text.
fn nested_tanh(depth: usize, arg: &str) -> String {
    let mut s = arg.to_string();
    for _ in 0..depth {
        s = format!("tanh({s})");
    }
    s
}

/// Bell-shaped initial temperature
/// `tanh^{∘H}(x+0.5) − tanh^{∘H}(x−0.5) + tanh^{∘H}(0.5) − tanh^{∘H}(1.5)`.
pub fn heat_initial_condition(depth: usize) -> Result<Expr> {
    if depth == 0 {
        return Err(Error::InvalidSpec("depth must be at least 1".into()));
    }
    Expr::parse(&format!(
        "{} - {} + {} - {}",
        nested_tanh(depth, "x0 + 0.5"),
        nested_tanh(depth, "x0 - 0.5"),
        nested_tanh(depth, "0.5"),
        nested_tanh(depth, "1.5")
    ))
}

/// Imperfect-model advection problem in coordinates `(t, x)` on `]0,1[²`:
/// `u* = exp(t − x) + 0.1 cos(2πx)`, conditions `h = exp(t − x)` on the faces
/// `t = 0` and `x = 0`, observations on `t < 0.5`.
pub fn advection_problem(sigma: f64) -> Problem {
    let h = vec![Expr::parse("exp(x0 - x1)").expect("valid")];
    Problem {
        domain: BoxDomain::unit(2),
        faces: vec![Face::new(0, Side::Lower), Face::new(1, Side::Lower)],
        h,
        u_star: Some(vec![Expr::parse("exp(x0 - x1) + 0.1*cos(2*pi*x1)").expect("valid")]),
        sigma,
        supp: Some(BoxDomain { lo: vec![0.0, 0.0], hi: vec![0.5, 1.0] }),
        d2: 1,
    }
}

/// Closed form of the model solution `exp(t − x)` of the advection problem.
pub fn advection_model_solution() -> Vec<Expr> {
    vec![Expr::parse("exp(x0 - x1)").expect("valid")]
}

/// Heat problem on `]−1,1[ × ]0,T[` in coordinates `(x, t)`: zero temperature at
/// `x = ±1`, bell-shaped initial condition of depth `depth` at `t = 0`.
pub fn heat_problem(depth: usize, horizon: f64) -> Result<Problem> {
    let u0 = heat_initial_condition(depth)?;
    let zero = vec![Expr::zero()];
    Ok(Problem {
        domain: BoxDomain::new(vec![-1.0, 0.0], vec![1.0, horizon])?,
        faces: vec![
            Face { coord: 1, side: Side::Lower, weight: None, h: Some(vec![u0]) },
            Face { coord: 0, side: Side::Lower, weight: None, h: Some(zero.clone()) },
            Face { coord: 0, side: Side::Upper, weight: None, h: Some(zero) },
        ],
        h: Vec::new(),
        u_star: None,
        sigma: 0.0,
        supp: None,
        d2: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_condition_values() {
        let u0 = heat_initial_condition(1).unwrap();
        assert!(u0.eval(&[-1.0]).abs() < 1e-15);
        assert!(u0.eval(&[1.0]).abs() < 1e-15);
        let t = |v: f64| v.tanh();
        assert!((u0.eval(&[0.0]) - (3.0 * t(0.5) - t(1.5))).abs() < 1e-15);
        assert!((u0.eval(&[0.37]) - u0.eval(&[-0.37])).abs() < 1e-15);
    }

    #[test]
    fn noiseless_data_follow_ground_truth() {
        let p = advection_problem(0.0);
        let s = p.sample(Counts { n: 50, n_e: 10, n_r: 10 }, 9).unwrap();
        let u = &p.u_star.as_ref().unwrap()[0];
        for (x, y) in s.data_x.chunks(2).zip(&s.data_y) {
            assert_eq!(u.eval(x), *y);
            assert!(x[0] < 0.5);
        }
    }

    #[test]
    fn streams_are_independent_of_other_counts() {
        let p = advection_problem(0.1);
        let a = p.sample(Counts { n: 20, n_e: 10, n_r: 100 }, 4).unwrap();
        let b = p.sample(Counts { n: 20, n_e: 30, n_r: 7 }, 4).unwrap();
        assert_eq!(a.data_x, b.data_x);
        assert_eq!(a.data_y, b.data_y);
        assert_eq!(a, p.sample(Counts { n: 20, n_e: 10, n_r: 100 }, 4).unwrap());
    }

    #[test]
    fn support_outside_domain_is_rejected() {
        let mut p = advection_problem(0.1);
        p.supp = Some(BoxDomain { lo: vec![0.0, 0.0], hi: vec![1.5, 1.0] });
        assert!(p.sample(Counts { n: 1, n_e: 0, n_r: 0 }, 0).is_err());
    }

    #[test]
    fn default_face_weights_follow_face_lengths() {
        let p = heat_problem(1, 1.0).unwrap();
        let w = p.face_weights();
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
    }
}
