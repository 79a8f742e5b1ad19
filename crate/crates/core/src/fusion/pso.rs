//! Global-best particle swarm minimization over a box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity cap per dimension, as a fraction of the box width.
    pub v_max: f64,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self { particles: 20, iterations: 100, inertia: 0.72, cognitive: 1.49, social: 1.49, v_max: 0.5, seed: 0 }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::arg("PSO needs at least 2 particles"));
        }
        if self.iterations < 1 {
            return Err(Error::arg("PSO needs at least 1 iteration"));
        }
        if !(self.inertia > 0.0 && self.inertia < 1.0) {
            return Err(Error::arg("inertia must lie in (0, 1)"));
        }
        if !(self.cognitive > 0.0 && self.social > 0.0) {
            return Err(Error::arg("cognitive and social coefficients must be positive"));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::arg("v_max must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best-ever objective value after each iteration.
    pub trace: Vec<f64>,
}

fn eval(objective: &mut impl FnMut(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let v = objective(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { position: x.to_vec(), value: v })
    }
}

/// Minimizes `objective` over `[lo, hi]^dim`.
///
/// Synchronous update: all particles move using the previous iteration's
/// global best, then all are evaluated, then bests are updated. Velocities
/// are clamped to `±v_max·(hi − lo)` and positions to the box.
pub fn pso_minimize(
    mut objective: impl FnMut(&[f64]) -> f64,
    dim: usize,
    lo: f64,
    hi: f64,
    p: &PsoParams,
) -> Result<PsoOutcome> {
    p.validate()?;
    if dim < 1 {
        return Err(Error::arg("PSO dimension must be >= 1"));
    }
    if !(lo < hi) {
        return Err(Error::arg(format!("empty search box [{lo}, {hi}]")));
    }
    let vcap = p.v_max * (hi - lo);
    let mut rng = seed::rng(p.seed);
    let mut pos: Vec<Vec<f64>> = (0..p.particles).map(|_| (0..dim).map(|_| rng.gen_range(lo..=hi)).collect()).collect();
    let mut vel: Vec<Vec<f64>> =
        (0..p.particles).map(|_| (0..dim).map(|_| rng.gen_range(-vcap..=vcap)).collect()).collect();

    let mut pbest = pos.clone();
    let mut pbest_val = Vec::with_capacity(p.particles);
    for x in &pos {
        pbest_val.push(eval(&mut objective, x)?);
    }
    let mut g = argmin(&pbest_val);
    let mut gbest = pbest[g].clone();
    let mut gbest_val = pbest_val[g];

    let mut trace = Vec::with_capacity(p.iterations);
    for _ in 0..p.iterations {
        for i in 0..p.particles {
            let (x, v, pb) = (&mut pos[i], &mut vel[i], &pbest[i]);
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let nv = p.inertia * v[d] + p.cognitive * r1 * (pb[d] - x[d]) + p.social * r2 * (gbest[d] - x[d]);
                v[d] = nv.clamp(-vcap, vcap);
                x[d] = (x[d] + v[d]).clamp(lo, hi);
            }
        }
        // evaluation barrier
        let values = pos.iter().map(|x| eval(&mut objective, x)).collect::<Result<Vec<f64>>>()?;
        for (i, &val) in values.iter().enumerate() {
            if val < pbest_val[i] {
                pbest_val[i] = val;
                pbest[i].clone_from(&pos[i]);
            }
        }
        g = argmin(&pbest_val);
        if pbest_val[g] < gbest_val {
            gbest_val = pbest_val[g];
            gbest.clone_from(&pbest[g]);
        }
        trace.push(gbest_val);
    }
    Ok(PsoOutcome { best: gbest, value: gbest_val, trace })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}
