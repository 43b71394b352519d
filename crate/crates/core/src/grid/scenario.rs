use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{nodal_solve_with, GridSnapshot, PowerGrid};
use crate::error::{Error, Result};

/// A labeled time series of grid operating points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub snapshots: Vec<GridSnapshot>,
    pub anomaly_times: BTreeSet<usize>,
    pub load_noise_sigma: f64,
    pub rng_seed: u64,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Simulates `steps` timesteps. Injections are scaled per node by
/// `1 + Normal(0, sigma)`; at each anomaly time one uniformly chosen branch
/// whose outage keeps the grid connected is opened for that timestep only.
pub fn generate_scenarios(
    grid: &PowerGrid,
    steps: usize,
    anomaly_times: &BTreeSet<usize>,
    load_noise_sigma: f64,
    rng_seed: u64,
) -> Result<ScenarioSet> {
    if !(load_noise_sigma >= 0.0) || !load_noise_sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "load noise sigma must be finite and >= 0, got {load_noise_sigma}"
        )));
    }
    if let Some(&last) = anomaly_times.iter().next_back() {
        if last >= steps {
            return Err(Error::InvalidArgument(format!(
                "anomaly time {last} outside [0, {steps})"
            )));
        }
    }
    let safe = if anomaly_times.is_empty() {
        Vec::new()
    } else {
        let safe = grid.safe_outages();
        if safe.is_empty() {
            return Err(Error::NoSafeAnomalyEdge);
        }
        safe
    };

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let noise = Normal::new(0.0, load_noise_sigma).expect("sigma validated");
    let base_adm: Vec<Complex64> = grid.branches.iter().map(|b| b.admittance).collect();

    let mut snapshots = Vec::with_capacity(steps);
    for t in 0..steps {
        let injections: Vec<Complex64> = grid
            .injections
            .iter()
            .map(|inj| inj * (1.0 + noise.sample(&mut rng)))
            .collect();
        let failed = if anomaly_times.contains(&t) {
            Some(*safe.choose(&mut rng).expect("non-empty"))
        } else {
            None
        };
        let mut adm = base_adm.clone();
        if let Some(e) = failed {
            adm[e] = Complex64::new(0.0, 0.0);
        }
        let mut snap = nodal_solve_with(grid, &adm, &injections)?;
        snap.t = t;
        snap.anomaly_label = failed;
        snapshots.push(snap);
    }

    Ok(ScenarioSet {
        snapshots,
        anomaly_times: anomaly_times.clone(),
        load_noise_sigma,
        rng_seed,
    })
}

/// Draws `count` distinct anomaly times uniformly from `[earliest, steps)`.
pub fn spread_anomaly_times(
    steps: usize,
    count: usize,
    earliest: usize,
    rng_seed: u64,
) -> Result<BTreeSet<usize>> {
    if earliest + count > steps {
        return Err(Error::InvalidArgument(format!(
            "cannot place {count} anomalies in [{earliest}, {steps})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pool: Vec<usize> = (earliest..steps).collect();
    Ok(pool.choose_multiple(&mut rng, count).copied().collect())
}
