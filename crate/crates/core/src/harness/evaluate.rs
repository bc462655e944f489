use rayon::prelude::*;
use serde::Serialize;

use super::{ols_fit, run_flight, FlightConfig, HarnessError, Outcome, Policy, PolicyError, RegressionResult};
use crate::datagen::solvable_scenario;
use crate::planner::PlannerConfig;
use crate::simcore::ScenarioParams;

#[derive(Debug, Clone, Default)]
pub struct EvalConfig {
    pub scenario: ScenarioParams,
    pub planner: PlannerConfig,
    pub flight: FlightConfig,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlightRow {
    pub flight_id: u32,
    pub outcome: Outcome,
    pub start_distance: f64,
    pub final_distance: f64,
    pub nr_cuboids: usize,
    pub total_cuboid_volume: f64,
    /// Commands that changed the drone state.
    pub path_len: usize,
    pub bfs_len: usize,
    pub invalid_commands: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub landed_on_platform: usize,
    pub landed_outside: usize,
    pub crashed: usize,
    pub did_not_land: usize,
}

impl OutcomeCounts {
    pub fn get(&self, o: Outcome) -> usize {
        match o {
            Outcome::LandedOnPlatform => self.landed_on_platform,
            Outcome::LandedOutside => self.landed_outside,
            Outcome::Crashed => self.crashed,
            Outcome::DidNotLand => self.did_not_land,
        }
    }

    fn add(&mut self, o: Outcome) {
        match o {
            Outcome::LandedOnPlatform => self.landed_on_platform += 1,
            Outcome::LandedOutside => self.landed_outside += 1,
            Outcome::Crashed => self.crashed += 1,
            Outcome::DidNotLand => self.did_not_land += 1,
        }
    }

    pub fn total(&self) -> usize {
        Outcome::ALL.iter().map(|&o| self.get(o)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeShares {
    pub landed_on_platform: f64,
    pub landed_outside: f64,
    pub crashed: f64,
    pub did_not_land: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub flights: usize,
    pub seed: u64,
    pub counts: OutcomeCounts,
    pub shares: OutcomeShares,
    /// Mean of `path_len / bfs_len` over flights that landed on the platform.
    pub mean_length_ratio: Option<f64>,
    pub rows: Vec<FlightRow>,
    /// Landed-on-platform flag regressed on obstacle count, obstacle
    /// volume and start distance.
    pub regression: Option<RegressionResult>,
    /// Why `regression` is absent, e.g. no obstacle variation.
    pub regression_error: Option<String>,
}

impl EvaluationReport {
    fn from_rows(seed: u64, rows: Vec<FlightRow>) -> Self {
        let mut counts = OutcomeCounts::default();
        for r in &rows {
            counts.add(r.outcome);
        }
        let n = rows.len() as f64;
        let share = |o| counts.get(o) as f64 / n;
        let landed: Vec<f64> = rows
            .iter()
            .filter(|r| r.outcome == Outcome::LandedOnPlatform && r.bfs_len > 0)
            .map(|r| r.path_len as f64 / r.bfs_len as f64)
            .collect();
        let design: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r.nr_cuboids as f64, r.total_cuboid_volume, r.start_distance])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r.outcome == Outcome::LandedOnPlatform))).collect();
        let (regression, regression_error) = match ols_fit(&design, &y) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            flights: rows.len(),
            seed,
            counts,
            shares: OutcomeShares {
                landed_on_platform: share(Outcome::LandedOnPlatform),
                landed_outside: share(Outcome::LandedOutside),
                crashed: share(Outcome::Crashed),
                did_not_land: share(Outcome::DidNotLand),
            },
            mean_length_ratio: (!landed.is_empty()).then(|| landed.iter().sum::<f64>() / landed.len() as f64),
            rows,
            regression,
            regression_error,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Flies `n_flights` solvable scenarios drawn from `seed`, each with a
/// fresh policy from `make_policy(flight_id)`. Rows come back in flight
/// order whatever the worker count.
pub fn evaluate<F>(n_flights: usize, seed: u64, cfg: &EvalConfig, make_policy: F) -> Result<EvaluationReport, HarnessError>
where
    F: Fn(u32) -> Result<Box<dyn Policy>, PolicyError> + Sync,
{
    if n_flights == 0 {
        return Err(HarnessError::InvalidRequest("n_flights must be positive".into()));
    }
    let fly = |i: u64| -> Result<FlightRow, HarnessError> {
        let flight_id = i as u32;
        let (scene, path) = solvable_scenario(seed, i, &cfg.scenario, &cfg.planner)?;
        let mut policy = make_policy(flight_id).map_err(|source| HarnessError::Policy { flight_id, source })?;
        let record = run_flight(flight_id, &scene, policy.as_mut(), &cfg.flight)?;
        Ok(FlightRow {
            flight_id,
            outcome: record.outcome,
            start_distance: record.start_distance,
            final_distance: record.final_distance,
            nr_cuboids: scene.cuboids.len(),
            total_cuboid_volume: scene.total_cuboid_volume(),
            path_len: record.path_len(),
            bfs_len: path.len(),
            invalid_commands: record.invalid_commands,
        })
    };
    let run = || (0..n_flights as u64).into_par_iter().map(fly).collect::<Result<Vec<_>, _>>();
    let rows = if cfg.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| HarnessError::InvalidRequest(e.to_string()))?
            .install(run)?
    };
    Ok(EvaluationReport::from_rows(seed, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraConfig;
    use crate::drone::FlightCommand;
    use crate::harness::{OraclePolicy, ScriptedPolicy};

    fn cfg(max_obstacles: usize) -> EvalConfig {
        let mut c = EvalConfig::default();
        c.scenario.max_obstacles = max_obstacles;
        c.flight.camera = CameraConfig {
            width: 32,
            height: 24,
            ..CameraConfig::default()
        };
        c
    }

    fn oracle(_: u32) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(Box::new(OraclePolicy::default()))
    }

    #[test]
    fn oracle_always_lands_in_empty_rooms() {
        let r = evaluate(12, 3, &cfg(0), oracle).unwrap();
        assert_eq!(r.counts.landed_on_platform, 12);
        assert_eq!(r.shares.landed_on_platform, 1.0);
        assert!(r.rows.iter().all(|row| row.path_len == row.bfs_len));
        assert_eq!(r.mean_length_ratio, Some(1.0));
        // no obstacles means a zero column
        assert!(r.regression.is_none());
        assert!(r.regression_error.is_some());
    }

    #[test]
    fn oracle_never_crashes_among_obstacles() {
        let r = evaluate(10, 11, &cfg(5), oracle).unwrap();
        assert_eq!(r.counts.crashed, 0);
        assert_eq!(r.counts.landed_on_platform, 10);
        assert!(r.rows.iter().all(|row| row.path_len == row.bfs_len));
    }

    #[test]
    fn takeoff_only_never_lands() {
        let r = evaluate(6, 1, &cfg(3), |_| Ok(Box::new(ScriptedPolicy::new(vec![FlightCommand::Takeoff])) as Box<dyn Policy>)).unwrap();
        assert_eq!(r.shares.did_not_land, 1.0);
        assert_eq!(r.counts.total(), 6);
    }

    #[test]
    fn worker_count_does_not_change_reports() {
        let mut one = cfg(4);
        one.workers = 1;
        let mut three = cfg(4);
        three.workers = 3;
        let a = evaluate(8, 5, &one, oracle).unwrap();
        let b = evaluate(8, 5, &three, oracle).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.windows(2).all(|w| w[0].flight_id < w[1].flight_id));
    }

    #[test]
    fn shares_partition_flights() {
        let script = vec![FlightCommand::Takeoff, FlightCommand::Forward, FlightCommand::Forward, FlightCommand::Land];
        let r = evaluate(10, 2, &cfg(6), |_| Ok(Box::new(ScriptedPolicy::new(script.clone())) as Box<dyn Policy>)).unwrap();
        assert_eq!(r.counts.total(), 10);
        let s = r.shares;
        assert!((s.landed_on_platform + s.landed_outside + s.crashed + s.did_not_land - 1.0).abs() < 1e-12);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 10);
        assert!(json["rows"][0]["bfs_len"].is_u64());
    }

    #[test]
    fn zero_flights_rejected() {
        assert!(matches!(evaluate(0, 1, &cfg(0), oracle), Err(HarnessError::InvalidRequest(_))));
    }
}
