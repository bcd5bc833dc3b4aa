//! Evaluation of one `(strategy, d, n)` cell.

use iterlab_core::comb::{build_objective, solve_optimal, SdpSettings, SdpSolution};
use iterlab_core::haar::RngStream;
use iterlab_core::strategies::{
    f_direct_closed, f_direct_mc, f_estimation, f_estimation_onb, f_identity, f_random,
    f_random_mc, Strategy, StrategyReport, DEFAULT_OPERATOR_SAMPLES, DEFAULT_SCALAR_SAMPLES,
};
use iterlab_core::Result;

/// Sample count used when none is given: 10⁵ for scalar Monte Carlo, 10⁴
/// for the estimation moment, and 10⁵ (`d = 2`) or 3·10⁴ objective samples
/// for the comb optimum. Closed forms use none.
pub fn default_samples(strategy: Strategy, d: usize) -> u64 {
    match strategy {
        Strategy::Random | Strategy::Identity | Strategy::Direct => 0,
        Strategy::RandomMc | Strategy::DirectMc | Strategy::EstimationOnb => DEFAULT_SCALAR_SAMPLES,
        Strategy::Estimation => DEFAULT_OPERATOR_SAMPLES,
        Strategy::Optimal if d <= 2 => 100_000,
        Strategy::Optimal => 30_000,
    }
}

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub report: StrategyReport,
    /// Present for the optimal strategy.
    pub solution: Option<SdpSolution>,
}

/// Evaluates one cell on the stream `(seed, stream_index)`.
pub fn evaluate(
    strategy: Strategy,
    d: usize,
    n: u32,
    samples: Option<u64>,
    seed: u64,
    stream_index: u64,
    sdp: &SdpSettings,
) -> Result<CellOutcome> {
    let samples = samples.unwrap_or_else(|| default_samples(strategy, d));
    let rng = &mut RngStream::new(seed, stream_index);
    let report = match strategy {
        Strategy::Random => f_random(n, d)?,
        Strategy::Identity => f_identity(n, d)?,
        Strategy::Direct => f_direct_closed(n, d)?,
        Strategy::RandomMc => f_random_mc(n, d, samples, rng)?,
        Strategy::DirectMc => f_direct_mc(n, d, samples, rng)?,
        Strategy::Estimation => f_estimation(n, d, samples, rng)?,
        Strategy::EstimationOnb => f_estimation_onb(n, d, samples, rng)?,
        Strategy::Optimal => {
            let obj = build_objective(n, d, samples, rng)?;
            let sol = solve_optimal(&obj, sdp)?;
            let report = StrategyReport {
                strategy,
                d,
                n,
                fidelity: sol.primal_value,
                stderr: obj.value_stderr(&sol.comb),
                samples,
                seed: Some(seed),
                bias_warning: false,
            };
            return Ok(CellOutcome {
                report,
                solution: Some(sol),
            });
        }
    };
    Ok(CellOutcome {
        report,
        solution: None,
    })
}
