//! Closed-form expected insert and lookup costs, in abstract comparison
//! units (all logarithms base 2). Useful for comparing parameter choices;
//! the numbers are not seconds.
//!
//! ```text
//! L      = max(1, ceil(log_{mD}(n / (mR * R_n))))
//! insert = log R_n + (1 - log eps) * L * log(mD)
//! lookup = (-eps log eps) * (R log R_n + D L log R_n + D L log R + D^2 L log(mD))
//! ```
//!
//! When round(m·D) = 1 levels grow linearly instead of geometrically, so L
//! is taken as `ceil(n / (mR * R_n * D))` and the estimate is flagged.

use num_traits::Float;

use crate::model::{ParamError, TuningParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostEstimate<F> {
    pub insert: F,
    pub lookup: F,
    /// Number of disk levels assumed.
    pub levels: u64,
    /// Set when round(m·D) = 1 and L came from linear growth.
    pub linear_levels: bool,
}

fn lit<F: Float>(x: f64) -> F {
    F::from(x).expect("representable")
}

/// Evaluates both cost expressions for a store holding `n` elements.
pub fn cost_model<F: Float>(params: &TuningParams, n: u64) -> Result<CostEstimate<F>, ParamError> {
    let p = params.validate()?;
    let n = n.max(1);
    let flush = (p.flush_runs() * p.run_capacity) as f64;
    let growth = p.cascade_runs();
    let ratio = n as f64 / flush;

    let (levels, linear_levels) = if growth == 1 {
        ((ratio / p.disk_runs as f64).ceil().max(1.0) as u64, true)
    } else {
        let l = if ratio <= 1.0 {
            1.0
        } else {
            (ratio.ln() / (growth as f64).ln()).ceil()
        };
        (l.max(1.0) as u64, false)
    };

    let eps: F = lit(p.epsilon);
    let runs: F = lit(p.runs as f64);
    let run_cap: F = lit(p.run_capacity as f64);
    let d: F = lit(p.disk_runs as f64);
    let l: F = lit(levels as f64);
    let log_md = lit::<F>(growth as f64).log2();
    let log_rn = run_cap.log2();

    let insert = log_rn + (F::one() - eps.log2()) * l * log_md;
    let lookup = -eps * eps.log2()
        * (runs * log_rn + d * l * log_rn + d * l * runs.log2() + d * d * l * log_md);

    Ok(CostEstimate {
        insert,
        lookup,
        levels,
        linear_levels,
    })
}
