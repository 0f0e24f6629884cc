use super::fock::{classical_bound_ps, ClickProbs};
use super::threshold::qng_threshold_pc;
use crate::stats::Binomial;
use crate::{Error, Result};

/// Confidence level of the reported intervals.
pub const CONFIDENCE: f64 = 0.95;

/// Raw HBT counts: triggers, exclusive single clicks, coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessCounts {
    pub triggers: u64,
    pub singles: u64,
    pub coincidences: u64,
}

/// Outcome of testing measured click probabilities against the Gaussian
/// (QNG) and classical (NC) boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct QngVerdict {
    pub measured: ClickProbs,
    pub counts: WitnessCounts,
    pub sigma_ps: f64,
    /// Standard error of P_c; with zero coincidences it is evaluated at the
    /// one-sided 95 % upper limit instead of at zero.
    pub sigma_pc: f64,
    pub ps_interval: (f64, f64),
    /// Two-sided 95 % interval, or (0, one-sided upper limit) for zero counts.
    pub pc_interval: (f64, f64),
    /// Gaussian-boundary coincidence probability at the measured P_s.
    pub threshold_pc: f64,
    /// P_c < threshold.
    pub violation: bool,
    /// (threshold − P_c)/σ_Pc; positive on the non-Gaussian side.
    pub distance_sd: f64,
    /// Largest classical P_s at the measured P_c.
    pub nc_bound_ps: f64,
    /// P_s above the classical bound.
    pub nc_violation: bool,
    /// (P_s − bound)/σ_Ps; positive on the non-classical side.
    pub nc_distance_sd: f64,
}

pub fn evaluate_witness(counts: WitnessCounts) -> Result<QngVerdict> {
    if counts.triggers == 0 {
        return Err(Error::NoTriggers);
    }
    if counts.singles + counts.coincidences > counts.triggers {
        return Err(Error::config("singles + coincidences exceed the number of triggers"));
    }
    let s = Binomial::new(counts.singles, counts.triggers)?;
    let c = Binomial::new(counts.coincidences, counts.triggers)?;
    let measured = ClickProbs::new(s.estimate(), c.estimate())?;

    let (pc_interval, sigma_pc) = if counts.coincidences == 0 {
        let upper = c.upper_bound(CONFIDENCE);
        ((0.0, upper), (upper * (1.0 - upper) / counts.triggers as f64).sqrt())
    } else {
        (c.interval(CONFIDENCE), c.std_error())
    };
    let sigma_ps = s.std_error();

    let threshold_pc = qng_threshold_pc(measured.ps)?;
    let nc_bound_ps = classical_bound_ps(measured.pc);
    Ok(QngVerdict {
        measured,
        counts,
        sigma_ps,
        sigma_pc,
        ps_interval: s.interval(CONFIDENCE),
        pc_interval,
        threshold_pc,
        violation: measured.pc < threshold_pc,
        distance_sd: (threshold_pc - measured.pc) / sigma_pc,
        nc_bound_ps,
        nc_violation: measured.ps > nc_bound_ps,
        nc_distance_sd: if sigma_ps > 0.0 { (measured.ps - nc_bound_ps) / sigma_ps } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincidences_above_threshold_are_not_a_violation() {
        let v = evaluate_witness(WitnessCounts { triggers: 1_000_000, singles: 20_000, coincidences: 500 }).unwrap();
        assert!(!v.violation);
        assert!(v.distance_sd < 0.0);
    }

    #[test]
    fn zero_coincidences_use_upper_limit() {
        let v = evaluate_witness(WitnessCounts { triggers: 10_000_000, singles: 20_000, coincidences: 0 }).unwrap();
        assert!(v.violation && v.distance_sd > 0.0);
        assert_eq!(v.pc_interval.0, 0.0);
        assert!(v.sigma_pc > 0.0);
        assert!(v.nc_violation);
    }

    #[test]
    fn malformed_counts_rejected() {
        assert!(matches!(
            evaluate_witness(WitnessCounts { triggers: 0, singles: 0, coincidences: 0 }),
            Err(Error::NoTriggers)
        ));
        assert!(evaluate_witness(WitnessCounts { triggers: 10, singles: 8, coincidences: 5 }).is_err());
        // no single clicks: P_s = 0 is outside the threshold curve
        assert!(evaluate_witness(WitnessCounts { triggers: 10, singles: 0, coincidences: 0 }).is_err());
    }
}
