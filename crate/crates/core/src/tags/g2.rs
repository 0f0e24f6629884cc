use super::{Channel, TagStream};
use crate::par::Exec;
use crate::{Error, Result};

/// Keeps only detector tags in `[t_T + offset, t_T + offset + length)` of the
/// most recent trigger, e.g. to drop cooling-period fluorescence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub offset_ps: u64,
    pub length_ps: u64,
}

/// Counts of A–B pair delays τ = t_B − t_A in bins
/// `[tau_min + k·width, tau_min + (k+1)·width)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G2Histogram {
    pub tau_min_ps: i64,
    pub bin_width_ps: u64,
    pub counts: Vec<u64>,
    /// A and B tags that passed the gate.
    pub n_a: u64,
    pub n_b: u64,
    pub n_triggers: u64,
}

impl G2Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.tau_min_ps as f64 + (k as f64 + 0.5) * self.bin_width_ps as f64
    }

    /// Pair counts summed over bins whose centre lies within `half_width_ps`
    /// of m·`period_ps`, for every pulse index m the range covers.
    pub fn pulse_areas(&self, period_ps: u64, half_width_ps: u64) -> Vec<(i64, u64)> {
        let p = period_ps as f64;
        let mut out: Vec<(i64, u64)> = Vec::new();
        for (k, &c) in self.counts.iter().enumerate() {
            let tau = self.bin_center(k);
            let m = (tau / p).round();
            if (tau - m * p).abs() > half_width_ps as f64 {
                continue;
            }
            let m = m as i64;
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += c,
                _ => out.push((m, c)),
            }
        }
        out
    }

    /// Zero-delay pulse area over the mean side-pulse area; None if the
    /// histogram has no complete side pulses or they are empty.
    pub fn central_to_side_ratio(&self, period_ps: u64, half_width_ps: u64) -> Option<f64> {
        let areas = self.pulse_areas(period_ps, half_width_ps);
        let central = areas.iter().find(|a| a.0 == 0)?.1 as f64;
        let sides: Vec<f64> = areas.iter().filter(|a| a.0 != 0).map(|a| a.1 as f64).collect();
        let mean = sides.iter().sum::<f64>() / sides.len() as f64;
        (mean > 0.0).then(|| central / mean)
    }

    /// Pulsed normalization of the zero-delay pulse: N_pairs·N_T/(N_A·N_B).
    pub fn pulsed_g2_zero(&self, period_ps: u64, half_width_ps: u64) -> Option<f64> {
        let pairs = self.pulse_areas(period_ps, half_width_ps).iter().find(|a| a.0 == 0)?.1;
        let denom = self.n_a as f64 * self.n_b as f64;
        (denom > 0.0).then(|| pairs as f64 * self.n_triggers as f64 / denom)
    }

    /// Continuous-wave normalization g²(τ_k) = c_k·T/(N_A·N_B·width) for a
    /// stream of duration T.
    pub fn cw_normalized(&self, duration_ps: u64) -> Vec<f64> {
        let scale = duration_ps as f64 / (self.n_a as f64 * self.n_b as f64 * self.bin_width_ps as f64);
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }
}

pub fn g2_histogram(s: &TagStream, tau_min_ps: i64, tau_max_ps: i64, bin_width_ps: u64, gate: Option<Gate>) -> Result<G2Histogram> {
    g2_histogram_with(s, tau_min_ps, tau_max_ps, bin_width_ps, gate, Exec::default())
}

/// All A–B pairs with τ in `[tau_min, tau_max)` are counted, not only nearest
/// neighbours. Work is split over chunks of A tags and summed exactly.
pub fn g2_histogram_with(
    s: &TagStream,
    tau_min_ps: i64,
    tau_max_ps: i64,
    bin_width_ps: u64,
    gate: Option<Gate>,
    exec: Exec,
) -> Result<G2Histogram> {
    if bin_width_ps == 0 {
        return Err(Error::config("histogram bin width must be positive"));
    }
    if tau_max_ps <= tau_min_ps {
        return Err(Error::config("histogram range must satisfy tau_min < tau_max"));
    }
    let n_bins = (tau_max_ps - tau_min_ps) as u64;
    let n_bins = n_bins.div_ceil(bin_width_ps) as usize;

    let (a, b) = gated_times(s, gate);
    const CHUNK: usize = 1 << 14;
    let chunks = a.len().div_ceil(CHUNK);
    let partial = exec.map(chunks, |c| {
        let mut counts = vec![0u64; n_bins];
        let part = &a[c * CHUNK..((c + 1) * CHUNK).min(a.len())];
        let lo_of = |ta: u64| ta as i128 + tau_min_ps as i128;
        let mut j = b.partition_point(|&tb| (tb as i128) < lo_of(part[0]));
        for &ta in part {
            let lo = lo_of(ta);
            let hi = ta as i128 + tau_max_ps as i128;
            while j < b.len() && (b[j] as i128) < lo {
                j += 1;
            }
            for &tb in b[j..].iter().take_while(|&&tb| (tb as i128) < hi) {
                let k = ((tb as i128 - lo) as u64 / bin_width_ps) as usize;
                counts[k] += 1;
            }
        }
        counts
    });
    let mut counts = vec![0u64; n_bins];
    for p in partial {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    Ok(G2Histogram {
        tau_min_ps,
        bin_width_ps,
        counts,
        n_a: a.len() as u64,
        n_b: b.len() as u64,
        n_triggers: s.count(Channel::Trigger) as u64,
    })
}

fn gated_times(s: &TagStream, gate: Option<Gate>) -> (Vec<u64>, Vec<u64>) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut last_trigger: Option<u64> = None;
    for t in s.tags() {
        if t.channel == Channel::Trigger {
            last_trigger = Some(t.time_ps);
            continue;
        }
        let keep = match (gate, last_trigger) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(g), Some(tt)) => {
                let start = tt + g.offset_ps;
                t.time_ps >= start && t.time_ps - start < g.length_ps
            }
        };
        if keep {
            match t.channel {
                Channel::A => a.push(t.time_ps),
                _ => b.push(t.time_ps),
            }
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::Tag;

    #[test]
    fn single_pair_lands_in_its_bin() {
        let s = TagStream::new(vec![Tag::new(Channel::A, 1000), Tag::new(Channel::B, 1250)]).unwrap();
        let h = g2_histogram(&s, -1000, 1000, 100, None).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts[12], 1);
        // negative delays
        let h = g2_histogram(&s, -1000, 0, 100, None).unwrap();
        assert_eq!(h.total(), 0);
    }

    #[test]
    fn counts_every_pair_in_range() {
        let s = TagStream::new(vec![
            Tag::new(Channel::A, 0),
            Tag::new(Channel::A, 10),
            Tag::new(Channel::B, 20),
            Tag::new(Channel::B, 30),
        ])
        .unwrap();
        let h = g2_histogram(&s, -100, 100, 1, None).unwrap();
        assert_eq!(h.total(), 4);
        for tau in [10, 20, 30] {
            assert!(h.counts[(tau + 100) as usize] > 0);
        }
    }

    #[test]
    fn gate_discards_tags_outside_windows() {
        let s = TagStream::new(vec![
            Tag::new(Channel::A, 5),
            Tag::new(Channel::Trigger, 100),
            Tag::new(Channel::A, 110),
            Tag::new(Channel::B, 150),
            Tag::new(Channel::B, 400),
        ])
        .unwrap();
        let gate = Gate { offset_ps: 0, length_ps: 200 };
        let h = g2_histogram(&s, -1000, 1000, 10, Some(gate)).unwrap();
        assert_eq!((h.n_a, h.n_b, h.total()), (1, 1, 1));
        assert_eq!(g2_histogram(&s, -1000, 1000, 10, None).unwrap().total(), 4);
    }

    #[test]
    fn invalid_binning_rejected() {
        let s = TagStream::default();
        assert!(g2_histogram(&s, 0, 10, 0, None).is_err());
        assert!(g2_histogram(&s, 10, 10, 1, None).is_err());
        assert_eq!(g2_histogram(&s, 0, 10, 3, None).unwrap().counts.len(), 4);
    }
}
