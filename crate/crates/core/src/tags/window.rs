use super::{Channel, TagStream};
use crate::par::Exec;
use crate::stats::Binomial;
use crate::{Error, Result};

const LEVEL: f64 = 0.95;
/// One-sided 95 % normal quantile.
const Z_ONE_SIDED: f64 = 1.644_853_626_951_472_2;
/// Two-sided 95 % normal quantile.
const Z_TWO_SIDED: f64 = 1.959_963_984_540_054;

/// Per-window tallies. Additive over disjoint sets of triggers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowCounts {
    pub triggers: u64,
    /// Windows with at least one A click.
    pub clicks_a: u64,
    /// Windows with at least one B click.
    pub clicks_b: u64,
    /// Windows with clicks on exactly one detector.
    pub singles: u64,
    /// Windows with clicks on both detectors.
    pub coincidences: u64,
    /// A and B tags inside windows.
    pub tags_a: u64,
    pub tags_b: u64,
    /// Σ n_A·n_B over windows: zero-delay A–B pairs.
    pub pairs: u64,
}

impl WindowCounts {
    /// Adds one window holding `na` A tags and `nb` B tags.
    pub fn record(&mut self, na: u64, nb: u64) {
        self.record_many(na, nb, 1);
    }

    /// Adds `n` identical windows.
    pub fn record_many(&mut self, na: u64, nb: u64, n: u64) {
        self.triggers += n;
        self.tags_a += na * n;
        self.tags_b += nb * n;
        self.pairs += na * nb * n;
        match (na > 0, nb > 0) {
            (true, true) => {
                self.clicks_a += n;
                self.clicks_b += n;
                self.coincidences += n;
            }
            (true, false) => {
                self.clicks_a += n;
                self.singles += n;
            }
            (false, true) => {
                self.clicks_b += n;
                self.singles += n;
            }
            (false, false) => {}
        }
    }
}

impl std::ops::Add for WindowCounts {
    type Output = WindowCounts;
    fn add(self, o: WindowCounts) -> WindowCounts {
        WindowCounts {
            triggers: self.triggers + o.triggers,
            clicks_a: self.clicks_a + o.clicks_a,
            clicks_b: self.clicks_b + o.clicks_b,
            singles: self.singles + o.singles,
            coincidences: self.coincidences + o.coincidences,
            tags_a: self.tags_a + o.tags_a,
            tags_b: self.tags_b + o.tags_b,
            pairs: self.pairs + o.pairs,
        }
    }
}

impl std::ops::AddAssign for WindowCounts {
    fn add_assign(&mut self, o: WindowCounts) {
        *self = *self + o;
    }
}

/// Point estimate with a 95 % Clopper–Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    fn binomial(k: u64, n: u64) -> Result<Self> {
        let b = Binomial::new(k, n)?;
        let (lower, upper) = b.interval(LEVEL);
        Ok(Estimate { value: b.estimate(), lower, upper })
    }
}

/// Ratio estimate N_num·N_T/(N_1·N_2) with a log-normal (delta method)
/// standard error √(1/N_num + 1/N_1 + 1/N_2) in relative terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub value: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

impl RatioEstimate {
    fn new(num: u64, n1: u64, n2: u64, triggers: u64) -> Option<Self> {
        if n1 == 0 || n2 == 0 {
            return None;
        }
        let scale = triggers as f64 / (n1 as f64 * n2 as f64);
        if num == 0 {
            // no events: one-sided Poisson upper limit for the numerator
            let upper = -(1.0 - LEVEL).ln() * scale;
            return Some(RatioEstimate { value: 0.0, sigma: upper / Z_ONE_SIDED, lower: 0.0, upper });
        }
        let value = num as f64 * scale;
        let rel = (1.0 / num as f64 + 1.0 / n1 as f64 + 1.0 / n2 as f64).sqrt();
        Some(RatioEstimate {
            value,
            sigma: value * rel,
            lower: value * (-Z_TWO_SIDED * rel).exp(),
            upper: value * (Z_TWO_SIDED * rel).exp(),
        })
    }
}

/// Click statistics of a gated HBT run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickStatistics {
    pub counts: WindowCounts,
    /// Detection window [s].
    pub window: f64,
    /// Exclusive-single probability.
    pub ps: Estimate,
    /// Coincidence probability.
    pub pc: Estimate,
    /// Probability that detector A (B) clicks.
    pub pa: Estimate,
    pub pb: Estimate,
    /// α = P_c/(P_A·P_B); None when a detector never clicked.
    pub alpha: Option<RatioEstimate>,
    /// g²(0) = N_pairs·N_T/(N_A·N_B) from tag counts; None when a detector
    /// recorded no tags.
    pub g2_zero: Option<RatioEstimate>,
}

impl ClickStatistics {
    pub fn from_counts(counts: WindowCounts, window: f64) -> Result<Self> {
        let n = counts.triggers;
        if n == 0 {
            return Err(Error::NoTriggers);
        }
        if counts.singles + counts.coincidences > n || counts.clicks_a > n || counts.clicks_b > n {
            return Err(Error::config("window counts exceed the number of triggers"));
        }
        Ok(ClickStatistics {
            counts,
            window,
            ps: Estimate::binomial(counts.singles, n)?,
            pc: Estimate::binomial(counts.coincidences, n)?,
            pa: Estimate::binomial(counts.clicks_a, n)?,
            pb: Estimate::binomial(counts.clicks_b, n)?,
            alpha: RatioEstimate::new(counts.coincidences, counts.clicks_a, counts.clicks_b, n),
            g2_zero: RatioEstimate::new(counts.pairs, counts.tags_a, counts.tags_b, n),
        })
    }
}

pub fn window_statistics(s: &TagStream, window: f64) -> Result<ClickStatistics> {
    window_statistics_with(s, window, Exec::default())
}

/// Classifies the window `[t_T, t_T + window)` after every trigger. Triggers
/// are split into chunks that are classified independently and summed.
pub fn window_statistics_with(s: &TagStream, window: f64, exec: Exec) -> Result<ClickStatistics> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::config(format!("detection window must be positive, got {window}")));
    }
    let w = (window * 1e12).round() as u64;
    let (mut trig, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for t in s.tags() {
        match t.channel {
            Channel::Trigger => trig.push(t.time_ps),
            Channel::A => a.push(t.time_ps),
            Channel::B => b.push(t.time_ps),
        }
    }
    if trig.is_empty() {
        return Err(Error::NoTriggers);
    }
    const CHUNK: usize = 1 << 15;
    let partial = exec.map(trig.len().div_ceil(CHUNK), |c| {
        let part = &trig[c * CHUNK..((c + 1) * CHUNK).min(trig.len())];
        let mut counts = WindowCounts::default();
        let mut ca = Cursor::new(&a, part[0], w);
        let mut cb = Cursor::new(&b, part[0], w);
        for &t in part {
            counts.record(ca.count(t), cb.count(t));
        }
        counts
    });
    let counts = partial.into_iter().fold(WindowCounts::default(), |acc, c| acc + c);
    ClickStatistics::from_counts(counts, window)
}

/// Counts entries of a sorted slice in `[t, t + w)` for non-decreasing t.
struct Cursor<'a> {
    times: &'a [u64],
    w: u64,
    lo: usize,
    hi: usize,
}

impl<'a> Cursor<'a> {
    fn new(times: &'a [u64], t0: u64, w: u64) -> Self {
        let lo = times.partition_point(|&x| x < t0);
        Cursor { times, w, lo, hi: lo }
    }

    fn count(&mut self, t: u64) -> u64 {
        let end = t.saturating_add(self.w);
        while self.lo < self.times.len() && self.times[self.lo] < t {
            self.lo += 1;
        }
        self.hi = self.hi.max(self.lo);
        while self.hi < self.times.len() && self.times[self.hi] < end {
            self.hi += 1;
        }
        (self.hi - self.lo) as u64
    }
}

/// Background-corrected upper limit on the source's own α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkCorrectedAlpha {
    /// Dark-count click probability per window for A and B at the
    /// conservative (lowered) rates.
    pub dark_click_a: f64,
    pub dark_click_b: f64,
    /// Expected accidental coincidence probability per window.
    pub accidental_pc: f64,
    /// One-sided 95 % upper limit on the measured P_c.
    pub pc_upper: f64,
    /// Upper limit on (P_c − accidentals)/(P_A·P_B).
    pub alpha_upper: f64,
}

/// Subtracts accidental coincidences predicted by Poisson dark counts from
/// the 95 % upper limit on P_c and divides by P_A·P_B.
///
/// Dark counts at rate r click a detector in a window w with probability
/// d = 1 − exp(−r·w). The signal click probability s follows from
/// P = 1 − (1 − s)(1 − d). For a source that never puts photons on both
/// detectors, coincidences need a dark count:
/// P_acc = s_A·d_B + s_B·d_A + (1 − s_A − s_B)·d_A·d_B.
/// The rates are lowered by 1.645·`rate_sigma` first, which subtracts fewer
/// accidentals and keeps the limit conservative.
pub fn dark_corrected_alpha(stats: &ClickStatistics, dark_rate_a: f64, dark_rate_b: f64, rate_sigma: f64) -> Result<DarkCorrectedAlpha> {
    for (what, v) in [("dark rate A", dark_rate_a), ("dark rate B", dark_rate_b), ("dark rate uncertainty", rate_sigma)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain { what, value: v, domain: "[0, ∞)" });
        }
    }
    let c = stats.counts;
    let denom = stats.pa.value * stats.pb.value;
    if !(denom > 0.0) {
        return Err(Error::Domain { what: "P_A·P_B", value: denom, domain: "(0, 1]" });
    }
    let dark = |rate: f64| -(-(rate - Z_ONE_SIDED * rate_sigma).max(0.0) * stats.window).exp_m1();
    let (da, db) = (dark(dark_rate_a), dark(dark_rate_b));
    let signal = |p: f64, d: f64| (1.0 - (1.0 - p) / (1.0 - d)).clamp(0.0, 1.0);
    let (sa, sb) = (signal(stats.pa.value, da), signal(stats.pb.value, db));
    let accidental_pc = sa * db + sb * da + (1.0 - sa - sb).max(0.0) * da * db;
    let pc_upper = Binomial::new(c.coincidences, c.triggers)?.upper_bound(LEVEL);
    Ok(DarkCorrectedAlpha {
        dark_click_a: da,
        dark_click_b: db,
        accidental_pc,
        pc_upper,
        alpha_upper: (pc_upper - accidental_pc).max(0.0) / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::Tag;

    const PERIOD: u64 = 1_000_000;

    fn stream(events: &[(Channel, u64)]) -> TagStream {
        TagStream::from_unsorted(events.iter().map(|&(c, t)| Tag::new(c, t)).collect())
    }

    #[test]
    fn no_detector_events() {
        let s = stream(&[(Channel::Trigger, 0), (Channel::Trigger, PERIOD)]);
        let st = window_statistics(&s, 200e-9).unwrap();
        assert_eq!((st.ps.value, st.pc.value), (0.0, 0.0));
        assert!(st.alpha.is_none() && st.g2_zero.is_none());
    }

    #[test]
    fn one_a_click_per_window() {
        let ev: Vec<_> = (0..10).flat_map(|k| [(Channel::Trigger, k * PERIOD), (Channel::A, k * PERIOD + 5000)]).collect();
        let st = window_statistics(&stream(&ev), 200e-9).unwrap();
        assert_eq!((st.ps.value, st.pc.value), (1.0, 0.0));
        assert_eq!(st.counts.clicks_a, 10);
    }

    #[test]
    fn window_edges_are_half_open() {
        let s = stream(&[(Channel::Trigger, 0), (Channel::A, 0), (Channel::B, 200_000)]);
        let st = window_statistics(&s, 200e-9).unwrap();
        assert_eq!((st.counts.clicks_a, st.counts.clicks_b), (1, 0));
    }

    #[test]
    fn multiple_clicks_count_once_per_window_but_all_pairs() {
        let s = stream(&[(Channel::Trigger, 0), (Channel::A, 10), (Channel::A, 20), (Channel::B, 30), (Channel::B, 40)]);
        let c = window_statistics(&s, 200e-9).unwrap().counts;
        assert_eq!((c.coincidences, c.singles, c.tags_a, c.tags_b, c.pairs), (1, 0, 2, 2, 4));
    }

    #[test]
    fn missing_triggers_rejected() {
        let s = stream(&[(Channel::A, 10)]);
        assert!(matches!(window_statistics(&s, 200e-9), Err(Error::NoTriggers)));
        assert!(window_statistics(&s, 0.0).is_err());
    }

    fn counts(triggers: u64, clicks: u64, coincidences: u64) -> WindowCounts {
        WindowCounts {
            triggers,
            clicks_a: clicks,
            clicks_b: clicks,
            singles: 2 * (clicks - coincidences),
            coincidences,
            tags_a: clicks,
            tags_b: clicks,
            pairs: coincidences,
        }
    }

    #[test]
    fn dark_bound_without_background_is_plain_upper_limit() {
        let st = ClickStatistics::from_counts(counts(1_000_000, 2000, 0), 200e-9).unwrap();
        let d = dark_corrected_alpha(&st, 0.0, 0.0, 0.0).unwrap();
        let want = Binomial::new(0, 1_000_000).unwrap().upper_bound(0.95) / (2e-3 * 2e-3);
        assert!((d.alpha_upper - want).abs() < 1e-12 * want);
    }

    #[test]
    fn coincidences_at_accidental_level_leave_a_small_positive_bound() {
        let n = 100_000_000_000u64;
        let (p, rate, w) = (2.1e-3, 10.0f64, 200e-9);
        let d = -(-rate * w).exp_m1();
        let s = 1.0 - (1.0 - p) / (1.0 - d);
        let acc = 2.0 * s * d + (1.0 - 2.0 * s) * d * d;
        let nc = (acc * n as f64).round() as u64;
        let st = ClickStatistics::from_counts(counts(n, (p * n as f64) as u64, nc), w).unwrap();
        let b = dark_corrected_alpha(&st, rate, rate, 0.0).unwrap();
        assert!((b.accidental_pc - acc).abs() < 1e-3 * acc);
        assert!(b.alpha_upper > 0.0 && b.alpha_upper < 0.1 * st.alpha.unwrap().value, "{b:?}");
        // an uncertain rate subtracts less
        let wider = dark_corrected_alpha(&st, rate, rate, 2.0).unwrap();
        assert!(wider.alpha_upper > b.alpha_upper);
    }

    #[test]
    fn ratio_estimates() {
        let st = ClickStatistics::from_counts(counts(1_000_000, 1000, 4), 200e-9).unwrap();
        let a = st.alpha.unwrap();
        assert!((a.value - 4.0).abs() < 1e-12);
        assert!(a.lower < a.value && a.value < a.upper);
        let none = ClickStatistics::from_counts(counts(1_000_000, 1000, 0), 200e-9).unwrap().alpha.unwrap();
        assert_eq!(none.value, 0.0);
        assert!(none.upper > 0.0);
    }
}
