use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};

use super::model::{detection_probabilities, DetectorModel, RunConfig, SourceModel, TAG_RESOLUTION_PS};
use crate::par::Exec;
use crate::qng::ClickProbs;
use crate::tags::{Channel, Tag, TagStream, WindowCounts};
use crate::Result;

/// Triggers per random substream.
pub const BLOCK: u64 = 65_536;
/// Blocks summed per task in count-only runs.
const BLOCKS_PER_TASK: u64 = 64;

/// Block `b` always draws from the same ChaCha8 stream, whichever worker
/// runs it.
fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Outcomes with at least one detected photon: (photons at A, photons at B,
/// probability per trigger), for per-photon detection probabilities `a`, `b`.
fn photon_outcomes(source: &SourceModel, a: f64, b: f64) -> [(u64, u64, f64); 5] {
    let lost = (1.0 - a - b).max(0.0);
    let single = source.p_emit * (1.0 - source.p_multi);
    let double = source.p_emit * source.p_multi;
    [
        (1, 0, single * a + double * 2.0 * a * lost),
        (0, 1, single * b + double * 2.0 * b * lost),
        (2, 0, double * a * a),
        (0, 2, double * b * b),
        (1, 1, double * 2.0 * a * b),
    ]
}

/// Picks the outcome whose cumulative probability first exceeds `u`;
/// (0, 0) if `u` exceeds the total.
fn pick(outcomes: &[(u64, u64, f64)], u: f64) -> (u64, u64) {
    let mut acc = 0.0;
    for &(na, nb, p) in outcomes {
        acc += p;
        if u < acc {
            return (na, nb);
        }
    }
    (0, 0)
}

/// Calls `f` for every trigger index in `0..len` at which an event of
/// per-trigger probability `p` happens, jumping between events with
/// geometrically distributed gaps.
fn for_each_event<R: Rng>(rng: &mut R, p: f64, len: u64, mut f: impl FnMut(&mut R, u64)) {
    if !(p > 0.0) {
        return;
    }
    let gap = Geometric::new(p.min(1.0)).expect("probability in (0, 1]");
    let mut i = 0u64;
    loop {
        i = i.saturating_add(gap.sample(rng));
        if i >= len {
            return;
        }
        f(rng, i);
        i += 1;
    }
}

/// Poisson(λ) conditioned on at least one count.
fn truncated_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda > 30.0 {
        let p = Poisson::new(lambda).expect("positive rate");
        loop {
            let k = p.sample(rng) as u64;
            if k > 0 {
                return k;
            }
        }
    }
    let u = rng.random::<f64>() * -(-lambda).exp_m1();
    let mut k = 1;
    let mut pk = lambda * (-lambda).exp();
    let mut acc = pk;
    while acc <= u && pk > 0.0 {
        k += 1;
        pk *= lambda / k as f64;
        acc += pk;
    }
    k
}

fn to_grid(ps: f64) -> u64 {
    (ps / TAG_RESOLUTION_PS as f64).floor() as u64 * TAG_RESOLUTION_PS
}

struct Plan {
    photon: [(u64, u64, f64); 5],
    photon_total: f64,
    in_window: [(u64, u64, f64); 5],
    dark_a: (f64, f64),
    dark_b: (f64, f64),
}

fn plan(source: &SourceModel, det_a: &DetectorModel, det_b: &DetectorModel, cfg: &RunConfig) -> Result<Plan> {
    let (a, b) = detection_probabilities(source, det_a, det_b, cfg)?;
    let f = source.in_window_fraction(cfg.window)?;
    let photon = photon_outcomes(source, a, b);
    let lambda = |d: &DetectorModel| (d.dark_rate * cfg.window, d.dark_click_probability(cfg.window));
    Ok(Plan {
        photon,
        photon_total: photon.iter().map(|o| o.2).sum(),
        in_window: photon_outcomes(source, a * f, b * f),
        dark_a: lambda(det_a),
        dark_b: lambda(det_b),
    })
}

pub fn simulate_run(source: &SourceModel, det_a: &DetectorModel, det_b: &DetectorModel, cfg: &RunConfig) -> Result<TagStream> {
    simulate_run_with(source, det_a, det_b, cfg, Exec::default())
}

/// Tag stream of a run: a trigger tag per period, photon detections at the
/// trigger time plus a sampled arrival delay, and Poisson dark counts spread
/// uniformly over each detection window. Timestamps sit on the 4 ps grid.
///
/// Trigger block b of [`BLOCK`] triggers uses its own random substream, so
/// the output is bit-identical for any `exec`.
pub fn simulate_run_with(
    source: &SourceModel,
    det_a: &DetectorModel,
    det_b: &DetectorModel,
    cfg: &RunConfig,
    exec: Exec,
) -> Result<TagStream> {
    let plan = plan(source, det_a, det_b, cfg)?;
    let sampler = source.sampler()?;
    let period = cfg.period_ps();
    let window_ps = (cfg.window * 1e12).round();
    let n_blocks = cfg.n_triggers.div_ceil(BLOCK);
    let blocks = exec.map(n_blocks as usize, |blk| {
        let blk = blk as u64;
        let start = blk * BLOCK;
        let len = BLOCK.min(cfg.n_triggers - start);
        let mut rng = block_rng(cfg.seed, blk);
        let mut tags: Vec<Tag> = (start..start + len).map(|k| Tag::new(Channel::Trigger, k * period)).collect();
        let t0 = |i: u64| (start + i) * period;

        for_each_event(&mut rng, plan.photon_total, len, |rng, i| {
            let (na, nb) = pick(&plan.photon, rng.random::<f64>() * plan.photon_total);
            for (ch, n) in [(Channel::A, na), (Channel::B, nb)] {
                for _ in 0..n {
                    let delay = sampler.sample(rng.random::<f64>());
                    tags.push(Tag::new(ch, t0(i) + to_grid(delay * 1e12)));
                }
            }
        });
        for (ch, (lambda, p)) in [(Channel::A, plan.dark_a), (Channel::B, plan.dark_b)] {
            for_each_event(&mut rng, p, len, |rng, i| {
                for _ in 0..truncated_poisson(rng, lambda) {
                    tags.push(Tag::new(ch, t0(i) + to_grid(rng.random::<f64>() * window_ps)));
                }
            });
        }
        tags.sort_by_key(|t| (t.time_ps, t.channel));
        tags
    });
    // photons delayed past the next block's first trigger need a final merge
    Ok(TagStream::from_unsorted(blocks.concat()))
}

pub fn simulate_counts(source: &SourceModel, det_a: &DetectorModel, det_b: &DetectorModel, cfg: &RunConfig) -> Result<WindowCounts> {
    simulate_counts_with(source, det_a, det_b, cfg, Exec::default())
}

/// Window tallies from the same model as [`simulate_run_with`] without
/// materializing tags, for runs far too long to store.
///
/// Triggers with a dark count are located explicitly and given an
/// independently drawn photon outcome. The photon outcomes of all other
/// triggers in a block are drawn jointly from a multinomial. Deterministic
/// in the seed and independent of `exec`, though not the same random draws
/// as the tag stream.
pub fn simulate_counts_with(
    source: &SourceModel,
    det_a: &DetectorModel,
    det_b: &DetectorModel,
    cfg: &RunConfig,
    exec: Exec,
) -> Result<WindowCounts> {
    let plan = plan(source, det_a, det_b, cfg)?;
    let n_blocks = cfg.n_triggers.div_ceil(BLOCK);
    let tasks = n_blocks.div_ceil(BLOCKS_PER_TASK);
    let partial = exec.map(tasks as usize, |task| {
        let mut counts = WindowCounts::default();
        let first = task as u64 * BLOCKS_PER_TASK;
        for blk in first..(first + BLOCKS_PER_TASK).min(n_blocks) {
            let len = BLOCK.min(cfg.n_triggers - blk * BLOCK);
            counts += count_block(&plan, &mut block_rng(cfg.seed, blk), len);
        }
        counts
    });
    Ok(partial.into_iter().fold(WindowCounts::default(), |acc, c| acc + c))
}

fn count_block(plan: &Plan, rng: &mut ChaCha8Rng, len: u64) -> WindowCounts {
    let mut dark: Vec<(u64, u64, u64)> = Vec::new();
    for_each_event(rng, plan.dark_a.1, len, |rng, i| dark.push((i, truncated_poisson(rng, plan.dark_a.0), 0)));
    let mut dark_b = Vec::new();
    for_each_event(rng, plan.dark_b.1, len, |rng, i| dark_b.push((i, 0, truncated_poisson(rng, plan.dark_b.0))));
    for d in dark_b {
        match dark.binary_search_by_key(&d.0, |e| e.0) {
            Ok(j) => dark[j].2 = d.2,
            Err(j) => dark.insert(j, d),
        }
    }

    let mut counts = WindowCounts::default();
    for &(_, ka, kb) in &dark {
        let (na, nb) = pick(&plan.in_window, rng.random::<f64>());
        counts.record(na + ka, nb + kb);
    }
    let mut remaining = len - dark.len() as u64;
    let mut mass = 1.0;
    for &(na, nb, p) in &plan.in_window {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let n = Binomial::new(remaining, q).expect("valid binomial").sample(rng);
        counts.record_many(na, nb, n);
        remaining -= n;
        mass -= p;
    }
    counts.record_many(0, 0, remaining);
    counts
}

/// Exact probabilities of the four window outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowProbabilities {
    pub none: f64,
    pub a_only: f64,
    pub b_only: f64,
    pub both: f64,
}

impl WindowProbabilities {
    pub fn pa(&self) -> f64 {
        self.a_only + self.both
    }

    pub fn pb(&self) -> f64 {
        self.b_only + self.both
    }

    pub fn click_probs(&self) -> ClickProbs {
        ClickProbs { ps: self.a_only + self.b_only, pc: self.both }
    }

    /// P_c/(P_A·P_B).
    pub fn alpha(&self) -> f64 {
        self.both / (self.pa() * self.pb())
    }
}

/// Enumerates photon outcome × dark-count occupancy of each detector.
pub fn analytic_window_probabilities(
    source: &SourceModel,
    det_a: &DetectorModel,
    det_b: &DetectorModel,
    cfg: &RunConfig,
) -> Result<WindowProbabilities> {
    let plan = plan(source, det_a, det_b, cfg)?;
    let (da, db) = (plan.dark_a.1, plan.dark_b.1);
    let nothing = 1.0 - plan.in_window.iter().map(|o| o.2).sum::<f64>();
    let mut w = WindowProbabilities { none: 0.0, a_only: 0.0, b_only: 0.0, both: 0.0 };
    for &(na, nb, p) in plan.in_window.iter().chain(std::iter::once(&(0, 0, nothing))) {
        let pa = if na > 0 { 1.0 } else { da };
        let pb = if nb > 0 { 1.0 } else { db };
        w.both += p * pa * pb;
        w.a_only += p * pa * (1.0 - pb);
        w.b_only += p * (1.0 - pa) * pb;
        w.none += p * (1.0 - pa) * (1.0 - pb);
    }
    Ok(w)
}

/// Closed-form expectation of the exclusive-single and coincidence
/// probabilities that [`simulate_run`] produces.
pub fn analytic_click_probs(source: &SourceModel, det_a: &DetectorModel, det_b: &DetectorModel, cfg: &RunConfig) -> Result<ClickProbs> {
    Ok(analytic_window_probabilities(source, det_a, det_b, cfg)?.click_probs())
}
