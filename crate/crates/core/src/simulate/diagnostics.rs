//! Goodness-of-fit checks and the moment check for simulated processes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::error_rates::with_workers;
use super::{loss_class_histogram, simulate_process, theoretical_moments, CompoundPoissonSpec, LossClassHistogram};
use crate::error::{domain, Result};
use crate::probkit::{poisson_pmf, reg_upper_inc_gamma, RandomStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub buckets: usize,
}

/// Pearson chi-squared test of observed counts against Poisson(mean). Cells
/// are pooled left to right until each expects at least 5; the last cell
/// holds the whole upper tail.
pub fn poisson_gof(counts: &[u64], mean: f64) -> Result<GofResult> {
    if counts.is_empty() {
        return domain("goodness of fit needs at least one observation");
    }
    let total = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut observed = vec![0u64; max + 1];
    for &c in counts {
        observed[c as usize] += 1;
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc, mut cdf) = (0.0, 0.0, 0.0);
    for (k, &obs) in observed.iter().enumerate() {
        let p = poisson_pmf(k as u64, mean)?;
        cdf += p;
        obs_acc += obs as f64;
        exp_acc += p * total;
        if exp_acc >= 5.0 {
            cells.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    // upper tail beyond the largest observation
    exp_acc += (1.0 - cdf).max(0.0) * total;
    if exp_acc > 0.0 || obs_acc > 0.0 {
        match cells.last_mut() {
            Some(last) if exp_acc < 5.0 => {
                last.0 += obs_acc;
                last.1 += exp_acc;
            }
            _ => cells.push((obs_acc, exp_acc)),
        }
    }
    if cells.len() < 2 {
        return Ok(GofResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            buckets: cells.len(),
        });
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p_value = reg_upper_inc_gamma(dof as f64 / 2.0, statistic / 2.0)?;
    Ok(GofResult {
        statistic,
        dof,
        p_value,
        buckets: cells.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1), asymptotic
/// p-value with Stephens' small-sample correction.
pub fn ks_uniform(samples: &[f64]) -> Result<KsResult> {
    if samples.is_empty() {
        return domain("Kolmogorov-Smirnov test needs at least one sample");
    }
    if samples.iter().any(|u| !(0.0..=1.0).contains(u)) {
        return domain("uniformity check expects samples in [0, 1]");
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let i = i as f64;
            ((i + 1.0) / n - u).max(u - i / n)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok(KsResult {
        statistic: d,
        n: sorted.len(),
        p_value: kolmogorov_q(lambda),
    })
}

/// Q_KS(λ) = 2 Σ (−1)^{j−1} exp(−2 j² λ²).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = sign * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheckReport {
    pub replications: u64,
    pub theoretical_mean: f64,
    pub theoretical_variance: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub stderr_mean: f64,
    /// Asymptotic standard error of the sample variance, √((m₄ − s⁴)/R).
    pub stderr_variance: f64,
    pub z_mean: f64,
    pub z_variance: f64,
    pub count_gof: GofResult,
    pub position_uniformity: KsResult,
    pub mean_count: f64,
    /// Per-event severities bucketed into loss classes, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_classes: Option<LossClassHistogram>,
}

impl MomentCheckReport {
    pub fn within(&self, k: f64) -> bool {
        self.z_mean.abs() <= k && self.z_variance.abs() <= k
    }
}

struct Replication {
    n: u64,
    total: f64,
    positions: Vec<f64>,
    classes: [u64; 7],
}

/// Simulates `replications` independent realizations (replication r uses
/// substream r) and compares them with the closed-form moments, the Poisson
/// count law and conditional uniformity of event positions.
pub fn moment_check(
    spec: &CompoundPoissonSpec,
    replications: u64,
    stream: &RandomStream,
    workers: usize,
) -> Result<MomentCheckReport> {
    moment_check_with_loss_classes(spec, replications, stream, workers, None)
}

/// [`moment_check`] that also histograms every simulated severity.
pub fn moment_check_with_loss_classes(
    spec: &CompoundPoissonSpec,
    replications: u64,
    stream: &RandomStream,
    workers: usize,
    boundaries: Option<&[f64; 6]>,
) -> Result<MomentCheckReport> {
    if let Some(b) = boundaries {
        loss_class_histogram(&[], b)?;
    }
    if replications < 2 {
        return domain("moment check needs at least two replications");
    }
    let (theoretical_mean, theoretical_variance) = theoretical_moments(spec)?;
    let reps: Vec<Replication> = with_workers(workers, || {
        (0..replications)
            .into_par_iter()
            .map(|r| {
                let real = simulate_process(spec, &mut stream.substream(r))?;
                let classes = match boundaries {
                    Some(b) => loss_class_histogram(&real.severities, b)?.counts,
                    None => [0; 7],
                };
                Ok(Replication {
                    classes,
                    n: real.n_events,
                    total: real.total_severity,
                    positions: real.event_positions.iter().map(|p| p / spec.exposure).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let r = replications as f64;
    let sample_mean = reps.iter().map(|x| x.total).sum::<f64>() / r;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in &reps {
        let d = x.total - sample_mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    let sample_variance = m2 / (r - 1.0);
    let central4 = m4 / r;
    let pop_var = m2 / r;
    let stderr_mean = (sample_variance / r).sqrt();
    let stderr_variance = ((central4 - pop_var * pop_var).max(0.0) / r).sqrt();
    let z = |diff: f64, se: f64| {
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };

    let counts: Vec<u64> = reps.iter().map(|x| x.n).collect();
    let positions: Vec<f64> = reps.iter().flat_map(|x| x.positions.iter().copied()).collect();
    let count_gof = poisson_gof(&counts, spec.rate * spec.exposure)?;
    let position_uniformity = if positions.is_empty() {
        KsResult {
            statistic: 0.0,
            n: 0,
            p_value: 1.0,
        }
    } else {
        ks_uniform(&positions)?
    };

    Ok(MomentCheckReport {
        replications,
        theoretical_mean,
        theoretical_variance,
        sample_mean,
        sample_variance,
        stderr_mean,
        stderr_variance,
        z_mean: z(sample_mean - theoretical_mean, stderr_mean),
        z_variance: z(sample_variance - theoretical_variance, stderr_variance),
        count_gof,
        position_uniformity,
        mean_count: counts.iter().sum::<u64>() as f64 / r,
        loss_classes: boundaries.map(|_| {
            let mut counts = [0u64; 7];
            for x in &reps {
                for (c, v) in counts.iter_mut().zip(x.classes) {
                    *c += v;
                }
            }
            LossClassHistogram { counts }
        }),
    })
}
