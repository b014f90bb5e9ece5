//! Representative-day selection by k-medoids (PAM).
//!
//! Day profiles are compared by Euclidean distance over the concatenation
//! of their z-normalized series (normalization per series across the whole
//! dataset, so load magnitudes do not dominate shape). Medoids are actual
//! input days; weights distribute 365 days proportionally to cluster size.

use crate::model::RepresentativeDay;
use crate::rng::SplitMix64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k = {k} exceeds the {n} available profiles")]
    TooFewProfiles { k: usize, n: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("profile {0}: series lengths differ")]
    RaggedProfile(String),
    #[error("profile {0}: non-finite value")]
    NonFinite(String),
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// One calendar day of data: loads plus optional exogenous series (for
/// example ambient temperature), all of the day's step count.
#[derive(Debug, Clone, PartialEq)]
pub struct DayProfile {
    pub tag: String,
    pub heat: Vec<f64>,
    pub cold: Vec<f64>,
    pub extra: Vec<Vec<f64>>,
}

/// Result of a clustering run.
#[derive(Debug, Clone)]
pub struct ClusteredDays {
    /// Indices of the medoid profiles (sorted ascending).
    pub medoids: Vec<usize>,
    /// Cluster assignment per profile (index into `medoids`).
    pub assignment: Vec<usize>,
    /// Days per year represented by each medoid; sums to 365.
    pub weights: Vec<f64>,
    /// Total within-cluster distance.
    pub total_distance: f64,
    pub warnings: Vec<String>,
}

impl ClusteredDays {
    /// The instance-file `days` section: medoid loads with their weights.
    pub fn representative_days(&self, profiles: &[DayProfile]) -> Vec<RepresentativeDay> {
        self.medoids
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| RepresentativeDay {
                id: profiles[m].tag.clone(),
                weight: w,
                heat_load: profiles[m].heat.clone(),
                cold_load: profiles[m].cold.clone(),
            })
            .collect()
    }
}

/// Whether exogenous series participate in the clustering distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceSeries {
    /// Heat and cold loads only (the default).
    #[default]
    LoadsOnly,
    /// Loads plus every extra series.
    All,
}

fn validate_profiles(profiles: &[DayProfile]) -> Result<usize, ClusterError> {
    let steps = profiles.first().map(|p| p.heat.len()).unwrap_or(0);
    for p in profiles {
        let ok = p.cold.len() == p.heat.len()
            && p.heat.len() == steps
            && p.extra.iter().all(|e| e.len() == steps);
        if !ok {
            return Err(ClusterError::RaggedProfile(p.tag.clone()));
        }
        let finite = p
            .heat
            .iter()
            .chain(&p.cold)
            .chain(p.extra.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(ClusterError::NonFinite(p.tag.clone()));
        }
    }
    Ok(steps)
}

/// z-normalized feature matrix: one row per profile.
fn feature_matrix(profiles: &[DayProfile], series: DistanceSeries) -> Vec<Vec<f64>> {
    let n_extra = match series {
        DistanceSeries::LoadsOnly => 0,
        DistanceSeries::All => profiles.iter().map(|p| p.extra.len()).min().unwrap_or(0),
    };
    let mut features = vec![Vec::new(); profiles.len()];
    let push_series = |select: &dyn Fn(&DayProfile) -> &[f64], features: &mut Vec<Vec<f64>>| {
        let all: Vec<f64> = profiles.iter().flat_map(|p| select(p).iter().copied()).collect();
        let n = all.len().max(1) as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt().max(1e-12);
        for (p, f) in profiles.iter().zip(features.iter_mut()) {
            f.extend(select(p).iter().map(|v| (v - mean) / sd));
        }
    };
    push_series(&|p: &DayProfile| p.heat.as_slice(), &mut features);
    push_series(&|p: &DayProfile| p.cold.as_slice(), &mut features);
    for e in 0..n_extra {
        push_series(&move |p: &DayProfile| p.extra[e].as_slice(), &mut features);
    }
    features
}

fn distance_matrix(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = features.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let dist = features[i]
                .iter()
                .zip(&features[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    d
}

fn assign(dist: &[Vec<f64>], medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut assignment = Vec::with_capacity(dist.len());
    let mut total = 0.0;
    for i in 0..dist.len() {
        let (best, best_d) = medoids
            .iter()
            .enumerate()
            .map(|(mi, &m)| (mi, dist[i][m]))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("at least one medoid");
        assignment.push(best);
        total += best_d;
    }
    (assignment, total)
}

/// Greedy BUILD initialization: first the most central profile, then
/// whichever profile reduces the total distance most.
fn pam_build(dist: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = dist.len();
    let first = (0..n)
        .min_by(|&a, &b| {
            let da: f64 = dist[a].iter().sum();
            let db: f64 = dist[b].iter().sum();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("nonempty");
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist[i][first]).collect();
    while medoids.len() < k {
        let candidate = (0..n)
            .filter(|i| !medoids.contains(i))
            .min_by(|&a, &b| {
                let ga: f64 = (0..n).map(|i| nearest[i].min(dist[i][a])).sum();
                let gb: f64 = (0..n).map(|i| nearest[i].min(dist[i][b])).sum();
                ga.total_cmp(&gb).then(a.cmp(&b))
            })
            .expect("candidates remain");
        for i in 0..n {
            nearest[i] = nearest[i].min(dist[i][candidate]);
        }
        medoids.push(candidate);
    }
    medoids
}

/// Best-improvement SWAP phase; the total distance never increases.
fn pam_swap(dist: &[Vec<f64>], medoids: &mut Vec<usize>) -> f64 {
    let n = dist.len();
    let (_, mut best_total) = assign(dist, medoids);
    loop {
        let mut best_move: Option<(usize, usize, f64)> = None;
        for mi in 0..medoids.len() {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[mi] = cand;
                let (_, total) = assign(dist, &trial);
                if total < best_total - 1e-12 {
                    let better = match best_move {
                        None => true,
                        Some((_, _, t)) => total < t,
                    };
                    if better {
                        best_move = Some((mi, cand, total));
                    }
                }
            }
        }
        match best_move {
            Some((mi, cand, total)) => {
                medoids[mi] = cand;
                best_total = total;
            }
            None => return best_total,
        }
    }
}

/// PAM k-medoids over day profiles.
///
/// The deterministic BUILD+SWAP pass is complemented by a few seeded random
/// restarts; the best total distance wins (ties break toward the
/// lexicographically smallest medoid set). Duplicate profiles that collapse
/// a cluster to zero width reduce the returned medoid count, with a
/// warning.
pub fn k_medoids(
    profiles: &[DayProfile],
    k: usize,
    seed: u64,
) -> Result<ClusteredDays, ClusterError> {
    k_medoids_with(profiles, k, seed, DistanceSeries::LoadsOnly)
}

pub fn k_medoids_with(
    profiles: &[DayProfile],
    k: usize,
    seed: u64,
    series: DistanceSeries,
) -> Result<ClusteredDays, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if k > profiles.len() {
        return Err(ClusterError::TooFewProfiles { k, n: profiles.len() });
    }
    validate_profiles(profiles)?;
    let features = feature_matrix(profiles, series);
    let dist = distance_matrix(&features);
    let n = profiles.len();

    let mut best: Option<(f64, Vec<usize>)> = None;
    let consider = |mut medoids: Vec<usize>, best: &mut Option<(f64, Vec<usize>)>| {
        let total = pam_swap(&dist, &mut medoids);
        medoids.sort_unstable();
        let better = match best {
            None => true,
            Some((t, m)) => total < *t - 1e-12 || (total <= *t + 1e-12 && medoids < *m),
        };
        if better {
            *best = Some((total, medoids));
        }
    };
    consider(pam_build(&dist, k), &mut best);
    let mut rng = SplitMix64::new(seed);
    for _ in 0..3 {
        let mut pick: Vec<usize> = Vec::with_capacity(k);
        while pick.len() < k {
            let c = rng.below(n);
            if !pick.contains(&c) {
                pick.push(c);
            }
        }
        consider(pick, &mut best);
    }
    let (total_distance, mut medoids) = best.expect("at least one candidate");

    // Collapse duplicate medoids (identical profiles yield zero distance).
    let mut warnings = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for &m in &medoids {
        if kept.iter().any(|&o| dist[o][m] == 0.0) {
            warnings.push(format!(
                "profile {} duplicates another medoid; clusters merged",
                profiles[m].tag
            ));
        } else {
            kept.push(m);
        }
    }
    if kept.len() < medoids.len() {
        medoids = kept;
    }

    let (assignment, _) = assign(&dist, &medoids);
    let mut counts = vec![0usize; medoids.len()];
    for &a in &assignment {
        counts[a] += 1;
    }
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 * 365.0 / n as f64)
        .collect();

    Ok(ClusteredDays {
        medoids,
        assignment,
        weights,
        total_distance,
        warnings,
    })
}

/// Parses the profile CSV: header `day,step,heat_kwh,cold_kwh[,extra...]`,
/// one row per (day, step). Days keep their first-appearance order; steps
/// are ordered by their numeric value.
pub fn parse_profiles_csv(text: &str) -> Result<Vec<DayProfile>, ClusterError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ClusterError::Csv {
        line: 1,
        message: "empty file".into(),
    })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 4 || columns[0] != "day" || columns[1] != "step" {
        return Err(ClusterError::Csv {
            line: 1,
            message: "expected header day,step,heat_kwh,cold_kwh[,extra...]".into(),
        });
    }
    let n_extra = columns.len() - 4;
    let mut days: Vec<(String, Vec<(usize, f64, f64, Vec<f64>)>)> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(ClusterError::Csv {
                line: idx + 1,
                message: format!("{} fields, expected {}", fields.len(), columns.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64, ClusterError> {
            s.parse::<f64>().map_err(|_| ClusterError::Csv {
                line: idx + 1,
                message: format!("bad {what} value '{s}'"),
            })
        };
        let step = fields[1].parse::<usize>().map_err(|_| ClusterError::Csv {
            line: idx + 1,
            message: format!("bad step '{}'", fields[1]),
        })?;
        let heat = parse(fields[2], "heat_kwh")?;
        let cold = parse(fields[3], "cold_kwh")?;
        let extras = fields[4..]
            .iter()
            .map(|f| parse(f, "extra"))
            .collect::<Result<Vec<f64>, _>>()?;
        let tag = fields[0].to_string();
        let entry = match days.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, rows)) => rows,
            None => {
                days.push((tag, Vec::new()));
                &mut days.last_mut().expect("just pushed").1
            }
        };
        entry.push((step, heat, cold, extras));
    }
    days.into_iter()
        .map(|(tag, mut rows)| {
            rows.sort_by_key(|r| r.0);
            let heat = rows.iter().map(|r| r.1).collect();
            let cold = rows.iter().map(|r| r.2).collect();
            let extra = (0..n_extra)
                .map(|e| rows.iter().map(|r| r.3[e]).collect())
                .collect();
            Ok(DayProfile { tag, heat, cold, extra })
        })
        .collect()
}
