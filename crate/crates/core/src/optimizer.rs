//! Exhaustive search over generator-cell port positions.
//!
//! For every combination of `N_ξ` candidate positions the ports are
//! replicated over the group, every realizable species is driven with its
//! optimal generator amplitudes at every frequency, and the combination is
//! scored by the RMS of the resulting TARC values over species and frequency.

use std::cmp::Ordering;

use crate::em::{assemble_z0, radiation_part, FrequencyGrid, ImpedanceSystem, OperatorMatrix};
use crate::geometry::{EdgeBasisSet, MappingMatrix};
use crate::point_group::{PointGroup, Species};
use crate::ports::{build_port_configuration, optimal_kappa, port_network, tarc, tarc_rms, PortConfiguration};
use crate::{par, CVector, Error, Result};

/// Default cap on `combinations × frequencies`.
pub const DEFAULT_BUDGET: u128 = 100_000;

/// Operators needed by every TARC evaluation at one frequency.
#[derive(Debug, Clone)]
pub struct FrequencyOperators {
    pub ka: f64,
    /// Factorised `Z = Z0 + Rρ`.
    pub system: ImpedanceSystem,
    pub r0: OperatorMatrix,
}

impl FrequencyOperators {
    pub fn assemble(basis: &EdgeBasisSet, ka: f64, loss: Option<&OperatorMatrix>) -> Result<Self> {
        let mut z = assemble_z0(basis, ka);
        let r0 = radiation_part(&z);
        if let Some(l) = loss {
            z.data += &l.data;
        }
        Ok(FrequencyOperators { ka, system: ImpedanceSystem::new(z)?, r0 })
    }
}

/// A candidate port position: its user-facing label and basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub label: usize,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub candidates: Vec<Candidate>,
    pub n_xi: usize,
    pub grid: FrequencyGrid,
    /// Species to drive; `None` means every species of the group.
    pub species: Option<Vec<Species>>,
    pub z0_line: f64,
    /// Uniform surface resistivity operator added to `Z0`, if any.
    pub loss: Option<OperatorMatrix>,
    /// Cap on `combinations × frequencies`.
    pub budget: u128,
}

/// One species driven at one frequency.
#[derive(Debug, Clone)]
pub struct StateSample {
    pub species: Species,
    pub t: f64,
    pub kappa: CVector,
}

#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub labels: Vec<usize>,
    pub positions: Vec<usize>,
    pub n_ports: usize,
    /// Species that the layout can excite (and that were requested).
    pub species: Vec<Species>,
    /// Fewer states than requested: some position sits on a symmetry element.
    pub reduced: bool,
    /// `samples[f][s]`, frequencies in grid order, species as in `species`.
    pub samples: Vec<Vec<StateSample>>,
    pub t_rms: f64,
}

impl ScanEntry {
    /// RMS over species at frequency `f`.
    pub fn t_rms_at(&self, f: usize) -> f64 {
        let t: Vec<f64> = self.samples[f].iter().map(|s| s.t).collect();
        tarc_rms(&t).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub ka: Vec<f64>,
    /// Layouts reaching every requested species first, then ascending in
    /// `t_rms`, ties broken by labels.
    pub ranked: Vec<ScanEntry>,
}

impl ScanResult {
    pub fn best(&self) -> &ScanEntry {
        &self.ranked[0]
    }
}

fn rank(a: (f64, &[usize]), b: (f64, &[usize])) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

/// Layouts with fewer states are not comparable on `t_rms` alone, so they
/// rank after every full layout.
fn rank_entries(a: &ScanEntry, b: &ScanEntry) -> Ordering {
    a.reduced.cmp(&b.reduced).then_with(|| rank((a.t_rms, &a.labels), (b.t_rms, &b.labels)))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] != i + n - k) else { break };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
    out
}

/// Shared inputs of a search.
#[derive(Debug, Clone, Copy)]
pub struct ScanContext<'a> {
    pub basis: &'a EdgeBasisSet,
    pub group: &'a PointGroup,
    pub maps: &'a [MappingMatrix],
}

/// Single-port search (`N_ξ = 1`).
pub fn scan_single(ctx: ScanContext<'_>, spec: &ScanSpec) -> Result<ScanResult> {
    if spec.n_xi != 1 {
        return Err(Error::Invalid("single-position scan needs N_xi = 1".into()));
    }
    scan(ctx, spec)
}

/// Multi-port search (`N_ξ > 1`) with optimal amplitudes per species.
pub fn scan_combinations(ctx: ScanContext<'_>, spec: &ScanSpec) -> Result<ScanResult> {
    if spec.n_xi < 2 {
        return Err(Error::Invalid("combination scan needs N_xi > 1".into()));
    }
    scan(ctx, spec)
}

/// Exhaustive search for any `N_ξ`.
pub fn scan(ctx: ScanContext<'_>, spec: &ScanSpec) -> Result<ScanResult> {
    let n = spec.candidates.len();
    if n == 0 || spec.n_xi == 0 {
        return Err(Error::EmptySet);
    }
    if spec.n_xi > n {
        return Err(Error::Invalid(format!("N_xi = {} exceeds the {} candidates", spec.n_xi, n)));
    }
    let count = binomial(n, spec.n_xi) * spec.grid.len() as u128;
    if count > spec.budget {
        return Err(Error::CombinatorialBudgetExceeded(count, spec.budget));
    }
    let layouts: Vec<Vec<Candidate>> =
        combinations(n, spec.n_xi).into_iter().map(|c| c.into_iter().map(|i| spec.candidates[i]).collect()).collect();
    let mut entries = evaluate_layouts(ctx, spec, &layouts)?;
    entries.sort_by(rank_entries);
    Ok(ScanResult { ka: spec.grid.ka.clone(), ranked: entries })
}

/// Score fixed layouts under the scan fitness, in the given order.
pub fn evaluate_layouts(ctx: ScanContext<'_>, spec: &ScanSpec, layouts: &[Vec<Candidate>]) -> Result<Vec<ScanEntry>> {
    let requested = spec.species.clone().unwrap_or_else(|| ctx.group.species());
    let configs: Vec<(PortConfiguration, Vec<Species>)> = layouts
        .iter()
        .map(|layout| {
            let pos: Vec<usize> = layout.iter().map(|c| c.index).collect();
            let cfg = build_port_configuration(ctx.group, ctx.maps, &pos, spec.z0_line)?;
            let live: Vec<Species> = cfg.realizable().into_iter().filter(|s| requested.contains(s)).collect();
            if live.is_empty() {
                return Err(Error::Invalid(format!(
                    "layout {:?} excites none of the requested species",
                    layout.iter().map(|c| c.label).collect::<Vec<_>>()
                )));
            }
            Ok((cfg, live))
        })
        .collect::<Result<_>>()?;

    // frequency-major: operators are assembled and factorised once per sample
    let per_freq: Vec<Result<Vec<Vec<StateSample>>>> = par::map_indexed(spec.grid.len(), |f| {
        let ops = FrequencyOperators::assemble(ctx.basis, spec.grid.ka[f], spec.loss.as_ref())?;
        let rows: Vec<Result<Vec<StateSample>>> = par::map_indexed(configs.len(), |c| {
            let (cfg, live) = &configs[c];
            evaluate_states(cfg, live, &ops)
        });
        rows.into_iter().collect()
    });
    let per_freq: Vec<Vec<Vec<StateSample>>> = per_freq.into_iter().collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(configs.len());
    for (c, (cfg, live)) in configs.into_iter().enumerate() {
        let samples: Vec<Vec<StateSample>> = per_freq.iter().map(|f| f[c].clone()).collect();
        let all: Vec<f64> = samples.iter().flatten().map(|s| s.t).collect();
        entries.push(ScanEntry {
            labels: layouts[c].iter().map(|x| x.label).collect(),
            positions: cfg.positions.clone(),
            n_ports: cfg.n_ports(),
            reduced: live.len() < requested.len(),
            species: live,
            samples,
            t_rms: tarc_rms(&all)?,
        });
    }
    Ok(entries)
}

/// Optimal-amplitude TARC of every listed species.
pub fn evaluate_states(
    cfg: &PortConfiguration,
    species: &[Species],
    ops: &FrequencyOperators,
) -> Result<Vec<StateSample>> {
    let net = port_network(cfg, &ops.system);
    species
        .iter()
        .map(|&s| {
            let (kappa, t) = optimal_kappa(s, cfg, &net, &ops.r0)?;
            Ok(StateSample { species: s, t, kappa })
        })
        .collect()
}

/// Best layout at each frequency, by the RMS over species at that frequency.
/// Layouts with a reduced state set only compete when no full layout exists.
pub fn per_frequency_best(result: &ScanResult) -> Vec<(f64, Vec<usize>, f64)> {
    let any_full = result.ranked.iter().any(|e| !e.reduced);
    (0..result.ka.len())
        .map(|f| {
            let best = result
                .ranked
                .iter()
                .filter(|e| !(any_full && e.reduced))
                .map(|e| (e.t_rms_at(f), &e.labels))
                .min_by(|a, b| rank((a.0, a.1), (b.0, b.1)))
                .expect("scan results are nonempty");
            (result.ka[f], best.1.clone(), best.0)
        })
        .collect()
}

/// A literature layout: fixed positions and, optionally, explicit port
/// voltage patterns (one `N_p` vector per state) instead of optimal amplitudes.
#[derive(Debug, Clone)]
pub struct ReferenceLayout {
    pub positions: Vec<Candidate>,
    pub voltages: Option<Vec<CVector>>,
}

#[derive(Debug, Clone)]
pub struct ReferenceScore {
    pub entry: ScanEntry,
    /// RMS of the explicit voltage patterns, when given.
    pub pattern_t_rms: Option<f64>,
}

pub fn reference_comparison(ctx: ScanContext<'_>, spec: &ScanSpec, layout: &ReferenceLayout) -> Result<ReferenceScore> {
    if layout.positions.is_empty() {
        return Err(Error::EmptySet);
    }
    let entry = evaluate_layouts(ctx, spec, std::slice::from_ref(&layout.positions))?.remove(0);
    let pattern_t_rms = match &layout.voltages {
        None => None,
        Some(patterns) => {
            let pos: Vec<usize> = layout.positions.iter().map(|c| c.index).collect();
            let cfg = build_port_configuration(ctx.group, ctx.maps, &pos, spec.z0_line)?;
            if patterns.is_empty() || patterns.iter().any(|v| v.len() != cfg.n_ports()) {
                return Err(Error::Dimension(format!("voltage patterns must have {} entries", cfg.n_ports())));
            }
            let per_freq: Vec<Result<Vec<f64>>> = par::map_indexed(spec.grid.len(), |f| {
                let ops = FrequencyOperators::assemble(ctx.basis, spec.grid.ka[f], spec.loss.as_ref())?;
                let net = port_network(&cfg, &ops.system);
                patterns.iter().map(|v| tarc(v, &net, &ops.r0)).collect()
            });
            let all: Vec<f64> = per_freq.into_iter().collect::<Result<Vec<_>>>()?.concat();
            Some(tarc_rms(&all)?)
        }
    };
    Ok(ReferenceScore { entry, pattern_t_rms })
}
