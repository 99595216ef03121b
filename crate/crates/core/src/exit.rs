//! Protograph EXIT analysis under the Gaussian approximation.
//!
//! [`pexit_run`] is the conventional protograph analysis on a base matrix.
//! [`pli_exit_run`] generalizes it to local degree distributions: the
//! variable-node update and the a-posteriori update average over every joint
//! realization of the local degrees in a column, weighting the outgoing edge by
//! its edge-perspective mass. Check nodes stay regular, so their update is the
//! conventional one.
//!
//! Both engines start with all check-to-variable messages at zero and stop as
//! soon as every a-posteriori mutual information reaches `1 - conv_tol`.

use serde::{Deserialize, Serialize};

use crate::capacity::{capacity_ebn0_db, db_to_linear};
use crate::error::{Error, Result};
use crate::jfun::JFunction;
use crate::protograph::{joint_realizations, BaseMatrix, LocalDegreeDistribution, PliProtograph};

/// Iteration cap and convergence tolerance of one EXIT run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSettings {
    pub max_iter: usize,
    pub conv_tol: f64,
}

impl Default for ExitSettings {
    fn default() -> Self {
        Self {
            max_iter: 500,
            conv_tol: 1e-5,
        }
    }
}

/// Mutual-information state after one iteration.
///
/// `ev` and `ec` are row-major over the base matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiState {
    pub ev: Vec<f64>,
    pub ec: Vec<f64>,
    pub app: Vec<f64>,
}

/// Full record of an EXIT run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiTrajectory {
    pub rows: usize,
    pub cols: usize,
    pub channel: Vec<f64>,
    /// States for iterations `1, 2, ...`.
    pub iterations: Vec<MiState>,
    pub converged: bool,
    /// One-based iteration at which convergence was declared.
    pub converged_at: Option<usize>,
    /// Number of inverse J-function calls that hit the saturation clamp.
    pub saturations: u64,
}

impl MiTrajectory {
    pub fn last(&self) -> Option<&MiState> {
        self.iterations.last()
    }
}

/// Outcome of a run without the per-iteration record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub converged: bool,
    pub iterations: usize,
    pub saturations: u64,
}

/// Channel mutual information per column: `J(4 R Eb/N0)`, zero when punctured.
pub fn init_channel_mi(base: &BaseMatrix, ebn0_db: f64) -> Result<Vec<f64>> {
    let rate = base.design_rate()?.value();
    let j = JFunction::global();
    let mu = 4.0 * rate * db_to_linear(ebn0_db);
    Ok((0..base.cols())
        .map(|c| if base.is_punctured(c) { 0.0 } else { j.j(mu) })
        .collect())
}

/// Conventional protograph EXIT analysis at `ebn0_db`.
pub fn pexit_run(base: &BaseMatrix, ebn0_db: f64, settings: &ExitSettings) -> Result<MiTrajectory> {
    let channel = init_channel_mi(base, ebn0_db)?;
    Ok(pexit_run_from_channel(base, &channel, settings))
}

/// Conventional analysis from an explicit channel state.
pub fn pexit_run_from_channel(
    base: &BaseMatrix,
    channel: &[f64],
    settings: &ExitSettings,
) -> MiTrajectory {
    let mut engine = Conventional { base };
    run(
        &mut engine,
        base.rows(),
        base.cols(),
        channel,
        settings,
        true,
    )
    .1
}

/// PLI-EXIT analysis at `ebn0_db`.
pub fn pli_exit_run(
    pli: &PliProtograph,
    ebn0_db: f64,
    settings: &ExitSettings,
) -> Result<MiTrajectory> {
    let channel = init_channel_mi(pli.base(), ebn0_db)?;
    pli_exit_run_from_channel(pli, &channel, settings)
}

/// PLI-EXIT analysis from an explicit channel state.
pub fn pli_exit_run_from_channel(
    pli: &PliProtograph,
    channel: &[f64],
    settings: &ExitSettings,
) -> Result<MiTrajectory> {
    let mut engine = Local::prepare(pli)?;
    Ok(run(&mut engine, pli.rows(), pli.cols(), channel, settings, true).1)
}

/// Which update rules to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisKind {
    Pexit,
    PliExit,
}

impl AnalysisKind {
    /// Conventional analysis for regular protographs, PLI-EXIT otherwise.
    pub fn for_protograph(pli: &PliProtograph) -> Self {
        if pli.is_regular() {
            AnalysisKind::Pexit
        } else {
            AnalysisKind::PliExit
        }
    }
}

/// Reusable analysis of one protograph at varying `Eb/N0`.
pub struct ExitAnalyzer<'a> {
    kind: AnalysisKind,
    pli: &'a PliProtograph,
    local: Option<Local>,
}

impl<'a> ExitAnalyzer<'a> {
    pub fn new(kind: AnalysisKind, pli: &'a PliProtograph) -> Result<Self> {
        pli.ensure_valid()?;
        if kind == AnalysisKind::Pexit && !pli.is_regular() {
            return Err(Error::Domain(
                "conventional analysis needs point-mass distributions".into(),
            ));
        }
        let local = match kind {
            AnalysisKind::Pexit => None,
            AnalysisKind::PliExit => Some(Local::prepare(pli)?),
        };
        Ok(Self { kind, pli, local })
    }

    pub fn kind(&self) -> AnalysisKind {
        self.kind
    }

    /// Runs to convergence or the iteration cap without recording states.
    pub fn probe(&mut self, ebn0_db: f64, settings: &ExitSettings) -> Result<Probe> {
        let base = self.pli.base();
        let channel = init_channel_mi(base, ebn0_db)?;
        let (probe, _) = match self.local.as_mut() {
            Some(local) => run(local, base.rows(), base.cols(), &channel, settings, false),
            None => run(
                &mut Conventional { base },
                base.rows(),
                base.cols(),
                &channel,
                settings,
                false,
            ),
        };
        Ok(probe)
    }
}

/// Bisection settings for [`find_threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub lo_db: f64,
    pub hi_db: f64,
    pub precision_db: f64,
    pub exit: ExitSettings,
    /// Widest bracket auto-expansion may reach, in dB on either side.
    pub expand_limit_db: f64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            lo_db: -1.0,
            hi_db: 3.0,
            precision_db: 0.005,
            exit: ExitSettings::default(),
            expand_limit_db: 10.0,
        }
    }
}

/// Estimated iterative decoding threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold_db: f64,
    /// Half-width of the final bracket.
    pub precision_db: f64,
    /// Largest `Eb/N0` seen to fail.
    pub lo_db: f64,
    /// Smallest `Eb/N0` seen to converge.
    pub hi_db: f64,
    /// Iterations needed at `hi_db`.
    pub converged_iterations: usize,
    pub evaluations: usize,
    pub saturations: u64,
}

/// Bisects `Eb/N0` until the bracket is at most `2 * precision_db` wide.
///
/// The bracket is widened in doubling steps when the analysis converges at
/// `lo_db` or fails at `hi_db`, up to `expand_limit_db` beyond the original ends.
pub fn find_threshold(
    kind: AnalysisKind,
    pli: &PliProtograph,
    search: &ThresholdSearch,
) -> Result<ThresholdResult> {
    if !(search.precision_db > 0.0) || !(search.lo_db < search.hi_db) {
        return Err(Error::Domain(format!(
            "bad threshold search: bracket [{}, {}], precision {}",
            search.lo_db, search.hi_db, search.precision_db
        )));
    }
    let mut analyzer = ExitAnalyzer::new(kind, pli)?;
    let settings = search.exit;
    let mut evaluations = 0;
    let mut saturations = 0;
    let mut probe = |db: f64| -> Result<Probe> {
        let p = analyzer.probe(db, &settings)?;
        evaluations += 1;
        saturations += p.saturations;
        Ok(p)
    };

    let (mut lo, mut hi) = (search.lo_db, search.hi_db);
    let mut step = hi - lo;
    while probe(lo)?.converged {
        hi = lo;
        lo -= step;
        step *= 2.0;
        if lo < search.lo_db - search.expand_limit_db {
            return Err(Error::NoBracket(format!(
                "analysis still converges at {lo:.3} dB"
            )));
        }
    }
    let mut step = hi - lo;
    let mut top = probe(hi)?;
    while !top.converged {
        lo = hi;
        hi += step;
        step *= 2.0;
        if hi > search.hi_db + search.expand_limit_db {
            return Err(Error::NoBracket(format!(
                "analysis still fails at {hi:.3} dB"
            )));
        }
        top = probe(hi)?;
    }
    while hi - lo > 2.0 * search.precision_db {
        let mid = 0.5 * (lo + hi);
        let p = probe(mid)?;
        if p.converged {
            hi = mid;
            top = p;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        threshold_db: 0.5 * (lo + hi),
        precision_db: 0.5 * (hi - lo),
        lo_db: lo,
        hi_db: hi,
        converged_iterations: top.iterations,
        evaluations,
        saturations,
    })
}

/// Serialized threshold report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub code: String,
    pub analysis: AnalysisKind,
    pub rate: f64,
    pub threshold_db: f64,
    pub capacity_db: f64,
    pub gap_to_capacity_db: f64,
    pub search: ThresholdSearch,
    pub result: ThresholdResult,
}

impl ThresholdReport {
    /// Runs the analysis matching `pli` and relates the threshold to capacity.
    pub fn compute(
        code: impl Into<String>,
        pli: &PliProtograph,
        search: &ThresholdSearch,
    ) -> Result<Self> {
        let analysis = AnalysisKind::for_protograph(pli);
        let rate = pli.design_rate()?.value();
        let capacity_db = capacity_ebn0_db(rate)?;
        let result = find_threshold(analysis, pli, search)?;
        Ok(Self {
            code: code.into(),
            analysis,
            rate,
            threshold_db: result.threshold_db,
            capacity_db,
            gap_to_capacity_db: result.threshold_db - capacity_db,
            search: *search,
            result,
        })
    }
}

trait Updates {
    /// Variable-to-check update from the previous check-to-variable state.
    fn variable_update(&mut self, jinv_ch: &[f64], ec: &[f64], ev: &mut [f64], sat: &mut u64);
    /// A-posteriori update from the current check-to-variable state.
    fn app_update(&mut self, jinv_ch: &[f64], ec: &[f64], app: &mut [f64], sat: &mut u64);
    fn base(&self) -> &BaseMatrix;
}

fn inv(j: &JFunction, info: f64, sat: &mut u64) -> f64 {
    let (mu, saturated) = j.inv_saturating(info);
    *sat += saturated as u64;
    mu
}

fn run<U: Updates>(
    engine: &mut U,
    rows: usize,
    cols: usize,
    channel: &[f64],
    settings: &ExitSettings,
    record: bool,
) -> (Probe, MiTrajectory) {
    let j = JFunction::global();
    let mut sat = 0u64;
    let jinv_ch: Vec<f64> = channel.iter().map(|&c| inv(j, c, &mut sat)).collect();
    let mut ec = vec![0.0; rows * cols];
    let mut ev = vec![0.0; rows * cols];
    let mut app = vec![0.0; cols];
    let mut states = Vec::new();
    let mut converged_at = None;
    let mut iterations = 0;
    for l in 1..=settings.max_iter.max(1) {
        iterations = l;
        engine.variable_update(&jinv_ch, &ec, &mut ev, &mut sat);
        check_update(j, engine.base(), &ev, &mut ec, &mut sat);
        engine.app_update(&jinv_ch, &ec, &mut app, &mut sat);
        if record {
            states.push(MiState {
                ev: ev.clone(),
                ec: ec.clone(),
                app: app.clone(),
            });
        }
        let worst = app.iter().copied().fold(f64::INFINITY, f64::min);
        if worst >= 1.0 - settings.conv_tol {
            converged_at = Some(l);
            break;
        }
    }
    let probe = Probe {
        converged: converged_at.is_some(),
        iterations,
        saturations: sat,
    };
    let traj = MiTrajectory {
        rows,
        cols,
        channel: channel.to_vec(),
        iterations: states,
        converged: converged_at.is_some(),
        converged_at,
        saturations: sat,
    };
    (probe, traj)
}

/// Check-to-variable update, shared by both engines.
fn check_update(j: &JFunction, base: &BaseMatrix, ev: &[f64], ec: &mut [f64], sat: &mut u64) {
    let cols = base.cols();
    let mut a = vec![0.0; cols];
    for i in 0..base.rows() {
        let mut total = 0.0;
        for t in 0..cols {
            let d = base.entry(i, t);
            if d > 0 {
                a[t] = inv(j, 1.0 - ev[i * cols + t], sat);
                total += d as f64 * a[t];
            }
        }
        for c in 0..cols {
            ec[i * cols + c] = if base.entry(i, c) > 0 {
                1.0 - j.j((total - a[c]).max(0.0))
            } else {
                0.0
            };
        }
    }
}

struct Conventional<'a> {
    base: &'a BaseMatrix,
}

impl Updates for Conventional<'_> {
    fn variable_update(&mut self, jinv_ch: &[f64], ec: &[f64], ev: &mut [f64], sat: &mut u64) {
        let j = JFunction::global();
        let (rows, cols) = (self.base.rows(), self.base.cols());
        let mut a = vec![0.0; rows];
        for c in 0..cols {
            let mut total = 0.0;
            for s in 0..rows {
                a[s] = inv(j, ec[s * cols + c], sat);
                total += self.base.entry(s, c) as f64 * a[s];
            }
            for i in 0..rows {
                ev[i * cols + c] = if self.base.entry(i, c) > 0 {
                    j.j((total - a[i] + jinv_ch[c]).max(0.0))
                } else {
                    0.0
                };
            }
        }
    }

    fn app_update(&mut self, jinv_ch: &[f64], ec: &[f64], app: &mut [f64], sat: &mut u64) {
        let j = JFunction::global();
        let (rows, cols) = (self.base.rows(), self.base.cols());
        for c in 0..cols {
            let mut total = 0.0;
            for s in 0..rows {
                total += self.base.entry(s, c) as f64 * inv(j, ec[s * cols + c], sat);
            }
            app[c] = j.j(jinv_ch[c] + total);
        }
    }

    fn base(&self) -> &BaseMatrix {
        self.base
    }
}

/// Joint realizations of one column, flattened.
struct ColumnRealizations {
    /// Degree of each nonzero row of the column, `rows.len()` per realization.
    degrees: Vec<f64>,
    weights: Vec<f64>,
}

impl ColumnRealizations {
    fn collect(dists: &[&LocalDegreeDistribution], edge: Option<usize>) -> Result<Self> {
        let mut degrees = Vec::new();
        let mut weights = Vec::new();
        for r in joint_realizations(dists, edge)? {
            degrees.extend(r.degrees.iter().map(|&k| k as f64));
            weights.push(r.weight);
        }
        Ok(Self { degrees, weights })
    }
}

struct LocalColumn {
    /// Rows with a nonzero entry in this column.
    rows: Vec<usize>,
    /// Realizations weighted for the outgoing edge of each row in `rows`.
    outgoing: Vec<ColumnRealizations>,
    /// Realizations weighted by the node-perspective masses only.
    node: ColumnRealizations,
}

struct Local {
    base: BaseMatrix,
    columns: Vec<LocalColumn>,
    scratch: Vec<f64>,
}

impl Local {
    fn prepare(pli: &PliProtograph) -> Result<Self> {
        pli.ensure_valid()?;
        let base = pli.base().clone();
        let mut columns = Vec::with_capacity(base.cols());
        for c in 0..base.cols() {
            let rows: Vec<usize> = (0..base.rows()).filter(|&r| base.entry(r, c) > 0).collect();
            let dists: Vec<&LocalDegreeDistribution> = rows
                .iter()
                .map(|&r| pli.dist(r, c).expect("validated"))
                .collect();
            let outgoing = (0..rows.len())
                .map(|pos| ColumnRealizations::collect(&dists, Some(pos)))
                .collect::<Result<Vec<_>>>()?;
            let node = ColumnRealizations::collect(&dists, None)?;
            columns.push(LocalColumn {
                rows,
                outgoing,
                node,
            });
        }
        Ok(Self {
            scratch: vec![0.0; base.rows()],
            base,
            columns,
        })
    }
}

impl Updates for Local {
    fn variable_update(&mut self, jinv_ch: &[f64], ec: &[f64], ev: &mut [f64], sat: &mut u64) {
        let j = JFunction::global();
        let cols = self.base.cols();
        ev.iter_mut().for_each(|v| *v = 0.0);
        for (c, col) in self.columns.iter().enumerate() {
            let n = col.rows.len();
            let a = &mut self.scratch[..n];
            for (slot, &s) in a.iter_mut().zip(&col.rows) {
                *slot = inv(j, ec[s * cols + c], sat);
            }
            for (pos, &i) in col.rows.iter().enumerate() {
                let real = &col.outgoing[pos];
                let offset = jinv_ch[c] - a[pos];
                let mut acc = 0.0;
                for (w, ks) in real.weights.iter().zip(real.degrees.chunks_exact(n)) {
                    let incoming: f64 = ks.iter().zip(a.iter()).map(|(k, x)| k * x).sum();
                    acc += w * j.j((offset + incoming).max(0.0));
                }
                ev[i * cols + c] = acc.clamp(0.0, 1.0);
            }
        }
    }

    fn app_update(&mut self, jinv_ch: &[f64], ec: &[f64], app: &mut [f64], sat: &mut u64) {
        let j = JFunction::global();
        let cols = self.base.cols();
        for (c, col) in self.columns.iter().enumerate() {
            let n = col.rows.len();
            let a = &mut self.scratch[..n];
            for (slot, &s) in a.iter_mut().zip(&col.rows) {
                *slot = inv(j, ec[s * cols + c], sat);
            }
            let mut acc = 0.0;
            for (w, ks) in col
                .node
                .weights
                .iter()
                .zip(col.node.degrees.chunks_exact(n))
            {
                let incoming: f64 = ks.iter().zip(a.iter()).map(|(k, x)| k * x).sum();
                acc += w * j.j(jinv_ch[c] + incoming);
            }
            app[c] = acc.clamp(0.0, 1.0);
        }
    }

    fn base(&self) -> &BaseMatrix {
        &self.base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes;
    use crate::protograph::make_regular;

    #[test]
    fn perfect_channel_converges_at_first_iteration() {
        let base = codes::ar4ja_base();
        let traj = pexit_run_from_channel(&base, &[1.0; 5], &ExitSettings::default());
        assert!(traj.converged);
        assert_eq!(traj.converged_at, Some(1));
    }

    #[test]
    fn punctured_column_gets_no_channel_information() {
        let ch = init_channel_mi(&codes::ar4ja_base(), 1.0).unwrap();
        assert_eq!(ch[1], 0.0);
        assert!(ch[0] > 0.5);
    }

    #[test]
    fn vanishing_snr_gives_zero_channel_information() {
        let ch = init_channel_mi(&codes::ar4ja_base(), f64::NEG_INFINITY).unwrap();
        assert!(ch.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn zero_entries_have_zero_check_messages() {
        let base = codes::ar4ja_base();
        let traj = pexit_run(
            &base,
            0.5,
            &ExitSettings {
                max_iter: 20,
                conv_tol: 1e-5,
            },
        )
        .unwrap();
        for st in &traj.iterations {
            for i in 0..3 {
                for c in 0..5 {
                    if base.entry(i, c) == 0 {
                        assert_eq!(st.ec[i * 5 + c], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn pli_engine_on_regular_matches_conventional() {
        let base = codes::ar4ja_base();
        let pli = make_regular(&base);
        let s = ExitSettings {
            max_iter: 50,
            conv_tol: 1e-5,
        };
        let a = pexit_run(&base, 0.5, &s).unwrap();
        let b = pli_exit_run(&pli, 0.5, &s).unwrap();
        assert_eq!(a.iterations.len(), b.iterations.len());
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            for (p, q) in
                x.ev.iter()
                    .chain(&x.ec)
                    .chain(&x.app)
                    .zip(y.ev.iter().chain(&y.ec).chain(&y.app))
            {
                assert!((p - q).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn pexit_kind_rejects_irregular() {
        let pli = codes::c1();
        assert!(ExitAnalyzer::new(AnalysisKind::Pexit, &pli).is_err());
        assert_eq!(AnalysisKind::for_protograph(&pli), AnalysisKind::PliExit);
    }

    #[test]
    fn bad_search_rejected() {
        let pli = make_regular(&codes::ar4ja_base());
        let s = ThresholdSearch {
            lo_db: 1.0,
            hi_db: 0.0,
            ..Default::default()
        };
        assert!(find_threshold(AnalysisKind::Pexit, &pli, &s).is_err());
    }
}
