//! Fitting one premium per language from pairwise observations.
//!
//! Each language gets a log-premium `x_L`, with the reference pinned at
//! `x_ref = 0`. The fit runs in two phases:
//!
//! 1. Linear least squares on log ratios, `sum (x_A - x_B - ln p_AB)^2`.
//!    The normal equations are the weighted graph Laplacian of the
//!    observation graph with the reference row and column removed, which is
//!    positive definite whenever the graph is connected.
//! 2. Minimisation of the mean squared error of raw ratios,
//!    `mean (exp(x_A - x_B) - p_AB)^2`, started from phase 1. Each step
//!    solves a damped Gauss-Newton system (or takes the negative gradient)
//!    and backtracks until the Armijo condition holds.
//!
//! [`FitMode::LogLs`] stops after phase 1.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimation::{read_premium_csv, write_premium_csv, PairwiseObservation, PremiumMap};
use crate::tag::LanguageTag;

/// A gauge-fixed premium per language, relative to `reference`.
#[derive(Clone, Debug, PartialEq)]
pub struct PremiumTable {
    reference: LanguageTag,
    premiums: PremiumMap,
    source: String,
}

impl PremiumTable {
    /// Builds a table. The reference must be present with premium exactly
    /// 1.0 and all premiums must be positive and finite.
    pub fn new(
        reference: LanguageTag,
        premiums: PremiumMap,
        source: impl Into<String>,
    ) -> Result<Self> {
        match premiums.get(&reference) {
            Some(&1.0) => {}
            Some(&v) => {
                return Err(Error::InvalidArgument(format!(
                    "reference {reference} has premium {v}, expected 1.0"
                )))
            }
            None => {
                return Err(Error::UnknownLanguage {
                    tag: reference,
                    hint: " (reference is missing from the table)".into(),
                })
            }
        }
        if let Some((tag, v)) = premiums.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "premium of {tag} must be positive and finite, got {v}"
            )));
        }
        Ok(Self {
            reference,
            premiums,
            source: source.into(),
        })
    }

    /// Normalises arbitrary positive values so that `reference` maps to 1.0.
    pub fn from_unnormalized(
        reference: LanguageTag,
        mut premiums: PremiumMap,
        source: impl Into<String>,
    ) -> Result<Self> {
        let scale = *premiums
            .get(&reference)
            .ok_or_else(|| Error::UnknownLanguage {
                tag: reference,
                hint: " (reference is missing from the table)".into(),
            })?;
        for (tag, v) in premiums.iter_mut() {
            *v = if *tag == reference { 1.0 } else { *v / scale };
        }
        Self::new(reference, premiums, source)
    }

    pub fn reference(&self) -> LanguageTag {
        self.reference
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn premiums(&self) -> &PremiumMap {
        &self.premiums
    }

    pub fn len(&self) -> usize {
        self.premiums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.premiums.is_empty()
    }

    pub fn contains(&self, tag: &LanguageTag) -> bool {
        self.premiums.contains_key(tag)
    }

    pub fn get(&self, tag: &LanguageTag) -> Result<f64> {
        self.premiums.get(tag).copied().ok_or_else(|| unknown(*tag))
    }

    /// `BP_{A/B} = BP_A / BP_B`.
    pub fn pairwise_lookup(&self, a: &LanguageTag, b: &LanguageTag) -> Result<f64> {
        let pa = self.get(a)?;
        let pb = self.get(b)?;
        if a == b {
            return Ok(1.0);
        }
        Ok(pa / pb)
    }

    /// Re-expresses every premium relative to `new_reference`.
    pub fn rebase(&self, new_reference: &LanguageTag) -> Result<PremiumTable> {
        let scale = self.get(new_reference)?;
        let premiums = self
            .premiums
            .iter()
            .map(|(tag, v)| {
                let value = if tag == new_reference { 1.0 } else { v / scale };
                (*tag, value)
            })
            .collect();
        Ok(PremiumTable {
            reference: *new_reference,
            premiums,
            source: self.source.clone(),
        })
    }

    /// Size in `to` of content that takes `size_bytes` in `from`:
    /// `round(size_bytes / BP_{from/to})`.
    pub fn convert_size(
        &self,
        size_bytes: u64,
        from: &LanguageTag,
        to: &LanguageTag,
    ) -> Result<u64> {
        Ok(convert_with_premium(
            size_bytes,
            self.pairwise_lookup(from, to)?,
        ))
    }

    /// Divides each proportion by its language's premium and renormalises.
    pub fn rescale_proportions(
        &self,
        proportions: &BTreeMap<LanguageTag, f64>,
    ) -> Result<BTreeMap<LanguageTag, f64>> {
        let missing: Vec<LanguageTag> = proportions
            .keys()
            .filter(|t| !self.contains(t))
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(Error::UnresolvedLanguages(missing));
        }
        let premiums = proportions
            .keys()
            .map(|t| Ok((*t, self.get(t)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        rescale_with(proportions, &premiums)
    }

    /// `# source=... reference=...` comment line, header, one row per language.
    pub fn write_csv<W: Write>(&self, out: W, digits: Option<usize>) -> Result<()> {
        let comment = format!("source={} reference={}", self.source, self.reference);
        write_premium_csv(out, &self.premiums, &[comment], digits)
    }

    pub fn to_csv_string(&self, digits: Option<usize>) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, digits).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Reads a table written by [`PremiumTable::write_csv`]. Without a
    /// `reference=` comment the reference is the unique entry equal to 1.0.
    pub fn read_csv<R: Read>(input: R) -> Result<PremiumTable> {
        let parsed = read_premium_csv(input)?;
        let mut source = String::from("file");
        let mut reference = None;
        for comment in &parsed.comments {
            for field in comment.split_whitespace() {
                if let Some(v) = field.strip_prefix("source=") {
                    source = v.to_string();
                } else if let Some(v) = field.strip_prefix("reference=") {
                    reference = Some(v.parse::<LanguageTag>()?);
                }
            }
        }
        let reference = match reference {
            Some(r) => r,
            None => {
                let ones: Vec<_> = parsed.premiums.iter().filter(|(_, v)| **v == 1.0).collect();
                match ones.as_slice() {
                    [(tag, _)] => **tag,
                    _ => {
                        return Err(Error::Format {
                            row: 1,
                            message: "no reference= comment and no unique premium of 1.0".into(),
                        })
                    }
                }
            }
        };
        PremiumTable::new(reference, parsed.premiums, source)
    }
}

fn unknown(tag: LanguageTag) -> Error {
    Error::UnknownLanguage {
        tag,
        hint: " (not in the premium table; supply parallel text with a known \
               language, or monolingual text and a script type, to predict it)"
            .into(),
    }
}

pub(crate) fn convert_with_premium(size_bytes: u64, premium: f64) -> u64 {
    (size_bytes as f64 / premium).round() as u64
}

pub(crate) fn rescale_with(
    proportions: &BTreeMap<LanguageTag, f64>,
    premiums: &BTreeMap<LanguageTag, f64>,
) -> Result<BTreeMap<LanguageTag, f64>> {
    if proportions.is_empty() {
        return Err(Error::InvalidArgument("no proportions given".into()));
    }
    if let Some((t, p)) = proportions
        .iter()
        .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
    {
        return Err(Error::InvalidArgument(format!("proportion of {t} is {p}")));
    }
    let total: f64 = proportions.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "proportions sum to {total}, expected 1"
        )));
    }
    let scaled: Vec<(LanguageTag, f64)> = proportions
        .iter()
        .map(|(t, p)| (*t, p / premiums[t]))
        .collect();
    let norm: f64 = scaled.iter().map(|(_, v)| v).sum();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("all proportions are zero".into()));
    }
    Ok(scaled.into_iter().map(|(t, v)| (t, v / norm)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FitMode {
    /// Closed-form least squares on log ratios only.
    LogLs,
    /// Log-space initialisation, then minimisation of the raw-ratio MSE.
    #[default]
    RawMse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Descent {
    #[default]
    GaussNewton,
    Gradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weight each observation by its segment count.
    SegmentCount,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub mode: FitMode,
    pub descent: Descent,
    pub weighting: Weighting,
    pub max_iters: usize,
    /// Stop when the infinity norm of the objective gradient drops below this.
    pub grad_tol: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Step shrink factor while backtracking.
    pub backtrack: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mode: FitMode::RawMse,
            descent: Descent::GaussNewton,
            weighting: Weighting::Uniform,
            max_iters: 10_000,
            grad_tol: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub table: PremiumTable,
    /// Raw-ratio MSE at the returned premiums.
    pub objective: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Observation graph over sorted language indices.
struct Problem {
    languages: Vec<LanguageTag>,
    ref_idx: usize,
    /// (index of A, index of B, observed premium, weight)
    edges: Vec<(usize, usize, f64, f64)>,
    weight_sum: f64,
}

impl Problem {
    fn build(
        obs: &[PairwiseObservation],
        reference: &LanguageTag,
        weighting: Weighting,
    ) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::InsufficientData("no pairwise observations".into()));
        }
        let languages: Vec<LanguageTag> = obs
            .iter()
            .flat_map(|o| [o.lang_a, o.lang_b])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index = |t: &LanguageTag| languages.binary_search(t).expect("collected above");
        let ref_idx = languages
            .binary_search(reference)
            .map_err(|_| Error::UnknownLanguage {
                tag: *reference,
                hint: " (reference does not occur in any observation)".into(),
            })?;
        let mut edges = Vec::with_capacity(obs.len());
        for o in obs {
            if !(o.premium.is_finite() && o.premium > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "observation {}/{} has premium {}",
                    o.lang_a, o.lang_b, o.premium
                )));
            }
            let w = match weighting {
                Weighting::Uniform => 1.0,
                Weighting::SegmentCount => o.n_segments as f64,
            };
            edges.push((index(&o.lang_a), index(&o.lang_b), o.premium, w));
        }
        let weight_sum = edges.iter().map(|e| e.3).sum::<f64>();
        if weight_sum <= 0.0 {
            return Err(Error::InsufficientData(
                "observation weights sum to zero".into(),
            ));
        }
        let problem = Self {
            languages,
            ref_idx,
            edges,
            weight_sum,
        };
        problem.check_connected()?;
        Ok(problem)
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.languages.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(a, b, _, _) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<LanguageTag>> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(self.languages[i]);
        }
        if groups.len() > 1 {
            return Err(Error::DisconnectedGraph {
                components: groups.into_values().collect(),
            });
        }
        Ok(())
    }

    /// Free-variable index of language `i`, or None for the reference.
    fn free(&self, i: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match i.cmp(&self.ref_idx) {
            Less => Some(i),
            Equal => None,
            Greater => Some(i - 1),
        }
    }

    fn n_free(&self) -> usize {
        self.languages.len() - 1
    }

    fn expand(&self, free: &DVector<f64>) -> Vec<f64> {
        (0..self.languages.len())
            .map(|i| self.free(i).map_or(0.0, |k| free[k]))
            .collect()
    }

    /// Phase 1: weighted Laplacian solve for log premiums.
    fn log_least_squares(&self) -> DVector<f64> {
        let m = self.n_free();
        let mut lap = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for &(a, b, p, w) in &self.edges {
            let y = p.ln();
            let (fa, fb) = (self.free(a), self.free(b));
            if a == b {
                continue;
            }
            if let Some(i) = fa {
                lap[(i, i)] += w;
                rhs[i] += w * y;
            }
            if let Some(j) = fb {
                lap[(j, j)] += w;
                rhs[j] -= w * y;
            }
            if let (Some(i), Some(j)) = (fa, fb) {
                lap[(i, j)] -= w;
                lap[(j, i)] -= w;
            }
        }
        solve_spd(lap, rhs)
    }

    /// Raw-ratio weighted MSE.
    fn objective(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b, p, w)| {
                let r = (x[a] - x[b]).exp() - p;
                w * r * r
            })
            .sum::<f64>()
            / self.weight_sum
    }

    /// Gradient over free variables and the Gauss-Newton matrix.
    fn gradient_and_gn(&self, x: &[f64], want_gn: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let m = self.n_free();
        let mut g = DVector::<f64>::zeros(m);
        let mut h = want_gn.then(|| DMatrix::<f64>::zeros(m, m));
        let scale = 2.0 / self.weight_sum;
        for &(a, b, p, w) in &self.edges {
            if a == b {
                continue;
            }
            let e = (x[a] - x[b]).exp();
            let r = e - p;
            let d = scale * w * r * e;
            let (fa, fb) = (self.free(a), self.free(b));
            if let Some(i) = fa {
                g[i] += d;
            }
            if let Some(j) = fb {
                g[j] -= d;
            }
            if let Some(h) = h.as_mut() {
                let c = scale * w * e * e;
                if let Some(i) = fa {
                    h[(i, i)] += c;
                }
                if let Some(j) = fb {
                    h[(j, j)] += c;
                }
                if let (Some(i), Some(j)) = (fa, fb) {
                    h[(i, j)] -= c;
                    h[(j, i)] -= c;
                }
            }
        }
        (g, h)
    }

    fn table(
        &self,
        free: &DVector<f64>,
        reference: &LanguageTag,
        source: &str,
    ) -> Result<PremiumTable> {
        let x = self.expand(free);
        let premiums = self
            .languages
            .iter()
            .zip(&x)
            .enumerate()
            .map(|(i, (tag, xi))| (*tag, if i == self.ref_idx { 1.0 } else { xi.exp() }))
            .collect();
        PremiumTable::new(*reference, premiums, source)
    }
}

fn solve_spd(mat: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    if mat.nrows() == 0 {
        return rhs;
    }
    match mat.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => mat
            .lu()
            .solve(&rhs)
            .unwrap_or_else(|| DVector::zeros(rhs.len())),
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Fits one premium per language so that premium ratios reproduce the
/// observed pairwise premiums, with `reference` fixed at 1.0.
pub fn fit_premiums(
    observations: &[PairwiseObservation],
    reference: &LanguageTag,
    config: &FitConfig,
) -> Result<FitResult> {
    let problem = Problem::build(observations, reference, config.weighting)?;
    let mut free = problem.log_least_squares();
    let source = match config.mode {
        FitMode::LogLs => "fitted-log-ls",
        FitMode::RawMse => "fitted-raw-mse",
    };

    if config.mode == FitMode::LogLs || problem.n_free() == 0 {
        let x = problem.expand(&free);
        let (g, _) = problem.gradient_and_gn(&x, false);
        return Ok(FitResult {
            table: problem.table(&free, reference, source)?,
            objective: problem.objective(&x),
            iterations: 0,
            grad_norm: inf_norm(&g),
        });
    }

    let mut x = problem.expand(&free);
    let mut f = problem.objective(&x);
    let mut step_hint = 1.0f64;
    let mut grad_norm = f64::INFINITY;
    for iter in 0..=config.max_iters {
        let (g, h) = problem.gradient_and_gn(&x, config.descent == Descent::GaussNewton);
        grad_norm = inf_norm(&g);
        if grad_norm < config.grad_tol {
            return Ok(FitResult {
                table: problem.table(&free, reference, source)?,
                objective: f,
                iterations: iter,
                grad_norm,
            });
        }
        if iter == config.max_iters {
            break;
        }
        let direction = match h {
            Some(mut h) => {
                let damping = 1e-12 * (h.trace() / h.nrows() as f64).max(f64::MIN_POSITIVE);
                for i in 0..h.nrows() {
                    h[(i, i)] += damping;
                }
                -solve_spd(h, g.clone())
            }
            None => -g.clone(),
        };
        let mut slope = g.dot(&direction);
        let direction = if slope < 0.0 {
            direction
        } else {
            slope = -g.dot(&g);
            -g.clone()
        };
        let mut t = if config.descent == Descent::GaussNewton {
            1.0
        } else {
            step_hint
        };
        let mut accepted = None;
        while t > 1e-20 {
            let trial = &free + &direction * t;
            if trial == free {
                break;
            }
            let xt = problem.expand(&trial);
            let ft = problem.objective(&xt);
            if ft <= f + config.armijo * t * slope {
                accepted = Some((trial, xt, ft));
                break;
            }
            t *= config.backtrack;
        }
        if accepted.is_none() {
            // Objective changes are lost in round-off; settle for a step that
            // lowers the gradient instead.
            let noise = 16.0 * f64::EPSILON * f.abs().max(f64::MIN_POSITIVE);
            let mut t = if config.descent == Descent::GaussNewton {
                1.0
            } else {
                1e6
            };
            while t > 1e-20 {
                let trial = &free + &direction * t;
                if trial == free {
                    break;
                }
                let xt = problem.expand(&trial);
                let ft = problem.objective(&xt);
                if ft <= f + noise {
                    let (gt, _) = problem.gradient_and_gn(&xt, false);
                    if inf_norm(&gt) < grad_norm {
                        accepted = Some((trial, xt, ft));
                        break;
                    }
                }
                t *= config.backtrack;
            }
        }
        match accepted {
            Some((trial, xt, ft)) => {
                free = trial;
                x = xt;
                f = ft;
                step_hint = (t * 2.0).min(1e6);
            }
            // No decrease is representable any more.
            None => break,
        }
    }
    Err(Error::NonConvergence {
        iterations: config.max_iters,
        objective: f,
        grad_norm,
        best: Box::new(problem.table(&free, reference, source)?),
    })
}
