//! Exact interventional effects on small discrete DAGs by full enumeration.
//!
//! Node names carry their role: `A{t}`, `M{t}` and `L{t}` with `t >= 1` are
//! the treatment, mediator and confounder of intervened wave `t`; the same
//! letters with `t = 0`, and any other name, are baseline variables; `Y` is
//! the binary outcome and must be the last node.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest joint state space (product of all non-outcome cardinalities) that
/// will be enumerated.
pub const MAX_STATES: f64 = 1e6;
pub const MAX_WAVES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("node '{node}': {reason}")]
    InvalidNode { node: String, reason: String },
    #[error("node '{node}', row {row}: probabilities sum to {sum}")]
    RowSum { node: String, row: usize, sum: f64 },
    #[error("node '{node}', row {row}: probability {value} outside (0, 1)")]
    Positivity { node: String, row: usize, value: f64 },
    #[error("dgp structure: {0}")]
    Structure(String),
    #[error("state space of {0:.3e} exceeds the enumeration limit")]
    TooLarge(f64),
    #[error("regime has {got} entries, dgp has {expected} intervened waves")]
    RegimeLength { expected: usize, got: usize },
    #[error("expected outcome is zero, log contrast undefined")]
    LogDomain,
}

/// One variable with its conditional probability table. Row `r` of `cpt`
/// corresponds to the parent configuration whose mixed-radix index (first
/// parent most significant) is `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptNode {
    pub name: String,
    pub cardinality: usize,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

impl CptNode {
    /// Binary node with `P(X=1 | pa) = sigmoid(intercept + Σ coef_j pa_j)`,
    /// parent values taken as their state indices.
    pub fn logistic(name: &str, parents: &[(&str, usize)], intercept: f64, coefs: &[f64]) -> Self {
        Self::binary_from(name, parents, |pa| {
            let eta = intercept + pa.iter().zip(coefs).map(|(&v, c)| v as f64 * c).sum::<f64>();
            1.0 / (1.0 + (-eta).exp())
        })
    }

    /// Binary node with `P(X=1 | pa) = exp(intercept + Σ coef_j pa_j)`.
    pub fn log_linear(name: &str, parents: &[(&str, usize)], intercept: f64, coefs: &[f64]) -> Self {
        Self::binary_from(name, parents, |pa| {
            (intercept + pa.iter().zip(coefs).map(|(&v, c)| v as f64 * c).sum::<f64>()).exp()
        })
    }

    /// Binary node with `P(X=1 | pa) = p1(pa)`.
    pub fn binary_from(name: &str, parents: &[(&str, usize)], p1: impl Fn(&[usize]) -> f64) -> Self {
        let cards: Vec<usize> = parents.iter().map(|p| p.1).collect();
        let rows: usize = cards.iter().product();
        let cpt = (0..rows)
            .map(|r| {
                let p = p1(&unrank(r, &cards));
                vec![1.0 - p, p]
            })
            .collect();
        Self { name: name.to_string(), cardinality: 2, parents: parents.iter().map(|p| p.0.to_string()).collect(), cpt }
    }
}

fn unrank(mut r: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = r % c;
        r /= c;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Baseline,
    Treatment(usize),
    Mediator(usize),
    Confounder(usize),
    Outcome,
}

impl Role {
    pub fn of(name: &str) -> Role {
        if name == "Y" {
            return Role::Outcome;
        }
        let mut chars = name.chars();
        let head = chars.next();
        let rest = chars.as_str();
        let wave = if rest.is_empty() { None } else { rest.parse::<usize>().ok() };
        match (head, wave) {
            (_, Some(0)) | (_, None) => Role::Baseline,
            (Some('A'), Some(t)) => Role::Treatment(t),
            (Some('M'), Some(t)) => Role::Mediator(t),
            (Some('L'), Some(t)) => Role::Confounder(t),
            _ => Role::Baseline,
        }
    }
}

/// Serializable description of a discrete DGP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub nodes: Vec<CptNode>,
    /// Numeric value of each mediator state; defaults to the state index.
    #[serde(default)]
    pub mediator_values: Option<Vec<f64>>,
}

/// A validated discrete DGP.
#[derive(Debug, Clone)]
pub struct DiscreteDgp {
    spec: DgpSpec,
    roles: Vec<Role>,
    parent_idx: Vec<Vec<usize>>,
    cards: Vec<usize>,
    n_waves: usize,
    treatment_idx: Vec<usize>,
    mediator_idx: Vec<usize>,
    baseline_idx: Vec<usize>,
    outcome_idx: usize,
}

impl DiscreteDgp {
    pub fn new(spec: DgpSpec) -> Result<Self, OracleError> {
        let n = spec.nodes.len();
        let mut seen = HashSet::new();
        let mut parent_idx = Vec::with_capacity(n);
        let cards: Vec<usize> = spec.nodes.iter().map(|node| node.cardinality).collect();
        let roles: Vec<Role> = spec.nodes.iter().map(|node| Role::of(&node.name)).collect();
        for (i, node) in spec.nodes.iter().enumerate() {
            let bad = |reason: String| OracleError::InvalidNode { node: node.name.clone(), reason };
            if !seen.insert(node.name.as_str()) {
                return Err(bad("duplicate name".into()));
            }
            if node.cardinality < 2 {
                return Err(bad("cardinality must be at least 2".into()));
            }
            let mut pa = Vec::with_capacity(node.parents.len());
            for p in &node.parents {
                let j = spec.nodes[..i]
                    .iter()
                    .position(|m| &m.name == p)
                    .ok_or_else(|| bad(format!("parent '{p}' is not an earlier node")))?;
                if roles[i] == Role::Baseline && roles[j] != Role::Baseline {
                    return Err(bad(format!("baseline node cannot depend on '{p}'")));
                }
                pa.push(j);
            }
            let rows: usize = pa.iter().map(|&j| cards[j]).product();
            if node.cpt.len() != rows {
                return Err(bad(format!("cpt has {} rows, parents imply {rows}", node.cpt.len())));
            }
            for (r, row) in node.cpt.iter().enumerate() {
                if row.len() != node.cardinality {
                    return Err(bad(format!("row {r} has {} entries", row.len())));
                }
                if let Some(&v) = row.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                    return Err(OracleError::Positivity { node: node.name.clone(), row: r, value: v });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(OracleError::RowSum { node: node.name.clone(), row: r, sum });
                }
            }
            if matches!(roles[i], Role::Treatment(_) | Role::Outcome) && node.cardinality != 2 {
                return Err(bad("treatments and the outcome must be binary".into()));
            }
            parent_idx.push(pa);
        }
        let outcome_idx = match roles.iter().position(|r| *r == Role::Outcome) {
            Some(i) if i == n - 1 => i,
            Some(_) => return Err(OracleError::Structure("Y must be the last node".into())),
            None => return Err(OracleError::Structure("no outcome node Y".into())),
        };
        let n_waves = roles
            .iter()
            .filter_map(|r| match r {
                Role::Treatment(t) | Role::Mediator(t) | Role::Confounder(t) => Some(*t),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        if n_waves == 0 || n_waves > MAX_WAVES {
            return Err(OracleError::Structure(format!("need 1..={MAX_WAVES} intervened waves, found {n_waves}")));
        }
        let find = |role: Role| -> Result<usize, OracleError> {
            roles.iter().position(|r| *r == role).ok_or_else(|| OracleError::Structure(format!("missing {role:?}")))
        };
        let treatment_idx = (1..=n_waves).map(|t| find(Role::Treatment(t))).collect::<Result<Vec<_>, _>>()?;
        let mediator_idx = (1..=n_waves).map(|t| find(Role::Mediator(t))).collect::<Result<Vec<_>, _>>()?;
        let m_card = cards[mediator_idx[0]];
        if mediator_idx.iter().any(|&i| cards[i] != m_card) {
            return Err(OracleError::Structure("all mediators must share one cardinality".into()));
        }
        if let Some(v) = &spec.mediator_values {
            if v.len() != m_card || v.iter().any(|x| !x.is_finite()) {
                return Err(OracleError::Structure("mediator_values must give one finite value per state".into()));
            }
        }
        let states: f64 = cards[..outcome_idx].iter().map(|&c| c as f64).product();
        if states > MAX_STATES {
            return Err(OracleError::TooLarge(states));
        }
        let baseline_idx = (0..n).filter(|&i| roles[i] == Role::Baseline).collect();
        Ok(Self { spec, roles, parent_idx, cards, n_waves, treatment_idx, mediator_idx, baseline_idx, outcome_idx })
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    pub fn n_waves(&self) -> usize {
        self.n_waves
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.spec.nodes.iter().position(|n| n.name == name)
    }

    pub fn mediator_cardinality(&self) -> usize {
        self.cards[self.mediator_idx[0]]
    }

    pub fn mediator_value(&self, state: usize) -> f64 {
        self.spec.mediator_values.as_ref().map_or(state as f64, |v| v[state])
    }

    pub fn treatment_nodes(&self) -> &[usize] {
        &self.treatment_idx
    }

    pub fn mediator_nodes(&self) -> &[usize] {
        &self.mediator_idx
    }

    pub fn baseline_nodes(&self) -> &[usize] {
        &self.baseline_idx
    }

    /// Conditional distribution of node `i` given a full assignment of its parents.
    pub fn conditional(&self, i: usize, assignment: &[usize]) -> &[f64] {
        let row = self.parent_idx[i].iter().fold(0, |acc, &j| acc * self.cards[j] + assignment[j]);
        &self.spec.nodes[i].cpt[row]
    }

    /// `P(Y = 1)` given the assignment of Y's parents.
    pub fn outcome_probability(&self, assignment: &[usize]) -> f64 {
        self.conditional(self.outcome_idx, assignment)[1]
    }

    /// Sample every node in order; nodes with `fixed[i] = Some(v)` are set to
    /// `v` instead of drawn. The outcome node is drawn too.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, fixed: &[Option<usize>], assignment: &mut [usize]) {
        self.sample_range(rng, fixed, assignment, 0, self.spec.nodes.len());
    }

    /// Sample nodes `from..to` given earlier entries of `assignment`.
    pub fn sample_range<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        fixed: &[Option<usize>],
        assignment: &mut [usize],
        from: usize,
        to: usize,
    ) {
        for i in from..to {
            assignment[i] = match fixed[i] {
                Some(v) => v,
                None => draw(self.conditional(i, assignment), rng.random::<f64>()),
            };
        }
    }

    fn regime_fixed(&self, a: &[u8]) -> Result<Vec<Option<usize>>, OracleError> {
        if a.len() != self.n_waves {
            return Err(OracleError::RegimeLength { expected: self.n_waves, got: a.len() });
        }
        let mut fixed = vec![None; self.spec.nodes.len()];
        for (&i, &v) in self.treatment_idx.iter().zip(a) {
            fixed[i] = Some(usize::from(v != 0));
        }
        Ok(fixed)
    }

    /// Fixing vector for `do(A = a)`, for use with [`Self::sample_into`].
    pub fn intervention(&self, a: &[u8]) -> Result<Vec<Option<usize>>, OracleError> {
        self.regime_fixed(a)
    }

    /// Baseline strata with their probabilities; each assignment has the
    /// baseline entries set and all others zero.
    pub fn baseline_strata(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let mut assignment = vec![0; self.spec.nodes.len()];
        self.walk(&self.baseline_idx, 0, &mut assignment, &vec![None; self.spec.nodes.len()], 1.0, &mut |a, p| {
            out.push((a.to_vec(), p))
        });
        out
    }

    /// Sum over every configuration of `order[k..]`, weighting each visit by
    /// its probability; fixed nodes contribute a factor of 1.
    fn walk(
        &self,
        order: &[usize],
        k: usize,
        assignment: &mut Vec<usize>,
        fixed: &[Option<usize>],
        prob: f64,
        visit: &mut dyn FnMut(&[usize], f64),
    ) {
        let Some(&i) = order.get(k) else {
            visit(assignment, prob);
            return;
        };
        if let Some(v) = fixed[i] {
            assignment[i] = v;
            self.walk(order, k + 1, assignment, fixed, prob, visit);
            return;
        }
        for v in 0..self.cards[i] {
            let p = self.conditional(i, assignment)[v];
            assignment[i] = v;
            self.walk(order, k + 1, assignment, fixed, prob * p, visit);
        }
    }

    fn wave_nodes(&self) -> Vec<usize> {
        (0..self.outcome_idx).filter(|&i| self.roles[i] != Role::Baseline).collect()
    }

    fn trajectory_index(&self, assignment: &[usize]) -> usize {
        let c = self.mediator_cardinality();
        self.mediator_idx.iter().fold(0, |acc, &i| acc * c + assignment[i])
    }

    /// `G_{a|C}`: the joint law of the mediator trajectory under `do(A = a)`,
    /// per baseline stratum.
    pub fn mediator_law(&self, a: &[u8]) -> Result<MediatorLaw, OracleError> {
        let fixed = self.regime_fixed(a)?;
        let order = self.wave_nodes();
        let n_traj = self.mediator_cardinality().pow(self.n_waves as u32);
        let strata = self
            .baseline_strata()
            .into_iter()
            .map(|(mut assignment, p_c)| {
                let mut law = vec![0.0; n_traj];
                self.walk(&order, 0, &mut assignment, &fixed, 1.0, &mut |asg, p| {
                    law[self.trajectory_index(asg)] += p;
                });
                let baseline = self.baseline_idx.iter().map(|&i| assignment[i]).collect();
                LawStratum { baseline, probability: p_c, trajectory_probabilities: law }
            })
            .collect();
        Ok(MediatorLaw { regime: a.to_vec(), mediator_cardinality: self.mediator_cardinality(), strata })
    }

    /// `E[Y_{a, G}]` for a mediator law `G` computed on this dgp.
    pub fn expected_outcome(&self, a: &[u8], law: &MediatorLaw) -> Result<f64, OracleError> {
        let mut fixed = self.regime_fixed(a)?;
        let order = self.wave_nodes();
        let c = self.mediator_cardinality();
        let mut total = 0.0;
        let mut assignment = vec![0; self.spec.nodes.len()];
        for stratum in &law.strata {
            for (&i, &v) in self.baseline_idx.iter().zip(&stratum.baseline) {
                assignment[i] = v;
            }
            let mut inner = 0.0;
            for (traj, &g) in stratum.trajectory_probabilities.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                for (&i, &v) in self.mediator_idx.iter().zip(&unrank(traj, &vec![c; self.n_waves])) {
                    fixed[i] = Some(v);
                }
                let mut ey = 0.0;
                self.walk(&order, 0, &mut assignment, &fixed, 1.0, &mut |asg, p| {
                    ey += p * self.outcome_probability(asg);
                });
                inner += g * ey;
            }
            total += stratum.probability * inner;
        }
        Ok(total)
    }

    /// Exact interventional effects on the log scale for regimes `a` vs `a_star`.
    pub fn exact_interventional_effects(&self, a: &[u8], a_star: &[u8]) -> Result<ExactEffects, OracleError> {
        let g_a = self.mediator_law(a)?;
        let g_star = self.mediator_law(a_star)?;
        let y_a_ga = self.expected_outcome(a, &g_a)?;
        let y_a_gstar = self.expected_outcome(a, &g_star)?;
        let y_star_gstar = self.expected_outcome(a_star, &g_star)?;
        if !(y_a_ga > 0.0 && y_a_gstar > 0.0 && y_star_gstar > 0.0) {
            return Err(OracleError::LogDomain);
        }
        Ok(ExactEffects {
            ide_log: y_a_gstar.ln() - y_star_gstar.ln(),
            iie_log: y_a_ga.ln() - y_a_gstar.ln(),
            e_y_a_ga: y_a_ga,
            e_y_a_gstar: y_a_gstar,
            e_y_astar_gstar: y_star_gstar,
        })
    }

    /// Effects for always-treated versus never-treated.
    pub fn always_vs_never(&self) -> Result<ExactEffects, OracleError> {
        self.exact_interventional_effects(&vec![1; self.n_waves], &vec![0; self.n_waves])
    }
}

fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawStratum {
    /// Baseline node states, in [`DiscreteDgp::baseline_nodes`] order.
    pub baseline: Vec<usize>,
    pub probability: f64,
    /// Indexed by the mixed-radix trajectory `(M1, ..., MT)`, M1 most significant.
    pub trajectory_probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediatorLaw {
    pub regime: Vec<u8>,
    pub mediator_cardinality: usize,
    pub strata: Vec<LawStratum>,
}

impl MediatorLaw {
    /// Largest deviation of any stratum's total from 1.
    pub fn normalization_error(&self) -> f64 {
        self.strata.iter().map(|s| (s.trajectory_probabilities.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactEffects {
    pub ide_log: f64,
    pub iie_log: f64,
    pub e_y_a_ga: f64,
    pub e_y_a_gstar: f64,
    pub e_y_astar_gstar: f64,
}

/// Two-wave test DGPs (baseline wave plus one intervened wave) with binary
/// variables, logistic treatment, mediator and confounder tables and a
/// log-linear outcome in `(A1, M1, C)`.
pub fn two_wave_dgp(p: &TwoWaveParams) -> DgpSpec {
    let nodes = vec![
        CptNode::logistic("C_x", &[], p.c_logit, &[]),
        CptNode::logistic("A0", &[], p.a0_logit, &[]),
        CptNode::logistic("M0", &[("C_x", 2), ("A0", 2)], p.m_logit, &[p.m_c, p.m_a]),
        CptNode::logistic("L0", &[("C_x", 2), ("A0", 2)], p.l_logit, &[p.l_c, p.l_a]),
        CptNode::logistic(
            "A1",
            &[("A0", 2), ("M0", 2), ("C_x", 2), ("L0", 2)],
            p.a_logit,
            &[p.a_lag, p.a_m, p.a_c, p.a_l],
        ),
        CptNode::logistic(
            "M1",
            &[("M0", 2), ("A1", 2), ("C_x", 2), ("L0", 2)],
            p.m_logit,
            &[p.m_lag, p.m_a, p.m_c, p.m_l],
        ),
        CptNode::logistic("L1", &[("L0", 2), ("A1", 2), ("C_x", 2)], p.l_logit, &[p.l_lag, p.l_a, p.l_c]),
        CptNode::log_linear(
            "Y",
            &[("A1", 2), ("M1", 2), ("C_x", 2), ("L0", 2)],
            p.y_log,
            &[p.y_a, p.y_m, p.y_c, p.y_l],
        ),
    ];
    DgpSpec { nodes, mediator_values: None }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoWaveParams {
    pub c_logit: f64,
    pub a0_logit: f64,
    pub a_logit: f64,
    pub a_lag: f64,
    pub a_m: f64,
    pub a_c: f64,
    pub a_l: f64,
    pub m_logit: f64,
    pub m_lag: f64,
    pub m_a: f64,
    pub m_c: f64,
    pub m_l: f64,
    pub l_logit: f64,
    pub l_lag: f64,
    pub l_a: f64,
    pub l_c: f64,
    pub y_log: f64,
    pub y_a: f64,
    pub y_m: f64,
    pub y_c: f64,
    pub y_l: f64,
}

impl Default for TwoWaveParams {
    fn default() -> Self {
        Self {
            c_logit: 0.0,
            a0_logit: -0.5,
            a_logit: -0.8,
            a_lag: 0.9,
            a_m: 0.4,
            a_c: 0.5,
            a_l: 0.6,
            m_logit: -0.7,
            m_lag: 0.8,
            m_a: 0.6,
            m_c: 0.4,
            m_l: 0.5,
            l_logit: -0.6,
            l_lag: 0.7,
            l_a: 0.5,
            l_c: 0.3,
            y_log: -2.2,
            y_a: 0.3,
            y_m: 0.25,
            y_c: 0.2,
            y_l: 0.2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(m_on_y: f64) -> DiscreteDgp {
        let nodes = vec![
            CptNode::logistic("C_x", &[], 0.2, &[]),
            CptNode::logistic("A1", &[("C_x", 2)], -0.3, &[0.8]),
            CptNode::logistic("L1", &[("A1", 2), ("C_x", 2)], -0.5, &[0.7, 0.4]),
            CptNode::logistic("M1", &[("A1", 2), ("L1", 2)], -0.2, &[0.9, 0.5]),
            CptNode::log_linear("Y", &[("A1", 2), ("M1", 2), ("L1", 2)], -1.5, &[0.3, m_on_y, 0.2]),
        ];
        DiscreteDgp::new(DgpSpec { nodes, mediator_values: None }).unwrap()
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn law_matches_hand_marginalization() {
        let dgp = tiny(0.4);
        let law = dgp.mediator_law(&[1]).unwrap();
        assert!(law.normalization_error() < 1e-12);
        for s in &law.strata {
            let c = s.baseline[0] as f64;
            let pl = sig(-0.5 + 0.7 + 0.4 * c);
            let pm = pl * sig(-0.2 + 0.9 + 0.5) + (1.0 - pl) * sig(-0.2 + 0.9);
            assert!((s.trajectory_probabilities[1] - pm).abs() < 1e-14);
        }
    }

    #[test]
    fn severed_mediator_gives_zero_indirect_effect() {
        let e = tiny(0.0).always_vs_never().unwrap();
        assert_eq!(e.iie_log, 0.0);
        assert!(e.ide_log > 0.0);
    }

    #[test]
    fn swapping_regimes_negates_direct_effect_at_fixed_law() {
        let dgp = tiny(0.4);
        let g = dgp.mediator_law(&[0]).unwrap();
        let d1 = dgp.expected_outcome(&[1], &g).unwrap().ln() - dgp.expected_outcome(&[0], &g).unwrap().ln();
        let d2 = dgp.expected_outcome(&[0], &g).unwrap().ln() - dgp.expected_outcome(&[1], &g).unwrap().ln();
        assert_eq!(d1, -d2);
    }

    #[test]
    fn validation_errors() {
        let mut spec = tiny(0.1).spec().clone();
        spec.nodes[1].cpt[0] = vec![0.5, 0.6];
        assert!(matches!(DiscreteDgp::new(spec.clone()), Err(OracleError::RowSum { .. })));
        spec.nodes[1].cpt[0] = vec![1.0, 0.0];
        assert!(matches!(DiscreteDgp::new(spec.clone()), Err(OracleError::Positivity { .. })));
        let mut spec = tiny(0.1).spec().clone();
        spec.nodes.swap(3, 4);
        assert!(DiscreteDgp::new(spec).is_err());
    }

    #[test]
    fn roles_parse() {
        assert_eq!(Role::of("A0"), Role::Baseline);
        assert_eq!(Role::of("A3"), Role::Treatment(3));
        assert_eq!(Role::of("L2"), Role::Confounder(2));
        assert_eq!(Role::of("Csex"), Role::Baseline);
        assert_eq!(Role::of("Y"), Role::Outcome);
    }

    #[test]
    fn two_wave_spec_is_valid() {
        let dgp = DiscreteDgp::new(two_wave_dgp(&TwoWaveParams::default())).unwrap();
        assert_eq!(dgp.n_waves(), 1);
        let e = dgp.always_vs_never().unwrap();
        assert!((e.ide_log - 0.3).abs() < 1e-12);
    }
}
