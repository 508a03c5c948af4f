//! Learned explore/exploit query policy.
//!
//! A binary action head over a linear q-function: at each search iteration
//! the policy looks at cheap graph-state features and decides whether to
//! issue a narrow conjunctive query (exploit) or a broad disjunctive one
//! (explore). Training is on-policy temporal-difference learning (SARSA)
//! with epsilon-greedy exploration over noiseless episodes; inference is
//! greedy and consumes no randomness.
//!
//! Features are z-score normalized with running statistics collected
//! during training (Welford), frozen into the saved model. Normalized
//! values are clamped to +/-10 and standard deviations floored at 1e-3 so
//! early-training outliers and constant features cannot blow up updates.
//!
//! Feature groups (each endpoint-specific group contributes one value per
//! endpoint, the first belonging to the source-side endpoint):
//!   f1  current iteration (from 0)
//!   f2  prior queries that used each endpoint
//!   f3  endpoints already share an undirected component (0/1)
//!   f4  each endpoint's degree rank in [0,1] (raw degree behind a flag)
//!   f5  iteration at which each endpoint entered the graph

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntityPair, ParticipantId};
use crate::engine::{focused_read_with, QueryChooser, QueryExecution, QueryOutcome};
use crate::error::{Error, Result};
use crate::extraction::NoiseModel;
use crate::graph::SearchGraph;
use crate::index::{MentionIndex, Query, QueryMode};
use crate::manifest::write_atomic;
use crate::seeds;

/// Policy file format version written and accepted by this crate.
pub const POLICY_FORMAT_VERSION: u32 = 1;

/// Number of state features (bias excluded).
pub const NUM_FEATURES: usize = 8;
/// Weights per action: bias plus one per feature.
pub const NUM_WEIGHTS: usize = NUM_FEATURES + 1;

const SD_FLOOR: f64 = 1e-3;
const Z_CLAMP: f64 = 10.0;
/// Training has converged when mean |TD error| over the last tenth of
/// episodes is at most half of the first tenth.
pub const CONVERGENCE_RATIO: f64 = 0.5;

/// The two things a query can do.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryAction {
    /// Narrow: conjunctive query, few but targeted results.
    Exploit,
    /// Broad: disjunctive query, casts a wide net.
    Explore,
}

impl QueryAction {
    pub const ALL: [QueryAction; 2] = [QueryAction::Exploit, QueryAction::Explore];

    pub fn mode(self) -> QueryMode {
        match self {
            QueryAction::Exploit => QueryMode::Conjunctive,
            QueryAction::Explore => QueryMode::Disjunctive,
        }
    }

    fn index(self) -> usize {
        match self {
            QueryAction::Exploit => 0,
            QueryAction::Explore => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QueryAction::Exploit => "exploit",
            QueryAction::Explore => "explore",
        }
    }
}

impl fmt::Display for QueryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One slot in the feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureId {
    Iteration,
    QueryCountA,
    QueryCountB,
    SameComponent,
    DegreeA,
    DegreeB,
    IntroducedA,
    IntroducedB,
}

impl FeatureId {
    pub const ALL: [FeatureId; NUM_FEATURES] = [
        FeatureId::Iteration,
        FeatureId::QueryCountA,
        FeatureId::QueryCountB,
        FeatureId::SameComponent,
        FeatureId::DegreeA,
        FeatureId::DegreeB,
        FeatureId::IntroducedA,
        FeatureId::IntroducedB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Iteration => "f1_iteration",
            FeatureId::QueryCountA => "f2_queries_a",
            FeatureId::QueryCountB => "f2_queries_b",
            FeatureId::SameComponent => "f3_same_component",
            FeatureId::DegreeA => "f4_degree_a",
            FeatureId::DegreeB => "f4_degree_b",
            FeatureId::IntroducedA => "f5_introduced_a",
            FeatureId::IntroducedB => "f5_introduced_b",
        }
    }

    fn from_name(name: &str) -> Option<FeatureId> {
        FeatureId::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn group(self) -> FeatureGroup {
        match self {
            FeatureId::Iteration => FeatureGroup::F1,
            FeatureId::QueryCountA | FeatureId::QueryCountB => FeatureGroup::F2,
            FeatureId::SameComponent => FeatureGroup::F3,
            FeatureId::DegreeA | FeatureId::DegreeB => FeatureGroup::F4,
            FeatureId::IntroducedA | FeatureId::IntroducedB => FeatureGroup::F5,
        }
    }

    fn slot(self) -> usize {
        FeatureId::ALL.iter().position(|f| *f == self).expect("listed")
    }
}

/// Ablation granularity: features are dropped a group at a time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::F1,
        FeatureGroup::F2,
        FeatureGroup::F3,
        FeatureGroup::F4,
        FeatureGroup::F5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::F1 => "f1",
            FeatureGroup::F2 => "f2",
            FeatureGroup::F3 => "f3",
            FeatureGroup::F4 => "f4",
            FeatureGroup::F5 => "f5",
        }
    }

    pub fn members(self) -> impl Iterator<Item = FeatureId> {
        FeatureId::ALL.into_iter().filter(move |f| f.group() == self)
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownFeatureGroup(s.to_string()))
    }
}

/// Raw (pre-normalization) feature values for one (state, endpoint pair).
#[derive(Clone, Debug, PartialEq)]
pub struct StateFeatures {
    pub iteration: f64,
    pub queries_a: f64,
    pub queries_b: f64,
    pub same_component: f64,
    pub degree_a: f64,
    pub degree_b: f64,
    pub introduced_a: f64,
    pub introduced_b: f64,
}

impl StateFeatures {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.iteration,
            self.queries_a,
            self.queries_b,
            self.same_component,
            self.degree_a,
            self.degree_b,
            self.introduced_a,
            self.introduced_b,
        ]
    }
}

/// Compute features for querying endpoints `a` (source side) and `b`.
///
/// Must be called before the query's endpoint-use is recorded, so f2 sees
/// prior uses only. With `raw_degree` false (the default), f4 is each
/// endpoint's strictly-below degree rank divided by (vertices - 1).
pub fn featurize(
    graph: &SearchGraph,
    a: &ParticipantId,
    b: &ParticipantId,
    raw_degree: bool,
) -> Result<StateFeatures> {
    let deg_a = graph.degree(a)? as f64;
    let deg_b = graph.degree(b)? as f64;
    let (f4_a, f4_b) = if raw_degree {
        (deg_a, deg_b)
    } else {
        let degrees: Vec<usize> = graph
            .vertices()
            .map(|v| graph.degree(v).expect("iterating live vertices"))
            .collect();
        let denom = (degrees.len() - 1).max(1) as f64;
        let rank = |d: f64| degrees.iter().filter(|&&x| (x as f64) < d).count() as f64 / denom;
        (rank(deg_a), rank(deg_b))
    };
    Ok(StateFeatures {
        iteration: graph.iteration() as f64,
        queries_a: graph.query_count(a)? as f64,
        queries_b: graph.query_count(b)? as f64,
        same_component: if graph.same_component(a, b)? { 1.0 } else { 0.0 },
        degree_a: f4_a,
        degree_b: f4_b,
        introduced_a: graph.introduced_at(a)? as f64,
        introduced_b: graph.introduced_at(b)? as f64,
    })
}

/// How a search step turned out, for reward assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// Episode continues; small cost per step keeps searches short.
    Continue,
    /// This step connected source to destination.
    Found,
    /// The episode ended without a path.
    Failed,
}

/// Scalar reward for a step outcome.
pub fn reward(outcome: StepOutcome) -> f64 {
    match outcome {
        StepOutcome::Found => 1.0,
        StepOutcome::Failed => -1.0,
        StepOutcome::Continue => -0.05,
    }
}

/// Training and featurization knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Initial learning rate.
    pub alpha: f64,
    /// Per-episode multiplicative learning-rate decay.
    pub alpha_decay: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Exploration rate at episode 0, annealed linearly to `epsilon_end`.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub episodes: usize,
    /// Search iteration budget per episode.
    pub max_iterations: usize,
    /// Use raw degrees instead of degree ranks for f4.
    pub raw_degree: bool,
    /// Feature groups forced to contribute nothing (ablation).
    pub dropped_groups: BTreeSet<FeatureGroup>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.05,
            alpha_decay: 0.995,
            gamma: 1.0,
            epsilon_start: 0.2,
            epsilon_end: 0.02,
            episodes: 2_000,
            max_iterations: 10,
            raw_degree: false,
            dropped_groups: BTreeSet::new(),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
            ("gamma", self.gamma),
        ] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::NonFinite {
                what: "alpha",
                value: self.alpha,
            });
        }
        if !(self.alpha_decay > 0.0 && self.alpha_decay <= 1.0) {
            return Err(Error::NonFinite {
                what: "alpha_decay",
                value: self.alpha_decay,
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::NoIterationBudget);
        }
        Ok(())
    }
}

/// Frozen per-feature z-score parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureNorm {
    pub mean: [f64; NUM_FEATURES],
    pub var: [f64; NUM_FEATURES],
}

impl FeatureNorm {
    /// No-op normalization (mean 0, variance 1).
    pub fn identity() -> Self {
        FeatureNorm {
            mean: [0.0; NUM_FEATURES],
            var: [1.0; NUM_FEATURES],
        }
    }

    /// Z-score with floored standard deviation, clamped to +/-`Z_CLAMP`.
    pub fn normalize(&self, raw: &[f64; NUM_FEATURES]) -> [f64; NUM_FEATURES] {
        let mut out = [0.0; NUM_FEATURES];
        for i in 0..NUM_FEATURES {
            let sd = self.var[i].max(0.0).sqrt().max(SD_FLOOR);
            out[i] = ((raw[i] - self.mean[i]) / sd).clamp(-Z_CLAMP, Z_CLAMP);
        }
        out
    }
}

/// Welford accumulator for feature means and variances.
#[derive(Clone, Debug, Default)]
pub struct RunningStats {
    count: u64,
    mean: [f64; NUM_FEATURES],
    m2: [f64; NUM_FEATURES],
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, raw: &[f64; NUM_FEATURES]) {
        self.count += 1;
        for i in 0..NUM_FEATURES {
            let delta = raw[i] - self.mean[i];
            self.mean[i] += delta / self.count as f64;
            self.m2[i] += delta * (raw[i] - self.mean[i]);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Population mean/variance seen so far; identity when empty.
    pub fn snapshot(&self) -> FeatureNorm {
        if self.count == 0 {
            return FeatureNorm::identity();
        }
        let mut var = [0.0; NUM_FEATURES];
        for i in 0..NUM_FEATURES {
            var[i] = self.m2[i] / self.count as f64;
        }
        FeatureNorm {
            mean: self.mean,
            var,
        }
    }
}

/// One SARSA step: (s, a, r, s', a'), with `next` absent on terminal steps.
#[derive(Clone, Debug)]
pub struct Transition {
    pub features: StateFeatures,
    pub action: QueryAction,
    pub reward: f64,
    pub next: Option<(StateFeatures, QueryAction)>,
}

/// Provenance embedded in a saved policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub corpus_digest: String,
    pub episodes: usize,
    pub delta_ratio: f64,
    pub converged: bool,
}

impl TrainingMetadata {
    pub fn untrained() -> Self {
        TrainingMetadata {
            seed: 0,
            corpus_digest: String::new(),
            episodes: 0,
            delta_ratio: 1.0,
            converged: false,
        }
    }
}

/// Linear action-value model over normalized features.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyModel {
    weights: [[f64; NUM_WEIGHTS]; 2],
    norm: FeatureNorm,
    hyperparams: Hyperparams,
    metadata: TrainingMetadata,
}

impl PolicyModel {
    /// All-zero weights with identity normalization: every state ties, and
    /// ties break toward Explore.
    pub fn zeroed(hyperparams: Hyperparams, metadata: TrainingMetadata) -> Self {
        PolicyModel {
            weights: [[0.0; NUM_WEIGHTS]; 2],
            norm: FeatureNorm::identity(),
            hyperparams,
            metadata,
        }
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn metadata(&self) -> &TrainingMetadata {
        &self.metadata
    }

    pub fn norm(&self) -> &FeatureNorm {
        &self.norm
    }

    pub fn set_norm(&mut self, norm: FeatureNorm) {
        self.norm = norm;
    }

    pub fn weights_row(&self, action: QueryAction) -> &[f64; NUM_WEIGHTS] {
        &self.weights[action.index()]
    }

    pub fn feature_weight(&self, action: QueryAction, feature: FeatureId) -> f64 {
        self.weights[action.index()][feature.slot() + 1]
    }

    pub fn bias_weight(&self, action: QueryAction) -> f64 {
        self.weights[action.index()][0]
    }

    /// Bias-extended, normalized, ablation-masked basis vector.
    fn phi(&self, features: &StateFeatures) -> [f64; NUM_WEIGHTS] {
        let normalized = self.norm.normalize(&features.to_array());
        let mut out = [0.0; NUM_WEIGHTS];
        out[0] = 1.0;
        for f in FeatureId::ALL {
            let slot = f.slot();
            out[slot + 1] = if self.hyperparams.dropped_groups.contains(&f.group()) {
                0.0
            } else {
                normalized[slot]
            };
        }
        out
    }

    pub fn q_value(&self, features: &StateFeatures, action: QueryAction) -> f64 {
        let phi = self.phi(features);
        dot(&self.weights[action.index()], &phi)
    }

    /// Highest-q action; exact ties resolve to Explore.
    pub fn greedy_action(&self, features: &StateFeatures) -> QueryAction {
        if self.q_value(features, QueryAction::Explore)
            >= self.q_value(features, QueryAction::Exploit)
        {
            QueryAction::Explore
        } else {
            QueryAction::Exploit
        }
    }

    /// Epsilon-greedy selection. With `epsilon` zero the rng is untouched;
    /// otherwise exactly one uniform draw decides explore-vs-greedy and a
    /// coin picks the random action.
    pub fn select_action(
        &self,
        features: &StateFeatures,
        epsilon: f64,
        rng: &mut ChaCha8Rng,
    ) -> QueryAction {
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            if rng.gen_bool(0.5) {
                QueryAction::Explore
            } else {
                QueryAction::Exploit
            }
        } else {
            self.greedy_action(features)
        }
    }

    /// Apply one SARSA update; returns the TD error.
    ///
    /// delta = r + gamma * q(s', a') - q(s, a), with the q(s', a') term
    /// absent on terminal transitions. Only the taken action's weights move.
    pub fn sarsa_update(&mut self, t: &Transition, alpha: f64, gamma: f64) -> Result<f64> {
        let phi = self.phi(&t.features);
        let q_sa = dot(&self.weights[t.action.index()], &phi);
        let q_next = match &t.next {
            Some((nf, na)) => {
                let nphi = self.phi(nf);
                dot(&self.weights[na.index()], &nphi)
            }
            None => 0.0,
        };
        let delta = t.reward + gamma * q_next - q_sa;
        if !delta.is_finite() {
            return Err(Error::NonFinite {
                what: "TD error",
                value: delta,
            });
        }
        let row = &mut self.weights[t.action.index()];
        for i in 0..NUM_WEIGHTS {
            row[i] += alpha * delta * phi[i];
        }
        Ok(delta)
    }

    fn to_file(&self) -> PolicyFile {
        let mut normalization = BTreeMap::new();
        for f in FeatureId::ALL {
            normalization.insert(
                f.name().to_string(),
                MeanVar {
                    mean: self.norm.mean[f.slot()],
                    var: self.norm.var[f.slot()],
                },
            );
        }
        let mut weights = Vec::with_capacity(2 * NUM_WEIGHTS);
        for action in QueryAction::ALL {
            weights.push(WeightEntry {
                feature: "bias".to_string(),
                action,
                value: self.bias_weight(action),
            });
            for f in FeatureId::ALL {
                weights.push(WeightEntry {
                    feature: f.name().to_string(),
                    action,
                    value: self.feature_weight(action, f),
                });
            }
        }
        PolicyFile {
            version: POLICY_FORMAT_VERSION,
            hyperparams: self.hyperparams.clone(),
            normalization,
            weights,
            training_metadata: self.metadata.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("policy serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let file: PolicyFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: display.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.version != POLICY_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                path: display,
                what: "policy",
                found: file.version,
                expected: POLICY_FORMAT_VERSION,
            });
        }
        let mut norm = FeatureNorm::identity();
        for f in FeatureId::ALL {
            let entry = file.normalization.get(f.name()).ok_or_else(|| Error::Parse {
                path: display.clone(),
                line: 0,
                message: format!("missing normalization for {}", f.name()),
            })?;
            norm.mean[f.slot()] = entry.mean;
            norm.var[f.slot()] = entry.var;
        }
        let mut weights = [[f64::NAN; NUM_WEIGHTS]; 2];
        for entry in &file.weights {
            let col = if entry.feature == "bias" {
                0
            } else {
                FeatureId::from_name(&entry.feature)
                    .ok_or_else(|| Error::Parse {
                        path: display.clone(),
                        line: 0,
                        message: format!("unknown feature {:?}", entry.feature),
                    })?
                    .slot()
                    + 1
            };
            weights[entry.action.index()][col] = entry.value;
        }
        for row in &weights {
            for w in row {
                if w.is_nan() {
                    return Err(Error::Parse {
                        path: display.clone(),
                        line: 0,
                        message: "incomplete weight table".into(),
                    });
                }
            }
        }
        Ok(PolicyModel {
            weights,
            norm,
            hyperparams: file.hyperparams,
            metadata: file.training_metadata,
        })
    }
}

fn dot(w: &[f64; NUM_WEIGHTS], phi: &[f64; NUM_WEIGHTS]) -> f64 {
    let mut acc = 0.0;
    for i in 0..NUM_WEIGHTS {
        acc += w[i] * phi[i];
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    version: u32,
    hyperparams: Hyperparams,
    normalization: BTreeMap<String, MeanVar>,
    weights: Vec<WeightEntry>,
    training_metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct MeanVar {
    mean: f64,
    var: f64,
}

#[derive(Serialize, Deserialize)]
struct WeightEntry {
    feature: String,
    action: QueryAction,
    value: f64,
}

/// Per-episode training diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    /// Undiscounted return: -0.05 per non-terminal step, then +/-1.
    pub ret: f64,
    pub mean_abs_delta: f64,
    pub steps: usize,
    pub success: bool,
}

/// Full training trajectory plus the convergence summary over it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeStats>,
}

impl TrainingLog {
    /// Mean |TD error| over the last tenth of episodes divided by the
    /// first tenth (window at least one episode).
    pub fn delta_ratio(&self) -> f64 {
        if self.episodes.is_empty() {
            return 1.0;
        }
        let window = (self.episodes.len() / 10).max(1);
        let first: f64 = self.episodes[..window]
            .iter()
            .map(|e| e.mean_abs_delta)
            .sum::<f64>()
            / window as f64;
        let last: f64 = self.episodes[self.episodes.len() - window..]
            .iter()
            .map(|e| e.mean_abs_delta)
            .sum::<f64>()
            / window as f64;
        if first == 0.0 {
            if last == 0.0 {
                0.0
            } else {
                1.0
            }
        } else {
            last / first
        }
    }

    pub fn converged(&self) -> bool {
        !self.episodes.is_empty() && self.delta_ratio() <= CONVERGENCE_RATIO
    }

    pub fn success_rate(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().filter(|e| e.success).count() as f64 / self.episodes.len() as f64
    }
}

/// A trained model together with its training trajectory.
#[derive(Clone, Debug)]
pub struct TrainedPolicy {
    pub model: PolicyModel,
    pub log: TrainingLog,
}

struct TrainingChooser<'a> {
    model: &'a mut PolicyModel,
    running: &'a mut RunningStats,
    rng: &'a mut ChaCha8Rng,
    epsilon: f64,
    alpha: f64,
    gamma: f64,
    pending: Option<(StateFeatures, QueryAction)>,
    steps: usize,
    sum_abs_delta: f64,
    ret: f64,
}

impl TrainingChooser<'_> {
    /// Apply the terminal update once the episode's outcome is known and
    /// report (return, mean |delta|, steps).
    fn finish(&mut self, success: bool) -> Result<(f64, f64, usize)> {
        if let Some((features, action)) = self.pending.take() {
            let r = reward(if success {
                StepOutcome::Found
            } else {
                StepOutcome::Failed
            });
            let delta = self.model.sarsa_update(
                &Transition {
                    features,
                    action,
                    reward: r,
                    next: None,
                },
                self.alpha,
                self.gamma,
            )?;
            self.ret += r;
            self.sum_abs_delta += delta.abs();
        }
        let mean_abs_delta = if self.steps > 0 {
            self.sum_abs_delta / self.steps as f64
        } else {
            0.0
        };
        Ok((self.ret, mean_abs_delta, self.steps))
    }
}

impl QueryChooser for TrainingChooser<'_> {
    fn choose_query(
        &mut self,
        graph: &SearchGraph,
        a: &ParticipantId,
        b: &ParticipantId,
        index: &MentionIndex,
    ) -> Result<QueryOutcome> {
        let features = featurize(graph, a, b, self.model.hyperparams.raw_degree)?;
        // Update running normalization first so this very decision sees
        // statistics that include the state it is deciding about.
        self.running.observe(&features.to_array());
        self.model.norm = self.running.snapshot();

        let action = self.model.select_action(&features, self.epsilon, self.rng);

        // SARSA defers each update until the next action is known.
        if let Some((prev_features, prev_action)) = self.pending.take() {
            let r = reward(StepOutcome::Continue);
            let delta = self.model.sarsa_update(
                &Transition {
                    features: prev_features,
                    action: prev_action,
                    reward: r,
                    next: Some((features.clone(), action)),
                },
                self.alpha,
                self.gamma,
            )?;
            self.ret += r;
            self.sum_abs_delta += delta.abs();
        }
        self.pending = Some((features, action));
        self.steps += 1;

        let query = Query::new(a.clone(), b.clone(), action.mode())?;
        let docs = index.run_query(&query);
        Ok(QueryOutcome {
            action,
            executions: vec![QueryExecution {
                mode: action.mode(),
                results: docs.len(),
            }],
            docs,
        })
    }
}

/// Train a policy with SARSA over noiseless episodes on `pairs`.
///
/// Pairs are reshuffled every epoch; epsilon anneals linearly across
/// episodes and alpha decays multiplicatively per episode. Training is
/// sequential and fully determined by `seed`.
pub fn train(
    corpus: &Corpus,
    index: &MentionIndex,
    pairs: &[EntityPair],
    hyperparams: &Hyperparams,
    seed: u64,
) -> Result<TrainedPolicy> {
    hyperparams.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    for pair in pairs {
        for endpoint in [&pair.source, &pair.dest] {
            if !corpus.ground_truth().participants().contains(endpoint) {
                return Err(Error::UnknownParticipant(endpoint.as_str().to_string()));
            }
        }
    }

    let metadata = TrainingMetadata {
        seed,
        corpus_digest: corpus.digest(),
        episodes: hyperparams.episodes,
        delta_ratio: 1.0,
        converged: false,
    };
    let mut model = PolicyModel::zeroed(hyperparams.clone(), metadata);
    let mut running = RunningStats::new();
    let mut action_rng = ChaCha8Rng::seed_from_u64(seeds::derive_seed(seed, "actions"));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seeds::derive_seed(seed, "shuffle"));

    let mut order: Vec<&EntityPair> = pairs.iter().collect();
    let mut position = order.len(); // trigger a shuffle on the first episode
    let mut alpha = hyperparams.alpha;
    let mut log = TrainingLog::default();

    for episode in 0..hyperparams.episodes {
        if position >= order.len() {
            use rand::seq::SliceRandom;
            order.shuffle(&mut shuffle_rng);
            position = 0;
        }
        let pair = order[position];
        position += 1;

        let epsilon = if hyperparams.episodes <= 1 {
            hyperparams.epsilon_start
        } else {
            let t = episode as f64 / (hyperparams.episodes - 1) as f64;
            hyperparams.epsilon_start + (hyperparams.epsilon_end - hyperparams.epsilon_start) * t
        };

        let noise = NoiseModel::zero(seeds::derive_seed_indexed(seed, "train-episode", episode as u64));
        let mut chooser = TrainingChooser {
            model: &mut model,
            running: &mut running,
            rng: &mut action_rng,
            epsilon,
            alpha,
            gamma: hyperparams.gamma,
            pending: None,
            steps: 0,
            sum_abs_delta: 0.0,
            ret: 0.0,
        };
        let result = focused_read_with(
            &pair.source,
            &pair.dest,
            corpus,
            index,
            hyperparams.max_iterations,
            &noise,
            &mut chooser,
        )?;
        let success = result.success();
        let (ret, mean_abs_delta, steps) = chooser.finish(success)?;

        for row in &model.weights {
            for &w in row {
                if !w.is_finite() {
                    return Err(Error::NonFinite {
                        what: "policy weight",
                        value: w,
                    });
                }
            }
        }

        log.episodes.push(EpisodeStats {
            episode,
            ret,
            mean_abs_delta,
            steps,
            success,
        });
        alpha *= hyperparams.alpha_decay;
    }

    model.norm = running.snapshot();
    model.metadata.delta_ratio = log.delta_ratio();
    model.metadata.converged = log.converged();
    Ok(TrainedPolicy { model, log })
}
