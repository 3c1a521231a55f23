//! Loss streams revealed to the participants: synthetic least squares
//! (i.i.d. and clustered non-i.i.d.) and the deterministic counter-example
//! quadratics, plus analytic constants and expected-loss closed forms.

mod hindsight;

pub use hindsight::{hindsight_minimizer, HindsightAccumulator};

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::core::{domain, Cohort, DecisionVector, ParticipantId, RandomStream};
use crate::error::{Error, Result};

/// Loss stream kinds. Config names: `iid_ls`, `noniid_ls`, `example1`,
/// `example3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    IidLeastSquares,
    NoniidLeastSquares,
    Example1Fixed,
    Example3RandomPair,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::IidLeastSquares => "iid_ls",
            LossKind::NoniidLeastSquares => "noniid_ls",
            LossKind::Example1Fixed => "example1",
            LossKind::Example3RandomPair => "example3",
        }
    }

    pub fn is_least_squares(&self) -> bool {
        matches!(
            self,
            LossKind::IidLeastSquares | LossKind::NoniidLeastSquares
        )
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid_ls" => Ok(LossKind::IidLeastSquares),
            "noniid_ls" => Ok(LossKind::NoniidLeastSquares),
            "example1" => Ok(LossKind::Example1Fixed),
            "example3" => Ok(LossKind::Example3RandomPair),
            other => Err(Error::InvalidConfig {
                field: "environment.kind".into(),
                reason: format!("unknown loss kind `{other}`"),
            }),
        }
    }
}

/// Static description of a loss stream.
///
/// `ground_truth` pins the regression target for the i.i.d. kind; when
/// absent it is drawn per trial. `sigma` is the counter-example deviation
/// scale, `noise_std` the label-noise standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct LossStreamSpec {
    pub kind: LossKind,
    pub dim: usize,
    pub ground_truth: Option<DecisionVector>,
    pub noise_std: f64,
    pub sigma: f64,
}

impl LossStreamSpec {
    pub fn iid(dim: usize, noise_std: f64) -> Self {
        Self {
            kind: LossKind::IidLeastSquares,
            dim,
            ground_truth: None,
            noise_std,
            sigma: 0.0,
        }
    }

    pub fn counter_example(kind: LossKind, sigma: f64) -> Self {
        Self {
            kind,
            dim: 1,
            ground_truth: None,
            noise_std: 0.0,
            sigma,
        }
    }

    pub fn validate(&self, cohort: &Cohort) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig {
                field: "experiment.dimension".into(),
                reason: "must be at least 1".into(),
            });
        }
        if self.noise_std < 0.0 || !self.noise_std.is_finite() {
            return Err(Error::InvalidConfig {
                field: "environment.noise_std".into(),
                reason: "must be finite and non-negative".into(),
            });
        }
        if let Some(gt) = &self.ground_truth {
            if self.kind != LossKind::IidLeastSquares {
                return Err(Error::InvalidConfig {
                    field: "environment.ground_truth".into(),
                    reason: "explicit ground truth is only supported for iid_ls".into(),
                });
            }
            gt.check_dim(self.dim)?;
        }
        match self.kind {
            LossKind::NoniidLeastSquares => {
                // data classes are dealt to equal participant clusters before
                // any byzantine choice, so the roster itself must split in 3
                if !cohort.n().is_multiple_of(CLUSTERS) {
                    return Err(Error::InvalidConfig {
                        field: "cohort.n".into(),
                        reason: format!(
                            "noniid_ls partitions participants into {CLUSTERS} equal clusters; n = {} does not divide",
                            cohort.n()
                        ),
                    });
                }
            }
            LossKind::Example1Fixed | LossKind::Example3RandomPair => {
                if self.dim != 1 {
                    return Err(Error::InvalidConfig {
                        field: "experiment.dimension".into(),
                        reason: format!("{} is one-dimensional", self.kind),
                    });
                }
                if !(self.sigma.is_finite() && self.sigma > 0.0) {
                    return Err(Error::InvalidConfig {
                        field: "environment.sigma".into(),
                        reason: "must be finite and positive".into(),
                    });
                }
                let honest: Vec<ParticipantId> = cohort.honest_ids().collect();
                if honest != [ParticipantId(1), ParticipantId(2)] {
                    return Err(Error::InvalidConfig {
                        field: "cohort.byzantine_ids".into(),
                        reason: format!(
                            "{} is the three-participant system with honest {{1, 2}}",
                            self.kind
                        ),
                    });
                }
            }
            LossKind::IidLeastSquares => {}
        }
        Ok(())
    }
}

/// One revealed loss: a single-sample least-squares term
/// `f(w) = 1/2 (x'w - y)^2`, or a scalar quadratic `f(w) = 1/2 (w - c)^2`.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSample {
    LeastSquares {
        regressor: DecisionVector,
        label: f64,
    },
    Quadratic {
        center: f64,
    },
}

impl LossSample {
    pub fn dim(&self) -> usize {
        match self {
            LossSample::LeastSquares { regressor, .. } => regressor.dim(),
            LossSample::Quadratic { .. } => 1,
        }
    }

    pub fn loss(&self, w: &DecisionVector) -> Result<f64> {
        match self {
            LossSample::LeastSquares { regressor, label } => {
                let r = regressor.dot(w)? - label;
                Ok(0.5 * r * r)
            }
            LossSample::Quadratic { center } => {
                w.check_dim(1)?;
                let r = w[0] - center;
                Ok(0.5 * r * r)
            }
        }
    }
}

/// Exact analytic gradient of a revealed loss at `w`.
pub fn gradient(sample: &LossSample, w: &DecisionVector) -> Result<DecisionVector> {
    match sample {
        LossSample::LeastSquares { regressor, label } => {
            let r = regressor.dot(w)? - label;
            regressor.scale(r)
        }
        LossSample::Quadratic { center } => {
            w.check_dim(1)?;
            DecisionVector::scalar(w[0] - center)
        }
    }
}

const CLUSTERS: usize = 3;
const CLUSTER_REGRESSOR_MEANS: [f64; CLUSTERS] = [0.0, 1.0, 2.0];
const CLUSTER_TRUTH_MEANS: [f64; CLUSTERS] = [0.0, 0.2, 0.4];
const CLUSTER_TRUTH_STD: f64 = std::f64::consts::FRAC_1_SQRT_2; // sqrt(0.5)

/// A loss stream resolved for one trial: per-trial ground truth drawn, the
/// cluster partition fixed. Draws are pure given the keyed random stream.
#[derive(Debug, Clone)]
pub struct LossStream {
    spec: LossStreamSpec,
    trial_stream: RandomStream,
    ground_truths: Vec<DecisionVector>,
    cluster_of: BTreeMap<ParticipantId, usize>,
}

impl LossStream {
    pub fn new(
        spec: &LossStreamSpec,
        cohort: &Cohort,
        trial: usize,
        root: &RandomStream,
    ) -> Result<Self> {
        spec.validate(cohort)?;
        let truth_stream = root.scoped(domain::GROUND_TRUTH).scoped(trial as u64);
        let mut ground_truths = Vec::new();
        let mut cluster_of = BTreeMap::new();
        match spec.kind {
            LossKind::IidLeastSquares => {
                let gt = match &spec.ground_truth {
                    Some(gt) => gt.clone(),
                    None => {
                        let mut rng = truth_stream.rng();
                        let normal = Normal::new(0.0, 1.0).unwrap();
                        DecisionVector::new(
                            (0..spec.dim).map(|_| normal.sample(&mut rng)).collect(),
                        )?
                    }
                };
                ground_truths.push(gt);
            }
            LossKind::NoniidLeastSquares => {
                // the shared g is drawn once per trial per coordinate; each
                // cluster shifts it by its own offset draw
                let shared: Vec<f64> = {
                    let mut rng = truth_stream.scoped(0).rng();
                    let normal = Normal::new(0.0, 1.0).unwrap();
                    (0..spec.dim).map(|_| normal.sample(&mut rng)).collect()
                };
                for (c, truth_mean) in CLUSTER_TRUTH_MEANS.iter().enumerate() {
                    let mut rng = truth_stream.scoped(1 + c as u64).rng();
                    let normal = Normal::new(*truth_mean, CLUSTER_TRUTH_STD).unwrap();
                    ground_truths.push(DecisionVector::new(
                        shared
                            .iter()
                            .map(|g| g + normal.sample(&mut rng))
                            .collect::<Vec<f64>>(),
                    )?);
                }
                // participants 1..=n/3 form cluster 0 and so on, independent
                // of which of them turn out to be byzantine
                let per_cluster = cohort.n() / CLUSTERS;
                for id in cohort.participants() {
                    cluster_of.insert(id, (id.0 - 1) / per_cluster);
                }
            }
            LossKind::Example1Fixed | LossKind::Example3RandomPair => {}
        }
        Ok(Self {
            spec: spec.clone(),
            trial_stream: root.scoped(domain::ENVIRONMENT).scoped(trial as u64),
            ground_truths,
            cluster_of,
        })
    }

    pub fn spec(&self) -> &LossStreamSpec {
        &self.spec
    }

    /// Resolved regression targets (one per cluster for the non-i.i.d. kind).
    pub fn ground_truths(&self) -> &[DecisionVector] {
        &self.ground_truths
    }

    /// Reveal step `t`'s losses for every participant. Byzantine
    /// participants receive samples too; they only matter under the
    /// sign-flipping attack and never feed the regret.
    pub fn draw_losses(
        &self,
        step: usize,
        cohort: &Cohort,
    ) -> Result<BTreeMap<ParticipantId, LossSample>> {
        if step < 1 {
            return Err(Error::InvalidConfig {
                field: "step".into(),
                reason: "steps are 1-based".into(),
            });
        }
        let mut out = BTreeMap::new();
        for id in cohort.participants() {
            let mut rng = self
                .trial_stream
                .scoped(id.0 as u64)
                .scoped(step as u64)
                .rng();
            let sample = match self.spec.kind {
                LossKind::IidLeastSquares => self.least_squares_sample(&mut rng, 0),
                LossKind::NoniidLeastSquares => {
                    self.least_squares_sample(&mut rng, self.cluster_of[&id])
                }
                LossKind::Example1Fixed => LossSample::Quadratic {
                    center: if id == ParticipantId(2) {
                        -self.spec.sigma
                    } else {
                        self.spec.sigma
                    },
                },
                LossKind::Example3RandomPair => LossSample::Quadratic {
                    center: if rng.random::<f64>() < 0.5 {
                        self.spec.sigma
                    } else {
                        -self.spec.sigma
                    },
                },
            };
            out.insert(id, sample);
        }
        Ok(out)
    }

    fn least_squares_sample(&self, rng: &mut impl Rng, cluster: usize) -> LossSample {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let shift = if self.spec.kind == LossKind::NoniidLeastSquares {
            CLUSTER_REGRESSOR_MEANS[cluster]
        } else {
            0.0
        };
        let regressor = DecisionVector::new(
            (0..self.spec.dim)
                .map(|_| shift + normal.sample(rng))
                .collect::<Vec<f64>>(),
        )
        .expect("finite draws");
        let truth = &self.ground_truths[cluster];
        let label = regressor.dot(truth).expect("dims fixed")
            + self.spec.noise_std * normal.sample(rng);
        LossSample::LeastSquares { regressor, label }
    }

    pub fn has_stochastic_model(&self) -> bool {
        matches!(
            self.spec.kind,
            LossKind::IidLeastSquares | LossKind::Example3RandomPair
        )
    }

    /// Closed-form expected loss `F(w)`, defined for the kinds with a common
    /// sampling distribution across honest participants.
    pub fn expected_loss(&self, w: &DecisionVector) -> Result<f64> {
        w.check_dim(self.spec.dim)?;
        match self.spec.kind {
            LossKind::IidLeastSquares => {
                // regressor elements are standard normal, so E[xx'] = I
                let err = w.sub(&self.ground_truths[0])?;
                Ok(0.5 * err.norm_sq() + 0.5 * self.spec.noise_std * self.spec.noise_std)
            }
            LossKind::Example3RandomPair => {
                let s = self.spec.sigma;
                Ok(0.5 * (w[0] * w[0] + s * s))
            }
            LossKind::Example1Fixed => Err(Error::NoStochasticModel("example1")),
            LossKind::NoniidLeastSquares => Err(Error::NoStochasticModel("noniid_ls")),
        }
    }

    pub fn expected_minimizer(&self) -> Result<DecisionVector> {
        match self.spec.kind {
            LossKind::IidLeastSquares => Ok(self.ground_truths[0].clone()),
            LossKind::Example3RandomPair => Ok(DecisionVector::zeros(1)),
            LossKind::Example1Fixed => Err(Error::NoStochasticModel("example1")),
            LossKind::NoniidLeastSquares => Err(Error::NoStochasticModel("noniid_ls")),
        }
    }
}

/// Analytic constants of a stream, resolved once per experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamConstants {
    /// Smoothness L: for least squares the empirical max of `||x||^2` over a
    /// pilot draw; exactly 1 for the counter-example quadratics.
    pub smoothness: f64,
    /// Strong convexity mu of the expected loss: the smallest eigenvalue of
    /// the analytic `E[xx']`, which is 1 for both synthetic kinds.
    pub strong_convexity: f64,
    /// Empirical max squared deviation of a per-sample gradient from the
    /// mean gradient, measured at the initial decision over the pilot draw.
    pub deviation_sigma_sq: f64,
    /// Max squared mean honest gradient at the hindsight minimizer; filled
    /// in after a run from the first trial's history.
    pub xi_sq: Option<f64>,
}

pub const PILOT_SAMPLES: usize = 10_000;

/// Draw the pilot sample and measure the stream constants at `at` (the
/// initial decision). Uses the dedicated pilot stream, so results are
/// trial-independent and reproducible.
pub fn pilot_constants(
    spec: &LossStreamSpec,
    root: &RandomStream,
    at: &DecisionVector,
) -> Result<StreamConstants> {
    match spec.kind {
        LossKind::Example1Fixed | LossKind::Example3RandomPair => Ok(StreamConstants {
            smoothness: 1.0,
            strong_convexity: 1.0,
            // gradients sit at distance sigma on either side of their mean
            deviation_sigma_sq: spec.sigma * spec.sigma,
            xi_sq: None,
        }),
        LossKind::IidLeastSquares | LossKind::NoniidLeastSquares => {
            at.check_dim(spec.dim)?;
            let pilot = root.scoped(domain::PILOT);
            let normal = Normal::new(0.0, 1.0).unwrap();
            // pilot ground truths drawn from the same generator family; only
            // used for the deviation audit
            let mut truths = Vec::new();
            let clusters = if spec.kind == LossKind::NoniidLeastSquares {
                CLUSTERS
            } else {
                1
            };
            for (c, truth_mean) in CLUSTER_TRUTH_MEANS.iter().take(clusters).enumerate() {
                let mut rng = pilot.scoped(1000 + c as u64).rng();
                let gt = match (&spec.ground_truth, spec.kind) {
                    (Some(gt), LossKind::IidLeastSquares) => gt.clone(),
                    (_, LossKind::IidLeastSquares) => DecisionVector::new(
                        (0..spec.dim)
                            .map(|_| normal.sample(&mut rng))
                            .collect::<Vec<f64>>(),
                    )?,
                    _ => {
                        let shared_rng = &mut pilot.scoped(999).rng();
                        let cluster_normal = Normal::new(*truth_mean, CLUSTER_TRUTH_STD).unwrap();
                        DecisionVector::new(
                            (0..spec.dim)
                                .map(|_| {
                                    normal.sample(shared_rng) + cluster_normal.sample(&mut rng)
                                })
                                .collect::<Vec<f64>>(),
                        )?
                    }
                };
                truths.push(gt);
            }
            let mut max_norm_sq: f64 = 0.0;
            let mut grads = Vec::with_capacity(PILOT_SAMPLES);
            for i in 0..PILOT_SAMPLES {
                let cluster = i % clusters;
                let shift = if spec.kind == LossKind::NoniidLeastSquares {
                    CLUSTER_REGRESSOR_MEANS[cluster]
                } else {
                    0.0
                };
                let mut rng = pilot.scoped(i as u64).rng();
                let x = DecisionVector::new(
                    (0..spec.dim)
                        .map(|_| shift + normal.sample(&mut rng))
                        .collect::<Vec<f64>>(),
                )?;
                max_norm_sq = max_norm_sq.max(x.norm_sq());
                let label =
                    x.dot(&truths[cluster])? + spec.noise_std * normal.sample(&mut rng);
                grads.push(gradient(
                    &LossSample::LeastSquares {
                        regressor: x,
                        label,
                    },
                    at,
                )?);
            }
            let mean_grad = DecisionVector::mean_of(grads.iter())?;
            let mut deviation: f64 = 0.0;
            for g in &grads {
                deviation = deviation.max(mean_grad.dist_sq(g)?);
            }
            Ok(StreamConstants {
                smoothness: max_norm_sq,
                strong_convexity: 1.0,
                deviation_sigma_sq: deviation,
                xi_sq: None,
            })
        }
    }
}
