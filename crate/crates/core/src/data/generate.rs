use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::models::{sigmoid, LogisticRow, MixtureParams, MixtureRow};

/// The four synthetic examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleId {
    Gaussian,
    Logistic,
    BetaBernoulli,
    Mixture,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [
        ExampleId::Gaussian,
        ExampleId::Logistic,
        ExampleId::BetaBernoulli,
        ExampleId::Mixture,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Gaussian => "gaussian",
            ExampleId::Logistic => "logistic",
            ExampleId::BetaBernoulli => "beta-bernoulli",
            ExampleId::Mixture => "mixture",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExampleId::Gaussian => "x ~ N(mu, sigma^2); truth (mu, sigma^2) = (0, 10)",
            ExampleId::Logistic => "logistic regression, x1 = 1, x2.. ~ U(0,1); truth (0.3, 5, -7, 2.4, -20)",
            ExampleId::BetaBernoulli => "x ~ Bernoulli(p); truth p = 0.1",
            ExampleId::Mixture => {
                "y = alpha x1 + beta x2 + N(0, sigma^2) w.p. 1-p, else N(0, psi^2); truth (2, 5, 1, 10, 0.05)"
            }
        }
    }

    /// Data-generating parameters used when a spec leaves them empty.
    pub fn default_truth(self) -> Vec<f64> {
        match self {
            ExampleId::Gaussian => vec![0.0, 10.0],
            ExampleId::Logistic => vec![0.3, 5.0, -7.0, 2.4, -20.0],
            ExampleId::BetaBernoulli => vec![0.1],
            ExampleId::Mixture => vec![2.0, 5.0, 1.0, 10.0, 0.05],
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ExampleId::ALL
            .into_iter()
            .find(|e| e.name() == s || e.number().to_string() == s)
            .ok_or(Error::UnknownExample(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub example: ExampleId,
    pub n: usize,
    pub seed: u64,
    /// Example 1: `(mu, sigma^2)`. Example 2: regression coefficients, the
    /// first multiplying the intercept. Example 3: `(p)`. Example 4:
    /// `(alpha, beta, sigma^2, psi^2, p)`. Empty means the example default.
    #[serde(default)]
    pub truth: Vec<f64>,
}

impl GeneratorSpec {
    pub fn new(example: ExampleId, n: usize, seed: u64) -> Self {
        Self {
            example,
            n,
            seed,
            truth: Vec::new(),
        }
    }

    pub fn truth(&self) -> Vec<f64> {
        if self.truth.is_empty() {
            self.example.default_truth()
        } else {
            self.truth.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("generator needs n >= 1".into()));
        }
        let t = self.truth();
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite generator parameter".into()));
        }
        let bad = |msg: &str| Err(Error::Config(format!("{}: {msg}", self.example)));
        match self.example {
            ExampleId::Gaussian if t.len() != 2 => bad("truth is (mu, sigma^2)"),
            ExampleId::Gaussian if t[1] <= 0.0 => bad("variance must be positive"),
            ExampleId::Logistic if t.is_empty() => bad("need at least one coefficient"),
            ExampleId::BetaBernoulli if t.len() != 1 || !(0.0..=1.0).contains(&t[0]) => bad("truth is p in [0, 1]"),
            ExampleId::Mixture if t.len() != 5 => bad("truth is (alpha, beta, sigma^2, psi^2, p)"),
            ExampleId::Mixture => MixtureParams::from_slice(&t)?.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratedData {
    Gaussian(Dataset<f64>),
    Logistic(Dataset<LogisticRow>),
    Bernoulli(Dataset<u8>),
    Mixture(Dataset<MixtureRow>),
}

impl GeneratedData {
    pub fn n(&self) -> usize {
        match self {
            GeneratedData::Gaussian(d) => d.n(),
            GeneratedData::Logistic(d) => d.n(),
            GeneratedData::Bernoulli(d) => d.n(),
            GeneratedData::Mixture(d) => d.n(),
        }
    }
}

/// Draws a synthetic dataset. A pure function of `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t = spec.truth();
    let n = spec.n;
    Ok(match spec.example {
        ExampleId::Gaussian => {
            let d = Normal::new(t[0], t[1].sqrt()).expect("validated");
            GeneratedData::Gaussian(Dataset::new((0..n).map(|_| d.sample(&mut rng)).collect())?)
        }
        ExampleId::Logistic => {
            let rows = (0..n)
                .map(|_| {
                    let mut x = Vec::with_capacity(t.len());
                    x.push(1.0);
                    x.extend((1..t.len()).map(|_| rng.gen::<f64>()));
                    let eta: f64 = x.iter().zip(&t).map(|(a, b)| a * b).sum();
                    let y = u8::from(rng.gen::<f64>() < sigmoid(eta));
                    LogisticRow { x, y }
                })
                .collect();
            GeneratedData::Logistic(Dataset::new(rows)?)
        }
        ExampleId::BetaBernoulli => {
            let d = Bernoulli::new(t[0]).expect("validated");
            GeneratedData::Bernoulli(Dataset::new((0..n).map(|_| u8::from(d.sample(&mut rng))).collect())?)
        }
        ExampleId::Mixture => {
            let (sigma, psi) = (t[2].sqrt(), t[3].sqrt());
            let rows = (0..n)
                .map(|_| {
                    let x1: f64 = StandardNormal.sample(&mut rng);
                    let x2: f64 = StandardNormal.sample(&mut rng);
                    let e: f64 = StandardNormal.sample(&mut rng);
                    let y = if rng.gen::<f64>() < t[4] {
                        psi * e
                    } else {
                        t[0] * x1 + t[1] * x2 + sigma * e
                    };
                    MixtureRow { x1, x2, y }
                })
                .collect();
            GeneratedData::Mixture(Dataset::new(rows)?)
        }
    })
}
