use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hypercube::Point;
use crate::oracle::{random_function, random_monotone, FunctionSpec};
use crate::tester::{BudgetConfig, TesterKind};

/// A function family that can be instantiated at any `n`.
///
/// Text form (`--family`):
///
/// | template | function |
/// |---|---|
/// | `constant:0`, `constant:1` | constant |
/// | `dictator:i`, `anti_dictator:i` | `x_i`, `not x_i` |
/// | `parity`, `parity:1,3` | parity of all or the given variables |
/// | `majority` | majority of the first odd number of variables |
/// | `threshold` | `sum x_j >= n/2` |
/// | `shifted_threshold` | `threshold` composed with the shift `1010…` |
/// | `planted:k` | parity of variables `1..=k` |
/// | `random_monotone:seed`, `random:seed` | seeded random truth tables |
/// | `json:path` | a `FunctionSpec` JSON file (its `n` must match) |
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyTemplate {
    Constant(bool),
    Dictator(usize),
    AntiDictator(usize),
    Parity(Option<Vec<usize>>),
    Majority,
    Threshold,
    ShiftedThreshold,
    Planted(usize),
    RandomMonotone(u64),
    Random(u64),
    Fixed(FunctionSpec),
}

fn parse_vars(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad variable {t:?}"))))
        .collect()
}

fn parse_num<T: std::str::FromStr>(what: &str, s: Option<&str>) -> Result<T> {
    let s = s.ok_or_else(|| Error::Parse(format!("{what} needs an argument")))?;
    s.trim().parse().map_err(|_| Error::Parse(format!("bad argument {s:?} for {what}")))
}

impl FamilyTemplate {
    pub fn parse(text: &str) -> Result<FamilyTemplate> {
        let text = text.trim();
        let (name, arg) = match text.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (text, None),
        };
        Ok(match name {
            "constant" => match arg {
                Some("0") | Some("false") => FamilyTemplate::Constant(false),
                Some("1") | Some("true") | None => FamilyTemplate::Constant(true),
                Some(a) => return Err(Error::Parse(format!("bad constant {a:?}"))),
            },
            "dictator" => FamilyTemplate::Dictator(parse_num(name, arg)?),
            "anti_dictator" => FamilyTemplate::AntiDictator(parse_num(name, arg)?),
            "parity" | "xor" => FamilyTemplate::Parity(arg.map(parse_vars).transpose()?),
            "majority" => FamilyTemplate::Majority,
            "threshold" => FamilyTemplate::Threshold,
            "shifted_threshold" => FamilyTemplate::ShiftedThreshold,
            "planted" => FamilyTemplate::Planted(parse_num(name, arg)?),
            "random_monotone" => FamilyTemplate::RandomMonotone(parse_num(name, arg)?),
            "random" => FamilyTemplate::Random(parse_num(name, arg)?),
            "json" => {
                let path = arg.ok_or_else(|| Error::Parse("json needs a path".into()))?;
                let text = std::fs::read_to_string(path)?;
                FamilyTemplate::Fixed(FunctionSpec::from_json(&text)?)
            }
            _ => return Err(Error::Parse(format!("unknown family {name:?}"))),
        })
    }

    pub fn instantiate(&self, n: usize) -> Result<FunctionSpec> {
        match self {
            FamilyTemplate::Constant(v) => Ok(FunctionSpec::constant(n, *v)),
            FamilyTemplate::Dictator(i) => FunctionSpec::dictator(n, *i),
            FamilyTemplate::AntiDictator(i) => FunctionSpec::anti_dictator(n, *i),
            FamilyTemplate::Parity(vars) => {
                FunctionSpec::parity(n, vars.clone().unwrap_or_else(|| (1..=n).collect()))
            }
            FamilyTemplate::Majority => {
                let k = if n % 2 == 1 { n } else { n - 1 };
                FunctionSpec::majority(n, (1..=k).collect())
            }
            FamilyTemplate::Threshold => FunctionSpec::threshold(vec![1.0; n], n as f64 / 2.0),
            FamilyTemplate::ShiftedThreshold => {
                let mut a = Point::zeros(n);
                for i in (1..=n).step_by(2) {
                    a.set(i, true);
                }
                FunctionSpec::xor_shift(FunctionSpec::threshold(vec![1.0; n], n as f64 / 2.0)?, &a)
            }
            FamilyTemplate::Planted(k) => FunctionSpec::planted_parity_block(n, (1..=*k).collect()),
            FamilyTemplate::RandomMonotone(seed) => random_monotone(n, &mut ChaCha8Rng::seed_from_u64(*seed)),
            FamilyTemplate::Random(seed) => random_function(n, &mut ChaCha8Rng::seed_from_u64(*seed)),
            FamilyTemplate::Fixed(spec) => {
                if spec.n != n {
                    return Err(Error::DimensionMismatch { expected: n, found: spec.n });
                }
                Ok(spec.clone())
            }
        }
    }
}

/// One experiment: the cross product of families, dimensions, distances and
/// testers, each cell run `trials` times.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub families: Vec<FamilyTemplate>,
    pub ns: Vec<usize>,
    pub eps: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub testers: Vec<TesterKind>,
    pub budget: BudgetConfig,
    pub out: Option<PathBuf>,
    /// Write measured wall time; off gives byte-identical output across runs.
    pub wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(families: Vec<FamilyTemplate>, ns: Vec<usize>, eps: Vec<f64>, trials: u64) -> ExperimentConfig {
        ExperimentConfig {
            families,
            ns,
            eps,
            trials,
            seed: 0,
            testers: vec![TesterKind::Main],
            budget: BudgetConfig::default(),
            out: None,
            wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.families.is_empty() || self.ns.is_empty() || self.eps.is_empty() || self.testers.is_empty() {
            return Err(Error::InvalidParameter("families, n, eps and tester lists must be nonempty".into()));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidParameter(format!("eps={e} must lie in (0,1)")));
        }
        if self.ns.contains(&0) {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        self.budget.validate()?;
        for f in &self.families {
            for &n in &self.ns {
                f.instantiate(n)?;
            }
        }
        Ok(())
    }
}

/// Comma-separated list parser for the CLI.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad list element {t:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Family;

    #[test]
    fn templates() {
        assert_eq!(FamilyTemplate::parse("constant:0").unwrap(), FamilyTemplate::Constant(false));
        assert_eq!(FamilyTemplate::parse("parity:1,3").unwrap(), FamilyTemplate::Parity(Some(vec![1, 3])));
        assert!(FamilyTemplate::parse("dictator").is_err());
        assert!(FamilyTemplate::parse("banana").is_err());
        let s = FamilyTemplate::parse("xor").unwrap().instantiate(2).unwrap();
        assert_eq!(s.family, Family::Parity { vars: vec![1, 2] });
        assert!(FamilyTemplate::Dictator(5).instantiate(3).is_err());
        let a = FamilyTemplate::RandomMonotone(9).instantiate(6).unwrap();
        assert_eq!(a, FamilyTemplate::RandomMonotone(9).instantiate(6).unwrap());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("2, 4,8").unwrap(), vec![2, 4, 8]);
        assert!(parse_list::<f64>("0.1,x").is_err());
    }
}
